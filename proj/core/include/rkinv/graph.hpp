#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rkinv {

using VertexId = std::size_t;
using EdgeId = std::size_t;

class GraphError : public std::runtime_error {
public:
  enum class Kind {
    kEmpty,
    kDuplicateLabel,
    kUnknownLabel,
    kNonpositiveConductance,
    kSelfLoop,
    kNegativeKilling,
    kDisconnected,
    kRecurrent,
    kUnknownEdge,
    kParse,
  };
  GraphError(Kind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

struct Edge {
  EdgeId id;
  VertexId minus;
  VertexId plus;
  double conductance;

  VertexId other(VertexId v) const { return v == minus ? plus : minus; }
  bool touches(VertexId v) const { return v == minus || v == plus; }
};

/// Declarative graph description, the in-memory form of a graph spec file.
struct GraphSpec {
  struct EdgeSpec {
    std::string from;
    std::string to;
    double conductance;
  };
  std::vector<std::string> vertices;
  std::vector<EdgeSpec> edges;
  std::map<std::string, double> kappa;
  std::optional<std::string> x0;
  std::optional<double> u;
};

struct GraphOptions {
  // Accept kappa == 0 everywhere. Such graphs only support the Laplacian and
  // pinned fields; green_function() rejects them.
  bool allow_recurrent = false;
};

/// Finite weighted multigraph with a killing measure. Vertex and edge ids are
/// their declaration indices. Immutable once built.
class Graph {
public:
  Graph(std::vector<std::string> labels, std::vector<Edge> edges,
        std::vector<double> kappa, GraphOptions options = {});

  static Graph build(const GraphSpec &spec, GraphOptions options = {});

  std::size_t num_vertices() const { return labels_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const std::string &label(VertexId v) const { return labels_.at(v); }
  const std::vector<std::string> &labels() const { return labels_; }
  std::optional<VertexId> find(const std::string &label) const;
  VertexId vertex(const std::string &label) const; // throws kUnknownLabel

  const std::vector<Edge> &edges() const { return edges_; }
  const Edge &edge(EdgeId e) const { return edges_.at(e); }
  std::span<const EdgeId> incident(VertexId v) const { return incident_.at(v); }

  double kappa(VertexId v) const { return kappa_.at(v); }
  const std::vector<double> &killing() const { return kappa_; }
  bool transient() const;
  bool killing_only_at(VertexId v) const;

  // Sum of conductances of edges at v (parallel edges counted separately).
  double total_conductance(VertexId v) const;

  GraphSpec to_spec() const;

private:
  std::vector<std::string> labels_;
  std::vector<Edge> edges_;
  std::vector<double> kappa_;
  std::vector<std::vector<EdgeId>> incident_;
};

/// Set of open edges stored as a mask over the edge ids of one graph.
class EdgeSet {
public:
  EdgeSet() = default;
  explicit EdgeSet(std::size_t num_edges) : mask_(num_edges, 0) {}
  static EdgeSet all(std::size_t num_edges);
  static EdgeSet from_ids(std::size_t num_edges, std::span<const EdgeId> ids);

  std::size_t universe() const { return mask_.size(); }
  bool contains(EdgeId e) const { return mask_.at(e) != 0; }
  void insert(EdgeId e) { mask_.at(e) = 1; }
  void erase(EdgeId e) { mask_.at(e) = 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  std::vector<EdgeId> ids() const;
  bool subset_of(const EdgeSet &other) const;

  EdgeSet &operator|=(const EdgeSet &other);
  friend bool operator==(const EdgeSet &, const EdgeSet &) = default;

  // Bit e of the code is edge e. Requires universe() <= 64.
  std::uint64_t code() const;
  static EdgeSet from_code(std::size_t num_edges, std::uint64_t code);

private:
  std::vector<char> mask_;
};

struct ClusterPartition {
  std::vector<std::size_t> cluster_of;
  std::size_t count = 0;

  bool same(VertexId a, VertexId b) const {
    return cluster_of.at(a) == cluster_of.at(b);
  }
};

ClusterPartition clusters(const Graph &g, const EdgeSet &open);
ClusterPartition clusters(const Graph &g, std::span<const EdgeId> open);

/// Dense Laplacian plus killing: Lambda_xx = kappa_x + sum W_e over edges at
/// x, Lambda_xy = -sum of conductances between x and y.
Eigen::MatrixXd precision_matrix(const Graph &g);

double dirichlet_form(const Graph &g, std::span<const double> f);

Eigen::MatrixXd green_function(const Graph &g);

struct HTransform {
  Graph graph;          // conductances W h h, killing only at x0
  std::vector<double> h; // P_x(hit x0 before being killed)
  VertexId x0;
};

/// Doob transform removing the killing measure off x0. The killing left at
/// x0 is kappa_x0 + sum_y W_x0y (1 - h(y)), which makes the transformed
/// Dirichlet form equal E(h f, h f) exactly.
HTransform harmonic_killing_transform(const Graph &g, VertexId x0);

/// Component of `root` after deleting the marked vertices. Conductances of
/// deleted edges move into the killing of their surviving endpoint.
struct Subgraph {
  Graph graph;
  std::vector<VertexId> parent_vertex;
  std::vector<EdgeId> parent_edge;
};
Subgraph remove_vertices(const Graph &g, const std::vector<bool> &removed,
                         VertexId root);

} // namespace rkinv
