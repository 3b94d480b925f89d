#include "rkinv/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <unordered_map>

namespace rkinv {

namespace {

std::vector<std::vector<EdgeId>> build_incidence(std::size_t n,
                                                 const std::vector<Edge> &edges) {
  std::vector<std::vector<EdgeId>> inc(n);
  for (const Edge &e : edges) {
    inc[e.minus].push_back(e.id);
    inc[e.plus].push_back(e.id);
  }
  return inc;
}

bool connected(std::size_t n, const std::vector<std::vector<EdgeId>> &inc,
               const std::vector<Edge> &edges) {
  if (n == 0)
    return true;
  std::vector<char> seen(n, 0);
  std::deque<VertexId> queue{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const VertexId v = queue.front();
    queue.pop_front();
    for (EdgeId e : inc[v]) {
      const VertexId w = edges[e].other(v);
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        queue.push_back(w);
      }
    }
  }
  return reached == n;
}

} // namespace

Graph::Graph(std::vector<std::string> labels, std::vector<Edge> edges,
             std::vector<double> kappa, GraphOptions options)
    : labels_(std::move(labels)), edges_(std::move(edges)),
      kappa_(std::move(kappa)) {
  using K = GraphError::Kind;
  const std::size_t n = labels_.size();
  if (n == 0)
    throw GraphError(K::kEmpty, "graph has no vertices");
  if (kappa_.size() != n)
    throw GraphError(K::kParse, "killing vector size does not match vertices");
  {
    std::vector<std::string> sorted = labels_;
    std::sort(sorted.begin(), sorted.end());
    auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end())
      throw GraphError(K::kDuplicateLabel, "duplicate vertex label '" + *dup + "'");
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    Edge &e = edges_[i];
    e.id = i;
    if (e.minus >= n || e.plus >= n)
      throw GraphError(K::kUnknownLabel, "edge endpoint out of range");
    if (e.minus == e.plus)
      throw GraphError(K::kSelfLoop,
                       "self-loop at vertex '" + labels_[e.minus] + "'");
    if (!(e.conductance > 0.0) || !std::isfinite(e.conductance)) {
      std::ostringstream msg;
      msg << "nonpositive conductance on edge " << i << " ("
          << labels_[e.minus] << "," << labels_[e.plus] << ")";
      throw GraphError(K::kNonpositiveConductance, msg.str());
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (!(kappa_[v] >= 0.0) || !std::isfinite(kappa_[v]))
      throw GraphError(K::kNegativeKilling,
                       "negative killing at vertex '" + labels_[v] + "'");
  }
  incident_ = build_incidence(n, edges_);
  if (!connected(n, incident_, edges_))
    throw GraphError(K::kDisconnected, "graph is not connected");
  if (!options.allow_recurrent && !transient())
    throw GraphError(K::kRecurrent,
                     "recurrent graph: killing is identically zero, Green "
                     "function undefined");
}

Graph Graph::build(const GraphSpec &spec, GraphOptions options) {
  using K = GraphError::Kind;
  std::unordered_map<std::string, VertexId> index;
  for (std::size_t i = 0; i < spec.vertices.size(); ++i) {
    if (!index.emplace(spec.vertices[i], i).second)
      throw GraphError(K::kDuplicateLabel,
                       "duplicate vertex label '" + spec.vertices[i] + "'");
  }
  auto lookup = [&](const std::string &label) {
    auto it = index.find(label);
    if (it == index.end())
      throw GraphError(K::kUnknownLabel, "unknown vertex label '" + label + "'");
    return it->second;
  };
  std::vector<Edge> edges;
  edges.reserve(spec.edges.size());
  for (std::size_t i = 0; i < spec.edges.size(); ++i) {
    const auto &es = spec.edges[i];
    edges.push_back(Edge{i, lookup(es.from), lookup(es.to), es.conductance});
  }
  std::vector<double> kappa(spec.vertices.size(), 0.0);
  for (const auto &[label, value] : spec.kappa)
    kappa[lookup(label)] = value;
  if (spec.x0)
    lookup(*spec.x0);
  return Graph(spec.vertices, std::move(edges), std::move(kappa), options);
}

std::optional<VertexId> Graph::find(const std::string &label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end())
    return std::nullopt;
  return static_cast<VertexId>(it - labels_.begin());
}

VertexId Graph::vertex(const std::string &label) const {
  if (auto v = find(label))
    return *v;
  throw GraphError(GraphError::Kind::kUnknownLabel,
                   "unknown vertex label '" + label + "'");
}

bool Graph::transient() const {
  return std::any_of(kappa_.begin(), kappa_.end(),
                     [](double k) { return k > 0.0; });
}

bool Graph::killing_only_at(VertexId v) const {
  for (std::size_t x = 0; x < kappa_.size(); ++x)
    if (x != v && kappa_[x] > 0.0)
      return false;
  return true;
}

double Graph::total_conductance(VertexId v) const {
  double total = 0.0;
  for (EdgeId e : incident_.at(v))
    total += edges_[e].conductance;
  return total;
}

GraphSpec Graph::to_spec() const {
  GraphSpec spec;
  spec.vertices = labels_;
  for (const Edge &e : edges_)
    spec.edges.push_back({labels_[e.minus], labels_[e.plus], e.conductance});
  for (std::size_t v = 0; v < labels_.size(); ++v)
    if (kappa_[v] != 0.0)
      spec.kappa[labels_[v]] = kappa_[v];
  return spec;
}

// ---------------------------------------------------------------- EdgeSet

EdgeSet EdgeSet::all(std::size_t num_edges) {
  EdgeSet s(num_edges);
  std::fill(s.mask_.begin(), s.mask_.end(), 1);
  return s;
}

EdgeSet EdgeSet::from_ids(std::size_t num_edges, std::span<const EdgeId> ids) {
  EdgeSet s(num_edges);
  for (EdgeId e : ids) {
    if (e >= num_edges)
      throw GraphError(GraphError::Kind::kUnknownEdge,
                       "unknown edge id " + std::to_string(e));
    s.mask_[e] = 1;
  }
  return s;
}

std::size_t EdgeSet::count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
}

std::vector<EdgeId> EdgeSet::ids() const {
  std::vector<EdgeId> out;
  for (std::size_t e = 0; e < mask_.size(); ++e)
    if (mask_[e])
      out.push_back(e);
  return out;
}

bool EdgeSet::subset_of(const EdgeSet &other) const {
  for (std::size_t e = 0; e < mask_.size(); ++e)
    if (mask_[e] && !other.contains(e))
      return false;
  return true;
}

EdgeSet &EdgeSet::operator|=(const EdgeSet &other) {
  for (std::size_t e = 0; e < mask_.size(); ++e)
    mask_[e] = static_cast<char>(mask_[e] | (other.contains(e) ? 1 : 0));
  return *this;
}

std::uint64_t EdgeSet::code() const {
  if (mask_.size() > 64)
    throw std::length_error("EdgeSet::code needs at most 64 edges");
  std::uint64_t c = 0;
  for (std::size_t e = 0; e < mask_.size(); ++e)
    if (mask_[e])
      c |= std::uint64_t{1} << e;
  return c;
}

EdgeSet EdgeSet::from_code(std::size_t num_edges, std::uint64_t code) {
  EdgeSet s(num_edges);
  for (std::size_t e = 0; e < num_edges && e < 64; ++e)
    s.mask_[e] = static_cast<char>((code >> e) & 1U);
  return s;
}

// ---------------------------------------------------------------- clusters

ClusterPartition clusters(const Graph &g, const EdgeSet &open) {
  if (open.universe() != g.num_edges())
    throw GraphError(GraphError::Kind::kUnknownEdge,
                     "edge set does not belong to this graph");
  const std::size_t n = g.num_vertices();
  ClusterPartition out;
  out.cluster_of.assign(n, n);
  std::deque<VertexId> queue;
  for (VertexId s = 0; s < n; ++s) {
    if (out.cluster_of[s] != n)
      continue;
    const std::size_t id = out.count++;
    out.cluster_of[s] = id;
    queue.push_back(s);
    while (!queue.empty()) {
      const VertexId v = queue.front();
      queue.pop_front();
      for (EdgeId e : g.incident(v)) {
        if (!open.contains(e))
          continue;
        const VertexId w = g.edge(e).other(v);
        if (out.cluster_of[w] == n) {
          out.cluster_of[w] = id;
          queue.push_back(w);
        }
      }
    }
  }
  return out;
}

ClusterPartition clusters(const Graph &g, std::span<const EdgeId> open) {
  return clusters(g, EdgeSet::from_ids(g.num_edges(), open));
}

// ---------------------------------------------------------------- algebra

Eigen::MatrixXd precision_matrix(const Graph &g) {
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t v = 0; v < g.num_vertices(); ++v)
    lambda(v, v) = g.kappa(v);
  for (const Edge &e : g.edges()) {
    const auto a = static_cast<Eigen::Index>(e.minus);
    const auto b = static_cast<Eigen::Index>(e.plus);
    lambda(a, a) += e.conductance;
    lambda(b, b) += e.conductance;
    lambda(a, b) -= e.conductance;
    lambda(b, a) -= e.conductance;
  }
  return lambda;
}

double dirichlet_form(const Graph &g, std::span<const double> f) {
  if (f.size() != g.num_vertices())
    throw std::invalid_argument("dirichlet_form: field size mismatch");
  double total = 0.0;
  for (std::size_t v = 0; v < f.size(); ++v)
    total += g.kappa(v) * f[v] * f[v];
  for (const Edge &e : g.edges()) {
    const double d = f[e.plus] - f[e.minus];
    total += e.conductance * d * d;
  }
  return total;
}

Eigen::MatrixXd green_function(const Graph &g) {
  if (!g.transient())
    throw GraphError(GraphError::Kind::kRecurrent,
                     "recurrent graph: Green function undefined");
  const Eigen::MatrixXd lambda = precision_matrix(g);
  Eigen::LLT<Eigen::MatrixXd> llt(lambda);
  if (llt.info() != Eigen::Success)
    throw GraphError(GraphError::Kind::kRecurrent,
                     "precision matrix is not positive definite");
  Eigen::MatrixXd green =
      llt.solve(Eigen::MatrixXd::Identity(lambda.rows(), lambda.cols()));
  return (green + green.transpose()) / 2.0;
}

HTransform harmonic_killing_transform(const Graph &g, VertexId x0) {
  const std::size_t n = g.num_vertices();
  if (x0 >= n)
    throw GraphError(GraphError::Kind::kUnknownLabel, "x0 out of range");

  std::vector<double> h(n, 1.0);
  if (!g.killing_only_at(x0) && n > 1) {
    // Lambda restricted to V \ {x0} times h = W(., x0) * 1.
    std::vector<Eigen::Index> pos(n, -1);
    Eigen::Index m = 0;
    for (std::size_t v = 0; v < n; ++v)
      if (v != x0)
        pos[v] = m++;
    const Eigen::MatrixXd lambda = precision_matrix(g);
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd rhs(m);
    for (std::size_t v = 0; v < n; ++v) {
      if (v == x0)
        continue;
      rhs(pos[v]) = -lambda(v, x0);
      for (std::size_t w = 0; w < n; ++w)
        if (w != x0)
          a(pos[v], pos[w]) = lambda(v, w);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
      throw GraphError(GraphError::Kind::kRecurrent,
                       "hitting-probability system is singular");
    const Eigen::VectorXd sol = llt.solve(rhs);
    for (std::size_t v = 0; v < n; ++v)
      if (v != x0)
        h[v] = sol(pos[v]);
  }

  std::vector<Edge> edges = g.edges();
  for (Edge &e : edges)
    e.conductance *= h[e.minus] * h[e.plus];
  std::vector<double> kappa(n, 0.0);
  kappa[x0] = g.kappa(x0);
  for (EdgeId e : g.incident(x0)) {
    const Edge &edge = g.edge(e);
    kappa[x0] += edge.conductance * (1.0 - h[edge.other(x0)]);
  }
  if (kappa[x0] < 0.0) // rounding only
    kappa[x0] = 0.0;
  GraphOptions opts;
  opts.allow_recurrent = true;
  return HTransform{Graph(g.labels(), std::move(edges), std::move(kappa), opts),
                    std::move(h), x0};
}

Subgraph remove_vertices(const Graph &g, const std::vector<bool> &removed,
                         VertexId root) {
  const std::size_t n = g.num_vertices();
  if (removed.size() != n)
    throw std::invalid_argument("remove_vertices: mask size mismatch");
  if (removed[root])
    throw std::invalid_argument("remove_vertices: root is removed");

  // Component of root in the graph induced on surviving vertices.
  std::vector<char> keep(n, 0);
  std::deque<VertexId> queue{root};
  keep[root] = 1;
  while (!queue.empty()) {
    const VertexId v = queue.front();
    queue.pop_front();
    for (EdgeId e : g.incident(v)) {
      const VertexId w = g.edge(e).other(v);
      if (!removed[w] && !keep[w]) {
        keep[w] = 1;
        queue.push_back(w);
      }
    }
  }

  Subgraph out{Graph({"_"}, {}, {1.0}), {}, {}};
  std::vector<VertexId> new_index(n, n);
  std::vector<std::string> labels;
  std::vector<double> kappa;
  for (VertexId v = 0; v < n; ++v) {
    if (!keep[v])
      continue;
    new_index[v] = labels.size();
    labels.push_back(g.label(v));
    kappa.push_back(g.kappa(v));
    out.parent_vertex.push_back(v);
  }
  std::vector<Edge> edges;
  for (const Edge &e : g.edges()) {
    const bool a = keep[e.minus] != 0;
    const bool b = keep[e.plus] != 0;
    if (a && b) {
      edges.push_back(Edge{edges.size(), new_index[e.minus],
                           new_index[e.plus], e.conductance});
      out.parent_edge.push_back(e.id);
    } else if (a) {
      kappa[new_index[e.minus]] += e.conductance;
    } else if (b) {
      kappa[new_index[e.plus]] += e.conductance;
    }
  }
  GraphOptions opts;
  opts.allow_recurrent = true;
  out.graph = Graph(std::move(labels), std::move(edges), std::move(kappa), opts);
  return out;
}

} // namespace rkinv
