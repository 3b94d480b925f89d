#pragma once

#include "rkinv/graph.hpp"
#include "rkinv/jump_process.hpp"
#include "rkinv/rng.hpp"

#include <cstdint>
#include <vector>

namespace rkinv {

struct PDPartition {
  std::vector<double> masses; // size-biased order
  double remainder = 0.0;     // 1 - sum(masses), below the truncation level
};

/// Stick-breaking with Beta(1, alpha) fractions, stopped once the unbroken
/// mass falls below eps.
PDPartition sample_pd_partition(double alpha, double eps, Rng &rng);

/// Loops are stored rooted: each trajectory starts at its root and ends with
/// a stopped step there.
struct LoopSoupSample {
  std::vector<Trajectory> loops;
  std::size_t num_vertices = 0;
  std::size_t num_edges = 0;
};

struct SoupFields {
  std::vector<double> occupation;       // L_x
  std::vector<std::int64_t> crossings;  // N_e
};

SoupFields fields(const LoopSoupSample &soup);

/// Cut points u * S_j of a partition, dropping any that rounding pushed onto
/// or past u or onto the previous point.
std::vector<double> partition_thresholds(const PDPartition &pd, double u);

std::vector<Trajectory> sample_loops_at_vertex(const Graph &g, VertexId x,
                                               double alpha, double eps,
                                               Rng &rng);

/// Precomputes, for a vertex enumeration, the nested subgraphs, their Green
/// diagonal at the stage root, and the h-transforms used for each stage.
class LoopSoupSampler {
public:
  LoopSoupSampler(const Graph &g, std::vector<VertexId> enumeration,
                  double alpha, double eps = 1e-9);

  LoopSoupSample sample(Rng &rng) const;

  double alpha() const { return alpha_; }
  const std::vector<VertexId> &enumeration() const { return enumeration_; }

private:
  struct Stage {
    Subgraph sub;
    VertexId root; // index inside sub.graph
    double green_root;
    HTransform ht;
  };
  const Graph *graph_;
  std::vector<VertexId> enumeration_;
  double alpha_;
  double eps_;
  std::vector<Stage> stages_;
};

LoopSoupSample sample_loop_soup(const Graph &g, double alpha,
                                const std::vector<VertexId> &enumeration,
                                double eps, Rng &rng);

std::vector<VertexId> default_enumeration(const Graph &g);

} // namespace rkinv
