#pragma once

#include "rkinv/graph.hpp"
#include "rkinv/rng.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace rkinv {

enum class ExitKind { kJump, kKilled, kStopped };

const char *to_string(ExitKind kind);

inline constexpr EdgeId kNoEdge = std::numeric_limits<EdgeId>::max();

struct Step {
  VertexId vertex;
  double holding;
  ExitKind exit;
  EdgeId edge = kNoEdge; // set iff exit == kJump
};

/// Piecewise constant path: steps[i] sits at steps[i].vertex for
/// steps[i].holding and leaves through steps[i].edge to steps[i+1].vertex.
struct Trajectory {
  VertexId start = 0;
  std::vector<Step> steps;
  bool reached = false; // inverse local time hit before killing

  double total_time() const;
  VertexId end_vertex() const;
  bool killed() const;
  std::size_t jumps() const;
  double local_time(VertexId v) const;
  std::vector<double> local_times(std::size_t num_vertices) const;
  std::vector<std::int64_t> crossings(std::size_t num_edges) const;

  // Same path run backwards. Holdings are reversed in order; the last step is
  // marked stopped.
  Trajectory reversed() const;
};

/// Walk from x0 until the local time at x0 reaches u, or until killed.
Trajectory run_to_inverse_local_time(const Graph &g, VertexId x0, double u,
                                     Rng &rng);

/// Walk from x0 conditioned on the local time at x0 reaching u before the
/// walk is killed. Runs on the h-transformed graph and maps holdings back
/// with the factor h(x)^2.
Trajectory run_conditioned_to_return(const Graph &g, VertexId x0, double u,
                                     Rng &rng);
Trajectory run_conditioned_to_return(const HTransform &ht, double u, Rng &rng);

/// Same law by plain rejection. Throws std::runtime_error after max_tries.
Trajectory run_conditioned_by_rejection(const Graph &g, VertexId x0, double u,
                                        Rng &rng,
                                        std::size_t max_tries = 1'000'000);

/// Cut a path from x0 back to x0 at the times where the local time at x0
/// crosses each threshold. Each returned loop starts at x0 and ends with a
/// stopped step at x0.
std::vector<Trajectory> excursion_split(const Trajectory &traj, VertexId x0,
                                        const std::vector<double> &thresholds);

/// Inverse of excursion_split: glue loops end to start, merging the holdings
/// at the shared root.
Trajectory concatenate_loops(const std::vector<Trajectory> &loops);

} // namespace rkinv
