#include "rkinv/jump_process.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rkinv {

const char *to_string(ExitKind kind) {
  switch (kind) {
  case ExitKind::kJump:
    return "jump";
  case ExitKind::kKilled:
    return "killed";
  case ExitKind::kStopped:
    return "stopped";
  }
  return "?";
}

double Trajectory::total_time() const {
  double t = 0.0;
  for (const Step &s : steps)
    t += s.holding;
  return t;
}

VertexId Trajectory::end_vertex() const {
  return steps.empty() ? start : steps.back().vertex;
}

bool Trajectory::killed() const {
  return !steps.empty() && steps.back().exit == ExitKind::kKilled;
}

std::size_t Trajectory::jumps() const {
  return static_cast<std::size_t>(
      std::count_if(steps.begin(), steps.end(),
                    [](const Step &s) { return s.exit == ExitKind::kJump; }));
}

double Trajectory::local_time(VertexId v) const {
  double t = 0.0;
  for (const Step &s : steps)
    if (s.vertex == v)
      t += s.holding;
  return t;
}

std::vector<double> Trajectory::local_times(std::size_t num_vertices) const {
  std::vector<double> out(num_vertices, 0.0);
  for (const Step &s : steps)
    out.at(s.vertex) += s.holding;
  return out;
}

std::vector<std::int64_t> Trajectory::crossings(std::size_t num_edges) const {
  std::vector<std::int64_t> out(num_edges, 0);
  for (const Step &s : steps)
    if (s.exit == ExitKind::kJump)
      ++out.at(s.edge);
  return out;
}

Trajectory Trajectory::reversed() const {
  Trajectory r;
  r.reached = reached;
  r.start = end_vertex();
  const std::size_t n = steps.size();
  r.steps.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Step &s = steps[n - 1 - k];
    Step out{s.vertex, s.holding, ExitKind::kStopped, kNoEdge};
    if (k + 1 < n) {
      out.exit = ExitKind::kJump;
      out.edge = steps[n - 2 - k].edge;
    }
    r.steps.push_back(out);
  }
  return r;
}

namespace {

// Core simulator. With `ignore_killing` the killing rates are dropped, which
// on an h-transformed graph realises the walk conditioned to survive.
Trajectory walk(const Graph &g, VertexId x0, double u, Rng &rng,
                bool ignore_killing) {
  if (!(u > 0.0))
    throw std::invalid_argument("inverse local time level u must be positive");
  if (x0 >= g.num_vertices())
    throw std::invalid_argument("x0 out of range");
  Trajectory traj;
  traj.start = x0;
  double ell = 0.0; // local time at x0
  VertexId x = x0;
  std::vector<double> weights;
  for (;;) {
    const double kill = ignore_killing ? 0.0 : g.kappa(x);
    const double jump = g.total_conductance(x);
    const double rate = kill + jump;
    const double holding = rate > 0.0
                               ? exponential(rng, rate)
                               : std::numeric_limits<double>::infinity();
    if (x == x0 && ell + holding >= u) {
      traj.steps.push_back({x, u - ell, ExitKind::kStopped, kNoEdge});
      traj.reached = true;
      return traj;
    }
    if (x == x0)
      ell += holding;
    if (uniform01(rng) * rate < kill) {
      traj.steps.push_back({x, holding, ExitKind::kKilled, kNoEdge});
      return traj;
    }
    const auto inc = g.incident(x);
    weights.clear();
    for (EdgeId e : inc)
      weights.push_back(g.edge(e).conductance);
    const EdgeId e = inc[discrete_index(rng, weights)];
    traj.steps.push_back({x, holding, ExitKind::kJump, e});
    x = g.edge(e).other(x);
  }
}

} // namespace

Trajectory run_to_inverse_local_time(const Graph &g, VertexId x0, double u,
                                     Rng &rng) {
  return walk(g, x0, u, rng, false);
}

Trajectory run_conditioned_to_return(const HTransform &ht, double u, Rng &rng) {
  Trajectory traj = walk(ht.graph, ht.x0, u, rng, true);
  for (Step &s : traj.steps)
    s.holding *= ht.h[s.vertex] * ht.h[s.vertex];
  return traj;
}

Trajectory run_conditioned_to_return(const Graph &g, VertexId x0, double u,
                                     Rng &rng) {
  if (g.killing_only_at(x0))
    return walk(g, x0, u, rng, true);
  return run_conditioned_to_return(harmonic_killing_transform(g, x0), u, rng);
}

Trajectory run_conditioned_by_rejection(const Graph &g, VertexId x0, double u,
                                        Rng &rng, std::size_t max_tries) {
  for (std::size_t i = 0; i < max_tries; ++i) {
    Trajectory t = walk(g, x0, u, rng, false);
    if (t.reached)
      return t;
  }
  throw std::runtime_error("rejection sampler exhausted its attempts");
}

std::vector<Trajectory> excursion_split(const Trajectory &traj, VertexId x0,
                                        const std::vector<double> &thresholds) {
  if (traj.steps.empty() || traj.start != x0 || traj.end_vertex() != x0)
    throw std::invalid_argument("excursion_split: path must run from x0 to x0");
  const double total = traj.local_time(x0);
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0) || !(thresholds[i] < total))
      throw std::invalid_argument(
          "excursion_split: thresholds must lie strictly inside (0, u)");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
      throw std::invalid_argument(
          "excursion_split: thresholds must be strictly increasing");
  }

  std::vector<Trajectory> loops;
  Trajectory current;
  current.start = x0;
  current.reached = true;
  std::size_t next = 0;
  double ell = 0.0;
  for (const Step &s : traj.steps) {
    if (s.vertex != x0) {
      current.steps.push_back(s);
      continue;
    }
    double consumed = 0.0; // part of this holding already assigned
    while (next < thresholds.size() && thresholds[next] <= ell + s.holding) {
      const double cut = thresholds[next] - ell;
      current.steps.push_back({x0, cut - consumed, ExitKind::kStopped, kNoEdge});
      loops.push_back(std::move(current));
      current = Trajectory{};
      current.start = x0;
      current.reached = true;
      consumed = cut;
      ++next;
    }
    current.steps.push_back({x0, s.holding - consumed, s.exit, s.edge});
    ell += s.holding;
  }
  loops.push_back(std::move(current));
  return loops;
}

Trajectory concatenate_loops(const std::vector<Trajectory> &loops) {
  Trajectory out;
  if (loops.empty())
    return out;
  out.start = loops.front().start;
  out.reached = true;
  for (const Trajectory &loop : loops) {
    if (loop.steps.empty())
      continue;
    std::size_t first = 0;
    if (!out.steps.empty() && out.steps.back().exit == ExitKind::kStopped &&
        out.steps.back().vertex == loop.steps.front().vertex) {
      Step &tail = out.steps.back();
      tail.holding += loop.steps.front().holding;
      tail.exit = loop.steps.front().exit;
      tail.edge = loop.steps.front().edge;
      first = 1;
    }
    out.steps.insert(out.steps.end(), loop.steps.begin() + static_cast<long>(first),
                     loop.steps.end());
  }
  return out;
}

} // namespace rkinv
