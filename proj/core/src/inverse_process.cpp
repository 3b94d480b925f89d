#include "rkinv/inverse_process.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace rkinv {

const char *to_string(OpenStackLaw law) {
  switch (law) {
  case OpenStackLaw::kShiftedPoisson:
    return "shifted";
  case OpenStackLaw::kZeroTruncatedPoisson:
    return "zero-truncated";
  }
  return "?";
}

OpenStackLaw open_stack_law_from_string(const std::string &name) {
  if (name == "shifted")
    return OpenStackLaw::kShiftedPoisson;
  if (name == "zero-truncated")
    return OpenStackLaw::kZeroTruncatedPoisson;
  throw std::invalid_argument("unknown stack law '" + name +
                              "' (expected shifted or zero-truncated)");
}

const char *to_string(EventKind kind) {
  switch (kind) {
  case EventKind::kPlainJump:
    return "plain-jump";
  case EventKind::kStay:
    return "stay";
  case EventKind::kCloseJump:
    return "close-jump";
  case EventKind::kCloseStay:
    return "close-stay";
  }
  return "?";
}

std::vector<std::int64_t> InverseState::counts() const {
  std::vector<std::int64_t> out(stacks.size());
  for (std::size_t e = 0; e < stacks.size(); ++e)
    out[e] = static_cast<std::int64_t>(stacks[e].size());
  return out;
}

EdgeSet InverseState::open() const {
  EdgeSet s(stacks.size());
  for (std::size_t e = 0; e < stacks.size(); ++e)
    if (!stacks[e].empty())
      s.insert(e);
  return s;
}

double InverseState::level(EdgeId e) const {
  const Edge &edge = graph->edge(e);
  return edge.conductance * std::sqrt(phi_sq[edge.minus] * phi_sq[edge.plus]);
}

namespace {

bool connected_in(const Graph &g, const EdgeSet &open, VertexId a, VertexId b) {
  if (a == b)
    return true;
  std::vector<char> seen(g.num_vertices(), 0);
  std::deque<VertexId> queue{a};
  seen[a] = 1;
  while (!queue.empty()) {
    const VertexId v = queue.front();
    queue.pop_front();
    for (EdgeId e : g.incident(v)) {
      if (!open.contains(e))
        continue;
      const VertexId w = g.edge(e).other(v);
      if (w == b)
        return true;
      if (!seen[w]) {
        seen[w] = 1;
        queue.push_back(w);
      }
    }
  }
  return false;
}

InverseState blank_state(const Graph &g, VertexId x0, const FieldReal &phi) {
  if (phi.size() != g.num_vertices())
    throw std::invalid_argument("field must have one entry per vertex");
  if (x0 >= g.num_vertices())
    throw std::invalid_argument("root vertex out of range");
  if (!(phi[x0] > 0.0))
    throw std::invalid_argument("field must be strictly positive at the root");
  InverseState st;
  st.graph = &g;
  st.root = x0;
  st.current = x0;
  const FieldDecomposition d = field_decompose(phi);
  st.sign = d.sign;
  st.phi0_sq.resize(phi.size());
  for (std::size_t v = 0; v < phi.size(); ++v)
    st.phi0_sq[v] = phi[v] * phi[v];
  st.phi_sq = st.phi0_sq;
  st.local_time.assign(phi.size(), 0.0);
  st.stacks.assign(g.num_edges(), {});
  return st;
}

void fill_uniform(std::vector<double> &stack, std::int64_t n, double top,
                  Rng &rng) {
  stack.clear();
  for (std::int64_t k = 0; k < n; ++k)
    stack.push_back(uniform01(rng) * top);
  std::sort(stack.begin(), stack.end());
}

double conservation_error(const InverseState &st) {
  double err = 0.0;
  for (std::size_t v = 0; v < st.phi_sq.size(); ++v)
    err = std::max(err, std::fabs(st.phi_sq[v] + 2.0 * st.local_time[v] -
                                  st.phi0_sq[v]));
  return err;
}

enum class Engine { kStacks, kRates };

// Local time at x after which the level J = W sqrt(P Q) has dropped to `j`,
// starting from squared magnitude P at x and Q at the neighbour.
double local_time_to_level(double P, double Q, double W, double j) {
  if (!(Q > 0.0))
    return 0.0;
  const double target = (j / W) * (j / W) / Q;
  return std::max(0.0, (P - target) / 2.0);
}

InverseRun run_stage(InverseState &st, Rng &rng, Engine engine) {
  const Graph &g = *st.graph;
  InverseRun run;
  run.crossings.assign(g.num_edges(), 0);
  run.path.start = st.current;
  EdgeSet open = st.open();
  const double start_time = st.time;
  double holding = 0.0;

  auto check_containment = [&]() {
    if (!connected_in(g, open, st.root, st.current))
      ++run.containment_violations;
  };
  check_containment();

  auto advance = [&](VertexId x, double s) {
    st.local_time[x] += s;
    st.phi_sq[x] -= 2.0 * s;
    if (st.phi_sq[x] < 0.0)
      st.phi_sq[x] = 0.0;
    st.time += s;
    holding += s;
  };

  for (;;) {
    const VertexId x = st.current;
    const double P = st.phi_sq[x];
    const double s_deplete = P / 2.0;

    EdgeId best_edge = kNoEdge;
    double best_s = std::numeric_limits<double>::infinity();
    bool best_is_close = false;
    for (EdgeId e : g.incident(x)) { // ascending ids: ties go to the smaller
      if (st.stacks[e].empty())
        continue;
      const Edge &edge = g.edge(e);
      const VertexId y = edge.other(x);
      const double Q = st.phi_sq[y];
      const double W = edge.conductance;
      if (engine == Engine::kStacks) {
        const double p = st.stacks[e].back();
        const double s = local_time_to_level(P, Q, W, p / 2.0);
        if (s < best_s) {
          best_s = s;
          best_edge = e;
        }
      } else {
        const double J = W * std::sqrt(P * Q);
        const double j_plain = J - exponential(rng);
        if (j_plain > 0.0) {
          const double s = local_time_to_level(P, Q, W, j_plain);
          if (s < best_s) {
            best_s = s;
            best_edge = e;
            best_is_close = false;
          }
        }
        const double j_close =
            J > 0.0 ? -0.5 * std::log1p(uniform01(rng) * std::expm1(-2.0 * J))
                    : 0.0;
        const double s = local_time_to_level(P, Q, W, j_close);
        if (s < best_s) {
          best_s = s;
          best_edge = e;
          best_is_close = true;
        }
      }
    }

    if (best_edge == kNoEdge || best_s > s_deplete) {
      st.local_time[x] += s_deplete;
      st.phi_sq[x] = 0.0;
      st.time += s_deplete;
      holding += s_deplete;
      run.path.steps.push_back({x, holding, ExitKind::kStopped, kNoEdge});
      break;
    }

    advance(x, best_s);
    const Edge &edge = g.edge(best_edge);
    const VertexId y = edge.other(x);
    InverseEvent ev{st.time, best_edge, EventKind::kStay, x, x, 0, false,
                    st.level(best_edge)};
    bool closes;
    if (engine == Engine::kStacks) {
      st.stacks[best_edge].pop_back();
      closes = st.stacks[best_edge].empty();
    } else {
      closes = best_is_close;
      if (closes)
        st.stacks[best_edge].clear();
    }
    ev.n_after = st.count(best_edge);

    bool move;
    if (!closes) {
      // A plain-jump clock always moves; a stack pop crosses half the time.
      move = engine == Engine::kRates || bernoulli(rng, 0.5);
      ev.kind = move ? EventKind::kPlainJump : EventKind::kStay;
    } else {
      open.erase(best_edge);
      if (connected_in(g, open, x, y)) {
        move = bernoulli(rng, 0.5);
      } else {
        ev.forced = true;
        move = connected_in(g, open, st.root, y);
      }
      ev.kind = move ? EventKind::kCloseJump : EventKind::kCloseStay;
    }
    if (move) {
      run.path.steps.push_back({x, holding, ExitKind::kJump, best_edge});
      holding = 0.0;
      ++run.crossings[best_edge];
      ++run.jumps;
      st.current = y;
      ev.to = y;
    }
    run.events.push_back(ev);
    check_containment();
  }

  run.terminal_time = st.time - start_time;
  run.terminal_vertex = st.current;
  run.ended_at_root = st.current == st.root;
  run.terminal_open = open;
  run.terminal_magnitude.resize(st.phi_sq.size());
  for (std::size_t v = 0; v < st.phi_sq.size(); ++v)
    run.terminal_magnitude[v] = std::sqrt(st.phi_sq[v]);
  run.conservation_error = conservation_error(st);
  return run;
}

// Runs the engine on the h-transformed graph when there is killing off the
// root. Levels J are unchanged by the transform, so only clocks are mapped.
InverseRun run_with_killing_reduction(InverseState &st, Rng &rng, Engine engine) {
  const Graph &g = *st.graph;
  if (g.killing_only_at(st.root))
    return run_stage(st, rng, engine);

  const HTransform ht = harmonic_killing_transform(g, st.root);
  const auto &h = ht.h;
  InverseState hs = st;
  hs.graph = &ht.graph;
  for (std::size_t v = 0; v < h.size(); ++v) {
    const double h2 = h[v] * h[v];
    hs.phi0_sq[v] /= h2;
    hs.phi_sq[v] /= h2;
    hs.local_time[v] /= h2;
  }
  InverseRun run = run_stage(hs, rng, engine);

  // Between consecutive events the walker sits at the event's `from` vertex.
  double t_h = st.time;
  double t = st.time;
  for (InverseEvent &ev : run.events) {
    t += (ev.time - t_h) * h[ev.from] * h[ev.from];
    t_h = ev.time;
    ev.time = t;
  }
  t += (hs.time - t_h) * h[run.terminal_vertex] * h[run.terminal_vertex];
  for (Step &s : run.path.steps)
    s.holding *= h[s.vertex] * h[s.vertex];

  st.current = hs.current;
  st.stacks = std::move(hs.stacks);
  for (std::size_t v = 0; v < h.size(); ++v) {
    const double h2 = h[v] * h[v];
    st.phi_sq[v] = hs.phi_sq[v] * h2;
    st.local_time[v] = hs.local_time[v] * h2;
    run.terminal_magnitude[v] = std::sqrt(st.phi_sq[v]);
  }
  run.terminal_time = t - st.time;
  st.time = t;
  run.conservation_error = conservation_error(st);
  return run;
}

} // namespace

InverseState init_inverse_from_field(const Graph &g, VertexId x0,
                                     const FieldReal &phi, Rng &rng) {
  InverseState st = blank_state(g, x0, phi);
  for (const Edge &e : g.edges()) {
    if (st.sign[e.minus] != st.sign[e.plus])
      continue;
    const double top = 2.0 * st.level(e.id);
    if (top > 0.0)
      fill_uniform(st.stacks[e.id], poisson(rng, top), top, rng);
  }
  return st;
}

InverseState init_inverse_from_field_and_config(const Graph &g, VertexId x0,
                                                const FieldReal &phi,
                                                const EdgeSet &open0, Rng &rng,
                                                OpenStackLaw law) {
  InverseState st = blank_state(g, x0, phi);
  if (open0.universe() != g.num_edges())
    throw std::invalid_argument("edge set does not belong to this graph");
  for (EdgeId e : open0.ids()) {
    const Edge &edge = g.edge(e);
    if (st.sign[edge.minus] != st.sign[edge.plus])
      throw std::invalid_argument("open edge " + std::to_string(e) +
                                  " joins vertices of opposite sign");
    const double top = 2.0 * st.level(e);
    if (!(top > 0.0))
      throw std::invalid_argument("open edge " + std::to_string(e) +
                                  " has zero interaction");
    const std::int64_t n = law == OpenStackLaw::kShiftedPoisson
                               ? 1 + poisson(rng, top)
                               : poisson_positive(rng, top);
    fill_uniform(st.stacks[e], n, top, rng);
  }
  return st;
}

InverseRun run_inverse(InverseState &st, Rng &rng) {
  return run_with_killing_reduction(st, rng, Engine::kStacks);
}

InverseRun run_inverse_stage(InverseState &st, Rng &rng) {
  return run_stage(st, rng, Engine::kStacks);
}

InverseRun run_inverse_jump_rates(const Graph &g, VertexId x0,
                                  const FieldReal &phi, const EdgeSet &open0,
                                  Rng &rng) {
  InverseState st = blank_state(g, x0, phi);
  if (open0.universe() != g.num_edges())
    throw std::invalid_argument("edge set does not belong to this graph");
  for (EdgeId e : open0.ids()) {
    const Edge &edge = g.edge(e);
    if (st.sign[edge.minus] != st.sign[edge.plus])
      throw std::invalid_argument("open edge " + std::to_string(e) +
                                  " joins vertices of opposite sign");
    st.stacks[e] = {0.0}; // open marker; point values are unused here
  }
  return run_with_killing_reduction(st, rng, Engine::kRates);
}

namespace {

void run_discrete_stage(const Graph &g, VertexId root,
                        std::vector<std::int64_t> &stacks, Rng &rng,
                        DiscreteInverseRun &run, bool keep_history) {
  EdgeSet open(g.num_edges());
  for (EdgeId e = 0; e < stacks.size(); ++e)
    if (stacks[e] > 0)
      open.insert(e);
  VertexId x = root;
  run.vertices.push_back(x);
  std::vector<double> weights;
  for (;;) {
    if (keep_history)
      run.stack_history.push_back(stacks);
    const auto inc = g.incident(x);
    weights.clear();
    bool any = false;
    for (EdgeId e : inc) {
      weights.push_back(static_cast<double>(stacks[e]));
      any = any || stacks[e] > 0;
    }
    if (!any)
      break;
    const EdgeId e = inc[discrete_index(rng, weights)];
    const VertexId y = g.edge(e).other(x);
    --stacks[e];
    bool move;
    EventKind kind;
    if (stacks[e] > 0) {
      move = bernoulli(rng, 0.5);
      kind = move ? EventKind::kPlainJump : EventKind::kStay;
    } else {
      open.erase(e);
      if (connected_in(g, open, x, y))
        move = bernoulli(rng, 0.5);
      else
        move = connected_in(g, open, root, y);
      kind = move ? EventKind::kCloseJump : EventKind::kCloseStay;
    }
    if (move) {
      ++run.crossings[e];
      ++run.jumps;
      x = y;
    }
    run.popped.push_back(e);
    run.kinds.push_back(kind);
    run.vertices.push_back(x);
    if (!connected_in(g, open, root, x))
      ++run.containment_violations;
  }
  run.terminal_vertex = x;
  run.ended_at_root = x == root;
  run.terminal_open = open;
}

} // namespace

DiscreteInverseRun run_inverse_discrete(const Graph &g, VertexId x0,
                                        std::vector<std::int64_t> stacks,
                                        Rng &rng, bool keep_history) {
  if (stacks.size() != g.num_edges())
    throw std::invalid_argument("stacks must have one entry per edge");
  for (std::int64_t n : stacks)
    if (n < 0)
      throw std::invalid_argument("stack heights must be nonnegative");
  DiscreteInverseRun run;
  run.crossings.assign(g.num_edges(), 0);
  run_discrete_stage(g, x0, stacks, rng, run, keep_history);
  return run;
}

// ------------------------------------------------------------ forward side

ForwardEnlargedSampler::ForwardEnlargedSampler(const Graph &g, VertexId x0,
                                               double u)
    : graph_(&g), x0_(x0), u_(u), pinned_zero_(g, ConditionSpec::pin(x0, 0.0)),
      ht_(harmonic_killing_transform(g, x0)) {
  if (!(u > 0.0))
    throw std::invalid_argument("u must be positive");
}

ForwardEnlarged ForwardEnlargedSampler::sample(Rng &rng) const {
  const Graph &g = *graph_;
  ForwardEnlarged r;
  r.phi0 = pinned_zero_.sample(rng);
  const FieldDecomposition d = field_decompose(r.phi0);
  std::vector<double> P(g.num_vertices());
  for (std::size_t v = 0; v < P.size(); ++v)
    P[v] = r.phi0[v] * r.phi0[v];

  const std::size_t m = g.num_edges();
  r.n0.assign(m, 0);
  std::vector<double> next_level(m);
  for (const Edge &e : g.edges()) {
    const double J = e.conductance * std::sqrt(P[e.minus] * P[e.plus]);
    if (d.sign[e.minus] == d.sign[e.plus] && J > 0.0)
      r.n0[e.id] = poisson(rng, 2.0 * J);
    next_level[e.id] = J + exponential(rng);
  }
  std::vector<std::int64_t> n = r.n0;

  r.traj = run_conditioned_to_return(ht_, u_, rng);
  double t = 0.0;
  for (const Step &s : r.traj.steps) {
    const VertexId x = s.vertex;
    const double P0 = P[x];
    const double P1 = P0 + 2.0 * s.holding;
    for (EdgeId e : g.incident(x)) {
      const Edge &edge = g.edge(e);
      const double Q = P[edge.other(x)];
      if (!(Q > 0.0))
        continue;
      const double W = edge.conductance;
      const double J1 = W * std::sqrt(P1 * Q);
      while (next_level[e] <= J1) {
        const double lj = next_level[e] / W;
        const double at = std::max(0.0, (lj * lj / Q - P0) / 2.0);
        ++n[e];
        r.history.push_back({t + at, e, n[e], false});
        next_level[e] += exponential(rng);
      }
    }
    P[x] = P1;
    t += s.holding;
    if (s.exit == ExitKind::kJump) {
      ++n[s.edge];
      r.history.push_back({t, s.edge, n[s.edge], true});
    }
  }
  std::stable_sort(r.history.begin(), r.history.end(),
                   [](const EnlargedHistoryEntry &a, const EnlargedHistoryEntry &b) {
                     return a.time < b.time;
                   });
  r.n_end = n;
  r.C0 = EdgeSet(m);
  r.C_end = EdgeSet(m);
  for (EdgeId e = 0; e < m; ++e) {
    if (r.n0[e] > 0)
      r.C0.insert(e);
    if (n[e] > 0)
      r.C_end.insert(e);
  }
  const std::vector<int> sigma = sign_sample_on_clusters(g, r.C_end, x0_, rng);
  r.phiU.resize(g.num_vertices());
  for (VertexId v = 0; v < P.size(); ++v)
    r.phiU[v] = sigma[v] * std::sqrt(P[v]);
  return r;
}

ForwardEnlarged forward_enlarged(const Graph &g, VertexId x0, double u,
                                 Rng &rng) {
  return ForwardEnlargedSampler(g, x0, u).sample(rng);
}

// ------------------------------------------------------- staged inversions

LoopSoupSample invert_loop_soup(const Graph &g, const FieldReal &phi,
                                const std::vector<VertexId> &enumeration,
                                double eps, Rng &rng, InverseDiagnostics *diag) {
  const std::vector<VertexId> order =
      enumeration.empty() ? default_enumeration(g) : enumeration;
  if (order.size() != g.num_vertices())
    throw std::invalid_argument("enumeration must list every vertex once");
  if (phi.size() != g.num_vertices())
    throw std::invalid_argument("field must have one entry per vertex");
  for (double v : phi)
    if (v == 0.0)
      throw std::invalid_argument("field must not vanish at any vertex");

  // The root sign plays no role in the rules; flip the field if needed so
  // the common initializer accepts it.
  FieldReal start = phi;
  if (start[order.front()] < 0.0)
    for (double &v : start)
      v = -v;
  InverseState st = init_inverse_from_field(g, order.front(), start, rng);

  LoopSoupSample soup;
  soup.num_vertices = g.num_vertices();
  soup.num_edges = g.num_edges();
  InverseDiagnostics local;
  for (VertexId root : order) {
    st.root = root;
    st.current = root;
    InverseRun run = run_inverse_stage(st, rng);
    ++local.stages;
    local.containment_violations += run.containment_violations;
    local.conservation_error =
        std::max(local.conservation_error, run.conservation_error);
    if (!run.ended_at_root) {
      ++local.wrong_terminal;
      soup.loops.push_back(std::move(run.path));
      continue;
    }
    const double total = run.path.local_time(root);
    const PDPartition pd = sample_pd_partition(0.5, eps, rng);
    for (Trajectory &loop :
         excursion_split(run.path, root, partition_thresholds(pd, total)))
      soup.loops.push_back(std::move(loop));
  }
  if (diag)
    *diag = local;
  return soup;
}

CurrentConfig invert_current_from_fk(const Graph &g, const std::vector<double> &J,
                                     const EdgeSet &fk, Rng &rng,
                                     OpenStackLaw law,
                                     const std::vector<VertexId> &enumeration,
                                     InverseDiagnostics *diag) {
  if (J.size() != g.num_edges())
    throw std::invalid_argument("interaction weights must have one entry per edge");
  if (fk.universe() != g.num_edges())
    throw std::invalid_argument("edge set does not belong to this graph");
  const std::vector<VertexId> order =
      enumeration.empty() ? default_enumeration(g) : enumeration;

  std::vector<std::int64_t> stacks(g.num_edges(), 0);
  for (EdgeId e : fk.ids()) {
    const double mean = 2.0 * J[e];
    if (law == OpenStackLaw::kShiftedPoisson)
      stacks[e] = 1 + poisson(rng, mean);
    else if (mean > 0.0)
      stacks[e] = poisson_positive(rng, mean);
    else
      throw std::invalid_argument("open edge with zero weight");
  }

  DiscreteInverseRun run;
  run.crossings.assign(g.num_edges(), 0);
  InverseDiagnostics local;
  for (VertexId root : order) {
    run_discrete_stage(g, root, stacks, rng, run, false);
    ++local.stages;
    if (!run.ended_at_root)
      ++local.wrong_terminal;
  }
  local.containment_violations = run.containment_violations;
  if (diag)
    *diag = local;
  return run.crossings;
}

} // namespace rkinv
