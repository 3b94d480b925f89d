#include "rkinv/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace rkinv {

namespace {

// ------------------------------------------------------------ test graphs

Graph make_graph(std::vector<std::string> vertices,
                 std::vector<GraphSpec::EdgeSpec> edges,
                 std::map<std::string, double> kappa, bool allow_recurrent = false) {
  GraphSpec spec;
  spec.vertices = std::move(vertices);
  spec.edges = std::move(edges);
  spec.kappa = std::move(kappa);
  GraphOptions opt;
  opt.allow_recurrent = allow_recurrent;
  return Graph::build(spec, opt);
}

// Green function [[1,1],[1,2]].
Graph graph_ab() { return make_graph({"a", "b"}, {{"a", "b", 1.0}}, {{"a", 1.0}}); }

Graph graph_path3() {
  return make_graph({"a", "b", "c"}, {{"a", "b", 1.0}, {"b", "c", 0.5}},
                    {{"a", 0.5}, {"c", 0.5}});
}

Graph graph_edge() { return make_graph({"a", "b"}, {{"a", "b", 1.0}}, {}, true); }

Graph graph_triangle() {
  return make_graph({"a", "b", "c"},
                    {{"a", "b", 1.0}, {"b", "c", 1.0}, {"c", "a", 1.0}}, {}, true);
}

Graph graph_square_diag() {
  return make_graph({"a", "b", "c", "d"},
                    {{"a", "b", 1.0}, {"b", "c", 1.0}, {"c", "d", 1.0},
                     {"d", "a", 1.0}, {"a", "c", 1.0}},
                    {}, true);
}

Graph graph_triangle_pendant() {
  return make_graph({"a", "b", "c", "d"},
                    {{"a", "b", 1.0}, {"b", "c", 0.8}, {"c", "a", 1.2}, {"c", "d", 0.6}},
                    {{"a", 0.5}});
}

// Killing off the root only.
Graph graph_killed_path() {
  return make_graph({"a", "b", "c"}, {{"a", "b", 1.0}, {"b", "c", 1.0}},
                    {{"b", 0.3}, {"c", 0.5}});
}

// ----------------------------------------------------------- suite context

class Ctx {
public:
  Ctx(std::string suite, const SuiteParams &p, std::uint64_t seed, std::uint64_t stream)
      : suite_(std::move(suite)), params_(p), seed_(seed), stream_(stream) {}

  const SuiteParams &params() const { return params_; }
  std::size_t n(std::size_t base) const {
    const double v = std::round(static_cast<double>(base) * params_.sample_scale);
    return std::max<std::size_t>(200, static_cast<std::size_t>(v));
  }
  // Fresh sub-seed for each sampling block, in program order.
  std::uint64_t next_seed() { return derive_seed(seed_, stream_, ++blocks_); }

  TestReport &add(TestReport r) {
    r.suite = suite_;
    r.seed = seed_;
    reports_.push_back(std::move(r));
    return reports_.back();
  }
  TestReport &add_p(const std::string &name, const std::string &kind,
                    const TestStatistic &t, std::size_t n, std::string detail = {}) {
    TestReport r;
    r.name = name;
    r.kind = kind;
    r.statistic = t.statistic;
    r.p_value = t.p_value;
    r.threshold = params_.p_threshold;
    r.pass = t.p_value > params_.p_threshold;
    r.n = n;
    r.detail = std::move(detail);
    if (t.dof > 0)
      r.detail += (r.detail.empty() ? "" : "; ") + std::string("dof ") + std::to_string(t.dof);
    return add(std::move(r));
  }
  TestReport &add_bound(const std::string &name, const std::string &kind, double value,
                        double threshold, std::size_t n, std::string detail = {}) {
    TestReport r;
    r.name = name;
    r.kind = kind;
    r.statistic = value;
    r.threshold = threshold;
    r.pass = value <= threshold;
    r.n = n;
    r.detail = std::move(detail);
    return add(std::move(r));
  }
  TestReport &add_moments(const std::string &name, const std::vector<std::vector<double>> &s,
                          const Eigen::VectorXd &mean, const Eigen::MatrixXd &cov,
                          double k_sigma) {
    TestReport r = moment_check(s, mean, cov, k_sigma);
    r.name = name;
    return add(std::move(r));
  }
  // Failure of the machinery itself (an exception) is a failed test.
  TestReport &add_error(const std::string &name, const std::string &kind,
                        const std::string &what, std::size_t n) {
    TestReport r;
    r.name = name;
    r.kind = kind;
    r.statistic = 0.0;
    r.p_value = 0.0;
    r.threshold = params_.p_threshold;
    r.pass = false;
    r.n = n;
    r.detail = what;
    return add(std::move(r));
  }

  std::vector<TestReport> take() { return std::move(reports_); }

private:
  std::string suite_;
  SuiteParams params_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t blocks_ = 0;
  std::vector<TestReport> reports_;
};

std::vector<double> column(const std::vector<std::vector<double>> &rows, std::size_t j) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto &r : rows)
    out.push_back(r.at(j));
  return out;
}

std::vector<std::vector<double>> restrict_to(const std::vector<std::vector<double>> &rows,
                                             const std::vector<VertexId> &keep) {
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  for (const auto &r : rows) {
    std::vector<double> v;
    v.reserve(keep.size());
    for (VertexId k : keep)
      v.push_back(r.at(k));
    out.push_back(std::move(v));
  }
  return out;
}

Eigen::VectorXd restrict_mean(const ConditionalMoments &cm) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(cm.free.size()));
  for (std::size_t i = 0; i < cm.free.size(); ++i)
    m(static_cast<Eigen::Index>(i)) = cm.mean(static_cast<Eigen::Index>(cm.free[i]));
  return m;
}

template <class T> std::map<std::string, std::int64_t> tally(const std::vector<T> &keys) {
  std::map<std::string, std::int64_t> out;
  for (const auto &k : keys)
    ++out[k];
  return out;
}

std::string code_key(const EdgeSet &s) { return std::to_string(s.code()); }

std::string sign_key(const FieldReal &phi) {
  std::string s;
  for (double v : phi)
    s += v < 0.0 ? '-' : '+';
  return s;
}

double squared(double v) { return v * v; }

// ------------------------------------------------------------------ suites

void suite_single_edge(Ctx &ctx) {
  const Graph g = graph_edge();
  for (double J : {0.3, 1.0, 2.0}) {
    const std::vector<double> Jv{J};
    const DiscreteDistribution fk = fk_exact(g, Jv);
    const DiscreteDistribution cur = current_exact(g, Jv, ctx.params().n_max);
    const DiscreteDistribution push = current_fk_pushforward(g, Jv, cur);
    const double open_err = std::fabs(fk.probability({1}) - std::tanh(J));
    const double tv = total_variation(push, fk);
    std::ostringstream d;
    d.precision(3);
    d << "|P(open)-tanh J|=" << open_err << "; TV=" << tv
      << "; truncation bound=" << cur.truncation_bound;
    // Both checks share one threshold: the open probability is exact while
    // the pushforward is allowed the truncation slack.
    const double stat = std::max(open_err, tv);
    TestReport &r = ctx.add_bound("J=" + std::to_string(J).substr(0, 3), "exact", stat,
                                  cur.truncation_bound + 1e-10, 0, d.str());
    r.pass = open_err <= 1e-10 && tv <= cur.truncation_bound + 1e-10;
  }
}

void suite_fk_ising(Ctx &ctx) {
  struct Case {
    std::string name;
    Graph g;
    std::vector<double> J;
  };
  std::vector<Case> cases;
  cases.push_back({"triangle", graph_triangle(), {0.4, 0.7, 1.1}});
  cases.push_back({"square+diagonal", graph_square_diag(), {0.3, 0.5, 0.8, 0.6, 0.9}});
  for (const Case &c : cases) {
    const DiscreteDistribution fk = fk_exact(c.g, c.J);
    const DiscreteDistribution ising = ising_exact(c.g, c.J);
    const double tv = total_variation(fk_sign_pushforward(c.g, fk), ising);
    ctx.add_bound(c.name + " fk signs vs ising", "exact", tv, 1e-10, 0);
  }
  const Case &tri = cases.front();
  const DiscreteDistribution cur = current_exact(tri.g, tri.J, ctx.params().n_max);
  const double tv =
      total_variation(current_fk_pushforward(tri.g, tri.J, cur), fk_exact(tri.g, tri.J));
  ctx.add_bound("triangle current to fk", "exact", tv, cur.truncation_bound + 1e-10, 0);
}

void suite_gff(Ctx &ctx) {
  const Graph g = graph_ab();
  const std::size_t n = ctx.n(100000);
  const double k = ctx.params().k_sigma_gff;
  {
    const GffSampler s(g, ConditionSpec::free());
    const auto rows = parallel_replicas(n, ctx.next_seed(),
                                        [&](std::size_t, Rng &rng) { return s.sample(rng); });
    ctx.add_moments("free field moments", rows, Eigen::VectorXd::Zero(2), green_function(g), k);
  }
  {
    const ConditionSpec cond = ConditionSpec::pin(g.vertex("a"), std::sqrt(2.0));
    const GffSampler s(g, cond);
    const auto rows = parallel_replicas(n, ctx.next_seed(),
                                        [&](std::size_t, Rng &rng) { return s.sample(rng); });
    const ConditionalMoments &cm = s.moments();
    std::size_t pin_errors = 0;
    for (const auto &r : rows)
      pin_errors += r[0] != std::sqrt(2.0);
    ctx.add_moments("pinned field moments", restrict_to(rows, cm.free), restrict_mean(cm),
                    cm.covariance, k);
    ctx.add_bound("pinned value exact", "invariant", static_cast<double>(pin_errors), 0.0, n);
  }
}

void suite_le_jan(Ctx &ctx) {
  const std::size_t n = ctx.n(20000);
  for (const auto &[name, g] : {std::pair{std::string("ab"), graph_ab()},
                                std::pair{std::string("path3"), graph_path3()}}) {
    const LoopSoupSampler soup(g, default_enumeration(g), 0.5);
    const auto occ = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
      return fields(soup.sample(rng)).occupation;
    });
    const GffSampler gff(g, ConditionSpec::free());
    const auto half_sq = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
      FieldReal phi = gff.sample(rng);
      for (double &v : phi)
        v = v * v / 2.0;
      return phi;
    });
    for (VertexId x = 0; x < g.num_vertices(); ++x)
      ctx.add_p(name + " L_" + g.label(x) + " vs phi^2/2", "ks",
                ks_two_sample(column(occ, x), column(half_sq, x)), n);
    const Eigen::MatrixXd G = green_function(g);
    const Eigen::VectorXd mean = G.diagonal() / 2.0;
    const Eigen::MatrixXd cov = G.cwiseProduct(G) / 2.0;
    ctx.add_moments(name + " occupation moments", occ, mean, cov, ctx.params().k_sigma);
  }
}

void suite_ray_knight(Ctx &ctx) {
  const std::size_t n = ctx.n(20000);
  for (const auto &[name, g] : {std::pair{std::string("ab"), graph_ab()},
                                std::pair{std::string("path3"), graph_path3()}}) {
    const VertexId x0 = g.vertex("a");
    const HTransform ht = harmonic_killing_transform(g, x0);
    const GffSampler zero(g, ConditionSpec::pin(x0, 0.0));
    for (double u : {0.5, 2.0}) {
      const auto lhs = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
        const FieldReal phi0 = zero.sample(rng);
        const Trajectory traj = run_conditioned_to_return(ht, u, rng);
        std::vector<double> v = traj.local_times(g.num_vertices());
        for (std::size_t i = 0; i < v.size(); ++i)
          v[i] += phi0[i] * phi0[i] / 2.0;
        return v;
      });
      const GffSampler pinned(g, ConditionSpec::pin(x0, std::sqrt(2.0 * u)));
      const auto rhs = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
        FieldReal phi = pinned.sample(rng);
        for (double &v : phi)
          v = v * v / 2.0;
        return phi;
      });
      const std::string tag = name + " u=" + (u == 0.5 ? "0.5" : "2");
      double root_err = 0.0;
      for (const auto &r : lhs)
        root_err = std::max(root_err, std::fabs(r[x0] - u));
      ctx.add_bound(tag + " ell_x0 = u", "invariant", root_err, 1e-9, n);
      for (VertexId x = 0; x < g.num_vertices(); ++x)
        if (x != x0)
          ctx.add_p(tag + " vertex " + g.label(x), "ks",
                    ks_two_sample(column(lhs, x), column(rhs, x)), n);
    }
  }
}

void suite_forward_coupling(Ctx &ctx) {
  const Graph g = graph_path3();
  const VertexId x0 = g.vertex("a");
  const double u = 1.0;
  const std::size_t n = ctx.n(20000);
  const ForwardRkSampler sampler(g, x0, u);
  const auto runs = parallel_replicas(n, ctx.next_seed(),
                                      [&](std::size_t, Rng &rng) { return sampler.sample(rng); });

  const ConditionalMoments cm = conditional_moments(g, ConditionSpec::pin(x0, std::sqrt(2 * u)));
  std::vector<std::vector<double>> phiU;
  double identity_err = 0.0;
  std::size_t opposite_open = 0;
  std::vector<BernoulliObservation> obs;
  for (const ForwardRk &r : runs) {
    phiU.push_back(r.phiU);
    const std::vector<double> ell = r.traj.local_times(g.num_vertices());
    for (VertexId v = 0; v < g.num_vertices(); ++v)
      identity_err = std::max(identity_err, std::fabs(squared(r.phiU[v]) -
                                                      squared(r.phi0[v]) - 2.0 * ell[v]));
    identity_err = std::max(identity_err, std::fabs(r.phiU[x0] - std::sqrt(2 * u)));
    for (const Edge &e : g.edges()) {
      const double a = r.phiU[e.minus];
      const double b = r.phiU[e.plus];
      const bool open = r.openU.contains(e.id);
      if ((a < 0.0) != (b < 0.0)) {
        opposite_open += open;
        continue;
      }
      obs.push_back({static_cast<int>(e.id), -std::expm1(-2.0 * e.conductance * a * b), open});
    }
  }
  ctx.add_moments("phiU moments vs pinned field", restrict_to(phiU, cm.free),
                  restrict_mean(cm), cm.covariance, ctx.params().k_sigma);
  ctx.add_p("open edges given phiU", "calibration", bernoulli_calibration(obs, 10), obs.size());
  ctx.add_bound("phiU^2 = phi0^2 + 2 ell", "invariant", identity_err, 1e-9, n);
  ctx.add_bound("opposite-sign edges closed", "invariant", static_cast<double>(opposite_open),
                0.0, n);
}

void suite_enlarged(Ctx &ctx) {
  const Graph g = graph_path3();
  const VertexId x0 = g.vertex("a");
  const double u = 1.0;
  const std::size_t n = ctx.n(20000);
  const ForwardEnlargedSampler enlarged(g, x0, u);
  const ForwardRkSampler rk(g, x0, u);

  struct Out {
    std::string key;
    FieldReal phi0, phiU;
    std::size_t bad = 0;
  };
  const auto a = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
    const ForwardEnlarged r = enlarged.sample(rng);
    Out o{code_key(r.C0) + "|" + code_key(r.C_end) + "|" + sign_key(r.phiU), r.phi0, r.phiU};
    std::vector<std::int64_t> n_now = r.n0;
    for (const EnlargedHistoryEntry &h : r.history) {
      o.bad += h.n_after != n_now[h.edge] + 1;
      n_now[h.edge] = h.n_after;
    }
    o.bad += n_now != r.n_end;
    o.bad += !r.C0.subset_of(r.C_end);
    return o;
  });
  const auto b = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
    const ForwardRk r = rk.sample(rng);
    return Out{code_key(r.open0) + "|" + code_key(r.openU) + "|" + sign_key(r.phiU), r.phi0,
               r.phiU};
  });
  std::vector<std::string> ka, kb;
  std::vector<std::vector<double>> phi0, phiU;
  std::size_t bad = 0;
  for (const Out &o : a) {
    ka.push_back(o.key);
    phi0.push_back(o.phi0);
    phiU.push_back(o.phiU);
    bad += o.bad;
  }
  for (const Out &o : b)
    kb.push_back(o.key);
  ctx.add_p("(C0, C_end, signs of phiU)", "chi2", chi2_homogeneity(tally(ka), tally(kb)), n);
  const ConditionalMoments m0 = conditional_moments(g, ConditionSpec::pin(x0, 0.0));
  const ConditionalMoments mU = conditional_moments(g, ConditionSpec::pin(x0, std::sqrt(2 * u)));
  ctx.add_moments("phi0 moments", restrict_to(phi0, m0.free), restrict_mean(m0), m0.covariance,
                  ctx.params().k_sigma);
  ctx.add_moments("phiU moments", restrict_to(phiU, mU.free), restrict_mean(mU), mU.covariance,
                  ctx.params().k_sigma);
  ctx.add_bound("stack counts increase by one per event", "invariant", static_cast<double>(bad),
                0.0, n);
}

void suite_inversion(Ctx &ctx) {
  const std::size_t n = ctx.n(20000);
  const double u = 1.0;
  for (const auto &[name, g] : {std::pair{std::string("ab"), graph_ab()},
                                std::pair{std::string("path3"), graph_path3()}}) {
    const VertexId x0 = g.vertex("a");
    struct Out {
      double time = 0.0;
      std::vector<std::int64_t> crossings;
      std::size_t clusters = 0;
    };
    const ForwardRkSampler fwd(g, x0, u);
    const auto f = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
      const ForwardRk r = fwd.sample(rng);
      return Out{r.traj.total_time(), r.traj.crossings(g.num_edges()), clusters(g, r.open0).count};
    });
    const GffSampler pinned(g, ConditionSpec::pin(x0, std::sqrt(2 * u)));
    const auto inv = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
      const FieldReal phi = pinned.sample(rng);
      InverseState st = init_inverse_from_field(g, x0, phi, rng);
      const InverseRun r = run_inverse(st, rng);
      return Out{r.terminal_time, r.crossings, clusters(g, r.terminal_open).count};
    });
    std::vector<double> tf, ti;
    std::vector<std::string> cf, ci;
    for (std::size_t i = 0; i < n; ++i) {
      tf.push_back(f[i].time);
      ti.push_back(inv[i].time);
      cf.push_back(std::to_string(f[i].clusters));
      ci.push_back(std::to_string(inv[i].clusters));
    }
    ctx.add_p(name + " T vs tau_u", "ks", ks_two_sample(tf, ti), n);
    for (const Edge &e : g.edges()) {
      std::vector<std::string> xf, xi;
      for (std::size_t i = 0; i < n; ++i) {
        xf.push_back(std::to_string(f[i].crossings[e.id]));
        xi.push_back(std::to_string(inv[i].crossings[e.id]));
      }
      ctx.add_p(name + " crossings of " + g.label(e.minus) + g.label(e.plus), "chi2",
                chi2_homogeneity(tally(xf), tally(xi)), n);
    }
    ctx.add_p(name + " terminal cluster count", "chi2", chi2_homogeneity(tally(cf), tally(ci)), n);
  }
}

void suite_hard_invariants(Ctx &ctx) {
  const std::size_t n = ctx.n(5000);
  const double u = 1.0;
  std::size_t runs = 0, not_at_root = 0, containment = 0, parity = 0, fk_opposite = 0;
  double conservation = 0.0;

  for (const Graph &g : {graph_path3(), graph_triangle_pendant(), graph_killed_path()}) {
    const VertexId x0 = g.vertex("a");
    const GffSampler pinned(g, ConditionSpec::pin(x0, std::sqrt(2 * u)));
    struct Out {
      std::size_t not_at_root = 0, containment = 0, parity = 0, fk_opposite = 0;
      double conservation = 0.0;
    };
    const auto outs = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
      Out o;
      const FieldReal phi = pinned.sample(rng);
      InverseState st = init_inverse_from_field(g, x0, phi, rng);
      const InverseRun r = run_inverse(st, rng);
      o.not_at_root += !r.ended_at_root || r.terminal_magnitude[x0] > 1e-9;
      o.containment += r.containment_violations;
      o.conservation = r.conservation_error;
      o.parity += !parity_ok(g, r.crossings);

      const InverseRun rates = run_inverse_jump_rates(g, x0, phi, fk_from_field(g, phi, rng), rng);
      o.not_at_root += !rates.ended_at_root;
      o.containment += rates.containment_violations;
      o.parity += !parity_ok(g, rates.crossings);

      InverseState st2 = init_inverse_from_field(g, x0, phi, rng);
      const DiscreteInverseRun d = run_inverse_discrete(g, x0, st2.counts(), rng, false);
      o.not_at_root += !d.ended_at_root;
      o.containment += d.containment_violations;
      o.parity += !parity_ok(g, d.crossings);

      // Any field, including the free one, must never open a disagreeing edge.
      const EdgeSet open = fk_from_field(g, phi, rng);
      for (const Edge &e : g.edges())
        o.fk_opposite += open.contains(e.id) && ((phi[e.minus] < 0.0) != (phi[e.plus] < 0.0));
      return o;
    });
    for (const Out &o : outs) {
      runs += 3;
      not_at_root += o.not_at_root;
      containment += o.containment;
      parity += o.parity;
      fk_opposite += o.fk_opposite;
      conservation = std::max(conservation, o.conservation);
    }
  }

  // Loop-soup inversion on the free field, and current inversion.
  {
    const Graph g = graph_triangle_pendant();
    const GffSampler gff(g, ConditionSpec::free());
    const std::vector<VertexId> en = default_enumeration(g);
    const auto outs = parallel_replicas(ctx.n(2000), ctx.next_seed(), [&](std::size_t, Rng &rng) {
      const FieldReal phi = gff.sample(rng);
      InverseDiagnostics diag;
      const LoopSoupSample soup = invert_loop_soup(g, phi, en, 1e-9, rng, &diag);
      const SoupFields f = fields(soup);
      std::size_t fk_bad = 0;
      const EdgeSet open = fk_from_field(g, phi, rng);
      for (const Edge &e : g.edges())
        fk_bad += open.contains(e.id) && ((phi[e.minus] < 0.0) != (phi[e.plus] < 0.0));
      return std::tuple{diag, parity_ok(g, f.crossings), fk_bad};
    });
    for (const auto &[diag, par, fk_bad] : outs) {
      runs += diag.stages;
      not_at_root += diag.wrong_terminal;
      containment += diag.containment_violations;
      conservation = std::max(conservation, diag.conservation_error);
      parity += !par;
      fk_opposite += fk_bad;
    }
  }
  {
    const Graph g = graph_triangle();
    const std::vector<double> J{0.5, 0.8, 1.1};
    const DiscreteDistribution fk = fk_exact(g, J);
    const auto outs = parallel_replicas(ctx.n(5000), ctx.next_seed(), [&](std::size_t, Rng &rng) {
      const EdgeSet open = edge_set_from_indicator(fk.sample(rng));
      InverseDiagnostics diag;
      const CurrentConfig c =
          invert_current_from_fk(g, J, open, rng, OpenStackLaw::kShiftedPoisson, {}, &diag);
      return std::pair{diag, parity_ok(g, c)};
    });
    for (const auto &[diag, par] : outs) {
      runs += diag.stages;
      not_at_root += diag.wrong_terminal;
      containment += diag.containment_violations;
      parity += !par;
    }
  }
  ctx.add_bound("terminate at root with zero magnitude", "invariant",
                static_cast<double>(not_at_root), 0.0, runs);
  ctx.add_bound("walker stays in the root cluster", "invariant", static_cast<double>(containment),
                0.0, runs);
  ctx.add_bound("phi^2 + 2 ell conserved", "invariant", conservation, 1e-9, runs);
  ctx.add_bound("crossing parity", "invariant", static_cast<double>(parity), 0.0, runs);
  ctx.add_bound("fk_from_field never opens opposite signs", "invariant",
                static_cast<double>(fk_opposite), 0.0, runs);
}

void suite_engine_equivalence(Ctx &ctx) {
  const std::size_t n = ctx.n(20000);
  const Graph g = graph_triangle_pendant();
  const VertexId x0 = g.vertex("a");
  const FieldReal phi{std::sqrt(2.0), 0.9, 1.2, -0.7};
  auto key = [](std::size_t jumps, const EdgeSet &open) {
    return std::to_string(jumps) + "|" + code_key(open);
  };
  const auto stack = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
    InverseState st = init_inverse_from_field(g, x0, phi, rng);
    const InverseRun r = run_inverse(st, rng);
    return key(r.jumps, r.terminal_open);
  });
  const auto discrete = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
    const InverseState st = init_inverse_from_field(g, x0, phi, rng);
    const DiscreteInverseRun r = run_inverse_discrete(g, x0, st.counts(), rng, false);
    return key(r.jumps, r.terminal_open);
  });
  const auto rates = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
    const InverseRun r = run_inverse_jump_rates(g, x0, phi, fk_from_field(g, phi, rng), rng);
    return key(r.jumps, r.terminal_open);
  });
  const auto sa = tally(stack), sd = tally(discrete), sr = tally(rates);
  ctx.add_p("stack vs discrete chain (jumps, terminal config)", "chi2", chi2_homogeneity(sa, sd), n);
  ctx.add_p("stack vs jump rates (jumps, terminal config)", "chi2", chi2_homogeneity(sa, sr), n);

  for (const OpenStackLaw law : {OpenStackLaw::kZeroTruncatedPoisson, OpenStackLaw::kShiftedPoisson}) {
    const auto cfg = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
      const EdgeSet open0 = fk_from_field(g, phi, rng);
      InverseState st = init_inverse_from_field_and_config(g, x0, phi, open0, rng, law);
      const InverseRun r = run_inverse(st, rng);
      return key(r.jumps, r.terminal_open);
    });
    TestReport &r = ctx.add_p(std::string("stack from (field, config) with ") + to_string(law) +
                                  " stacks vs jump rates",
                              "chi2", chi2_homogeneity(tally(cfg), sr), n);
    r.informational = law == OpenStackLaw::kShiftedPoisson;
  }

  // Frozen edge: one open edge whose far end is never visited between
  // pops, so J decreases monotonically and the closure level has an exact law.
  const Graph e = make_graph({"a", "b"}, {{"a", "b", 1.0}}, {{"a", 1.0}});
  const FieldReal phi_e{std::sqrt(2.0), 1.0};
  const double J0 = std::sqrt(2.0);
  const auto cdf = [J0](double j) {
    return std::clamp(-std::expm1(-2.0 * j) / -std::expm1(-2.0 * J0), 0.0, 1.0);
  };
  auto closure_level = [](const InverseRun &r) {
    for (const InverseEvent &ev : r.events)
      if (ev.n_after == 0 && (ev.kind == EventKind::kCloseJump || ev.kind == EventKind::kCloseStay))
        return ev.level;
    return -1.0;
  };
  const auto lv_stack = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
    for (;;) {
      InverseState st = init_inverse_from_field(e, 0, phi_e, rng);
      if (st.count(0) == 0)
        continue; // conditioned on the edge being open
      return closure_level(run_inverse(st, rng));
    }
  });
  const auto lv_rates = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
    return closure_level(run_inverse_jump_rates(e, 0, phi_e, EdgeSet::all(1), rng));
  });
  ctx.add_p("frozen-edge closure level, stack engine", "ks", ks_one_sample(lv_stack, cdf), n);
  ctx.add_p("frozen-edge closure level, jump rates", "ks", ks_one_sample(lv_rates, cdf), n);
}

void current_inversion_case(Ctx &ctx, const std::string &name, const Graph &g,
                            const std::vector<double> &J, OpenStackLaw law, bool informational) {
  const std::size_t n = ctx.n(100000);
  const DiscreteDistribution fk = fk_exact(g, J);
  const DiscreteDistribution cur = current_exact(g, J, ctx.params().n_max);
  const auto samples = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
    const EdgeSet open = edge_set_from_indicator(fk.sample(rng));
    const CurrentConfig c = invert_current_from_fk(g, J, open, rng, law);
    return std::vector<int>(c.begin(), c.end());
  });
  std::map<std::vector<int>, std::int64_t> counts;
  for (const auto &s : samples)
    ++counts[s];
  const std::string label = name + " (" + to_string(law) + " stacks)";
  // The truncated tail can move the expected counts by at most n * bound.
  const double budget = 1e-6;
  std::ostringstream d;
  d.precision(3);
  d << "truncation bound " << cur.truncation_bound;
  try {
    TestReport &r = ctx.add_p(label, "chi2", chi2_goodness(counts, cur), n, d.str());
    r.pass = r.pass && cur.truncation_bound <= budget;
    r.informational = informational;
  } catch (const std::exception &ex) {
    ctx.add_error(label, "chi2", ex.what(), n).informational = informational;
  }
}

void suite_current_inversion(Ctx &ctx) {
  const Graph edge = graph_edge();
  const Graph tri = graph_triangle();
  const std::vector<double> Je{1.0};
  const std::vector<double> Jt{0.5, 0.8, 1.1};
  // The reference stack law for open edges is the shifted Poisson one; the
  // zero-truncated law is reported alongside for comparison.
  current_inversion_case(ctx, "single edge J=1", edge, Je, OpenStackLaw::kShiftedPoisson, false);
  current_inversion_case(ctx, "triangle", tri, Jt, OpenStackLaw::kShiftedPoisson, false);
  current_inversion_case(ctx, "single edge J=1", edge, Je, OpenStackLaw::kZeroTruncatedPoisson,
                         true);
  current_inversion_case(ctx, "triangle", tri, Jt, OpenStackLaw::kZeroTruncatedPoisson, true);
}

void suite_loop_soup_roundtrip(Ctx &ctx) {
  const std::size_t n = ctx.n(20000);
  for (const auto &[name, g] : {std::pair{std::string("ab"), graph_ab()},
                                std::pair{std::string("path3"), graph_path3()}}) {
    const GffSampler gff(g, ConditionSpec::free());
    const std::vector<VertexId> en = default_enumeration(g);
    struct Out {
      FieldReal lifted;
      double occupation_err = 0.0;
      bool parity = true;
    };
    const auto outs = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
      const FieldReal phi = gff.sample(rng);
      const LoopSoupSample soup = invert_loop_soup(g, phi, en, 1e-9, rng);
      const SoupFields f = fields(soup);
      Out o;
      for (VertexId x = 0; x < g.num_vertices(); ++x)
        o.occupation_err = std::max(o.occupation_err, std::fabs(2.0 * f.occupation[x] - phi[x] * phi[x]));
      o.parity = parity_ok(g, f.crossings);
      o.lifted = lupu_lift_loopsoup(g, soup, std::nullopt, rng).phi;
      return o;
    });
    std::vector<std::vector<double>> lifted;
    double err = 0.0;
    std::size_t parity = 0;
    for (const Out &o : outs) {
      lifted.push_back(o.lifted);
      err = std::max(err, o.occupation_err);
      parity += !o.parity;
    }
    ctx.add_bound(name + " 2L = phi^2", "invariant", err, 1e-9, n);
    ctx.add_bound(name + " crossing parity", "invariant", static_cast<double>(parity), 0.0, n);
    ctx.add_moments(name + " lifted field moments", lifted,
                    Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.num_vertices())),
                    green_function(g), ctx.params().k_sigma);
  }
}

void suite_killing_reduction(Ctx &ctx) {
  const std::size_t n = ctx.n(10000);
  const Graph g = graph_killed_path();
  const VertexId x0 = g.vertex("a");
  const double u = 1.0;
  const GffSampler pinned(g, ConditionSpec::pin(x0, std::sqrt(2 * u)));
  const auto inv = parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
    const FieldReal phi = pinned.sample(rng);
    InverseState st = init_inverse_from_field(g, x0, phi, rng);
    const InverseRun r = run_inverse(st, rng);
    std::vector<double> out{r.terminal_time};
    out.insert(out.end(), st.local_time.begin(), st.local_time.end());
    return out;
  });
  auto forward = [&](bool h) {
    const HTransform ht = harmonic_killing_transform(g, x0);
    return parallel_replicas(n, ctx.next_seed(), [&](std::size_t, Rng &rng) {
      const Trajectory t =
          h ? run_conditioned_to_return(ht, u, rng) : run_conditioned_by_rejection(g, x0, u, rng);
      std::vector<double> out{t.total_time()};
      const std::vector<double> ell = t.local_times(g.num_vertices());
      out.insert(out.end(), ell.begin(), ell.end());
      return out;
    });
  };
  const auto rej = forward(false);
  const auto htr = forward(true);
  ctx.add_p("inverse T vs rejection tau_u", "ks", ks_two_sample(column(inv, 0), column(rej, 0)), n);
  for (VertexId x = 0; x < g.num_vertices(); ++x)
    if (x != x0)
      ctx.add_p("inverse ell_" + g.label(x) + " vs rejection", "ks",
                ks_two_sample(column(inv, x + 1), column(rej, x + 1)), n);
  ctx.add_p("h-transformed forward tau_u vs rejection", "ks",
            ks_two_sample(column(htr, 0), column(rej, 0)), n);
}

using SuiteFn = void (*)(Ctx &);

const std::vector<std::pair<std::string, SuiteFn>> &registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> r{
      {"single-edge-couplings", suite_single_edge},
      {"fk-ising-consistency", suite_fk_ising},
      {"gff-sampler", suite_gff},
      {"le-jan", suite_le_jan},
      {"ray-knight", suite_ray_knight},
      {"forward-coupling", suite_forward_coupling},
      {"enlarged-process", suite_enlarged},
      {"inversion", suite_inversion},
      {"hard-invariants", suite_hard_invariants},
      {"engine-equivalence", suite_engine_equivalence},
      {"current-inversion", suite_current_inversion},
      {"loop-soup-roundtrip", suite_loop_soup_roundtrip},
      {"killing-reduction", suite_killing_reduction},
  };
  return r;
}

} // namespace

const std::vector<std::string> &suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto &[name, fn] : registry())
      out.push_back(name);
    return out;
  }();
  return names;
}

std::vector<TestReport> run_suite(const std::string &name, const SuiteParams &params,
                                  std::uint64_t seed) {
  std::vector<TestReport> out;
  bool found = false;
  const auto &reg = registry();
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (name != "all" && name != reg[i].first)
      continue;
    found = true;
    const auto start = std::chrono::steady_clock::now();
    Ctx ctx(reg[i].first, params, seed, i + 1);
    reg[i].second(ctx);
    std::vector<TestReport> reports = ctx.take();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (TestReport &r : reports) {
      r.runtime_s = secs;
      out.push_back(std::move(r));
    }
  }
  if (!found)
    throw std::invalid_argument("unknown suite '" + name + "'");
  apply_bonferroni(out);
  return out;
}

} // namespace rkinv
