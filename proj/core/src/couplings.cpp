#include "rkinv/couplings.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rkinv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double> &x) {
  double m = kNegInf;
  for (double v : x)
    m = std::max(m, v);
  if (m == kNegInf)
    return kNegInf;
  double s = 0.0;
  for (double v : x)
    s += std::exp(v - m);
  return m + std::log(s);
}

void check_weights(const Graph &g, const std::vector<double> &J) {
  if (J.size() != g.num_edges())
    throw std::invalid_argument("interaction weights must have one entry per edge");
  for (double j : J)
    if (!(j >= 0.0) || !std::isfinite(j))
      throw std::invalid_argument("interaction weights must be finite and >= 0");
}

} // namespace

bool parity_ok(const Graph &g, const CurrentConfig &n,
               std::vector<VertexId> *odd_vertices) {
  if (n.size() != g.num_edges())
    throw std::invalid_argument("current must have one entry per edge");
  std::vector<std::int64_t> degree(g.num_vertices(), 0);
  for (const Edge &e : g.edges()) {
    degree[e.minus] += n[e.id];
    degree[e.plus] += n[e.id];
  }
  bool ok = true;
  for (VertexId v = 0; v < degree.size(); ++v) {
    if (degree[v] % 2 != 0) {
      ok = false;
      if (odd_vertices)
        odd_vertices->push_back(v);
    }
  }
  return ok;
}

std::vector<double> interaction_weights(const Graph &g,
                                        const std::vector<double> &magnitude) {
  if (magnitude.size() != g.num_vertices())
    throw std::invalid_argument("magnitude must have one entry per vertex");
  std::vector<double> J(g.num_edges());
  for (const Edge &e : g.edges())
    J[e.id] = e.conductance * magnitude[e.minus] * magnitude[e.plus];
  return J;
}

EdgeSet fk_from_field(const Graph &g, const FieldReal &phi, Rng &rng) {
  if (phi.size() != g.num_vertices())
    throw std::invalid_argument("field must have one entry per vertex");
  EdgeSet open(g.num_edges());
  for (const Edge &e : g.edges()) {
    const double prod = phi[e.minus] * phi[e.plus];
    if (prod <= 0.0)
      continue;
    if (bernoulli(rng, -std::expm1(-2.0 * e.conductance * prod)))
      open.insert(e.id);
  }
  return open;
}

std::vector<int> sign_sample_on_clusters(const Graph &g, const EdgeSet &open,
                                         std::optional<VertexId> pin, Rng &rng) {
  const ClusterPartition part = clusters(g, open);
  std::vector<int> cluster_sign(part.count);
  for (int &s : cluster_sign)
    s = bernoulli(rng, 0.5) ? 1 : -1;
  if (pin)
    cluster_sign[part.cluster_of.at(*pin)] = 1;
  std::vector<int> sigma(g.num_vertices());
  for (VertexId v = 0; v < sigma.size(); ++v)
    sigma[v] = cluster_sign[part.cluster_of[v]];
  return sigma;
}

LupuLift lupu_lift_fields(const Graph &g, const SoupFields &f,
                          std::optional<VertexId> pin, Rng &rng) {
  LupuLift out{EdgeSet(g.num_edges()), FieldReal(g.num_vertices(), 0.0)};
  for (const Edge &e : g.edges()) {
    if (f.crossings.at(e.id) > 0) {
      out.open.insert(e.id);
      continue;
    }
    const double j =
        e.conductance * std::sqrt(f.occupation[e.minus] * f.occupation[e.plus]);
    if (bernoulli(rng, -std::expm1(-2.0 * j)))
      out.open.insert(e.id);
  }
  const std::vector<int> sigma = sign_sample_on_clusters(g, out.open, pin, rng);
  for (VertexId v = 0; v < g.num_vertices(); ++v)
    out.phi[v] = sigma[v] * std::sqrt(2.0 * f.occupation[v]);
  return out;
}

LupuLift lupu_lift_loopsoup(const Graph &g, const LoopSoupSample &soup,
                            std::optional<VertexId> pin, Rng &rng) {
  return lupu_lift_fields(g, fields(soup), pin, rng);
}

void open_extra_edges(const Graph &g, const FieldReal &phi0,
                      const std::vector<double> &ell, EdgeSet &open, Rng &rng) {
  for (const Edge &e : g.edges()) {
    if (open.contains(e.id))
      continue;
    const double a = phi0[e.minus] * phi0[e.minus];
    const double b = phi0[e.plus] * phi0[e.plus];
    const double before = e.conductance * std::sqrt(a * b);
    const double after =
        e.conductance * std::sqrt((a + 2.0 * ell[e.minus]) * (b + 2.0 * ell[e.plus]));
    if (bernoulli(rng, -std::expm1(before - after)))
      open.insert(e.id);
  }
}

ForwardRkSampler::ForwardRkSampler(const Graph &g, VertexId x0, double u)
    : graph_(&g), x0_(x0), u_(u),
      pinned_zero_(g, ConditionSpec::pin(x0, 0.0)),
      ht_(harmonic_killing_transform(g, x0)) {
  if (!(u > 0.0))
    throw std::invalid_argument("u must be positive");
}

ForwardRk ForwardRkSampler::sample(Rng &rng) const {
  const Graph &g = *graph_;
  ForwardRk r;
  r.phi0 = pinned_zero_.sample(rng);
  r.open0 = fk_from_field(g, r.phi0, rng);
  r.traj = run_conditioned_to_return(ht_, u_, rng);
  const std::vector<double> ell = r.traj.local_times(g.num_vertices());
  r.openU = r.open0;
  for (const Step &s : r.traj.steps)
    if (s.exit == ExitKind::kJump)
      r.openU.insert(s.edge);
  open_extra_edges(g, r.phi0, ell, r.openU, rng);
  const std::vector<int> sigma = sign_sample_on_clusters(g, r.openU, x0_, rng);
  r.phiU.resize(g.num_vertices());
  for (VertexId v = 0; v < g.num_vertices(); ++v)
    r.phiU[v] = sigma[v] * std::sqrt(r.phi0[v] * r.phi0[v] + 2.0 * ell[v]);
  return r;
}

ForwardRk forward_rk_coupling(const Graph &g, VertexId x0, double u, Rng &rng) {
  return ForwardRkSampler(g, x0, u).sample(rng);
}

// ------------------------------------------------------------------ oracles

std::optional<std::size_t>
DiscreteDistribution::find(const std::vector<int> &outcome) const {
  auto it = index_.find(outcome);
  if (it == index_.end())
    return std::nullopt;
  return it->second;
}

double DiscreteDistribution::probability(const std::vector<int> &outcome) const {
  auto i = find(outcome);
  return i ? probabilities[*i] : 0.0;
}

const std::vector<int> &DiscreteDistribution::sample(Rng &rng) const {
  if (cdf_.empty())
    throw std::logic_error("DiscreteDistribution::sample before finalize");
  const double target = uniform01(rng) * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
  if (i >= cdf_.size())
    i = cdf_.size() - 1;
  return outcomes[i];
}

std::string DiscreteDistribution::key(const std::vector<int> &outcome) {
  std::ostringstream os;
  for (std::size_t i = 0; i < outcome.size(); ++i) {
    if (i)
      os << ' ';
    os << outcome[i];
  }
  return os.str();
}

void DiscreteDistribution::finalize_from_log_weights(
    const std::vector<double> &log_weights) {
  log_normalizer = log_sum_exp(log_weights);
  if (!std::isfinite(log_normalizer))
    throw std::domain_error("distribution has no mass");
  probabilities.resize(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i)
    probabilities[i] = std::exp(log_weights[i] - log_normalizer);
  finalize();
}

void DiscreteDistribution::finalize() {
  index_.clear();
  cdf_.resize(probabilities.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    index_.emplace(outcomes[i], i);
    acc += probabilities[i];
    cdf_[i] = acc;
  }
}

DiscreteDistribution ising_exact(const Graph &g, const std::vector<double> &J,
                                 const OracleCaps &caps) {
  check_weights(g, J);
  const std::size_t n = g.num_vertices();
  if (n > caps.max_spins)
    throw std::length_error("ising_exact: too many vertices to enumerate");
  DiscreteDistribution d;
  std::vector<double> logw;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) {
    std::vector<int> sigma(n);
    for (std::size_t v = 0; v < n; ++v)
      sigma[v] = ((code >> v) & 1U) ? -1 : 1;
    double energy = 0.0;
    for (const Edge &e : g.edges())
      energy += J[e.id] * sigma[e.minus] * sigma[e.plus];
    d.outcomes.push_back(std::move(sigma));
    logw.push_back(energy);
  }
  d.finalize_from_log_weights(logw);
  return d;
}

DiscreteDistribution fk_exact(const Graph &g, const std::vector<double> &J,
                              const OracleCaps &caps) {
  check_weights(g, J);
  const std::size_t m = g.num_edges();
  if (m > caps.max_fk_edges)
    throw std::length_error("fk_exact: too many edges to enumerate");
  const double log2 = std::log(2.0);
  DiscreteDistribution d;
  std::vector<double> logw;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << m); ++code) {
    const EdgeSet open = EdgeSet::from_code(m, code);
    double w = 0.0;
    bool possible = true;
    for (const Edge &e : g.edges()) {
      if (open.contains(e.id)) {
        if (J[e.id] == 0.0) {
          possible = false;
          break;
        }
        w += std::log(-std::expm1(-2.0 * J[e.id]));
      } else {
        w += -2.0 * J[e.id];
      }
    }
    if (!possible)
      continue;
    w += static_cast<double>(clusters(g, open).count) * log2;
    d.outcomes.push_back(edge_indicator(open));
    logw.push_back(w);
  }
  d.finalize_from_log_weights(logw);
  return d;
}

DiscreteDistribution current_exact(const Graph &g, const std::vector<double> &J,
                                   int n_max, const OracleCaps &caps) {
  check_weights(g, J);
  if (n_max < 0)
    throw std::invalid_argument("current_exact: n_max must be >= 0");
  const std::size_t m = g.num_edges();
  double states = 1.0;
  for (std::size_t e = 0; e < m; ++e)
    states *= (J[e] > 0.0 ? n_max + 1 : 1);
  if (states > static_cast<double>(caps.max_current_states))
    throw std::length_error("current_exact: enumeration too large");

  DiscreteDistribution d;
  std::vector<double> logw;
  std::vector<int> n(m, 0);
  std::vector<int> degree(g.num_vertices(), 0);
  // Depth-first over edges; the parity filter is applied at the leaves.
  auto recurse = [&](auto &&self, std::size_t e, double w) -> void {
    if (e == m) {
      for (int deg : degree)
        if (deg % 2 != 0)
          return;
      d.outcomes.push_back(n);
      logw.push_back(w);
      return;
    }
    const Edge &edge = g.edge(e);
    const int top = J[e] > 0.0 ? n_max : 0;
    const double lj = J[e] > 0.0 ? std::log(J[e]) : 0.0;
    for (int k = 0; k <= top; ++k) {
      n[e] = k;
      degree[edge.minus] += k;
      degree[edge.plus] += k;
      self(self, e + 1, w + k * lj - std::lgamma(k + 1.0));
      degree[edge.minus] -= k;
      degree[edge.plus] -= k;
    }
    n[e] = 0;
  };
  recurse(recurse, 0, 0.0);
  d.finalize_from_log_weights(logw);

  // Mass dropped by the cap: the untruncated weight of configurations with
  // some n_e > n_max is at most exp(sum J) * sum_e P(Poisson(J_e) > n_max);
  // dividing by the retained mass bounds the total-variation error.
  double tail = 0.0;
  double total_j = 0.0;
  for (double j : J) {
    total_j += j;
    if (j > 0.0)
      tail += boost::math::gamma_p(static_cast<double>(n_max) + 1.0, j);
  }
  d.truncation_bound =
      tail > 0.0 ? std::exp(total_j - d.log_normalizer + std::log(tail)) : 0.0;
  return d;
}

EdgeSet current_fk_forward(const Graph &g, const std::vector<double> &J,
                           const CurrentConfig &n, Rng &rng) {
  check_weights(g, J);
  std::vector<VertexId> odd;
  if (!parity_ok(g, n, &odd))
    throw std::invalid_argument("current violates the parity condition at '" +
                                g.label(odd.front()) + "'");
  EdgeSet open(g.num_edges());
  for (const Edge &e : g.edges()) {
    if (n[e.id] > 0 || bernoulli(rng, -std::expm1(-J[e.id])))
      open.insert(e.id);
  }
  return open;
}

DiscreteDistribution fk_sign_pushforward(const Graph &g,
                                         const DiscreteDistribution &fk) {
  std::map<std::vector<int>, double> acc;
  for (std::size_t i = 0; i < fk.size(); ++i) {
    const ClusterPartition part =
        clusters(g, edge_set_from_indicator(fk.outcomes[i]));
    const double share =
        fk.probabilities[i] / std::ldexp(1.0, static_cast<int>(part.count));
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << part.count); ++code) {
      std::vector<int> sigma(g.num_vertices());
      for (VertexId v = 0; v < sigma.size(); ++v)
        sigma[v] = ((code >> part.cluster_of[v]) & 1U) ? -1 : 1;
      acc[sigma] += share;
    }
  }
  DiscreteDistribution d;
  for (auto &[outcome, p] : acc) {
    d.outcomes.push_back(outcome);
    d.probabilities.push_back(p);
  }
  d.finalize();
  return d;
}

DiscreteDistribution current_fk_pushforward(const Graph &g,
                                            const std::vector<double> &J,
                                            const DiscreteDistribution &current) {
  check_weights(g, J);
  const std::size_t m = g.num_edges();
  std::map<std::vector<int>, double> acc;
  for (std::size_t i = 0; i < current.size(); ++i) {
    const std::vector<int> &n = current.outcomes[i];
    std::vector<EdgeId> free;
    std::vector<int> base(m, 0);
    for (EdgeId e = 0; e < m; ++e) {
      if (n[e] > 0)
        base[e] = 1;
      else
        free.push_back(e);
    }
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << free.size()); ++code) {
      std::vector<int> w = base;
      double p = current.probabilities[i];
      for (std::size_t k = 0; k < free.size(); ++k) {
        const double q = std::exp(-J[free[k]]); // stays closed
        if ((code >> k) & 1U) {
          w[free[k]] = 1;
          p *= 1.0 - q;
        } else {
          p *= q;
        }
      }
      if (p > 0.0)
        acc[w] += p;
    }
  }
  DiscreteDistribution d;
  d.truncation_bound = current.truncation_bound;
  for (auto &[outcome, p] : acc) {
    d.outcomes.push_back(outcome);
    d.probabilities.push_back(p);
  }
  d.finalize();
  return d;
}

double total_variation(const DiscreteDistribution &a,
                       const DiscreteDistribution &b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    sum += std::fabs(a.probabilities[i] - b.probability(a.outcomes[i]));
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!a.find(b.outcomes[i]))
      sum += b.probabilities[i];
  return 0.5 * sum;
}

std::vector<int> edge_indicator(const EdgeSet &s) {
  std::vector<int> w(s.universe());
  for (EdgeId e = 0; e < w.size(); ++e)
    w[e] = s.contains(e) ? 1 : 0;
  return w;
}

EdgeSet edge_set_from_indicator(const std::vector<int> &w) {
  EdgeSet s(w.size());
  for (EdgeId e = 0; e < w.size(); ++e)
    if (w[e])
      s.insert(e);
  return s;
}

} // namespace rkinv
