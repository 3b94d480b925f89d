#pragma once

#include "rkinv/gff.hpp"
#include "rkinv/graph.hpp"
#include "rkinv/jump_process.hpp"
#include "rkinv/loop_soup.hpp"
#include "rkinv/rng.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rkinv {

using CurrentConfig = std::vector<std::int64_t>;

/// True iff the sum of n_e over the edges at every vertex is even.
bool parity_ok(const Graph &g, const CurrentConfig &n,
               std::vector<VertexId> *odd_vertices = nullptr);

std::vector<double> interaction_weights(const Graph &g,
                                        const std::vector<double> &magnitude);

/// Edges opened given the field values: opposite signs always closed, else
/// closed with probability exp(-2 W phi_- phi_+).
EdgeSet fk_from_field(const Graph &g, const FieldReal &phi, Rng &rng);

/// Uniform independent sign per cluster of `open`. With a pin, the pinned
/// vertex's cluster gets +1.
std::vector<int> sign_sample_on_clusters(const Graph &g, const EdgeSet &open,
                                         std::optional<VertexId> pin, Rng &rng);

struct LupuLift {
  EdgeSet open;
  FieldReal phi;
};

/// Crossed edges plus extra edges opened with probability
/// 1 - exp(-2 W sqrt(L_- L_+)), then phi = sigma sqrt(2 L) with cluster signs.
/// Without a pin the output is the free field; a pin gives the field
/// conditioned on a positive sign at that vertex.
LupuLift lupu_lift_loopsoup(const Graph &g, const LoopSoupSample &soup,
                            std::optional<VertexId> pin, Rng &rng);
LupuLift lupu_lift_fields(const Graph &g, const SoupFields &f,
                          std::optional<VertexId> pin, Rng &rng);

struct ForwardRk {
  FieldReal phi0;
  EdgeSet open0;
  Trajectory traj;
  EdgeSet openU;
  FieldReal phiU;
};

/// Coupled signed field / walk construction. The walk is conditioned to
/// reach local time u at x0; phiU^2 = phi0^2 + 2 ell exactly.
class ForwardRkSampler {
public:
  ForwardRkSampler(const Graph &g, VertexId x0, double u);
  ForwardRk sample(Rng &rng) const;

  const Graph &graph() const { return *graph_; }
  VertexId x0() const { return x0_; }
  double u() const { return u_; }

private:
  const Graph *graph_;
  VertexId x0_;
  double u_;
  GffSampler pinned_zero_;
  HTransform ht_;
};

ForwardRk forward_rk_coupling(const Graph &g, VertexId x0, double u, Rng &rng);

/// Opens the extra edges of the forward coupling: every edge not already in
/// `open` is opened with probability
/// 1 - exp(W |phi0_- phi0_+| - W sqrt((phi0_-^2 + 2 l_-)(phi0_+^2 + 2 l_+))).
void open_extra_edges(const Graph &g, const FieldReal &phi0,
                      const std::vector<double> &ell, EdgeSet &open, Rng &rng);

// ------------------------------------------------------------------ oracles

/// Finite law on integer vectors. Outcome semantics depend on the producer:
/// spins (+1/-1 per vertex), edge indicators (0/1 per edge), or currents.
struct DiscreteDistribution {
  std::vector<std::vector<int>> outcomes;
  std::vector<double> probabilities;
  double log_normalizer = 0.0;   // log Z
  double truncation_bound = 0.0; // total-variation bound to the untruncated law

  std::size_t size() const { return outcomes.size(); }
  std::optional<std::size_t> find(const std::vector<int> &outcome) const;
  double probability(const std::vector<int> &outcome) const; // 0 if absent
  const std::vector<int> &sample(Rng &rng) const;
  static std::string key(const std::vector<int> &outcome);

  // Builds probabilities from log weights (log-sum-exp) and the lookup index.
  void finalize_from_log_weights(const std::vector<double> &log_weights);
  void finalize();

private:
  std::map<std::vector<int>, std::size_t> index_;
  std::vector<double> cdf_;
};

struct OracleCaps {
  std::size_t max_spins = 16;
  std::size_t max_fk_edges = 20;
  std::size_t max_current_states = 20'000'000;
};

DiscreteDistribution ising_exact(const Graph &g, const std::vector<double> &J,
                                 const OracleCaps &caps = {});
DiscreteDistribution fk_exact(const Graph &g, const std::vector<double> &J,
                              const OracleCaps &caps = {});
DiscreteDistribution current_exact(const Graph &g, const std::vector<double> &J,
                                   int n_max = 40, const OracleCaps &caps = {});

/// Random-current to FK kernel: O(n) union independent Bernoulli(1 - e^{-J}).
EdgeSet current_fk_forward(const Graph &g, const std::vector<double> &J,
                           const CurrentConfig &n, Rng &rng);

/// Exact image of the FK law under uniform cluster signs (no pin).
DiscreteDistribution fk_sign_pushforward(const Graph &g,
                                         const DiscreteDistribution &fk);
/// Exact image of a current law under current_fk_forward.
DiscreteDistribution current_fk_pushforward(const Graph &g,
                                            const std::vector<double> &J,
                                            const DiscreteDistribution &current);

double total_variation(const DiscreteDistribution &a,
                       const DiscreteDistribution &b);

std::vector<int> edge_indicator(const EdgeSet &s);
EdgeSet edge_set_from_indicator(const std::vector<int> &w);

} // namespace rkinv
