#include "fixtures.hpp"

#include "rkinv/inverse_process.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace rkinv {
namespace {

TEST(StackLaw, NamesRoundTrip) {
  for (OpenStackLaw l : {OpenStackLaw::kShiftedPoisson, OpenStackLaw::kZeroTruncatedPoisson})
    EXPECT_EQ(open_stack_law_from_string(to_string(l)), l);
  EXPECT_THROW(open_stack_law_from_string("poisson"), std::invalid_argument);
}

TEST(InverseInit, StacksAreSortedPointsBelowTwiceTheLevel) {
  const Graph g = test::path3();
  const FieldReal phi{1.4, 0.9, -0.6};
  Rng rng = make_rng(61);
  for (int i = 0; i < 200; ++i) {
    const InverseState st = init_inverse_from_field(g, 0, phi, rng);
    EXPECT_TRUE(st.stacks[1].empty()); // opposite signs
    const double twoJ = 2.0 * 1.0 * 1.4 * 0.9;
    EXPECT_TRUE(std::is_sorted(st.stacks[0].begin(), st.stacks[0].end()));
    for (double p : st.stacks[0]) {
      EXPECT_GT(p, 0.0);
      EXPECT_LE(p, twoJ);
    }
    EXPECT_NEAR(st.level(0), 1.4 * 0.9, 1e-14);
    EXPECT_EQ(st.open().contains(0), !st.stacks[0].empty());
  }
}

TEST(InverseInit, GivenConfigurationIsRespected) {
  const Graph g = test::path3();
  const FieldReal phi{1.4, 0.9, 0.6};
  const std::vector<EdgeId> ids{1};
  const EdgeSet open0 = EdgeSet::from_ids(2, ids);
  Rng rng = make_rng(62);
  for (OpenStackLaw law : {OpenStackLaw::kShiftedPoisson, OpenStackLaw::kZeroTruncatedPoisson}) {
    const InverseState st = init_inverse_from_field_and_config(g, 0, phi, open0, rng, law);
    EXPECT_EQ(st.count(0), 0);
    EXPECT_GE(st.count(1), 1);
  }
  const FieldReal mixed{1.4, 0.9, -0.6};
  EXPECT_THROW(init_inverse_from_field_and_config(g, 0, mixed, open0, rng), std::invalid_argument);
}

void expect_clean(const InverseRun &r, const InverseState &st) {
  EXPECT_TRUE(r.ended_at_root);
  EXPECT_EQ(r.terminal_vertex, st.root);
  EXPECT_LE(r.terminal_magnitude[st.root], 1e-9);
  EXPECT_EQ(r.containment_violations, 0u);
  EXPECT_LE(r.conservation_error, 1e-9);
  EXPECT_TRUE(r.terminal_open.subset_of(EdgeSet::all(r.terminal_open.universe())));
}

TEST(InverseRun, StackEngineEndsAtRootWithConservation) {
  const Graph g = test::make({"a", "b", "c", "d"},
                             {{"a", "b", 1.0}, {"b", "c", 0.8}, {"c", "a", 1.2}, {"c", "d", 0.6}},
                             {{"a", 0.5}});
  const FieldReal phi{std::sqrt(2.0), 0.9, 1.2, -0.7};
  for (std::uint64_t i = 0; i < 300; ++i) {
    Rng rng = make_rng(63, i);
    InverseState st = init_inverse_from_field(g, 0, phi, rng);
    const InverseRun r = run_inverse(st, rng);
    expect_clean(r, st);
    EXPECT_NEAR(st.local_time[0], 1.0, 1e-12);
    EXPECT_TRUE(parity_ok(g, r.crossings));
    for (std::size_t k = 1; k < r.events.size(); ++k)
      EXPECT_LE(r.events[k - 1].time, r.events[k].time);
  }
}

TEST(InverseRun, KillingOffTheRootUsesTheReduction) {
  const Graph g = test::make({"a", "b", "c"}, {{"a", "b", 1.0}, {"b", "c", 1.0}},
                             {{"b", 0.3}, {"c", 0.5}});
  const FieldReal phi{std::sqrt(2.0), 1.1, 0.4};
  for (std::uint64_t i = 0; i < 300; ++i) {
    Rng rng = make_rng(64, i);
    InverseState st = init_inverse_from_field(g, 0, phi, rng);
    const InverseRun r = run_inverse(st, rng);
    expect_clean(r, st);
    double total = 0.0;
    for (double l : st.local_time)
      total += l;
    EXPECT_NEAR(r.terminal_time, total, 1e-10);
  }
}

TEST(InverseRun, JumpRateEngineEndsAtRoot) {
  const Graph g = test::path3();
  const FieldReal phi{std::sqrt(2.0), 0.9, 0.6};
  for (std::uint64_t i = 0; i < 300; ++i) {
    Rng rng = make_rng(65, i);
    const EdgeSet open0 = fk_from_field(g, phi, rng);
    const InverseRun r = run_inverse_jump_rates(g, 0, phi, open0, rng);
    EXPECT_TRUE(r.ended_at_root);
    EXPECT_EQ(r.containment_violations, 0u);
    EXPECT_TRUE(r.terminal_open.subset_of(open0));
    for (const InverseEvent &ev : r.events)
      EXPECT_LE(ev.n_after, 1);
  }
}

TEST(DiscreteChain, PopsEveryReachableStackOnce) {
  const Graph g = test::single_edge();
  Rng rng = make_rng(66);
  const DiscreteInverseRun r = run_inverse_discrete(g, 0, {3}, rng);
  EXPECT_EQ(r.popped.size(), 3u);
  ASSERT_EQ(r.stack_history.size(), 4u);
  EXPECT_EQ(r.stack_history.front(), (std::vector<std::int64_t>{3}));
  EXPECT_EQ(r.stack_history.back(), (std::vector<std::int64_t>{0}));
  EXPECT_TRUE(r.ended_at_root);
  EXPECT_TRUE(r.terminal_open.empty());
  EXPECT_EQ(r.crossings[0] % 2, 0);
  EXPECT_THROW(run_inverse_discrete(g, 0, {-1}, rng), std::invalid_argument);
  EXPECT_THROW(run_inverse_discrete(g, 0, {1, 1}, rng), std::invalid_argument);
}

// Single edge, J = 1, FK edge drawn from the exact law. With shifted stacks
// P(n = 0) = 1 - tanh J + tanh J e^{-J}; zero-truncated stacks give 1/cosh J,
// the random-current value.
TEST(CurrentInversion, ProbabilityOfZeroCurrentOnSingleEdge) {
  const Graph g = test::single_edge();
  const std::vector<double> J{1.0};
  const DiscreteDistribution fk = fk_exact(g, J);
  const double t = std::tanh(1.0);
  const struct {
    OpenStackLaw law;
    double expected;
  } cases[] = {{OpenStackLaw::kShiftedPoisson, 1.0 - t + t * std::exp(-1.0)},
               {OpenStackLaw::kZeroTruncatedPoisson, 1.0 / std::cosh(1.0)}};
  EXPECT_NEAR(cases[0].expected, 0.5185807, 1e-7);
  EXPECT_NEAR(cases[1].expected, 0.6480543, 1e-7);
  for (const auto &c : cases) {
    const std::size_t n = 100000;
    const auto zero = parallel_replicas(n, 67, [&](std::size_t, Rng &rng) {
      const EdgeSet open = edge_set_from_indicator(fk.sample(rng));
      return invert_current_from_fk(g, J, open, rng, c.law)[0] == 0 ? 1 : 0;
    });
    double hits = 0;
    for (int z : zero)
      hits += z;
    const double p = c.expected;
    EXPECT_NEAR(hits / n, p, 5.0 * std::sqrt(p * (1 - p) / n)) << to_string(c.law);
  }
}

TEST(CurrentInversion, OutputAlwaysHasEvenDegrees) {
  const Graph g = test::triangle();
  const std::vector<double> J{0.5, 0.8, 1.1};
  const DiscreteDistribution fk = fk_exact(g, J);
  Rng rng = make_rng(68);
  for (int i = 0; i < 500; ++i) {
    const EdgeSet open = edge_set_from_indicator(fk.sample(rng));
    InverseDiagnostics d;
    const CurrentConfig n = invert_current_from_fk(g, J, open, rng, OpenStackLaw::kShiftedPoisson,
                                                   {}, &d);
    EXPECT_TRUE(parity_ok(g, n));
    EXPECT_EQ(d.wrong_terminal, 0u);
    EXPECT_EQ(d.containment_violations, 0u);
  }
}

TEST(LoopSoupInversion, OccupationEqualsHalfTheSquaredField) {
  const Graph g = test::path3();
  const FieldReal phi{-0.8, 1.3, 0.2}; // negative root exercises the sign flip
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng = make_rng(69, i);
    InverseDiagnostics d;
    const LoopSoupSample soup = invert_loop_soup(g, phi, default_enumeration(g), 1e-9, rng, &d);
    const SoupFields f = fields(soup);
    for (VertexId x = 0; x < 3; ++x)
      EXPECT_NEAR(2.0 * f.occupation[x], phi[x] * phi[x], 1e-12);
    EXPECT_TRUE(parity_ok(g, f.crossings));
    EXPECT_EQ(d.wrong_terminal, 0u);
    EXPECT_EQ(d.containment_violations, 0u);
    for (const Trajectory &t : soup.loops)
      EXPECT_EQ(t.start, t.end_vertex());
  }
}

TEST(ForwardEnlarged, StacksOnlyGrowAndFieldsMatch) {
  const Graph g = test::path3();
  const ForwardEnlargedSampler s(g, 0, 1.0);
  Rng rng = make_rng(70);
  for (int i = 0; i < 200; ++i) {
    const ForwardEnlarged r = s.sample(rng);
    EXPECT_TRUE(r.C0.subset_of(r.C_end));
    std::vector<std::int64_t> n = r.n0;
    for (const EnlargedHistoryEntry &h : r.history) {
      EXPECT_EQ(h.n_after, n[h.edge] + 1);
      n[h.edge] = h.n_after;
    }
    EXPECT_EQ(n, r.n_end);
    const auto ell = r.traj.local_times(3);
    for (VertexId v = 0; v < 3; ++v)
      EXPECT_NEAR(r.phiU[v] * r.phiU[v], r.phi0[v] * r.phi0[v] + 2 * ell[v], 1e-10);
  }
}

} // namespace
} // namespace rkinv
