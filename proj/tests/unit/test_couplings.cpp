#include "fixtures.hpp"

#include "rkinv/couplings.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace rkinv {
namespace {

constexpr double kTanh1 = 0.76159415595576488812;
constexpr double kSech1 = 0.64805427366388539958;

TEST(Parity, DetectsOddVertices) {
  const Graph g = test::triangle();
  EXPECT_TRUE(parity_ok(g, {1, 1, 1}));
  EXPECT_TRUE(parity_ok(g, {2, 0, 4}));
  std::vector<VertexId> odd;
  EXPECT_FALSE(parity_ok(g, {1, 0, 0}, &odd));
  EXPECT_EQ(odd, (std::vector<VertexId>{0, 1}));
}

TEST(Fk, InteractionWeights) {
  const Graph g = test::path3();
  const auto J = interaction_weights(g, {2.0, 0.5, 3.0});
  EXPECT_DOUBLE_EQ(J[0], 1.0);
  EXPECT_DOUBLE_EQ(J[1], 0.75);
}

TEST(Fk, FromFieldNeverOpensOppositeSigns) {
  const Graph g = test::path3();
  const FieldReal phi{1.0, -0.8, -1.2};
  Rng rng = make_rng(51);
  int open1 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const EdgeSet s = fk_from_field(g, phi, rng);
    EXPECT_FALSE(s.contains(0));
    open1 += s.contains(1);
  }
  const double p = -std::expm1(-2.0 * 0.5 * 0.8 * 1.2);
  EXPECT_NEAR(open1 / double(n), p, 5.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Fk, ClusterSignsRespectPinAndClusters) {
  const Graph g = test::path3();
  const std::vector<EdgeId> ids{0};
  const EdgeSet open = EdgeSet::from_ids(2, ids);
  Rng rng = make_rng(52);
  for (int i = 0; i < 100; ++i) {
    const auto s = sign_sample_on_clusters(g, open, VertexId{1}, rng);
    EXPECT_EQ(s[0], 1);
    EXPECT_EQ(s[1], 1);
    EXPECT_TRUE(s[2] == 1 || s[2] == -1);
  }
}

TEST(Oracles, SingleEdgeClosedForms) {
  const Graph g = test::single_edge();
  const std::vector<double> J{1.0};
  EXPECT_NEAR(fk_exact(g, J).probability({1}), kTanh1, 1e-15);
  const DiscreteDistribution ising = ising_exact(g, J);
  EXPECT_NEAR(ising.probability({1, 1}) + ising.probability({-1, -1}), (1 + kTanh1) / 2, 1e-15);
  const DiscreteDistribution cur = current_exact(g, J);
  EXPECT_NEAR(cur.probability({0}), kSech1, 1e-15);
  EXPECT_NEAR(cur.probability({2}), kSech1 / 2.0, 1e-15);
  EXPECT_EQ(cur.probability({1}), 0.0);
  EXPECT_LT(cur.truncation_bound, 1e-40);
}

TEST(Oracles, TruncationBoundIsReportedAndHonest) {
  const Graph g = test::single_edge();
  const std::vector<double> J{2.0};
  const DiscreteDistribution coarse = current_exact(g, J, 4);
  const DiscreteDistribution fine = current_exact(g, J, 40);
  EXPECT_GT(coarse.truncation_bound, 0.0);
  EXPECT_LE(total_variation(coarse, fine), coarse.truncation_bound + 1e-12);
}

TEST(Oracles, FkSignsGiveIsingOnTriangle) {
  const Graph g = test::triangle();
  const std::vector<double> J{0.4, 0.7, 1.1};
  EXPECT_LT(total_variation(fk_sign_pushforward(g, fk_exact(g, J)), ising_exact(g, J)), 1e-12);
}

TEST(Oracles, CurrentsPushForwardToFk) {
  const Graph g = test::triangle();
  const std::vector<double> J{0.4, 0.7, 1.1};
  const DiscreteDistribution cur = current_exact(g, J);
  EXPECT_LT(total_variation(current_fk_pushforward(g, J, cur), fk_exact(g, J)),
            cur.truncation_bound + 1e-10);
}

TEST(Oracles, CapsAreEnforced) {
  const Graph g = test::triangle();
  OracleCaps caps;
  caps.max_spins = 2;
  EXPECT_THROW(ising_exact(g, {1, 1, 1}, caps), std::exception);
  EXPECT_THROW(fk_exact(g, {1, 1}), std::exception);
}

TEST(Oracles, CurrentKernelRejectsParityViolations) {
  const Graph g = test::triangle();
  Rng rng = make_rng(53);
  EXPECT_THROW(current_fk_forward(g, {1, 1, 1}, {1, 0, 0}, rng), std::exception);
  const EdgeSet s = current_fk_forward(g, {1, 1, 1}, {1, 1, 1}, rng);
  EXPECT_EQ(s.count(), 3u);
}

TEST(DiscreteLaw, LookupAndSampling) {
  DiscreteDistribution d;
  d.outcomes = {{0, 1}, {1, 0}};
  d.finalize_from_log_weights({std::log(1.0), std::log(3.0)});
  EXPECT_NEAR(d.probability({1, 0}), 0.75, 1e-15);
  EXPECT_EQ(d.probability({5, 5}), 0.0);
  EXPECT_EQ(DiscreteDistribution::key({1, 0, 2}), "1 0 2");
  EXPECT_EQ(total_variation(d, d), 0.0);
  Rng rng = make_rng(54);
  int hits = 0;
  for (int i = 0; i < 40000; ++i)
    hits += d.sample(rng) == std::vector<int>{1, 0};
  EXPECT_NEAR(hits / 40000.0, 0.75, 5.0 * std::sqrt(0.75 * 0.25 / 40000));
}

TEST(Lupu, CrossedEdgesAreOpenAndSquaresMatch) {
  const Graph g = test::path3();
  SoupFields f;
  f.occupation = {0.5, 0.8, 0.0};
  f.crossings = {2, 0};
  Rng rng = make_rng(55);
  for (int i = 0; i < 50; ++i) {
    const LupuLift l = lupu_lift_fields(g, f, VertexId{0}, rng);
    EXPECT_TRUE(l.open.contains(0));
    EXPECT_FALSE(l.open.contains(1)); // L_c = 0 leaves nothing to open
    EXPECT_GT(l.phi[0], 0.0);
    EXPECT_NEAR(l.phi[1] * l.phi[1], 1.6, 1e-12);
    EXPECT_EQ(l.phi[1] > 0, l.phi[0] > 0);
  }
}

TEST(ForwardRk, PathwiseIdentities) {
  const Graph g = test::path3();
  const ForwardRkSampler s(g, 0, 1.3);
  Rng rng = make_rng(56);
  for (int i = 0; i < 200; ++i) {
    const ForwardRk r = s.sample(rng);
    EXPECT_EQ(r.phi0[0], 0.0);
    EXPECT_NEAR(r.phiU[0], std::sqrt(2.6), 1e-12);
    const auto ell = r.traj.local_times(3);
    for (VertexId v = 0; v < 3; ++v)
      EXPECT_NEAR(r.phiU[v] * r.phiU[v], r.phi0[v] * r.phi0[v] + 2 * ell[v], 1e-10);
    EXPECT_TRUE(r.open0.subset_of(r.openU));
    const auto cross = r.traj.crossings(2);
    for (EdgeId e = 0; e < 2; ++e)
      if (cross[e] > 0) {
        EXPECT_TRUE(r.openU.contains(e));
      }
    for (const Edge &e : g.edges())
      if (r.openU.contains(e.id)) {
        EXPECT_EQ(r.phiU[e.minus] < 0, r.phiU[e.plus] < 0);
      }
  }
}

TEST(ForwardRk, NoLocalTimeOpensNothing) {
  const Graph g = test::path3();
  Rng rng = make_rng(57);
  EdgeSet open(2);
  open_extra_edges(g, {0.7, -0.2, 1.1}, {0.0, 0.0, 0.0}, open, rng);
  EXPECT_TRUE(open.empty());
}

} // namespace
} // namespace rkinv
