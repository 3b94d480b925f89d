#include "fixtures.hpp"

#include "rkinv/couplings.hpp"
#include "rkinv/loop_soup.hpp"
#include "rkinv/stats.hpp"

#include <gtest/gtest.h>

#include <numeric>

namespace rkinv {
namespace {

TEST(PoissonDirichlet, MassesSumToOneUpToRemainder) {
  Rng rng = make_rng(41);
  for (double alpha : {0.5, 1.0, 3.0}) {
    const PDPartition pd = sample_pd_partition(alpha, 1e-9, rng);
    const double sum = std::accumulate(pd.masses.begin(), pd.masses.end(), 0.0);
    EXPECT_NEAR(sum + pd.remainder, 1.0, 1e-12);
    EXPECT_LT(pd.remainder, 1e-9);
    for (double m : pd.masses)
      EXPECT_GT(m, 0.0);
  }
}

TEST(PoissonDirichlet, ThresholdsIncreaseInsideTheInterval) {
  PDPartition pd;
  pd.masses = {0.5, 0.25, 0.25 - 1e-17};
  pd.remainder = 1e-17;
  const auto cuts = partition_thresholds(pd, 2.0);
  ASSERT_EQ(cuts.size(), 2u);
  EXPECT_DOUBLE_EQ(cuts[0], 1.0);
  EXPECT_DOUBLE_EQ(cuts[1], 1.5);
}

TEST(LoopSoup, FieldsSumHoldingsAndJumps) {
  LoopSoupSample s;
  s.num_vertices = 2;
  s.num_edges = 1;
  Trajectory a;
  a.start = 0;
  a.steps = {{0, 0.5, ExitKind::kJump, 0}, {1, 0.25, ExitKind::kJump, 0},
             {0, 0.0, ExitKind::kStopped, kNoEdge}};
  Trajectory b;
  b.start = 1;
  b.steps = {{1, 1.0, ExitKind::kStopped, kNoEdge}};
  s.loops = {a, b};
  const SoupFields f = fields(s);
  EXPECT_DOUBLE_EQ(f.occupation[0], 0.5);
  EXPECT_DOUBLE_EQ(f.occupation[1], 1.25);
  EXPECT_EQ(f.crossings[0], 2);
}

TEST(LoopSoup, LoopsAtVertexAreRooted) {
  const Graph g = test::path3();
  Rng rng = make_rng(42);
  for (int i = 0; i < 50; ++i)
    for (const Trajectory &t : sample_loops_at_vertex(g, 1, 0.5, 1e-9, rng)) {
      EXPECT_EQ(t.start, 1u);
      EXPECT_EQ(t.end_vertex(), 1u);
      EXPECT_EQ(t.steps.back().exit, ExitKind::kStopped);
    }
}

// E[L_x] = alpha G_xx and Cov(L_x, L_y) = alpha G_xy^2 for any alpha.
class OccupationMoments : public ::testing::TestWithParam<double> {};

TEST_P(OccupationMoments, MatchGreenFunction) {
  const double alpha = GetParam();
  const Graph g = test::path3();
  const LoopSoupSampler sampler(g, default_enumeration(g), alpha);
  std::size_t parity_failures = 0;
  const auto occ = parallel_replicas(20000, 43, [&](std::size_t, Rng &rng) {
    return fields(sampler.sample(rng)).occupation;
  });
  const auto soups = parallel_replicas(500, 44, [&](std::size_t, Rng &rng) {
    return parity_ok(g, fields(sampler.sample(rng)).crossings);
  });
  for (bool ok : soups)
    parity_failures += !ok;
  EXPECT_EQ(parity_failures, 0u);
  const Eigen::MatrixXd G = green_function(g);
  const TestReport r =
      moment_check(occ, alpha * G.diagonal(), alpha * G.cwiseProduct(G), 5.0);
  EXPECT_TRUE(r.pass) << r.statistic << " " << r.detail;
}

INSTANTIATE_TEST_SUITE_P(Alphas, OccupationMoments, ::testing::Values(0.5, 1.0, 2.0));

TEST(LoopSoup, SamplingIsDeterministicPerSeed) {
  const Graph g = test::ab();
  Rng a = make_rng(9);
  Rng b = make_rng(9);
  const auto sa = fields(sample_loop_soup(g, 0.5, default_enumeration(g), 1e-9, a));
  const auto sb = fields(sample_loop_soup(g, 0.5, default_enumeration(g), 1e-9, b));
  EXPECT_EQ(sa.occupation, sb.occupation);
  EXPECT_EQ(sa.crossings, sb.crossings);
}

} // namespace
} // namespace rkinv
