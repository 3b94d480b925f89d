#include "fixtures.hpp"

#include "rkinv/gff.hpp"
#include "rkinv/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace rkinv {
namespace {

TEST(Field, DecomposeGivesZeroAPositiveSign) {
  const FieldDecomposition d = field_decompose({-1.5, 0.0, 2.0});
  EXPECT_EQ(d.sign, (std::vector<int>{-1, 1, 1}));
  EXPECT_EQ(d.magnitude, (std::vector<double>{1.5, 0.0, 2.0}));
}

TEST(Gff, ConditionalMomentsOnTwoVertexGraph) {
  const Graph g = test::ab();
  const ConditionalMoments cm = conditional_moments(g, ConditionSpec::pin(0, 1.7));
  ASSERT_EQ(cm.free, (std::vector<VertexId>{1}));
  EXPECT_NEAR(cm.mean(0), 1.7, 1e-14);
  EXPECT_NEAR(cm.mean(1), 1.7, 1e-14); // b only sees a, and carries no killing
  EXPECT_NEAR(cm.covariance(0, 0), 1.0, 1e-14);

  const ConditionalMoments free = conditional_moments(g, ConditionSpec::free());
  EXPECT_NEAR(free.covariance(1, 1), 2.0, 1e-14);
  EXPECT_NEAR(free.mean.norm(), 0.0, 1e-15);
}

TEST(Gff, PinnedValuesAreReproducedExactly) {
  const Graph g = test::path3();
  ConditionSpec cond;
  cond.pinned = {{0, std::sqrt(2.0)}, {2, -0.5}};
  const GffSampler s(g, cond);
  Rng rng = make_rng(11);
  for (int i = 0; i < 100; ++i) {
    const FieldReal phi = s.sample(rng);
    EXPECT_EQ(phi[0], std::sqrt(2.0));
    EXPECT_EQ(phi[2], -0.5);
  }
}

TEST(Gff, LogDensityIsMinusHalfDirichletForm) {
  const Graph g = test::ab();
  const GffSampler s(g, ConditionSpec::free());
  const FieldReal phi{0.4, -1.1};
  const double expected = -0.5 * (1.0 * 0.4 * 0.4 + (0.4 + 1.1) * (0.4 + 1.1));
  EXPECT_NEAR(s.log_density(phi), expected, 1e-14);
}

TEST(Gff, SampleMomentsMatchGreenFunction) {
  const Graph g = test::path3();
  const GffSampler s(g, ConditionSpec::free());
  const auto rows = parallel_replicas(20000, 5, [&](std::size_t, Rng &rng) { return s.sample(rng); });
  const TestReport r = moment_check(rows, Eigen::VectorXd::Zero(3), green_function(g), 5.0);
  EXPECT_TRUE(r.pass) << r.statistic << " " << r.detail;
}

TEST(Gff, SamplesAreDeterministicPerSeed) {
  const Graph g = test::ab();
  Rng a = make_rng(3, 1);
  Rng b = make_rng(3, 1);
  EXPECT_EQ(sample_gff(g, ConditionSpec::free(), a), sample_gff(g, ConditionSpec::free(), b));
}

} // namespace
} // namespace rkinv
