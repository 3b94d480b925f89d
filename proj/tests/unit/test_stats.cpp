#include "rkinv/rng.hpp"
#include "rkinv/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace rkinv {
namespace {

TEST(Ks, IdenticalSamplesGiveZeroDistance) {
  const std::vector<double> a{0.1, 0.5, 0.2, 0.9};
  const TestStatistic t = ks_two_sample(a, a);
  EXPECT_EQ(t.statistic, 0.0);
  EXPECT_EQ(t.p_value, 1.0);
}

TEST(Ks, DisjointSamplesGiveDistanceOne) {
  const std::vector<double> a(200, 0.0), b(200, 1.0);
  const TestStatistic t = ks_two_sample(a, b);
  EXPECT_EQ(t.statistic, 1.0);
  EXPECT_LT(t.p_value, 1e-30);
}

TEST(Ks, NearlyEqualAtomsAreTies) {
  const std::vector<double> a(100, 1.0), b(100, std::sqrt(2.0) * std::sqrt(2.0) / 2.0);
  EXPECT_EQ(ks_two_sample(a, b).statistic, 0.0);
}

TEST(Ks, OneSampleUniform) {
  Rng rng = make_rng(81);
  std::vector<double> u(5000);
  for (double &x : u)
    x = uniform01(rng);
  EXPECT_GT(ks_one_sample(u, [](double x) { return x; }).p_value, 1e-3);
  EXPECT_LT(ks_one_sample(u, [](double x) { return x * x; }).p_value, 1e-10);
}

TEST(Ks, KolmogorovTailValues) {
  EXPECT_NEAR(kolmogorov_sf(1.358098), 0.05, 1e-5);
  EXPECT_NEAR(kolmogorov_sf(1.627624), 0.01, 1e-5);
  EXPECT_THROW(ks_two_sample(std::vector<double>{}, std::vector<double>{1.0}),
               std::invalid_argument);
}

TEST(ChiSquare, SurvivalFunction) {
  EXPECT_NEAR(chi2_sf(3.841458820694124, 1), 0.05, 1e-12);
  EXPECT_NEAR(chi2_sf(18.307038053275146, 10), 0.05, 1e-12);
}

DiscreteDistribution three_outcomes() {
  DiscreteDistribution d;
  d.outcomes = {{0}, {1}, {2}};
  d.finalize_from_log_weights({std::log(0.5), std::log(0.3), std::log(0.2)});
  return d;
}

TEST(ChiSquare, ProportionalCountsGiveZero) {
  const TestStatistic t = chi2_goodness({{{0}, 500}, {{1}, 300}, {{2}, 200}}, three_outcomes());
  EXPECT_NEAR(t.statistic, 0.0, 1e-12);
  EXPECT_EQ(t.dof, 2);
  EXPECT_NEAR(t.p_value, 1.0, 1e-12);
}

TEST(ChiSquare, ContractErrors) {
  EXPECT_THROW(chi2_goodness({}, three_outcomes()), std::invalid_argument);
  EXPECT_THROW(chi2_goodness({{{7}, 3}}, three_outcomes()), std::domain_error);
}

TEST(ChiSquare, SparseBinsArePooled) {
  // With 10 draws outcomes 1 and 2 expect 3 and 2, both below 5: they share
  // one pooled bin next to the bin of outcome 0.
  const TestStatistic t = chi2_goodness({{{0}, 5}, {{1}, 3}, {{2}, 2}}, three_outcomes());
  EXPECT_EQ(t.dof, 1);
  EXPECT_NEAR(t.statistic, 0.0, 1e-12);
}

TEST(ChiSquare, HomogeneityOfEqualTables) {
  const std::map<std::string, std::int64_t> a{{"x", 40}, {"y", 60}, {"z", 2}};
  const TestStatistic t = chi2_homogeneity(a, a);
  EXPECT_NEAR(t.statistic, 0.0, 1e-12);
  const std::map<std::string, std::int64_t> b{{"x", 90}, {"y", 10}};
  EXPECT_LT(chi2_homogeneity(a, b).p_value, 1e-10);
}

TEST(Calibration, WellCalibratedCoinsPass) {
  Rng rng = make_rng(82);
  std::vector<BernoulliObservation> obs;
  for (int i = 0; i < 20000; ++i) {
    const double p = uniform01(rng);
    obs.push_back({i % 2, p, bernoulli(rng, p)});
  }
  EXPECT_GT(bernoulli_calibration(obs).p_value, 1e-3);
  for (auto &o : obs)
    o.p = std::min(1.0, o.p * 1.2);
  EXPECT_LT(bernoulli_calibration(obs).p_value, 1e-6);
}

TEST(Moments, OracleSamplesPassAndShiftedMeanFails) {
  Rng rng = make_rng(83);
  std::vector<std::vector<double>> s(20000);
  for (auto &row : s) {
    const double z1 = normal(rng), z2 = normal(rng);
    row = {z1, z1 + z2};
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd cov(2, 2);
  cov << 1, 1, 1, 2;
  EXPECT_TRUE(moment_check(s, mean, cov, 5.0).pass);
  // Ten standard errors: sqrt(1 / 20000) * 10.
  mean(0) = 10.0 * std::sqrt(1.0 / 20000.0);
  const TestReport r = moment_check(s, mean, cov, 5.0);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.statistic, 8.0);
}

TEST(Moments, ContractErrors) {
  const Eigen::VectorXd m = Eigen::VectorXd::Zero(2);
  const Eigen::MatrixXd c = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(moment_check({}, m, c, 4.0), std::invalid_argument);
  EXPECT_THROW(moment_check({{1.0}, {2.0}}, m, c, 4.0), std::invalid_argument);
  EXPECT_THROW(moment_check({{1.0, 2.0}, {2.0, 1.0}}, m, Eigen::MatrixXd::Identity(3, 3), 4.0),
               std::invalid_argument);
}

TEST(Reports, BonferroniIsPerSuite) {
  std::vector<TestReport> r(3);
  for (auto &x : r) {
    x.suite = "s";
    x.kind = "ks";
    x.threshold = 0.01;
    x.p_value = 0.006;
    x.pass = false;
  }
  r[2].suite = "t";
  apply_bonferroni(r);
  EXPECT_TRUE(r[0].pass_adjusted); // 0.006 > 0.01 / 2
  EXPECT_FALSE(r[2].pass_adjusted);
  EXPECT_FALSE(all_pass(r));
  r[2].informational = true;
  EXPECT_TRUE(all_pass(r));
}

TEST(Reports, CsvHasNoRuntimeColumn) {
  TestReport r;
  r.suite = "s";
  r.name = "a, b";
  r.runtime_s = 12.5;
  const std::string csv = reports_csv({r});
  EXPECT_EQ(csv.find("runtime"), std::string::npos);
  EXPECT_NE(csv.find("\"a, b\""), std::string::npos);
}

} // namespace
} // namespace rkinv
