#pragma once

#include "rkinv/couplings.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace rkinv {

struct TestStatistic {
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 0;
};

/// Two-sample Kolmogorov-Smirnov with the asymptotic Kolmogorov p-value
/// (Stephens' small-sample correction on the effective size). Values within a
/// relative 1e-12 of each other count as ties.
TestStatistic ks_two_sample(std::span<const double> a, std::span<const double> b);
TestStatistic ks_one_sample(std::span<const double> a,
                            const std::function<double(double)> &cdf);
double kolmogorov_sf(double lambda);

double chi2_sf(double x, double dof);

/// Pearson goodness of fit. Outcomes with expectation below `min_expected`
/// are pooled into one bin. Throws on zero total or an observed outcome the
/// expected law gives no mass.
TestStatistic chi2_goodness(const std::map<std::vector<int>, std::int64_t> &counts,
                            const DiscreteDistribution &expected,
                            double min_expected = 5.0);

/// Two-sample chi-square test of homogeneity over string-keyed categories.
/// Sparse categories are pooled until each pooled bin expects at least
/// `min_expected` in both samples.
TestStatistic chi2_homogeneity(const std::map<std::string, std::int64_t> &a,
                               const std::map<std::string, std::int64_t> &b,
                               double min_expected = 5.0);

/// Calibration of binary outcomes against predicted probabilities: events are
/// grouped by `group` and by equal-count bins of predicted probability; the
/// statistic is the sum over bins of (observed - expected)^2 / variance.
struct BernoulliObservation {
  int group;
  double p;
  bool outcome;
};
TestStatistic bernoulli_calibration(std::vector<BernoulliObservation> obs,
                                    int bins_per_group = 5);

struct MomentResult {
  double max_sigma = 0.0;  // largest |empirical - exact| / standard error
  std::string worst;       // component where it occurred
  std::size_t n = 0;
};

/// Largest componentwise deviation of the empirical mean vector and
/// covariance matrix from exact values, in empirical standard errors.
MomentResult moment_deviation(const std::vector<std::vector<double>> &samples,
                              const Eigen::VectorXd &mean,
                              const Eigen::MatrixXd &cov);

struct TestReport {
  std::string suite;
  std::string name;
  std::string kind; // ks, chi2, moments, exact, invariant, calibration
  double statistic = 0.0;
  double p_value = -1.0; // -1 when the test is not p-value based
  double threshold = 0.0;
  bool pass = false;
  bool pass_adjusted = false;
  bool informational = false;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double runtime_s = 0.0;
  std::string detail;
};

/// Passes iff every mean and covariance entry is within k_sigma standard
/// errors of the exact value.
TestReport moment_check(const std::vector<std::vector<double>> &samples,
                        const Eigen::VectorXd &mean, const Eigen::MatrixXd &cov,
                        double k_sigma);

std::string reports_csv(const std::vector<TestReport> &reports);
std::string reports_summary(const std::vector<TestReport> &reports);

/// Applies Bonferroni within each suite over the non-informational p-value
/// tests, filling pass_adjusted. Other kinds copy the raw pass flag.
void apply_bonferroni(std::vector<TestReport> &reports);

bool all_pass(const std::vector<TestReport> &reports);

} // namespace rkinv
