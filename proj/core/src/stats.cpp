#include "rkinv/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rkinv {

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0)
    return 1.0;
  if (lambda < 0.2)
    return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18)
      break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

// Atoms reached along different arithmetic paths (u versus sqrt(2u)^2 / 2)
// differ in the last bits and would otherwise split into two jumps.
constexpr double kTieTolerance = 1e-12;

double ks_p(double d, double ne) {
  const double root = std::sqrt(ne);
  return kolmogorov_sf((root + 0.12 + 0.11 / root) * d);
}

} // namespace

TestStatistic ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    const double tie = v + kTieTolerance * std::max(1.0, std::fabs(v));
    while (i < x.size() && x[i] <= tie)
      ++i;
    while (j < y.size() && y[j] <= tie)
      ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  TestStatistic r;
  r.statistic = d;
  r.p_value = ks_p(d, n * m / (n + m));
  return r;
}

TestStatistic ks_one_sample(std::span<const double> a,
                            const std::function<double(double)> &cdf) {
  if (a.empty())
    throw std::invalid_argument("ks_one_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f,
                  f - static_cast<double>(i) / n});
  }
  TestStatistic r;
  r.statistic = d;
  r.p_value = ks_p(d, n);
  return r;
}

double chi2_sf(double x, double dof) {
  if (dof <= 0.0)
    return 1.0;
  if (x <= 0.0)
    return 1.0;
  return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

TestStatistic chi2_goodness(const std::map<std::vector<int>, std::int64_t> &counts,
                            const DiscreteDistribution &expected,
                            double min_expected) {
  std::int64_t total = 0;
  for (const auto &[outcome, c] : counts) {
    if (c < 0)
      throw std::invalid_argument("chi2_goodness: negative count");
    total += c;
    if (c > 0 && !(expected.probability(outcome) > 0.0))
      throw std::domain_error("chi2_goodness: observed outcome [" +
                              DiscreteDistribution::key(outcome) +
                              "] has zero expected probability");
  }
  if (total == 0)
    throw std::invalid_argument("chi2_goodness: zero total count");
  const double n = static_cast<double>(total);

  double stat = 0.0;
  int bins = 0;
  double pooled_e = 0.0;
  double pooled_o = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const double e = n * expected.probabilities[i];
    auto it = counts.find(expected.outcomes[i]);
    const double o = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    if (e < min_expected) {
      pooled_e += e;
      pooled_o += o;
      continue;
    }
    stat += (o - e) * (o - e) / e;
    ++bins;
  }
  if (pooled_e > 0.0) {
    stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++bins;
  }
  TestStatistic r;
  r.statistic = stat;
  r.dof = std::max(bins - 1, 0);
  r.p_value = chi2_sf(stat, r.dof);
  return r;
}

TestStatistic chi2_homogeneity(const std::map<std::string, std::int64_t> &a,
                               const std::map<std::string, std::int64_t> &b,
                               double min_expected) {
  std::set<std::string> keys;
  double na = 0.0;
  double nb = 0.0;
  for (const auto &[k, c] : a) {
    keys.insert(k);
    na += static_cast<double>(c);
  }
  for (const auto &[k, c] : b) {
    keys.insert(k);
    nb += static_cast<double>(c);
  }
  if (na == 0.0 || nb == 0.0)
    throw std::invalid_argument("chi2_homogeneity: empty sample");
  struct Cell {
    double a, b;
  };
  std::vector<Cell> cells;
  for (const std::string &k : keys) {
    auto ia = a.find(k);
    auto ib = b.find(k);
    cells.push_back({ia == a.end() ? 0.0 : static_cast<double>(ia->second),
                     ib == b.end() ? 0.0 : static_cast<double>(ib->second)});
  }
  // Pool the sparsest categories first so that every bin is well populated.
  std::stable_sort(cells.begin(), cells.end(), [](const Cell &x, const Cell &y) {
    return x.a + x.b < y.a + y.b;
  });
  const double fa = na / (na + nb);
  const double fb = nb / (na + nb);
  std::vector<Cell> bins;
  Cell pool{0.0, 0.0};
  for (const Cell &c : cells) {
    pool.a += c.a;
    pool.b += c.b;
    const double t = pool.a + pool.b;
    if (t * fa >= min_expected && t * fb >= min_expected) {
      bins.push_back(pool);
      pool = {0.0, 0.0};
    }
  }
  if (pool.a + pool.b > 0.0) {
    if (bins.empty())
      bins.push_back(pool);
    else {
      bins.back().a += pool.a;
      bins.back().b += pool.b;
    }
  }
  double stat = 0.0;
  for (const Cell &c : bins) {
    const double t = c.a + c.b;
    const double ea = t * fa;
    const double eb = t * fb;
    stat += (c.a - ea) * (c.a - ea) / ea + (c.b - eb) * (c.b - eb) / eb;
  }
  TestStatistic r;
  r.statistic = stat;
  r.dof = static_cast<int>(bins.size()) - 1;
  r.p_value = chi2_sf(stat, r.dof);
  return r;
}

TestStatistic bernoulli_calibration(std::vector<BernoulliObservation> obs,
                                    int bins_per_group) {
  if (obs.empty())
    throw std::invalid_argument("bernoulli_calibration: no observations");
  std::stable_sort(obs.begin(), obs.end(),
                   [](const BernoulliObservation &x, const BernoulliObservation &y) {
                     return x.group != y.group ? x.group < y.group : x.p < y.p;
                   });
  double stat = 0.0;
  int bins = 0;
  std::size_t start = 0;
  while (start < obs.size()) {
    std::size_t end = start;
    while (end < obs.size() && obs[end].group == obs[start].group)
      ++end;
    const std::size_t size = end - start;
    const std::size_t k = std::max<std::size_t>(1, std::min<std::size_t>(
                                                       static_cast<std::size_t>(bins_per_group), size));
    for (std::size_t b = 0; b < k; ++b) {
      const std::size_t lo = start + b * size / k;
      const std::size_t hi = start + (b + 1) * size / k;
      double o = 0.0;
      double e = 0.0;
      double v = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        o += obs[i].outcome ? 1.0 : 0.0;
        e += obs[i].p;
        v += obs[i].p * (1.0 - obs[i].p);
      }
      if (v <= 1e-12) {
        if (std::fabs(o - e) > 1e-9) // a certain event went the other way
          stat = std::numeric_limits<double>::infinity();
        continue;
      }
      stat += (o - e) * (o - e) / v;
      ++bins;
    }
    start = end;
  }
  TestStatistic r;
  r.statistic = stat;
  r.dof = bins;
  r.p_value = std::isinf(stat) ? 0.0 : chi2_sf(stat, bins);
  return r;
}

MomentResult moment_deviation(const std::vector<std::vector<double>> &samples,
                              const Eigen::VectorXd &mean,
                              const Eigen::MatrixXd &cov) {
  const std::size_t n = samples.size();
  if (n < 2)
    throw std::invalid_argument("moment_deviation: need at least two samples");
  const auto d = static_cast<std::size_t>(mean.size());
  if (static_cast<std::size_t>(cov.rows()) != d ||
      static_cast<std::size_t>(cov.cols()) != d)
    throw std::invalid_argument("moment_check: dimension mismatch");
  for (const auto &s : samples)
    if (s.size() != d)
      throw std::invalid_argument("moment_check: sample dimension mismatch");

  const double nn = static_cast<double>(n);
  std::vector<double> m(d, 0.0);
  for (const auto &s : samples)
    for (std::size_t i = 0; i < d; ++i)
      m[i] += s[i];
  for (double &v : m)
    v /= nn;

  MomentResult r;
  r.n = n;
  auto consider = [&](double dev, double se, const std::string &what) {
    double sigma;
    if (se > 0.0)
      sigma = std::fabs(dev) / se;
    else
      sigma = std::fabs(dev) <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
    if (sigma > r.max_sigma || r.worst.empty()) {
      if (sigma >= r.max_sigma) {
        r.max_sigma = sigma;
        r.worst = what;
      }
    }
  };
  for (std::size_t i = 0; i < d; ++i) {
    double var = 0.0;
    for (const auto &s : samples)
      var += (s[i] - m[i]) * (s[i] - m[i]);
    var /= nn - 1.0;
    consider(m[i] - mean(static_cast<Eigen::Index>(i)), std::sqrt(var / nn),
             "mean[" + std::to_string(i) + "]");
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      double c = 0.0;
      for (const auto &s : samples)
        c += (s[i] - m[i]) * (s[j] - m[j]);
      c /= nn - 1.0;
      double v = 0.0;
      for (const auto &s : samples) {
        const double prod = (s[i] - m[i]) * (s[j] - m[j]) - c;
        v += prod * prod;
      }
      v /= nn - 1.0;
      consider(c - cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
               std::sqrt(v / nn),
               "cov[" + std::to_string(i) + "," + std::to_string(j) + "]");
    }
  }
  return r;
}

TestReport moment_check(const std::vector<std::vector<double>> &samples,
                        const Eigen::VectorXd &mean, const Eigen::MatrixXd &cov,
                        double k_sigma) {
  const MomentResult m = moment_deviation(samples, mean, cov);
  TestReport r;
  r.kind = "moments";
  r.statistic = m.max_sigma;
  r.threshold = k_sigma;
  r.pass = m.max_sigma <= k_sigma;
  r.pass_adjusted = r.pass;
  r.n = m.n;
  r.detail = "worst " + m.worst;
  return r;
}

namespace {

std::string csv_escape(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + "\"";
}

} // namespace

std::string reports_csv(const std::vector<TestReport> &reports) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "suite,name,kind,statistic,p_value,threshold,pass,pass_adjusted,"
        "informational,n,seed,detail\n";
  for (const TestReport &r : reports) {
    os << csv_escape(r.suite) << ',' << csv_escape(r.name) << ',' << r.kind << ','
       << r.statistic << ',' << r.p_value << ',' << r.threshold << ','
       << (r.pass ? 1 : 0) << ',' << (r.pass_adjusted ? 1 : 0) << ','
       << (r.informational ? 1 : 0) << ',' << r.n << ',' << r.seed << ','
       << csv_escape(r.detail) << '\n';
  }
  return os.str();
}

std::string reports_summary(const std::vector<TestReport> &reports) {
  std::ostringstream os;
  os << std::setprecision(4);
  for (const TestReport &r : reports) {
    os << (r.informational ? "INFO" : (r.pass_adjusted ? "pass" : "FAIL")) << "  "
       << r.suite << " / " << r.name << "  [" << r.kind << "] stat=" << r.statistic;
    if (r.p_value >= 0.0)
      os << " p=" << r.p_value;
    os << " threshold=" << r.threshold << " n=" << r.n;
    if (!r.detail.empty())
      os << "  (" << r.detail << ")";
    os << '\n';
  }
  return os.str();
}

void apply_bonferroni(std::vector<TestReport> &reports) {
  std::map<std::string, int> tests;
  for (const TestReport &r : reports)
    if (r.p_value >= 0.0 && !r.informational)
      ++tests[r.suite];
  for (TestReport &r : reports) {
    if (r.p_value >= 0.0) {
      const int m = std::max(1, tests[r.suite]);
      r.pass_adjusted = r.p_value > r.threshold / m;
    } else {
      r.pass_adjusted = r.pass;
    }
  }
}

bool all_pass(const std::vector<TestReport> &reports) {
  return std::all_of(reports.begin(), reports.end(), [](const TestReport &r) {
    return r.informational || r.pass_adjusted;
  });
}

} // namespace rkinv
