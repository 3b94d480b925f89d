#pragma once

#include "rkinv/inverse_process.hpp"
#include "rkinv/stats.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rkinv {

struct SuiteParams {
  double sample_scale = 1.0; // multiplies every sample size (floor 200)
  double p_threshold = 0.01;
  double k_sigma = 4.0;
  double k_sigma_gff = 5.0; // the plain field sampler is checked at 5 sigma
  int n_max = 40;           // current oracle truncation
};

const std::vector<std::string> &suite_names(); // excludes "all"

/// Runs one verification suite, or every suite for "all". Reports carry both
/// raw and Bonferroni-adjusted flags. Throws std::invalid_argument for an
/// unknown name.
std::vector<TestReport> run_suite(const std::string &name, const SuiteParams &params,
                                  std::uint64_t seed);

} // namespace rkinv
