#include "rkinv/rng.hpp"

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rkinv {

namespace {

std::uint64_t splitmix64(std::uint64_t &state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t stage) {
  std::uint64_t state = seed;
  std::uint64_t out = splitmix64(state);
  state ^= stream * 0xd1b54a32d192ed03ULL;
  out ^= splitmix64(state);
  state ^= stage * 0x8cb92ba72f3d8dd7ULL;
  out ^= splitmix64(state);
  return out;
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t stage) {
  return Rng(derive_seed(seed, stream, stage));
}

double uniform01(Rng &rng) {
  // 53 random bits, shifted off zero.
  for (;;) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u > 0.0)
      return u;
  }
}

bool bernoulli(Rng &rng, double p) {
  if (p <= 0.0)
    return false;
  if (p >= 1.0)
    return true;
  return uniform01(rng) < p;
}

double exponential(Rng &rng, double rate) {
  return -std::log(uniform01(rng)) / rate;
}

double normal(Rng &rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

double gamma(Rng &rng, double shape, double scale) {
  if (shape <= 0.0 || scale <= 0.0)
    throw std::invalid_argument("gamma: shape and scale must be positive");
  boost::random::gamma_distribution<double> dist(shape, scale);
  return dist(rng);
}

double beta_one(Rng &rng, double alpha) {
  if (alpha <= 0.0)
    throw std::invalid_argument("beta_one: alpha must be positive");
  // Inverse CDF of Beta(1, alpha): 1 - (1-B)^alpha = U.
  return -std::expm1(std::log(uniform01(rng)) / alpha);
}

std::int64_t poisson(Rng &rng, double mean) {
  if (mean < 0.0)
    throw std::invalid_argument("poisson: negative mean");
  if (mean == 0.0)
    return 0;
  boost::random::poisson_distribution<std::int64_t, double> dist(mean);
  return dist(rng);
}

std::int64_t poisson_positive(Rng &rng, double mean) {
  if (mean <= 0.0)
    throw std::invalid_argument("poisson_positive: mean must be positive");
  if (mean > 1.0) {
    for (;;) {
      const std::int64_t k = poisson(rng, mean);
      if (k > 0)
        return k;
    }
  }
  // Inversion on the zero-truncated mass function.
  const double u = uniform01(rng);
  double p = mean * std::exp(-mean) / -std::expm1(-mean);
  double cdf = p;
  std::int64_t k = 1;
  while (u > cdf && p > 0.0) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

std::size_t discrete_index(Rng &rng, const std::vector<double> &weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0))
    throw std::invalid_argument("discrete_index: weights sum to zero");
  const double target = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0)
      continue;
    last_positive = i;
    acc += weights[i];
    if (target < acc)
      return i;
  }
  return last_positive;
}

std::size_t worker_count(std::size_t jobs) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (jobs < 64)
    return 1;
  return std::min(hw, jobs / 32);
}

} // namespace rkinv
