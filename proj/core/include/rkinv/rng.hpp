#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace rkinv {

using Rng = std::mt19937_64;

// Streams are derived from (master seed, replica, stage) through splitmix64,
// so replica i sees the same numbers regardless of thread scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t stage = 0);
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0,
             std::uint64_t stage = 0);

// Distributions go through Boost.Random so draws are identical on every
// standard library; std:: distributions are implementation-defined.
double uniform01(Rng &rng); // open interval (0,1)
bool bernoulli(Rng &rng, double p);
double exponential(Rng &rng, double rate = 1.0);
double normal(Rng &rng);
double gamma(Rng &rng, double shape, double scale);
double beta_one(Rng &rng, double alpha); // Beta(1, alpha)
std::int64_t poisson(Rng &rng, double mean);
std::int64_t poisson_positive(Rng &rng, double mean); // conditioned on >= 1
std::size_t discrete_index(Rng &rng, const std::vector<double> &weights);

std::size_t worker_count(std::size_t jobs);

/// Runs `fn(i, rng_i)` for i in [0, n) with rng_i = make_rng(seed, i) and
/// returns the results in index order. Work is split into contiguous chunks
/// over the available cores.
template <class Fn>
auto parallel_replicas(std::size_t n, std::uint64_t seed, Fn &&fn)
    -> std::vector<decltype(fn(std::size_t{}, std::declval<Rng &>()))> {
  using T = decltype(fn(std::size_t{}, std::declval<Rng &>()));
  std::vector<T> out(n);
  const std::size_t workers = worker_count(n);
  auto run_chunk = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = make_rng(seed, i);
      out[i] = fn(i, rng);
    }
  };
  if (workers <= 1) {
    run_chunk(0, n);
    return out;
  }
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end)
        break;
      pool.emplace_back(run_chunk, begin, end);
    }
  } // joins
  return out;
}

} // namespace rkinv
