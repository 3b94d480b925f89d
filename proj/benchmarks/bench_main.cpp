#include "rkinv/couplings.hpp"
#include "rkinv/gff.hpp"
#include "rkinv/inverse_process.hpp"
#include "rkinv/loop_soup.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <string>

namespace {

using namespace rkinv;

// Path of n vertices with unit conductances and killing 0.5 at the far end.
Graph path(int n) {
  GraphSpec s;
  for (int i = 0; i < n; ++i)
    s.vertices.push_back("v" + std::to_string(i));
  for (int i = 0; i + 1 < n; ++i)
    s.edges.push_back({s.vertices[i], s.vertices[i + 1], 1.0});
  s.kappa[s.vertices.back()] = 0.5;
  s.kappa[s.vertices.front()] = 0.5;
  return Graph::build(s);
}

void BM_GffSample(benchmark::State &state) {
  const Graph g = path(static_cast<int>(state.range(0)));
  const GffSampler s(g, ConditionSpec::free());
  Rng rng = make_rng(1);
  for (auto _ : state)
    benchmark::DoNotOptimize(s.sample(rng));
}
BENCHMARK(BM_GffSample)->Arg(3)->Arg(16)->Arg(64);

void BM_LoopSoup(benchmark::State &state) {
  const Graph g = path(static_cast<int>(state.range(0)));
  const LoopSoupSampler s(g, default_enumeration(g), 0.5);
  Rng rng = make_rng(2);
  for (auto _ : state)
    benchmark::DoNotOptimize(s.sample(rng));
}
BENCHMARK(BM_LoopSoup)->Arg(3)->Arg(16);

void BM_ForwardRk(benchmark::State &state) {
  const Graph g = path(static_cast<int>(state.range(0)));
  const ForwardRkSampler s(g, 0, 1.0);
  Rng rng = make_rng(3);
  for (auto _ : state)
    benchmark::DoNotOptimize(s.sample(rng));
}
BENCHMARK(BM_ForwardRk)->Arg(3)->Arg(16);

void BM_Inverse(benchmark::State &state) {
  const Graph g = path(static_cast<int>(state.range(0)));
  const GffSampler pinned(g, ConditionSpec::pin(0, std::sqrt(2.0)));
  const int engine = static_cast<int>(state.range(1));
  Rng rng = make_rng(4);
  for (auto _ : state) {
    const FieldReal phi = pinned.sample(rng);
    if (engine == 0) {
      InverseState st = init_inverse_from_field(g, 0, phi, rng);
      benchmark::DoNotOptimize(run_inverse(st, rng));
    } else if (engine == 1) {
      benchmark::DoNotOptimize(run_inverse_jump_rates(g, 0, phi, fk_from_field(g, phi, rng), rng));
    } else {
      const InverseState st = init_inverse_from_field(g, 0, phi, rng);
      benchmark::DoNotOptimize(run_inverse_discrete(g, 0, st.counts(), rng, false));
    }
  }
}
BENCHMARK(BM_Inverse)
    ->ArgNames({"n", "engine"})
    ->ArgsProduct({{3, 16}, {0, 1, 2}});

void BM_CurrentOracle(benchmark::State &state) {
  GraphSpec s;
  s.vertices = {"a", "b", "c"};
  s.edges = {{"a", "b", 1.0}, {"b", "c", 1.0}, {"c", "a", 1.0}};
  GraphOptions o;
  o.allow_recurrent = true;
  const Graph g = Graph::build(s, o);
  const std::vector<double> J{0.5, 0.8, 1.1};
  const int n_max = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(current_exact(g, J, n_max));
}
BENCHMARK(BM_CurrentOracle)->Arg(20)->Arg(40);

} // namespace

BENCHMARK_MAIN();
