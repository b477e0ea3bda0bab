// Serial vs OpenMP V* solves over a batch of rewards on the damage gridworld.
#include "dspec/gridworld.hpp"
#include "dspec/kernels.hpp"

#include <benchmark/benchmark.h>

#include <map>

namespace {

using namespace dspec;

struct Batch {
  GridWorld env = build_environment(EnvKind::damage, 0.996);
  std::vector<Eigen::VectorXd> rewards;

  explicit Batch(int count) {
    Rng rng(0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < count; ++k)
      rewards.push_back(Eigen::VectorXd::NullaryExpr(env.n_states(), [&] { return u(rng); }));
  }
};

const Batch& batch(int count) {
  static std::map<int, Batch> cache;
  auto it = cache.find(count);
  if (it == cache.end()) it = cache.emplace(count, Batch(count)).first;
  return it->second;
}

void BM_OptimalValuesSerial(benchmark::State& state) {
  const Batch& b = batch(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::optimal_values_serial(b.env.mdp(), b.rewards, b.env.gamma()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_OptimalValuesParallel(benchmark::State& state) {
  const Batch& b = batch(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::optimal_values_parallel(b.env.mdp(), b.rewards, b.env.gamma()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = kernels::thread_count();
}

}  // namespace

BENCHMARK(BM_OptimalValuesSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OptimalValuesParallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
