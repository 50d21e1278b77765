#include <benchmark/benchmark.h>

#include <random>

#include "mmmem/grpo.hpp"
#include "mmmem/ib.hpp"

using namespace mmmem;

namespace {

void BM_VerifyBounds(benchmark::State& state) {
    std::mt19937_64 rng(5);
    std::vector<IbInstance> batch;
    for (int i = 0; i < 64; ++i) batch.push_back(random_instance(rng));
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(verify_bounds(batch[i++ % batch.size()]));
}
BENCHMARK(BM_VerifyBounds);

void BM_GroupAdvantages(benchmark::State& state) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    std::vector<double> r(static_cast<std::size_t>(state.range(0)));
    for (auto& x : r) x = g(rng);
    for (auto _ : state) benchmark::DoNotOptimize(group_advantages(r));
}
BENCHMARK(BM_GroupAdvantages)->Arg(8)->Arg(64);

void BM_TrainToyEpochs(benchmark::State& state) {
    PolicyConfig cfg;
    cfg.epochs = static_cast<std::size_t>(state.range(0));
    ToyTrainingOptions opt;
    opt.eval_episodes = 50;
    for (auto _ : state) benchmark::DoNotOptimize(train_toy(cfg, opt, 42));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainToyEpochs)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
