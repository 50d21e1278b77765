#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "mmmem/adapters.hpp"
#include "mmmem/episodic.hpp"
#include "mmmem/retrieval.hpp"
#include "fixtures.hpp"
#include "synthetic.hpp"

using namespace mmmem;

namespace {

void BM_ConsolidatePass(benchmark::State& state) {
    std::mt19937_64 rng(3);
    const auto buf = test_support::random_buffer(rng, static_cast<std::size_t>(state.range(0)), 64);
    const auto policy = rule_policy({});
    for (auto _ : state) benchmark::DoNotOptimize(consolidate_pass(buf, policy));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConsolidatePass)->Arg(100)->Arg(1000)->Arg(10000);

void BM_KMeansPrototypes(benchmark::State& state) {
    std::mt19937_64 rng(4);
    const auto buf = test_support::random_buffer(rng, static_cast<std::size_t>(state.range(0)), 64);
    const auto s = consolidate_pass(buf, rule_policy({}));
    for (auto _ : state) benchmark::DoNotOptimize(kmeans_prototypes(s.stream, std::nullopt, 42));
    state.counters["nodes"] = static_cast<double>(s.stream.size());
}
BENCHMARK(BM_KMeansPrototypes)->Arg(1000);

void BM_AnswerUniform(benchmark::State& state) {
    const auto pyramid = test_support::fixture_pyramid(42);
    StubEmbedder emb(16, 42);
    UniformScorer scorer;
    const Query q{"What does alice open?", {"window", "door", "car", "box"}};
    for (auto _ : state) benchmark::DoNotOptimize(answer(q, pyramid, emb, scorer));
}
BENCHMARK(BM_AnswerUniform);

void BM_Entropy(benchmark::State& state) {
    std::vector<double> p(static_cast<std::size_t>(state.range(0)), 1.0 / static_cast<double>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(entropy(p));
}
BENCHMARK(BM_Entropy)->Arg(4)->Arg(64);

}  // namespace
