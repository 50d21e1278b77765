#include <benchmark/benchmark.h>

#include <random>

#include "mmmem/sensory.hpp"
#include "synthetic.hpp"

using namespace mmmem;

namespace {

void BM_FrameDistance(benchmark::State& state) {
    const auto side = static_cast<std::uint32_t>(state.range(0));
    const FrameShape shape{side, side, 3};
    std::mt19937_64 rng(1);
    std::vector<float> a(shape.size()), b(shape.size());
    for (auto& x : a) x = static_cast<float>(test_support::uniform(rng, 0, 255));
    for (auto& x : b) x = static_cast<float>(test_support::uniform(rng, 0, 255));
    const auto fa = test_support::make_frame(0, shape, a);
    const auto fb = test_support::make_frame(1, shape, b);
    for (auto _ : state) benchmark::DoNotOptimize(frame_distance(fa, fb));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * shape.size() * 2 * sizeof(float)));
}
BENCHMARK(BM_FrameDistance)->Arg(16)->Arg(64)->Arg(224);

void BM_SelectKeyIndices(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const auto s = test_support::planted_cut_stream(rng, 12, {16, 16, 3});
    const SensoryConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(select_key_indices(s.clip, cfg));
    state.counters["frames"] = static_cast<double>(s.clip.frames.size());
}
BENCHMARK(BM_SelectKeyIndices);

}  // namespace
