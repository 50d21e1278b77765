#pragma once
// Small end-to-end pyramids built with the stub adapters.

#include <filesystem>
#include <random>
#include <string>

#include "mmmem/config.hpp"
#include "mmmem/pipeline.hpp"
#include "synthetic.hpp"

namespace mmmem::test_support {

inline std::filesystem::path fixture_dir() { return MMMEM_FIXTURE_DIR; }

// Three clips with planted cuts, subtitles on some windows, captions on the
// rest; yields every layer populated including semantic edges and merges.
inline MemoryPyramid fixture_pyramid(std::uint64_t seed = 42) {
    std::mt19937_64 rng(seed);
    std::vector<Frame> frames;
    std::uint32_t next = 0;
    for (int c = 0; c < 3; ++c) {
        auto planted = planted_cut_stream(rng, 12, {2, 2, 1});
        for (auto& f : planted.clip.frames) {
            f.index = next;
            f.timestamp_ms = 40ull * next;
            ++next;
            frames.push_back(std::move(f));
        }
    }
    // Re-segment at the generated clip boundaries is not needed; fixed
    // segmentation keeps the fixture independent of the generator.
    EngineConfig config;
    config.segment_frames = 150;
    config.embed_dim = 16;
    config.seed = seed;
    SubtitleTrack subs;
    const std::uint64_t span = 40ull * next;
    const char* lines[] = {"ALICE opens DOOR", "BOB greets ALICE", "the ROBOT lifts BOX", "ALICE opens DOOR"};
    for (std::uint64_t t = 0, i = 0; t < span; t += span / 6, ++i) {
        if (i % 2 == 0) subs.push_back({t, t + span / 12, lines[(i / 2) % 4]});
    }
    const auto clips = segment_fixed(std::move(frames), config.segment_frames);
    return build_pyramid(clips, config, make_stub_adapters(config.embed_dim, seed), &subs);
}

}  // namespace mmmem::test_support
