#pragma once
// Decoded frames, clips, and aligned subtitle tracks.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mmmem {

struct FrameShape {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t channels = 0;

    std::size_t size() const {
        return static_cast<std::size_t>(height) * width * channels;
    }
    bool operator==(const FrameShape&) const = default;
};

// One decoded frame. Values are channel intensities in [0,255] for raw frame
// dumps, or arbitrary reals when the frame carries a precomputed feature
// vector (shape 1 x D x 1).
struct Frame {
    std::uint32_t index = 0;
    std::uint64_t timestamp_ms = 0;
    FrameShape shape;
    std::vector<float> values;  // row-major, channel-interleaved
};

struct Clip {
    std::uint32_t id = 0;
    std::vector<Frame> frames;
    std::uint64_t start_ms = 0;
    std::uint64_t end_ms = 0;
};

// Validates the invariants shared by every frame stream entering the engine:
// non-empty frames, one shape, strictly increasing timestamps.
void validate_stream(std::span<const Frame> frames);

// Fixed-length segmentation into clips of at most `frames_per_clip` frames.
// Frame indices are rewritten to be 0-based within each clip.
std::vector<Clip> segment_fixed(std::vector<Frame> frames, std::size_t frames_per_clip);

struct SubtitleCue {
    std::uint64_t start_ms = 0;
    std::uint64_t end_ms = 0;
    std::string text;
};

using SubtitleTrack = std::vector<SubtitleCue>;

// Text of all cues overlapping [start_ms, end_ms], joined by single spaces in
// track order. Empty optional when nothing overlaps.
std::optional<std::string> subtitle_text(const SubtitleTrack& track, std::uint64_t start_ms,
                                         std::uint64_t end_ms);

}  // namespace mmmem
