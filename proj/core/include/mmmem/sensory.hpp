#pragma once
// Sensory Buffer construction: inter-frame variation, adaptive saliency
// threshold, near-duplicate suppression, and key sub-clip encoding.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmmem/adapters.hpp"
#include "mmmem/frame.hpp"
#include "mmmem/vector_ops.hpp"

namespace mmmem {

enum class DistanceMode {
    AllChannels,  // mean L1 over every pixel-channel position
    Grayscale,    // channels averaged per pixel first, then mean L1 over pixels
};

// Mean absolute difference between two frames of identical shape.
double frame_distance(const Frame& prev, const Frame& curr,
                      DistanceMode mode = DistanceMode::AllChannels);

struct SaliencyProfile {
    // distances[0] is always empty: the first frame has no predecessor.
    std::vector<std::optional<double>> distances;
    double mean_mu = 0.0;
    double std_sigma = 0.0;  // population standard deviation
    double threshold = 0.0;  // mean_mu + std_sigma
    std::vector<std::uint32_t> salient;  // { i : d_i > threshold }, ascending
};

SaliencyProfile saliency_profile(const Clip& clip, DistanceMode mode = DistanceMode::AllChannels);

struct ScoredIndex {
    std::uint32_t index = 0;
    double distance = 0.0;
};

// Greedy pass in decreasing distance (ties: ascending index); keeps an index
// only when it is at least `min_sep_frames` away from every kept index.
// Result is sorted by index.
std::vector<std::uint32_t> suppress_duplicates(std::span<const ScoredIndex> salient,
                                               std::uint32_t min_sep_frames);

struct SensoryItem {
    std::uint32_t id = 0;  // position in the buffer
    std::uint32_t clip_id = 0;
    std::uint64_t timestamp_ms = 0;  // center frame
    std::pair<std::uint32_t, std::uint32_t> window;  // inclusive frame indices within the clip
    Embedding visual;
    std::string text_trace;

    bool operator==(const SensoryItem&) const = default;
};

struct SensoryConfig {
    std::uint32_t min_sep_frames = 12;  // duplicate suppression distance
    std::uint32_t half_width = 4;       // key sub-clip spans [i - w, i + w]
    DistanceMode distance_mode = DistanceMode::AllChannels;
};

// Key frame indices for one clip after thresholding and suppression; falls
// back to the clip's center frame when nothing is salient.
std::vector<std::uint32_t> select_key_indices(const Clip& clip, const SensoryConfig& config);

// One SensoryItem per kept index, ordered by timestamp. When `subtitles` is
// given, overlapping subtitle text becomes the text trace and the captioner is
// only consulted for windows with no overlapping cue.
std::vector<SensoryItem> build_sensory_buffer(std::span<const Clip> clips, const SensoryConfig& config,
                                              const Embedder& embedder, const Captioner& captioner,
                                              const SubtitleTrack* subtitles = nullptr);

}  // namespace mmmem
