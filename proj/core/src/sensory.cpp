#include "mmmem/sensory.hpp"

#include <algorithm>
#include <cmath>

#include "mmmem/error.hpp"

namespace mmmem {

double frame_distance(const Frame& prev, const Frame& curr, DistanceMode mode) {
    if (!(prev.shape == curr.shape) || prev.values.size() != curr.values.size()) {
        throw ShapeError("frame_distance: frames " + std::to_string(prev.index) + " and " +
                         std::to_string(curr.index) + " differ in shape");
    }
    if (prev.values.empty()) throw ShapeError("frame_distance: empty frames");

    double sum = 0.0;
    if (mode == DistanceMode::AllChannels) {
        for (std::size_t i = 0; i < prev.values.size(); ++i) {
            sum += std::fabs(static_cast<double>(curr.values[i]) - static_cast<double>(prev.values[i]));
        }
        return sum / static_cast<double>(prev.values.size());
    }

    const std::size_t channels = std::max<std::size_t>(1, prev.shape.channels);
    const std::size_t pixels = prev.values.size() / channels;
    for (std::size_t p = 0; p < pixels; ++p) {
        double a = 0.0;
        double b = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            a += prev.values[p * channels + c];
            b += curr.values[p * channels + c];
        }
        sum += std::fabs(b - a) / static_cast<double>(channels);
    }
    return sum / static_cast<double>(pixels);
}

SaliencyProfile saliency_profile(const Clip& clip, DistanceMode mode) {
    if (clip.frames.size() < 2) {
        throw ContractError("saliency_profile: clip " + std::to_string(clip.id) + " has fewer than 2 frames");
    }
    SaliencyProfile profile;
    profile.distances.resize(clip.frames.size());
    const std::size_t n = clip.frames.size() - 1;

    double sum = 0.0;
    for (std::size_t i = 1; i < clip.frames.size(); ++i) {
        const double d = frame_distance(clip.frames[i - 1], clip.frames[i], mode);
        profile.distances[i] = d;
        sum += d;
    }
    profile.mean_mu = sum / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 1; i < clip.frames.size(); ++i) {
        const double dev = *profile.distances[i] - profile.mean_mu;
        var += dev * dev;
    }
    profile.std_sigma = std::sqrt(var / static_cast<double>(n));
    profile.threshold = profile.mean_mu + profile.std_sigma;

    for (std::size_t i = 1; i < clip.frames.size(); ++i) {
        if (*profile.distances[i] > profile.threshold) profile.salient.push_back(static_cast<std::uint32_t>(i));
    }
    return profile;
}

std::vector<std::uint32_t> suppress_duplicates(std::span<const ScoredIndex> salient, std::uint32_t min_sep_frames) {
    if (min_sep_frames < 1) throw ContractError("suppress_duplicates: min_sep_frames must be >= 1");
    std::vector<ScoredIndex> order(salient.begin(), salient.end());
    std::stable_sort(order.begin(), order.end(), [](const ScoredIndex& a, const ScoredIndex& b) {
        if (a.distance != b.distance) return a.distance > b.distance;
        return a.index < b.index;
    });

    std::vector<std::uint32_t> kept;
    for (const auto& cand : order) {
        const bool far_enough = std::all_of(kept.begin(), kept.end(), [&](std::uint32_t k) {
            const auto gap = cand.index > k ? cand.index - k : k - cand.index;
            return gap >= min_sep_frames;
        });
        if (far_enough) kept.push_back(cand.index);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

std::vector<std::uint32_t> select_key_indices(const Clip& clip, const SensoryConfig& config) {
    if (clip.frames.empty()) throw ContractError("clip " + std::to_string(clip.id) + " has no frames");
    std::vector<std::uint32_t> kept;
    if (clip.frames.size() >= 2) {
        const SaliencyProfile profile = saliency_profile(clip, config.distance_mode);
        std::vector<ScoredIndex> scored;
        scored.reserve(profile.salient.size());
        for (auto i : profile.salient) scored.push_back({i, *profile.distances[i]});
        kept = suppress_duplicates(scored, config.min_sep_frames);
    }
    if (kept.empty()) kept.push_back(static_cast<std::uint32_t>((clip.frames.size() - 1) / 2));
    return kept;
}

std::vector<SensoryItem> build_sensory_buffer(std::span<const Clip> clips, const SensoryConfig& config,
                                              const Embedder& embedder, const Captioner& captioner,
                                              const SubtitleTrack* subtitles) {
    std::vector<SensoryItem> buffer;
    for (const Clip& clip : clips) {
        const auto keys = select_key_indices(clip, config);
        const auto last = static_cast<std::uint32_t>(clip.frames.size() - 1);
        for (std::uint32_t center : keys) {
            SensoryItem item;
            item.clip_id = clip.id;
            item.timestamp_ms = clip.frames[center].timestamp_ms;
            item.window.first = center > config.half_width ? center - config.half_width : 0;
            item.window.second = std::min(last, center + config.half_width);
            const std::span<const Frame> window(clip.frames.data() + item.window.first,
                                                item.window.second - item.window.first + 1);
            const std::string where =
                "clip " + std::to_string(clip.id) + " index " + std::to_string(center) + ": ";
            try {
                item.visual = embedder.embed_visual(window);
                if (item.visual.size() != embedder.dimension()) {
                    throw AdapterError("embedder returned dimension " + std::to_string(item.visual.size()) +
                                       ", expected " + std::to_string(embedder.dimension()));
                }
                std::optional<std::string> text;
                if (subtitles != nullptr) {
                    text = subtitle_text(*subtitles, window.front().timestamp_ms, window.back().timestamp_ms);
                }
                if (!text) {
                    text = captioner.caption(CaptionRequest{clip.id, center, item.timestamp_ms, window});
                }
                item.text_trace = std::move(*text);
            } catch (const std::exception& e) {
                throw AdapterError(where + e.what());
            }
            buffer.push_back(std::move(item));
        }
    }
    std::stable_sort(buffer.begin(), buffer.end(),
                     [](const SensoryItem& a, const SensoryItem& b) { return a.timestamp_ms < b.timestamp_ms; });
    for (std::size_t i = 0; i < buffer.size(); ++i) buffer[i].id = static_cast<std::uint32_t>(i);
    return buffer;
}

}  // namespace mmmem
