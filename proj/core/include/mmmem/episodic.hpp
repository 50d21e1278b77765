#pragma once
// Episodic Stream: a single chronological pass over the Sensory Buffer that
// applies ADD_NEW / MERGE / DISCARD against the latest node, followed by
// K-means prototype selection.
//
// The stream is a pure function of (buffer, action sequence): apply_action is
// the only place that mutates it, and replay() re-derives a stream from a
// recorded action log.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmmem/sensory.hpp"

namespace mmmem {

enum class Action : std::uint8_t { AddNew, Merge, Discard };

const char* to_string(Action a) noexcept;
Action parse_action(std::string_view text);

struct EpisodicNode {
    std::uint32_t id = 0;  // position in the stream
    Embedding representation;  // mean of the source items' visuals
    std::string text;          // source text traces joined by '\n'
    std::pair<std::uint64_t, std::uint64_t> span_ms;
    std::uint32_t merged_count = 1;
    std::vector<std::uint32_t> source_items;  // sensory item ids
    bool is_prototype = false;

    bool operator==(const EpisodicNode&) const = default;
};

struct ConsolidationState {
    std::vector<EpisodicNode> stream;
    std::optional<std::uint32_t> latest;  // node touched by the last ADD_NEW/MERGE
    std::vector<Action> action_log;

    const EpisodicNode* latest_node() const {
        return latest ? &stream[*latest] : nullptr;
    }
    bool operator==(const ConsolidationState&) const = default;
};

struct MergeThresholds {
    double merge = 0.85;    // cosine >= merge   -> MERGE
    double discard = 0.30;  // cosine <= discard -> ADD_NEW; in between -> DISCARD
};

// Rule-based decision operator comparing the item only against the latest node.
Action decide_rule(const SensoryItem& item, const EpisodicNode* latest, const MergeThresholds& thresholds);

// Decision function over (item, latest node or null).
using DecisionPolicy = std::function<Action(const SensoryItem&, const EpisodicNode*)>;

DecisionPolicy rule_policy(MergeThresholds thresholds);

void apply_action(ConsolidationState& state, const SensoryItem& item, Action action);

ConsolidationState consolidate_pass(std::span<const SensoryItem> buffer, const DecisionPolicy& policy);

// Re-applies a recorded action log over the same buffer.
ConsolidationState replay(std::span<const SensoryItem> buffer, std::span<const Action> actions);

struct ClusterResult {
    std::vector<std::uint32_t> assignment;    // cluster per node
    std::vector<Embedding> centroids;         // effective clusters only
    std::vector<std::uint32_t> prototypes;    // node id per cluster, ascending cluster index
};

// K-means over node representations with seeded k-means++ initialization.
// k defaults to ceil(sqrt(n)) and is clamped to [1, n]; seeding stops early
// when every remaining point coincides with a chosen center.
ClusterResult kmeans_prototypes(std::span<const EpisodicNode> nodes, std::optional<std::size_t> k,
                                std::uint64_t seed, std::size_t max_iterations = 100);

// Copy of the stream with is_prototype set on one node per cluster.
std::vector<EpisodicNode> cluster_prototypes(const ConsolidationState& state, std::optional<std::size_t> k,
                                             std::uint64_t seed = 42);

void write_action_log(std::ostream& out, std::span<const Action> actions);
std::vector<Action> read_action_log(std::istream& in);

}  // namespace mmmem
