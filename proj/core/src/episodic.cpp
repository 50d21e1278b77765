#include "mmmem/episodic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "mmmem/error.hpp"
#include "mmmem/text.hpp"

namespace mmmem {

const char* to_string(Action a) noexcept {
    switch (a) {
        case Action::AddNew: return "ADD_NEW";
        case Action::Merge: return "MERGE";
        case Action::Discard: return "DISCARD";
    }
    return "UNKNOWN";
}

Action parse_action(std::string_view text) {
    const std::string t = trim(text);
    if (t == "ADD_NEW") return Action::AddNew;
    if (t == "MERGE") return Action::Merge;
    if (t == "DISCARD") return Action::Discard;
    throw ParseError("unknown action '" + t + "'");
}

Action decide_rule(const SensoryItem& item, const EpisodicNode* latest, const MergeThresholds& thresholds) {
    if (latest == nullptr) return Action::AddNew;
    require_same_dim(item.visual.size(), latest->representation.size(), "decide_rule");
    const double c = cosine(item.visual, latest->representation);
    if (c >= thresholds.merge) return Action::Merge;
    if (c <= thresholds.discard) return Action::AddNew;
    return Action::Discard;
}

DecisionPolicy rule_policy(MergeThresholds thresholds) {
    return [thresholds](const SensoryItem& item, const EpisodicNode* latest) {
        return decide_rule(item, latest, thresholds);
    };
}

void apply_action(ConsolidationState& state, const SensoryItem& item, Action action) {
    switch (action) {
        case Action::AddNew: {
            EpisodicNode node;
            node.id = static_cast<std::uint32_t>(state.stream.size());
            node.representation = item.visual;
            node.text = item.text_trace;
            node.span_ms = {item.timestamp_ms, item.timestamp_ms};
            node.merged_count = 1;
            node.source_items = {item.id};
            state.stream.push_back(std::move(node));
            state.latest = static_cast<std::uint32_t>(state.stream.size() - 1);
            break;
        }
        case Action::Merge: {
            if (!state.latest) throw ContractError("MERGE with an empty episodic stream");
            EpisodicNode& node = state.stream[*state.latest];
            require_same_dim(item.visual.size(), node.representation.size(), "apply_action");
            const double n = node.merged_count;
            for (std::size_t i = 0; i < node.representation.size(); ++i) {
                node.representation[i] = (node.representation[i] * n + item.visual[i]) / (n + 1.0);
            }
            node.text += '\n';
            node.text += item.text_trace;
            node.span_ms.first = std::min(node.span_ms.first, item.timestamp_ms);
            node.span_ms.second = std::max(node.span_ms.second, item.timestamp_ms);
            node.merged_count += 1;
            node.source_items.push_back(item.id);
            break;
        }
        case Action::Discard:
            break;
    }
    state.action_log.push_back(action);
}

ConsolidationState consolidate_pass(std::span<const SensoryItem> buffer, const DecisionPolicy& policy) {
    ConsolidationState state;
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        if (i > 0 && buffer[i].timestamp_ms < buffer[i - 1].timestamp_ms) {
            throw ContractError("consolidate_pass: buffer not timestamp-ordered at item " + std::to_string(i));
        }
        Action action;
        try {
            action = policy(buffer[i], state.latest_node());
        } catch (const Error& e) {
            throw Error(e.kind(), "decision policy failed at item " + std::to_string(i) + ": " + e.what());
        } catch (const std::exception& e) {
            throw AdapterError("decision policy failed at item " + std::to_string(i) + ": " + e.what());
        }
        apply_action(state, buffer[i], action);
    }
    return state;
}

ConsolidationState replay(std::span<const SensoryItem> buffer, std::span<const Action> actions) {
    if (buffer.size() != actions.size()) {
        throw ContractError("replay: " + std::to_string(actions.size()) + " actions for " +
                            std::to_string(buffer.size()) + " items");
    }
    ConsolidationState state;
    for (std::size_t i = 0; i < buffer.size(); ++i) apply_action(state, buffer[i], actions[i]);
    return state;
}

// ---------------------------------------------------------------------------
// K-means

namespace {

std::size_t nearest(const Embedding& point, const std::vector<Embedding>& centers) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = squared_distance(point, centers[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

}  // namespace

ClusterResult kmeans_prototypes(std::span<const EpisodicNode> nodes, std::optional<std::size_t> k,
                                std::uint64_t seed, std::size_t max_iterations) {
    if (nodes.empty()) throw ContractError("kmeans_prototypes: empty stream");
    const std::size_t n = nodes.size();
    const std::size_t dim = nodes.front().representation.size();
    for (const auto& node : nodes) require_same_dim(node.representation.size(), dim, "kmeans_prototypes");

    std::size_t target = k.value_or(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))));
    target = std::clamp<std::size_t>(target, 1, n);

    // k-means++ seeding.
    std::uint64_t rng = seed;
    std::vector<Embedding> centers;
    centers.push_back(nodes[static_cast<std::size_t>(unit_double(splitmix64(rng)) * static_cast<double>(n))].representation);
    std::vector<double> d2(n);
    while (centers.size() < target) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) best = std::min(best, squared_distance(nodes[i].representation, c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) break;  // every point already coincides with a center
        const double r = unit_double(splitmix64(rng)) * total;
        double acc = 0.0;
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            acc += d2[i];
            pick = i;
            if (acc > r) break;
        }
        centers.push_back(nodes[pick].representation);
    }

    // Lloyd iterations.
    std::vector<std::size_t> assign(n, centers.size());
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = nearest(nodes[i].representation, centers);
            if (c != assign[i]) {
                assign[i] = c;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<Embedding> sums(centers.size(), Embedding(dim, 0.0));
        std::vector<std::size_t> counts(centers.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < dim; ++j) sums[assign[i]][j] += nodes[i].representation[j];
            ++counts[assign[i]];
        }
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t j = 0; j < dim; ++j) centers[c][j] = sums[c][j] / static_cast<double>(counts[c]);
        }
    }

    // Drop empty clusters, keep ascending cluster order.
    std::vector<std::size_t> remap(centers.size(), centers.size());
    ClusterResult result;
    for (std::size_t c = 0; c < centers.size(); ++c) {
        if (std::find(assign.begin(), assign.end(), c) == assign.end()) continue;
        remap[c] = result.centroids.size();
        result.centroids.push_back(centers[c]);
    }
    result.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.assignment[i] = static_cast<std::uint32_t>(remap[assign[i]]);

    for (std::size_t c = 0; c < result.centroids.size(); ++c) {
        std::size_t best = n;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (result.assignment[i] != c) continue;
            const double d = squared_distance(nodes[i].representation, result.centroids[c]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        result.prototypes.push_back(static_cast<std::uint32_t>(best));
    }
    return result;
}

std::vector<EpisodicNode> cluster_prototypes(const ConsolidationState& state, std::optional<std::size_t> k,
                                             std::uint64_t seed) {
    const ClusterResult clusters = kmeans_prototypes(state.stream, k, seed);
    std::vector<EpisodicNode> nodes = state.stream;
    for (auto& node : nodes) node.is_prototype = false;
    for (auto p : clusters.prototypes) nodes[p].is_prototype = true;
    return nodes;
}

void write_action_log(std::ostream& out, std::span<const Action> actions) {
    for (Action a : actions) out << to_string(a) << '\n';
}

std::vector<Action> read_action_log(std::istream& in) {
    std::vector<Action> actions;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            actions.push_back(parse_action(line));
        } catch (const ParseError& e) {
            throw ParseError("action log line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return actions;
}

}  // namespace mmmem
