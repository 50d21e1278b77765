#include "mmmem/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include <json.hpp>

#include "mmmem/error.hpp"

namespace mmmem {

const char* to_string(Layer layer) noexcept {
    switch (layer) {
        case Layer::Symbolic: return "symbolic";
        case Layer::Episodic: return "episodic";
        case Layer::Sensory: return "sensory";
    }
    return "unknown";
}

const char* to_string(StopDecision d) noexcept { return d == StopDecision::Stop ? "stop" : "continue"; }

std::string EvidenceRecord::label() const {
    switch (layer) {
        case Layer::Symbolic: return "concept:" + concept_id;
        case Layer::Episodic: return "node:" + std::to_string(ref);
        case Layer::Sensory: return "sensory:" + std::to_string(ref);
    }
    return "?";
}

void validate_query(const Query& query) {
    if (query.candidates.size() < 2) throw ContractError("query needs at least 2 candidates");
    std::set<std::string> seen(query.candidates.begin(), query.candidates.end());
    if (seen.size() != query.candidates.size()) throw ContractError("query candidates must be distinct");
}

double entropy(std::span<const double> probs) {
    if (probs.empty()) throw DomainError("entropy of an empty distribution");
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw DomainError("entropy: negative or NaN probability");
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw DomainError("entropy: probabilities sum to " + std::to_string(total));
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

std::vector<double> softmax(std::span<const double> scores) {
    if (scores.empty()) return {};
    const double mx = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.size());
    double z = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - mx);
        z += out[i];
    }
    for (double& p : out) p /= z;
    return out;
}

std::vector<std::string> evidence_texts(std::span<const EvidenceBundle> bundles) {
    std::vector<std::string> texts;
    for (const auto& b : bundles) {
        for (const auto& r : b.items) texts.push_back(r.text);
    }
    return texts;
}

namespace {

ScoreResult call_scorer(const CandidateScorer& scorer, const Query& query, std::span<const std::string> evidence) {
    ScoreResult result;
    try {
        result = scorer.score(query.question, evidence, query.candidates);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw AdapterError(std::string("candidate scorer failed: ") + e.what());
    }
    if (result.scores.size() != query.candidates.size()) {
        throw ContractError("scorer returned " + std::to_string(result.scores.size()) + " scores for " +
                            std::to_string(query.candidates.size()) + " candidates");
    }
    for (double s : result.scores) {
        if (!std::isfinite(s)) throw ContractError("scorer returned a non-finite score");
    }
    return result;
}

}  // namespace

PosteriorState initial_posterior(const Query& query, const CandidateScorer& scorer) {
    validate_query(query);
    const ScoreResult r = call_scorer(scorer, query, {});
    PosteriorState state;
    state.probs = softmax(r.scores);
    state.entropy_history.push_back(entropy(state.probs));
    state.raw_responses.push_back(r.raw);
    return state;
}

PosteriorState update_posterior(const PosteriorState& state, const Query& query, EvidenceBundle bundle,
                                const CandidateScorer& scorer, double epsilon_h) {
    if (state.entropy_history.empty()) throw ContractError("update_posterior: state not initialized");
    PosteriorState next = state;
    next.evidence.push_back(std::move(bundle));
    const auto texts = evidence_texts(next.evidence);
    const ScoreResult r = call_scorer(scorer, query, texts);
    next.probs = softmax(r.scores);
    const double h = entropy(next.probs);
    const double prev = next.entropy_history.back();
    if (next.evidence.size() >= 2) {
        next.plateau_count = (prev - h < epsilon_h) ? next.plateau_count + 1 : 0;
    } else {
        next.plateau_count = 0;
    }
    next.entropy_history.push_back(h);
    next.raw_responses.push_back(r.raw);
    return next;
}

StopDecision should_stop(const PosteriorState& state, double gamma, std::size_t patience,
                         std::size_t layers_remaining) {
    if (state.entropy_history.empty()) throw ContractError("should_stop: empty entropy history");
    if (state.entropy_history.back() <= gamma) return StopDecision::Stop;
    if (state.plateau_count >= patience) return StopDecision::Stop;
    if (layers_remaining == 0) return StopDecision::Stop;
    return StopDecision::Continue;
}

std::size_t layer_top_k(const RetrievalConfig& config, Layer layer) {
    switch (layer) {
        case Layer::Symbolic: return config.top_k_sym;
        case Layer::Episodic: return config.top_k_epi;
        case Layer::Sensory: return config.top_k_sen;
    }
    throw ContractError("unknown layer");
}

namespace {

template <class T, class Key>
void rank(std::vector<T>& items, Key key) {
    std::stable_sort(items.begin(), items.end(), [&](const T& a, const T& b) {
        if (a.score != b.score) return a.score > b.score;
        return key(a) < key(b);
    });
}

}  // namespace

EvidenceBundle retrieve_layer(Layer layer, const Query& query, const MemoryPyramid& memory, const Embedder& embedder,
                              std::size_t k, std::span<const EvidenceBundle> previous, std::size_t step_index) {
    EvidenceBundle bundle;
    bundle.layer = layer;
    bundle.step_index = step_index;
    if (k == 0) return bundle;

    switch (layer) {
        case Layer::Symbolic: {
            for (const auto& hit : query_concepts(memory.schema, query.question, embedder, k)) {
                EvidenceRecord r;
                r.layer = Layer::Symbolic;
                r.concept_id = hit.id;
                r.text = memory.schema.concepts.at(hit.id).gloss;
                r.score = hit.score;
                bundle.items.push_back(std::move(r));
            }
            return bundle;
        }
        case Layer::Episodic: {
            const auto& stream = memory.episodic.stream;
            std::set<std::uint32_t> allowed;
            for (const auto& b : previous) {
                for (const auto& r : b.items) {
                    if (r.layer != Layer::Symbolic) continue;
                    if (auto it = memory.schema.pointers.find(r.concept_id); it != memory.schema.pointers.end()) {
                        for (auto n : it->second) {
                            if (n < stream.size()) allowed.insert(n);
                        }
                    }
                }
            }
            if (stream.empty()) return bundle;
            const Embedding q = embedder.embed_text(query.question);
            std::vector<EvidenceRecord> scored;
            for (const auto& node : stream) {
                if (!allowed.empty() && !allowed.contains(node.id)) continue;
                EvidenceRecord r;
                r.layer = Layer::Episodic;
                r.ref = node.id;
                r.start_ms = node.span_ms.first;
                r.end_ms = node.span_ms.second;
                r.text = node.text;
                r.score = cosine(q, embedder.embed_text(node.text));
                scored.push_back(std::move(r));
            }
            rank(scored, [](const EvidenceRecord& r) { return r.ref; });
            if (scored.size() > k) scored.resize(k);
            bundle.items = std::move(scored);
            return bundle;
        }
        case Layer::Sensory: {
            const auto& items = memory.sensory;
            std::set<std::uint32_t> allowed;
            for (const auto& b : previous) {
                for (const auto& r : b.items) {
                    if (r.layer != Layer::Episodic || r.ref >= memory.episodic.stream.size()) continue;
                    for (auto s : memory.episodic.stream[r.ref].source_items) {
                        if (s < items.size()) allowed.insert(s);
                    }
                }
            }
            if (items.empty()) return bundle;
            const Embedding q = embedder.embed_text(query.question);
            // Clip score = max item cosine; the arg-max item represents the clip.
            std::map<std::uint32_t, EvidenceRecord> best_per_clip;
            for (const auto& item : items) {
                if (!allowed.empty() && !allowed.contains(item.id)) continue;
                const double s = cosine(q, item.visual);
                auto it = best_per_clip.find(item.clip_id);
                if (it != best_per_clip.end() && !(s > it->second.score)) continue;
                EvidenceRecord r;
                r.layer = Layer::Sensory;
                r.ref = item.id;
                r.clip_id = item.clip_id;
                r.start_ms = item.timestamp_ms;
                r.end_ms = item.timestamp_ms;
                r.text = item.text_trace;
                r.score = s;
                best_per_clip[item.clip_id] = std::move(r);
            }
            std::vector<EvidenceRecord> clips;
            for (auto& [clip, r] : best_per_clip) clips.push_back(std::move(r));
            rank(clips, [](const EvidenceRecord& r) { return r.clip_id; });
            if (clips.size() > k) clips.resize(k);
            bundle.items = std::move(clips);
            return bundle;
        }
    }
    throw ContractError("retrieve_layer: unknown layer");
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

AnswerResult answer(const Query& query, const MemoryPyramid& memory, const Embedder& embedder,
                    const CandidateScorer& scorer, const RetrievalConfig& config) {
    validate_query(query);
    AnswerResult result;
    result.posterior = initial_posterior(query, scorer);
    result.initial_entropy = result.posterior.entropy_history.front();

    constexpr std::size_t layer_count = std::size(kLayerOrder);
    for (std::size_t i = 0; i < layer_count; ++i) {
        const Layer layer = kLayerOrder[i];
        EvidenceBundle bundle = retrieve_layer(layer, query, memory, embedder, layer_top_k(config, layer),
                                               result.posterior.evidence, i + 1);
        TraceStep step;
        step.step = i + 1;
        step.layer = layer;
        for (const auto& r : bundle.items) step.item_labels.push_back(r.label());

        result.posterior = update_posterior(result.posterior, query, std::move(bundle), scorer, config.epsilon_h);
        step.probs = result.posterior.probs;
        step.entropy = result.posterior.entropy_history.back();
        step.raw = result.posterior.raw_responses.back();
        step.decision = should_stop(result.posterior, config.gamma, config.patience, layer_count - (i + 1));
        result.trace.push_back(step);
        if (step.decision == StopDecision::Stop) break;
    }

    result.index = argmax(result.posterior.probs);
    result.letter = static_cast<char>('A' + result.index);
    result.answer = query.candidates[result.index];
    return result;
}

void write_trace(std::ostream& out, const AnswerResult& result) {
    for (const auto& step : result.trace) {
        nlohmann::ordered_json j;
        j["step"] = step.step;
        j["layer"] = to_string(step.layer);
        j["items"] = step.item_labels;
        j["probs"] = step.probs;
        j["entropy"] = step.entropy;
        j["decision"] = to_string(step.decision);
        if (!step.raw.empty()) j["raw"] = step.raw;
        out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
}

}  // namespace mmmem
