#pragma once
// Entropy-gated top-down retrieval.
//
// A question walks the pyramid from the symbolic layer down to the sensory
// layer. After each layer the answer posterior is recomputed from all
// evidence gathered so far; the walk stops as soon as the posterior entropy
// drops to gamma, stops improving for `patience` steps, or the layers run out.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmmem/adapters.hpp"
#include "mmmem/pyramid.hpp"

namespace mmmem {

enum class Layer : std::uint8_t { Symbolic, Episodic, Sensory };

const char* to_string(Layer layer) noexcept;

inline constexpr Layer kLayerOrder[] = {Layer::Symbolic, Layer::Episodic, Layer::Sensory};

struct Query {
    std::string question;
    std::vector<std::string> candidates;  // N >= 2, distinct
};

void validate_query(const Query& query);

struct EvidenceRecord {
    Layer layer = Layer::Symbolic;
    std::string concept_id;  // symbolic records
    std::uint32_t ref = 0;   // node id (episodic) or sensory item id (sensory)
    std::uint32_t clip_id = 0;
    std::uint64_t start_ms = 0;
    std::uint64_t end_ms = 0;
    std::string text;
    double score = 0.0;

    // "concept:<id>", "node:<n>", or "sensory:<n>"
    std::string label() const;
};

struct EvidenceBundle {
    Layer layer = Layer::Symbolic;
    std::size_t step_index = 0;
    std::vector<EvidenceRecord> items;
};

struct PosteriorState {
    std::vector<double> probs;
    std::vector<double> entropy_history;  // nats; H_0 is the zero-evidence posterior
    std::vector<EvidenceBundle> evidence;
    std::size_t plateau_count = 0;
    std::vector<std::string> raw_responses;  // one per scorer call, verbatim
};

struct RetrievalConfig {
    double gamma = 0.72;       // stop once H <= gamma (nats)
    double epsilon_h = 0.01;   // minimum useful entropy reduction
    std::size_t patience = 2;  // consecutive small reductions tolerated
    std::size_t top_k_sym = 5;
    std::size_t top_k_epi = 2;
    std::size_t top_k_sen = 1;
};

// Natural-log Shannon entropy with 0 log 0 = 0. Throws DomainError on a
// negative entry or a total mass off by more than 1e-9.
double entropy(std::span<const double> probs);

std::vector<double> softmax(std::span<const double> scores);

// Texts handed to the scorer: every record of every bundle, in order.
std::vector<std::string> evidence_texts(std::span<const EvidenceBundle> bundles);

// Zero-evidence posterior (H_0).
PosteriorState initial_posterior(const Query& query, const CandidateScorer& scorer);

// Appends the bundle, rescores with all evidence, and updates the plateau
// counter. The counter only tracks reductions between two evidence-bearing
// steps; the first retrieval step is measured against the zero-evidence
// prior and never counts towards a plateau.
PosteriorState update_posterior(const PosteriorState& state, const Query& query, EvidenceBundle bundle,
                                const CandidateScorer& scorer, double epsilon_h);

enum class StopDecision : std::uint8_t { Stop, Continue };

const char* to_string(StopDecision d) noexcept;

StopDecision should_stop(const PosteriorState& state, double gamma, std::size_t patience,
                         std::size_t layers_remaining);

std::size_t layer_top_k(const RetrievalConfig& config, Layer layer);

// Retrieves one layer. Episodic candidates are restricted to the pointers of
// concepts already retrieved, sensory candidates to the source items of nodes
// already retrieved; either restriction falls back to the whole layer when it
// would be empty.
EvidenceBundle retrieve_layer(Layer layer, const Query& query, const MemoryPyramid& memory,
                              const Embedder& embedder, std::size_t k,
                              std::span<const EvidenceBundle> previous, std::size_t step_index = 0);

struct TraceStep {
    std::size_t step = 0;
    Layer layer = Layer::Symbolic;
    std::vector<std::string> item_labels;
    std::vector<double> probs;
    double entropy = 0.0;
    StopDecision decision = StopDecision::Continue;
    std::string raw;
};

struct AnswerResult {
    std::size_t index = 0;
    char letter = 'A';
    std::string answer;
    PosteriorState posterior;
    double initial_entropy = 0.0;
    std::vector<TraceStep> trace;
};

// argmax with lowest-index tie-break.
std::size_t argmax(std::span<const double> values);

AnswerResult answer(const Query& query, const MemoryPyramid& memory, const Embedder& embedder,
                    const CandidateScorer& scorer, const RetrievalConfig& config = {});

// One JSON record per retrieval step:
//   {"step","layer","items","probs","entropy","decision"[,"raw"]}
void write_trace(std::ostream& out, const AnswerResult& result);

}  // namespace mmmem
