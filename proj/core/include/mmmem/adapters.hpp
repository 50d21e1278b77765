#pragma once
// Contracts for every model-dependent step, plus deterministic stubs.
//
// The engine never talks to a model directly. Embedding, captioning, entity
// extraction, and candidate scoring go through these interfaces, so the whole
// pipeline runs hermetically on the stubs below and unchanged against a
// remote inference server (see remote.hpp).
//
// Implementations must be safe to call concurrently.

#include <cstdint>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmmem/frame.hpp"
#include "mmmem/vector_ops.hpp"

namespace mmmem {

enum class Capability { EmbedText, EmbedVisual, Caption, ExtractEntities, ScoreCandidates, Judge };

const char* to_string(Capability c) noexcept;

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dimension() const = 0;
    virtual Embedding embed_text(std::string_view text) const = 0;
    virtual Embedding embed_visual(std::span<const Frame> window) const = 0;
    virtual bool deterministic() const = 0;
};

struct CaptionRequest {
    std::uint32_t clip_id = 0;
    std::uint32_t center_index = 0;
    std::uint64_t timestamp_ms = 0;
    std::span<const Frame> window;
};

class Captioner {
public:
    virtual ~Captioner() = default;
    virtual std::string caption(const CaptionRequest& request) const = 0;
    virtual bool deterministic() const = 0;
};

// Returns raw extraction records, one per line:
//   ENTITY<TAB>surface<TAB>gloss
//   REL<TAB>subject<TAB>label<TAB>object
class EntityExtractor {
public:
    virtual ~EntityExtractor() = default;
    virtual std::string extract(std::string_view text) const = 0;
    virtual bool deterministic() const = 0;
};

struct ScoreResult {
    std::vector<double> scores;  // one per candidate, any finite real
    std::string raw;             // verbatim remote payload; empty for stubs
};

class CandidateScorer {
public:
    virtual ~CandidateScorer() = default;
    virtual ScoreResult score(std::string_view question, std::span<const std::string> evidence,
                              std::span<const std::string> candidates) const = 0;
    virtual bool deterministic() const = 0;
};

struct AdapterSet {
    std::shared_ptr<const Embedder> embedder;
    std::shared_ptr<const Captioner> captioner;
    std::shared_ptr<const EntityExtractor> extractor;
    std::shared_ptr<const CandidateScorer> scorer;
};

struct AdapterContract {
    std::set<Capability> capabilities;
    std::size_t dimension = 0;
    bool deterministic = true;
};

AdapterContract describe(const AdapterSet& adapters);

// ---------------------------------------------------------------------------
// Stubs

// Seeded hash of the normalized input mapped to a pseudo-random unit vector.
// Components are rounded to float so snapshots store them losslessly.
class StubEmbedder final : public Embedder {
public:
    explicit StubEmbedder(std::size_t dimension = 64, std::uint64_t seed = 42);

    std::size_t dimension() const override { return dimension_; }
    Embedding embed_text(std::string_view text) const override;
    Embedding embed_visual(std::span<const Frame> window) const override;
    bool deterministic() const override { return true; }

private:
    Embedding from_hash(std::uint64_t hash) const;

    std::size_t dimension_;
    std::uint64_t seed_;
};

// "frames <first>-<last> @<timestamp>ms": no uppercase tokens, so stub
// captions never introduce entities.
class StubCaptioner final : public Captioner {
public:
    std::string caption(const CaptionRequest& request) const override;
    bool deterministic() const override { return true; }
};

// Uppercase-token convention: every all-uppercase alphabetic token of length
// >= 2 is an entity (surface = lower-cased token, gloss = "<surface>: <line>"
// for the line it occurs on). Any "ENT word ENT" run where the middle token is lower-case yields a
// relation (subject, word, object).
class StubExtractor final : public EntityExtractor {
public:
    std::string extract(std::string_view text) const override;
    bool deterministic() const override { return true; }
};

// score_i = scale * (fraction of candidate tokens found in the evidence
//                    + 1 if the candidate occurs verbatim in some evidence text).
// The question is ignored. No evidence gives all-zero scores.
class OverlapScorer final : public CandidateScorer {
public:
    explicit OverlapScorer(double scale = 4.0) : scale_(scale) {}
    ScoreResult score(std::string_view question, std::span<const std::string> evidence,
                      std::span<const std::string> candidates) const override;
    bool deterministic() const override { return true; }

private:
    double scale_;
};

// Always returns equal scores.
class UniformScorer final : public CandidateScorer {
public:
    ScoreResult score(std::string_view question, std::span<const std::string> evidence,
                      std::span<const std::string> candidates) const override;
    bool deterministic() const override { return true; }
};

AdapterSet make_stub_adapters(std::size_t dimension = 64, std::uint64_t seed = 42);

}  // namespace mmmem
