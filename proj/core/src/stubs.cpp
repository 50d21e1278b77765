#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_set>

#include "mmmem/adapters.hpp"
#include "mmmem/error.hpp"
#include "mmmem/text.hpp"

namespace mmmem {

const char* to_string(Capability c) noexcept {
    switch (c) {
        case Capability::EmbedText: return "EMBED_TEXT";
        case Capability::EmbedVisual: return "EMBED_VISUAL";
        case Capability::Caption: return "CAPTION";
        case Capability::ExtractEntities: return "EXTRACT_ENTITIES";
        case Capability::ScoreCandidates: return "SCORE_CANDIDATES";
        case Capability::Judge: return "JUDGE";
    }
    return "UNKNOWN";
}

AdapterContract describe(const AdapterSet& adapters) {
    AdapterContract contract;
    auto note = [&](bool det) { contract.deterministic = contract.deterministic && det; };
    if (adapters.embedder) {
        contract.capabilities.insert(Capability::EmbedText);
        contract.capabilities.insert(Capability::EmbedVisual);
        contract.dimension = adapters.embedder->dimension();
        note(adapters.embedder->deterministic());
    }
    if (adapters.captioner) {
        contract.capabilities.insert(Capability::Caption);
        note(adapters.captioner->deterministic());
    }
    if (adapters.extractor) {
        contract.capabilities.insert(Capability::ExtractEntities);
        note(adapters.extractor->deterministic());
    }
    if (adapters.scorer) {
        contract.capabilities.insert(Capability::ScoreCandidates);
        note(adapters.scorer->deterministic());
    }
    return contract;
}

// ---------------------------------------------------------------------------

StubEmbedder::StubEmbedder(std::size_t dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed) {
    if (dimension == 0) throw ContractError("StubEmbedder: dimension must be >= 1");
}

Embedding StubEmbedder::from_hash(std::uint64_t hash) const {
    std::uint64_t state = hash ^ (seed_ * 0x9e3779b97f4a7c15ULL);
    Embedding v(dimension_);
    for (std::size_t i = 0; i < dimension_; i += 2) {
        // Box-Muller; u1 in (0, 1].
        const double u1 = 1.0 - unit_double(splitmix64(state));
        const double u2 = unit_double(splitmix64(state));
        const double r = std::sqrt(-2.0 * std::log(u1));
        v[i] = r * std::cos(2.0 * std::numbers::pi * u2);
        if (i + 1 < dimension_) v[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
    }
    v = normalized(std::move(v));
    for (double& x : v) x = static_cast<double>(static_cast<float>(x));
    return v;
}

Embedding StubEmbedder::embed_text(std::string_view text) const {
    return from_hash(fnv1a64(normalize_surface(text)));
}

Embedding StubEmbedder::embed_visual(std::span<const Frame> window) const {
    std::uint64_t h = fnv1a64("visual");
    for (const Frame& f : window) {
        const std::uint32_t dims[3] = {f.shape.height, f.shape.width, f.shape.channels};
        h = fnv1a64(std::as_bytes(std::span<const std::uint32_t>(dims)), h);
        h = fnv1a64(std::as_bytes(std::span<const float>(f.values)), h);
    }
    return from_hash(h);
}

// ---------------------------------------------------------------------------

std::string StubCaptioner::caption(const CaptionRequest& request) const {
    std::ostringstream os;
    const auto first = request.window.empty() ? request.center_index : request.window.front().index;
    const auto last = request.window.empty() ? request.center_index : request.window.back().index;
    os << "frames " << first << "-" << last << " @" << request.timestamp_ms << "ms";
    return os.str();
}

// ---------------------------------------------------------------------------

namespace {

std::string strip_edges(const std::string& token) {
    std::size_t b = 0;
    std::size_t e = token.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(token[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(token[e - 1]))) --e;
    return token.substr(b, e - b);
}

bool is_entity_token(const std::string& t) {
    return t.size() >= 2 &&
           std::all_of(t.begin(), t.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

bool is_lower_word(const std::string& t) {
    return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

std::string StubExtractor::extract(std::string_view text) const {
    std::ostringstream out;
    for (const auto& raw_line : split_lines(text)) {
        std::string gloss = trim(raw_line);
        std::replace(gloss.begin(), gloss.end(), '\t', ' ');
        if (gloss.empty()) continue;

        std::vector<std::string> tokens;
        std::istringstream ws(gloss);
        for (std::string t; ws >> t;) tokens.push_back(strip_edges(t));

        std::set<std::string> seen;
        for (const auto& t : tokens) {
            if (is_entity_token(t) && seen.insert(t).second) {
                out << "ENTITY\t" << lower(t) << '\t' << lower(t) << ": " << gloss << '\n';
            }
        }
        for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
            if (is_entity_token(tokens[i]) && is_lower_word(tokens[i + 1]) && is_entity_token(tokens[i + 2])) {
                out << "REL\t" << lower(tokens[i]) << '\t' << tokens[i + 1] << '\t' << lower(tokens[i + 2]) << '\n';
            }
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------

namespace {

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

ScoreResult OverlapScorer::score(std::string_view, std::span<const std::string> evidence,
                                 std::span<const std::string> candidates) const {
    std::vector<std::vector<std::string>> evidence_tokens;
    std::unordered_set<std::string> vocabulary;
    for (const auto& e : evidence) {
        evidence_tokens.push_back(word_tokens(e));
        vocabulary.insert(evidence_tokens.back().begin(), evidence_tokens.back().end());
    }

    ScoreResult result;
    result.scores.reserve(candidates.size());
    for (const auto& cand : candidates) {
        const auto tokens = word_tokens(cand);
        double s = 0.0;
        if (!tokens.empty()) {
            const auto hits = std::count_if(tokens.begin(), tokens.end(),
                                            [&](const std::string& t) { return vocabulary.contains(t); });
            s = static_cast<double>(hits) / static_cast<double>(tokens.size());
            const bool verbatim = std::any_of(evidence_tokens.begin(), evidence_tokens.end(),
                                              [&](const auto& et) { return contains_run(et, tokens); });
            if (verbatim) s += 1.0;
        }
        result.scores.push_back(scale_ * s);
    }
    return result;
}

ScoreResult UniformScorer::score(std::string_view, std::span<const std::string>,
                                 std::span<const std::string> candidates) const {
    return ScoreResult{std::vector<double>(candidates.size(), 0.0), {}};
}

AdapterSet make_stub_adapters(std::size_t dimension, std::uint64_t seed) {
    AdapterSet set;
    set.embedder = std::make_shared<StubEmbedder>(dimension, seed);
    set.captioner = std::make_shared<StubCaptioner>();
    set.extractor = std::make_shared<StubExtractor>();
    set.scorer = std::make_shared<OverlapScorer>();
    return set;
}

}  // namespace mmmem
