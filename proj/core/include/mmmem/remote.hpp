#pragma once
// Client for a chat-completions style inference server.
//
// Requests are HTTP POST with a UTF-8 JSON body
//   {"model": ..., "messages": [{"role": "user", "content": ...}], "temperature": ...}
// to <base_url>/chat/completions; the reply text is read from
// choices[0].message.content. Embeddings use <base_url>/embeddings with
// {"model", "input"} and read data[0].embedding.
//
// Transport failures (connection errors, timeouts, HTTP 5xx) are retried
// with exponential backoff; any other failure is reported immediately.

#include <chrono>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmmem/adapters.hpp"

namespace mmmem {

struct PromptTemplates {
    // Placeholders: {clip}, {index}, {timestamp_ms}
    std::string caption = "Describe the key sub-clip of clip {clip} centered at frame {index} ({timestamp_ms} ms) "
                          "in one sentence.";
    // Placeholder: {text}
    std::string extract =
        "Extract entities from the text below. Answer with one record per line: "
        "ENTITY<TAB>surface<TAB>gloss or REL<TAB>subject<TAB>label<TAB>object.\n\n{text}";
    // Placeholders: {question}, {evidence}, {options}, {count}
    std::string score =
        "Evidence:\n{evidence}\n\nQuestion: {question}\nOptions:\n{options}\n"
        "Return exactly {count} numbers, one relevance score per option, separated by spaces.";
    std::string answer =
        "Evidence:\n{evidence}\n\nQuestion: {question}\nOptions:\n{options}\n"
        "Respond only with the corresponding letter.";
};

struct RemoteConfig {
    std::string base_url;  // e.g. http://127.0.0.1:8000/v1
    std::string model;
    std::string api_key;
    int timeout_ms = 30000;
    int max_retries = 3;
    int backoff_ms = 200;  // first retry delay; doubles every attempt
    double temperature = 0.0;
    std::size_t max_in_flight = 4;
    PromptTemplates templates;

    void validate() const;
    // MMMEM_BASE_URL, MMMEM_API_KEY, MMMEM_MODEL
    static RemoteConfig from_env();
};

struct RemoteReply {
    std::string content;
    std::string raw_body;
    int attempts = 0;
};

class RemoteClient {
public:
    explicit RemoteClient(RemoteConfig config);
    ~RemoteClient();

    RemoteClient(const RemoteClient&) = delete;
    RemoteClient& operator=(const RemoteClient&) = delete;

    const RemoteConfig& config() const { return config_; }

    RemoteReply chat(std::string_view prompt) const;
    Embedding embed(std::string_view input, std::size_t expected_dimension) const;

private:
    RemoteReply post(const std::string& path, const std::string& body) const;

    RemoteConfig config_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    mutable std::counting_semaphore<1024> in_flight_;
};

// First standalone letter A..(A+n-1) in the reply. Throws ProtocolError when
// no such letter exists.
std::size_t parse_choice_letter(std::string_view reply, std::size_t candidate_count);

// Exactly `count` finite numbers separated by whitespace or commas.
std::vector<double> parse_scores(std::string_view reply, std::size_t count);

std::string fill_template(std::string_view tmpl, std::span<const std::pair<std::string, std::string>> values);

class RemoteEmbedder final : public Embedder {
public:
    RemoteEmbedder(std::shared_ptr<const RemoteClient> client, std::size_t dimension)
        : client_(std::move(client)), dimension_(dimension) {}
    std::size_t dimension() const override { return dimension_; }
    Embedding embed_text(std::string_view text) const override;
    // Sends a textual description of the window; real vision encoders sit
    // behind the server.
    Embedding embed_visual(std::span<const Frame> window) const override;
    bool deterministic() const override { return false; }

private:
    std::shared_ptr<const RemoteClient> client_;
    std::size_t dimension_;
};

class RemoteCaptioner final : public Captioner {
public:
    explicit RemoteCaptioner(std::shared_ptr<const RemoteClient> client) : client_(std::move(client)) {}
    std::string caption(const CaptionRequest& request) const override;
    bool deterministic() const override { return false; }

private:
    std::shared_ptr<const RemoteClient> client_;
};

class RemoteExtractor final : public EntityExtractor {
public:
    explicit RemoteExtractor(std::shared_ptr<const RemoteClient> client) : client_(std::move(client)) {}
    std::string extract(std::string_view text) const override;
    bool deterministic() const override { return false; }

private:
    std::shared_ptr<const RemoteClient> client_;
};

enum class ScoringMode {
    Scores,  // the server returns one number per candidate
    Letter,  // the server picks a letter; it gets `letter_logit`, others 0
};

class RemoteScorer final : public CandidateScorer {
public:
    RemoteScorer(std::shared_ptr<const RemoteClient> client, ScoringMode mode = ScoringMode::Scores,
                 double letter_logit = 5.0)
        : client_(std::move(client)), mode_(mode), letter_logit_(letter_logit) {}
    ScoreResult score(std::string_view question, std::span<const std::string> evidence,
                      std::span<const std::string> candidates) const override;
    bool deterministic() const override { return false; }

private:
    std::shared_ptr<const RemoteClient> client_;
    ScoringMode mode_;
    double letter_logit_;
};

}  // namespace mmmem
