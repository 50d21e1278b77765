#include "mmmem/remote.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mmmem/error.hpp"
#include "mmmem/text.hpp"

namespace mmmem {

using nlohmann::json;

namespace {

class SemaphoreGuard {
public:
    explicit SemaphoreGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
    ~SemaphoreGuard() { s_.release(); }
    SemaphoreGuard(const SemaphoreGuard&) = delete;
    SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

private:
    std::counting_semaphore<1024>& s_;
};

std::pair<std::string, std::string> split_base_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    std::string host = path_start == std::string::npos ? url : url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? std::string() : url.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {host, path};
}

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

std::string numbered_options(std::span<const std::string> candidates) {
    std::string out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        out += static_cast<char>('A' + i);
        out += ". " + candidates[i] + "\n";
    }
    return out;
}

std::string joined_evidence(std::span<const std::string> evidence) {
    if (evidence.empty()) return "(none)";
    std::string out;
    for (const auto& e : evidence) out += "- " + e + "\n";
    return out;
}

}  // namespace

void RemoteConfig::validate() const {
    if (base_url.empty()) throw ContractError("remote: base URL is empty (set MMMEM_BASE_URL)");
    if (base_url.rfind("http://", 0) != 0) {
        throw ContractError("remote: only plain http:// base URLs are supported, got '" + base_url + "'");
    }
    if (model.empty()) throw ContractError("remote: model is empty (set MMMEM_MODEL)");
    if (timeout_ms <= 0 || max_retries < 0 || backoff_ms < 0) throw ContractError("remote: bad timeout/retry settings");
    if (max_in_flight < 1 || max_in_flight > 1024) throw ContractError("remote: max_in_flight must be in [1, 1024]");
}

RemoteConfig RemoteConfig::from_env() {
    RemoteConfig c;
    c.base_url = env_or_empty("MMMEM_BASE_URL");
    c.api_key = env_or_empty("MMMEM_API_KEY");
    c.model = env_or_empty("MMMEM_MODEL");
    return c;
}

RemoteClient::RemoteClient(RemoteConfig config)
    : config_(std::move(config)), in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_in_flight))) {
    config_.validate();
    std::tie(scheme_host_port_, path_prefix_) = split_base_url(config_.base_url);
}

RemoteClient::~RemoteClient() = default;

RemoteReply RemoteClient::post(const std::string& path, const std::string& body) const {
    SemaphoreGuard guard(in_flight_);
    const std::string target = path_prefix_ + path;
    std::string last_error;
    const int attempts = config_.max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            const auto delay = std::chrono::milliseconds(static_cast<long long>(config_.backoff_ms) << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        httplib::Client cli(scheme_host_port_);
        const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
        cli.set_connection_timeout(timeout);
        cli.set_read_timeout(timeout);
        cli.set_write_timeout(timeout);
        httplib::Headers headers;
        if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
        auto res = cli.Post(target, headers, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw AdapterError("remote " + target + ": HTTP " + std::to_string(res->status) + ": " +
                               res->body.substr(0, 200));
        }
        return {std::string(), res->body, attempt + 1};
    }
    throw TransportError("remote " + scheme_host_port_ + target + ": giving up after " + std::to_string(attempts) +
                         " attempt(s): " + last_error);
}

RemoteReply RemoteClient::chat(std::string_view prompt) const {
    json body;
    body["model"] = config_.model;
    body["messages"] = json::array({{{"role", "user"}, {"content", std::string(prompt)}}});
    body["temperature"] = config_.temperature;
    RemoteReply reply = post("/chat/completions", body.dump());
    try {
        const auto j = json::parse(reply.raw_body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw ProtocolError("remote: message content is not a string", reply.raw_body);
        reply.content = content.get<std::string>();
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("remote: unexpected chat response: ") + e.what(), reply.raw_body);
    }
    return reply;
}

Embedding RemoteClient::embed(std::string_view input, std::size_t expected_dimension) const {
    json body;
    body["model"] = config_.model;
    body["input"] = std::string(input);
    const RemoteReply reply = post("/embeddings", body.dump());
    Embedding e;
    try {
        const auto j = json::parse(reply.raw_body);
        e = j.at("data").at(0).at("embedding").get<Embedding>();
    } catch (const json::exception& ex) {
        throw ProtocolError(std::string("remote: unexpected embedding response: ") + ex.what(), reply.raw_body);
    }
    if (e.size() != expected_dimension) {
        throw ProtocolError("remote: embedding has dimension " + std::to_string(e.size()) + ", expected " +
                                std::to_string(expected_dimension),
                            reply.raw_body);
    }
    for (double v : e) {
        if (!std::isfinite(v)) throw ProtocolError("remote: non-finite embedding value", reply.raw_body);
    }
    return e;
}

std::size_t parse_choice_letter(std::string_view reply, std::size_t candidate_count) {
    auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    for (std::size_t i = 0; i < reply.size(); ++i) {
        const char c = reply[i];
        if (c < 'A' || c >= static_cast<char>('A' + std::min<std::size_t>(candidate_count, 26))) continue;
        const bool left_ok = i == 0 || !is_word(reply[i - 1]);
        const bool right_ok = i + 1 == reply.size() || !is_word(reply[i + 1]);
        if (left_ok && right_ok) return static_cast<std::size_t>(c - 'A');
    }
    throw ProtocolError("no answer letter in reply", std::string(reply));
}

std::vector<double> parse_scores(std::string_view reply, std::size_t count) {
    std::string text(reply);
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream in(text);
    std::vector<double> scores;
    std::string tok;
    while (in >> tok) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size() || !std::isfinite(v)) {
            throw ProtocolError("reply token '" + tok + "' is not a finite number", std::string(reply));
        }
        scores.push_back(v);
    }
    if (scores.size() != count) {
        throw ProtocolError("expected " + std::to_string(count) + " scores, got " + std::to_string(scores.size()),
                            std::string(reply));
    }
    return scores;
}

std::string fill_template(std::string_view tmpl, std::span<const std::pair<std::string, std::string>> values) {
    std::string out(tmpl);
    for (const auto& [key, value] : values) {
        const std::string needle = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = out.find(needle, pos)) != std::string::npos) {
            out.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return out;
}

Embedding RemoteEmbedder::embed_text(std::string_view text) const { return client_->embed(text, dimension_); }

Embedding RemoteEmbedder::embed_visual(std::span<const Frame> window) const {
    if (window.empty()) throw ContractError("embed_visual: empty window");
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& f : window) {
        sum = std::accumulate(f.values.begin(), f.values.end(), sum);
        n += f.values.size();
    }
    const auto& s = window.front().shape;
    std::ostringstream d;
    d << "visual window of " << window.size() << " frames, shape " << s.height << "x" << s.width << "x" << s.channels << ", "
      << window.front().timestamp_ms << "-" << window.back().timestamp_ms << " ms, mean intensity "
      << format_double(n ? sum / static_cast<double>(n) : 0.0);
    return client_->embed(d.str(), dimension_);
}

std::string RemoteCaptioner::caption(const CaptionRequest& request) const {
    const std::pair<std::string, std::string> values[] = {
        {"clip", std::to_string(request.clip_id)},
        {"index", std::to_string(request.center_index)},
        {"timestamp_ms", std::to_string(request.timestamp_ms)},
    };
    const RemoteReply r = client_->chat(fill_template(client_->config().templates.caption, values));
    std::string text = trim(r.content);
    if (text.empty()) throw ProtocolError("remote: empty caption", r.raw_body);
    return text;
}

std::string RemoteExtractor::extract(std::string_view text) const {
    const std::pair<std::string, std::string> values[] = {{"text", std::string(text)}};
    return client_->chat(fill_template(client_->config().templates.extract, values)).content;
}

ScoreResult RemoteScorer::score(std::string_view question, std::span<const std::string> evidence,
                                std::span<const std::string> candidates) const {
    const std::pair<std::string, std::string> values[] = {
        {"question", std::string(question)},
        {"evidence", joined_evidence(evidence)},
        {"options", numbered_options(candidates)},
        {"count", std::to_string(candidates.size())},
    };
    const auto& t = client_->config().templates;
    ScoreResult result;
    if (mode_ == ScoringMode::Scores) {
        const RemoteReply r = client_->chat(fill_template(t.score, values));
        result.scores = parse_scores(r.content, candidates.size());
        result.raw = r.raw_body;
    } else {
        const RemoteReply r = client_->chat(fill_template(t.answer, values));
        result.scores.assign(candidates.size(), 0.0);
        result.scores[parse_choice_letter(r.content, candidates.size())] = letter_logit_;
        result.raw = r.raw_body;
    }
    return result;
}

}  // namespace mmmem
