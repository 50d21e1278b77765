#include "mmmem/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>

#include "mmmem/error.hpp"
#include "mmmem/text.hpp"

namespace mmmem {

namespace {

double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(d)) {
        throw ParseError("config: " + key + " expects a number, got '" + v + "'");
    }
    return d;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
        throw ParseError("config: " + key + " expects a non-negative integer, got '" + v + "'");
    }
    return out;
}

void require(bool ok, const std::string& key, const std::string& range) {
    if (!ok) throw ParseError("config: " + key + " out of range, expected " + range);
}

struct Field {
    std::function<void(EngineConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const EngineConfig&)> get;
};

template <class T>
Field real_field(T EngineConfig::*group, double T::*member, std::function<bool(double)> ok, std::string range) {
    return {[=](EngineConfig& c, const std::string& k, const std::string& v) {
                const double d = parse_double(k, v);
                require(ok(d), k, range);
                (c.*group).*member = d;
            },
            [=](const EngineConfig& c) { return format_double((c.*group).*member); }};
}

template <class T, class U>
Field uint_field(T EngineConfig::*group, U T::*member, std::uint64_t lo, std::uint64_t hi) {
    return {[=](EngineConfig& c, const std::string& k, const std::string& v) {
                const auto n = parse_uint(k, v);
                require(n >= lo && n <= hi, k, "[" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
                (c.*group).*member = static_cast<U>(n);
            },
            [=](const EngineConfig& c) { return std::to_string((c.*group).*member); }};
}

constexpr std::uint64_t kBig = 1u << 30;

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        auto positive = [](double d) { return d > 0.0; };
        auto non_negative = [](double d) { return d >= 0.0; };
        auto cosine_range = [](double d) { return d >= -1.0 && d <= 1.0; };
        using E = EngineConfig;

        t["gamma"] = real_field(&E::retrieval, &RetrievalConfig::gamma, positive, "> 0");
        t["epsilon_h"] = real_field(&E::retrieval, &RetrievalConfig::epsilon_h, non_negative, ">= 0");
        t["patience"] = uint_field(&E::retrieval, &RetrievalConfig::patience, 1, 1000);
        t["top_k_sym"] = uint_field(&E::retrieval, &RetrievalConfig::top_k_sym, 1, 1000);
        t["top_k_epi"] = uint_field(&E::retrieval, &RetrievalConfig::top_k_epi, 1, 1000);
        t["top_k_sen"] = uint_field(&E::retrieval, &RetrievalConfig::top_k_sen, 1, 1000);

        t["min_sep_frames"] = uint_field(&E::sensory, &SensoryConfig::min_sep_frames, 0, kBig);
        t["half_width"] = uint_field(&E::sensory, &SensoryConfig::half_width, 0, kBig);
        t["distance_mode"] = {[](E& c, const std::string& k, const std::string& v) {
                                  if (v == "all") {
                                      c.sensory.distance_mode = DistanceMode::AllChannels;
                                  } else if (v == "gray") {
                                      c.sensory.distance_mode = DistanceMode::Grayscale;
                                  } else {
                                      throw ParseError("config: " + k + " must be 'all' or 'gray', got '" + v + "'");
                                  }
                              },
                              [](const E& c) {
                                  return std::string(c.sensory.distance_mode == DistanceMode::AllChannels ? "all"
                                                                                                          : "gray");
                              }};
        t["segment_frames"] = {[](E& c, const std::string& k, const std::string& v) {
                                   const auto n = parse_uint(k, v);
                                   require(n >= 1 && n <= kBig, k, ">= 1");
                                   c.segment_frames = n;
                               },
                               [](const E& c) { return std::to_string(c.segment_frames); }};
        t["theta_merge"] = real_field(&E::thresholds, &MergeThresholds::merge, cosine_range, "[-1, 1]");
        t["theta_discard"] = real_field(&E::thresholds, &MergeThresholds::discard, cosine_range, "[-1, 1]");
        t["cluster_k"] = {[](E& c, const std::string& k, const std::string& v) {
                              const auto n = parse_uint(k, v);
                              require(n <= kBig, k, "[0, 2^30]");
                              c.cluster_k = n == 0 ? std::nullopt : std::optional<std::size_t>(n);
                          },
                          [](const E& c) { return std::to_string(c.cluster_k.value_or(0)); }};
        t["schema_merge_threshold"] =
            real_field(&E::schema, &SchemaConfig::merge_threshold, cosine_range, "[-1, 1]");
        t["embed_dim"] = {[](E& c, const std::string& k, const std::string& v) {
                              const auto n = parse_uint(k, v);
                              require(n >= 1 && n <= 65536, k, "[1, 65536]");
                              c.embed_dim = n;
                          },
                          [](const E& c) { return std::to_string(c.embed_dim); }};
        t["scorer_scale"] = {[](E& c, const std::string& k, const std::string& v) {
                                 const double d = parse_double(k, v);
                                 require(d > 0.0, k, "> 0");
                                 c.scorer_scale = d;
                             },
                             [](const E& c) { return format_double(c.scorer_scale); }};

        t["beta1"] = real_field(&E::policy, &PolicyConfig::beta1, non_negative, ">= 0");
        t["beta2"] = real_field(&E::policy, &PolicyConfig::beta2, non_negative, ">= 0");
        t["clip_epsilon"] =
            real_field(&E::policy, &PolicyConfig::clip_epsilon, [](double d) { return d > 0.0 && d < 1.0; }, "(0, 1)");
        t["kl_penalty_coef"] = real_field(&E::policy, &PolicyConfig::kl_penalty_coef, non_negative, ">= 0");
        t["learning_rate"] = real_field(&E::policy, &PolicyConfig::learning_rate, positive, "> 0");
        t["group_size"] = uint_field(&E::policy, &PolicyConfig::group_size, 2, 4096);
        t["epochs"] = uint_field(&E::policy, &PolicyConfig::epochs, 0, kBig);
        t["states_per_epoch"] = uint_field(&E::policy, &PolicyConfig::states_per_epoch, 1, kBig);
        t["inner_steps"] = uint_field(&E::policy, &PolicyConfig::inner_steps, 1, 1000);

        t["toy_vocab"] = uint_field(&E::toy, &ToyTrainingOptions::vocab, 3, 256);
        t["toy_window"] = uint_field(&E::toy, &ToyTrainingOptions::window, 1, 255);
        t["toy_buckets"] = uint_field(&E::toy, &ToyTrainingOptions::buckets, 1, 4096);
        t["toy_max_length"] = uint_field(&E::toy, &ToyTrainingOptions::max_length, 1, 64);
        t["toy_eval_episodes"] = uint_field(&E::toy, &ToyTrainingOptions::eval_episodes, 1, kBig);

        t["seed"] = {[](E& c, const std::string& k, const std::string& v) { c.seed = parse_uint(k, v); },
                     [](const E& c) { return std::to_string(c.seed); }};
        return t;
    }();
    return table;
}

void check_cross_field(const EngineConfig& c) {
    if (!(c.thresholds.discard < c.thresholds.merge)) {
        throw ParseError("config: theta_discard must be below theta_merge");
    }
    if (c.toy.window > c.toy.vocab - 1) throw ParseError("config: toy_window must be at most toy_vocab - 1");
}

}  // namespace

std::map<std::string, std::string> EngineConfig::to_map() const {
    std::map<std::string, std::string> out;
    for (const auto& [k, f] : fields()) out[k] = f.get(*this);
    return out;
}

EngineConfig parse_config(std::istream& in) {
    EngineConfig c;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const auto it = fields().find(key);
        if (it == fields().end()) throw ParseError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        if (!seen.insert(key).second) {
            throw ParseError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        it->second.set(c, key, value);
    }
    check_cross_field(c);
    return c;
}

EngineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    return parse_config(in);
}

void write_config(std::ostream& out, const EngineConfig& config) {
    for (const auto& [k, v] : config.to_map()) out << k << '=' << v << '\n';
}

}  // namespace mmmem
