#include "mmmem/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>

#include <json.hpp>

#include "binary_io.hpp"
#include "mmmem/error.hpp"
#include "mmmem/text.hpp"

namespace mmmem {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr double kAdvantageEps = 1e-8;

double uniform01(std::mt19937_64& rng) { return unit_double(rng()); }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

}  // namespace

void PolicyConfig::validate() const {
    if (group_size < 2) throw ContractError("group_size must be >= 2, got " + std::to_string(group_size));
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ContractError("clip_epsilon must be in (0, 1)");
    if (beta1 < 0.0 || beta2 < 0.0) throw ContractError("beta1 and beta2 must be >= 0");
    if (!(learning_rate > 0.0)) throw ContractError("learning_rate must be > 0");
    if (states_per_epoch == 0 || inner_steps == 0) throw ContractError("states_per_epoch and inner_steps must be >= 1");
}

RewardBreakdown trace_reward(const TraceSample& sample, const TraceJudge& judge, const PolicyConfig& config) {
    RewardBreakdown r;
    try {
        r.task = judge.task_reward(sample);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw AdapterError(std::string("judge failed: ") + e.what());
    }
    r.length_penalty = config.beta1 * static_cast<double>(sample.tokens.size());
    r.ratio_penalty = config.beta2 * (sample.logprob_behavior - sample.logprob_reference);
    r.total = r.task - r.length_penalty - r.ratio_penalty;
    return r;
}

std::vector<double> group_advantages(std::span<const double> rewards) {
    if (rewards.size() < 2) throw ContractError("group_advantages: group size must be >= 2");
    const double n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / n);
    std::vector<double> adv(rewards.size(), 0.0);
    if (sd == 0.0) return adv;
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / (sd + kAdvantageEps);
    return adv;
}

namespace {

double ratio_of(const TraceSample& s, std::size_t i) {
    const double rho = std::exp(s.logprob_current - s.logprob_behavior);
    if (!std::isfinite(rho)) throw NumericError("non-finite importance ratio for sample " + std::to_string(i));
    return rho;
}

void check_sizes(std::span<const TraceSample> samples, std::span<const double> advantages) {
    if (samples.size() != advantages.size()) throw ContractError("samples and advantages differ in length");
    if (samples.empty()) throw ContractError("empty group");
}

}  // namespace

double clipped_objective(std::span<const TraceSample> samples, std::span<const double> advantages,
                         double clip_epsilon) {
    check_sizes(samples, advantages);
    double sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double rho = ratio_of(samples[i], i);
        const double clipped = std::clamp(rho, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
        sum += std::min(rho * advantages[i], clipped * advantages[i]);
    }
    return sum / static_cast<double>(samples.size());
}

std::vector<double> clipped_objective_weights(std::span<const TraceSample> samples,
                                              std::span<const double> advantages, double clip_epsilon) {
    check_sizes(samples, advantages);
    std::vector<double> w(samples.size(), 0.0);
    const double g = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double rho = ratio_of(samples[i], i);
        const double a = advantages[i];
        const bool unclipped = (a >= 0.0) ? rho <= 1.0 + clip_epsilon : rho >= 1.0 - clip_epsilon;
        if (unclipped) w[i] = rho * a / g;
    }
    return w;
}

// ---------------------------------------------------------------------------
// ToyPolicy

namespace {

constexpr std::size_t kMaxContexts = std::size_t{1} << 20;

// Rows are laid out level by level: the empty prefix, then the V-1 one-token
// prefixes, and so on.
std::size_t context_of(std::span<const int> prefix, std::uint32_t vocab) {
    const std::size_t branch = vocab - 1;
    std::size_t level_start = 0;
    std::size_t level_size = 1;
    std::size_t within = 0;
    for (int tok : prefix) {
        level_start += level_size;
        level_size *= branch;
        within = within * branch + static_cast<std::size_t>(tok - 1);
    }
    return level_start + within;
}

}  // namespace

ToyPolicy::ToyPolicy(std::uint32_t vocab, std::uint32_t buckets, std::uint32_t max_length)
    : vocab_(vocab), buckets_(buckets), max_length_(max_length), contexts_(0) {
    if (vocab < 2) throw ContractError("ToyPolicy: vocab must be >= 2 (STOP plus one token)");
    if (buckets < 1) throw ContractError("ToyPolicy: buckets must be >= 1");
    if (max_length < 1) throw ContractError("ToyPolicy: max_length must be >= 1");
    std::size_t level = 1;
    for (std::uint32_t t = 0; t < max_length; ++t) {
        contexts_ += level;
        if (contexts_ > kMaxContexts) throw ContractError("ToyPolicy: vocab^max_length too large for a tabular policy");
        level *= vocab - 1;
    }
    if (contexts_ * vocab * buckets > 16 * kMaxContexts) throw ContractError("ToyPolicy: parameter table too large");
    params_.assign(static_cast<std::size_t>(buckets) * contexts_ * vocab, 0.0);
}

std::size_t ToyPolicy::row_offset(std::uint32_t bucket, std::size_t context) const {
    return (static_cast<std::size_t>(bucket) * contexts_ + context) * vocab_;
}

void ToyPolicy::check_token(int token) const {
    if (token <= kStopToken || token >= static_cast<int>(vocab_)) {
        throw ContractError("token " + std::to_string(token) + " is outside the toy vocabulary");
    }
}

std::vector<double> ToyPolicy::row_distribution(std::size_t off) const {
    const auto row = std::span<const double>(params_).subspan(off, vocab_);
    const double mx = *std::max_element(row.begin(), row.end());
    std::vector<double> p(vocab_);
    double z = 0.0;
    for (std::uint32_t j = 0; j < vocab_; ++j) {
        p[j] = std::exp(row[j] - mx);
        z += p[j];
    }
    for (double& x : p) x /= z;
    return p;
}

std::vector<double> ToyPolicy::next_distribution(std::uint32_t bucket, std::span<const int> prefix) const {
    if (bucket >= buckets_) throw ContractError("bucket out of range");
    if (prefix.size() >= max_length_) throw ContractError("prefix has no successor row");
    for (int tok : prefix) check_token(tok);
    return row_distribution(row_offset(bucket, context_of(prefix, vocab_)));
}

double ToyPolicy::logprob(const ToyState& state, std::span<const int> trace) const {
    if (trace.size() > max_length_) throw ContractError("trace longer than max_length");
    for (int tok : trace) check_token(tok);
    const std::uint32_t b = bucket(state);
    double lp = 0.0;
    for (std::size_t t = 0; t < trace.size(); ++t) {
        lp += std::log(row_distribution(row_offset(b, context_of(trace.first(t), vocab_)))[static_cast<std::size_t>(trace[t])]);
    }
    if (trace.size() < max_length_) lp += std::log(row_distribution(row_offset(b, context_of(trace, vocab_)))[kStopToken]);
    return lp;
}

void ToyPolicy::accumulate_logprob_gradient(const ToyState& state, std::span<const int> trace, double scale,
                                            std::span<double> grad) const {
    if (grad.size() != params_.size()) throw ShapeError("gradient buffer size mismatch");
    if (trace.size() > max_length_) throw ContractError("trace longer than max_length");
    for (int tok : trace) check_token(tok);
    const std::uint32_t b = bucket(state);
    auto step = [&](std::span<const int> prefix, int target) {
        const std::size_t off = row_offset(b, context_of(prefix, vocab_));
        const auto p = row_distribution(off);
        for (std::uint32_t j = 0; j < vocab_; ++j) {
            grad[off + j] += scale * ((static_cast<int>(j) == target ? 1.0 : 0.0) - p[j]);
        }
    };
    for (std::size_t t = 0; t < trace.size(); ++t) step(trace.first(t), trace[t]);
    if (trace.size() < max_length_) step(trace, kStopToken);
}

std::vector<int> ToyPolicy::sample(const ToyState& state, std::mt19937_64& rng) const {
    const std::uint32_t b = bucket(state);
    std::vector<int> trace;
    while (trace.size() < max_length_) {
        const auto p = row_distribution(row_offset(b, context_of(trace, vocab_)));
        const double u = uniform01(rng);
        double acc = 0.0;
        int pick = static_cast<int>(vocab_) - 1;
        for (std::uint32_t j = 0; j < vocab_; ++j) {
            acc += p[j];
            if (u < acc) {
                pick = static_cast<int>(j);
                break;
            }
        }
        if (pick == kStopToken) break;
        trace.push_back(pick);
    }
    return trace;
}

void ToyPolicy::randomize(std::uint64_t seed, double scale) {
    std::uint64_t s = seed;
    for (double& p : params_) p = scale * (2.0 * unit_double(splitmix64(s)) - 1.0);
}

void save_checkpoint(const std::filesystem::path& path, const ToyPolicy& policy) {
    detail::ByteWriter w;
    w.magic("MMPO");
    w.u32(kCheckpointVersion);
    w.u32(policy.vocab());
    w.u32(policy.buckets());
    for (double p : policy.parameters()) w.f32(static_cast<float>(p));
    detail::write_file_atomic(path, w.buffer());
}

ToyPolicy load_checkpoint(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    detail::ByteReader r(bytes);
    const std::string name = path.string();
    if (!r.magic("MMPO")) throw CorruptionError(name + ": bad checkpoint magic");
    const auto version = r.u32();
    const auto vocab = r.u32();
    const auto buckets = r.u32();
    if (!r.ok()) throw CorruptionError(name + ": truncated checkpoint header");
    if (version != kCheckpointVersion) throw CorruptionError(name + ": unsupported checkpoint version");
    if (vocab < 2 || buckets < 1 || r.remaining() % 4 != 0) throw CorruptionError(name + ": implausible checkpoint header");
    // The table size fixes max_length: contexts = sum_{t < L} (vocab - 1)^t.
    const std::size_t rows = r.remaining() / 4;
    const std::size_t per_bucket = static_cast<std::size_t>(buckets) * vocab;
    if (rows % per_bucket != 0) throw CorruptionError(name + ": parameter payload size mismatch");
    const std::size_t contexts = rows / per_bucket;
    std::uint32_t max_length = 0;
    std::size_t total = 0, level = 1;
    while (total < contexts && total <= kMaxContexts) {
        total += level;
        level *= vocab - 1;
        ++max_length;
    }
    if (total != contexts || max_length == 0) throw CorruptionError(name + ": parameter payload size mismatch");
    std::optional<ToyPolicy> policy;
    try {
        policy.emplace(vocab, buckets, max_length);
    } catch (const ContractError& e) {
        throw CorruptionError(name + ": implausible checkpoint header: " + e.what());
    }
    for (double& p : policy->parameters()) p = r.f32();
    return std::move(*policy);
}

// ---------------------------------------------------------------------------
// Planted-keyword task

PlantedKeywordTask::PlantedKeywordTask(std::uint32_t vocab, std::uint32_t window) : vocab_(vocab), window_(window) {
    if (vocab < 3) throw ContractError("PlantedKeywordTask: vocab must be >= 3");
    if (window < 1 || window > vocab - 1) throw ContractError("PlantedKeywordTask: window must be in [1, vocab-1]");
}

ToyState PlantedKeywordTask::draw(std::mt19937_64& rng) const {
    ToyState s;
    const std::size_t content = vocab_ - 1;
    s.keyword = 1 + static_cast<int>(uniform_index(rng, content));
    std::vector<int> pool;
    for (int t = 1; t < static_cast<int>(vocab_); ++t) {
        if (t != s.keyword) pool.push_back(t);
    }
    s.window.push_back(s.keyword);
    for (std::uint32_t i = 1; i < window_; ++i) {
        const std::size_t j = uniform_index(rng, pool.size());
        s.window.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    for (std::size_t i = s.window.size(); i > 1; --i) std::swap(s.window[i - 1], s.window[uniform_index(rng, i)]);
    s.memory_token = 1 + static_cast<int>(uniform_index(rng, content));
    s.feature = static_cast<std::uint64_t>(s.keyword);
    return s;
}

double KeywordJudge::task_reward(const TraceSample& sample) const {
    const auto& t = sample.tokens;
    return std::find(t.begin(), t.end(), sample.state.keyword) != t.end() ? 1.0 : 0.0;
}

// ---------------------------------------------------------------------------
// Surrogate and its gradient

double surrogate_objective(const ToyPolicy& policy, std::vector<GroupBatch>& batches, double clip_epsilon) {
    if (batches.empty()) throw ContractError("surrogate_objective: no batches");
    double total = 0.0;
    for (auto& b : batches) {
        for (auto& s : b.samples) s.logprob_current = policy.logprob(s.state, s.tokens);
        total += clipped_objective(b.samples, b.advantages, clip_epsilon);
    }
    return total / static_cast<double>(batches.size());
}

std::vector<double> surrogate_gradient(const ToyPolicy& policy, std::vector<GroupBatch>& batches,
                                       double clip_epsilon) {
    if (batches.empty()) throw ContractError("surrogate_gradient: no batches");
    std::vector<double> grad(policy.parameters().size(), 0.0);
    const double nb = static_cast<double>(batches.size());
    for (auto& b : batches) {
        for (auto& s : b.samples) s.logprob_current = policy.logprob(s.state, s.tokens);
        const auto w = clipped_objective_weights(b.samples, b.advantages, clip_epsilon);
        for (std::size_t i = 0; i < b.samples.size(); ++i) {
            if (w[i] == 0.0) continue;
            policy.accumulate_logprob_gradient(b.samples[i].state, b.samples[i].tokens, w[i] / nb, grad);
        }
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Trainer

PolicyEvaluation evaluate_policy(const ToyPolicy& policy, const PlantedKeywordTask& task, const TraceJudge& judge,
                                 std::size_t episodes, std::uint64_t seed) {
    PolicyEvaluation ev;
    ev.episodes = episodes;
    if (episodes == 0) return ev;
    std::mt19937_64 rng(seed);
    for (std::size_t e = 0; e < episodes; ++e) {
        TraceSample s;
        s.state = task.draw(rng);
        s.tokens = policy.sample(s.state, rng);
        ev.mean_task_reward += judge.task_reward(s);
        ev.mean_length += static_cast<double>(s.tokens.size());
    }
    ev.mean_task_reward /= static_cast<double>(episodes);
    ev.mean_length /= static_cast<double>(episodes);
    return ev;
}

TrainingReport train_toy(const PolicyConfig& config, const ToyTrainingOptions& options, std::uint64_t seed) {
    config.validate();
    const PlantedKeywordTask task(options.vocab, options.window);
    const KeywordJudge judge;
    TrainingReport report{{}, {}, {}, ToyPolicy(options.vocab, options.buckets, options.max_length)};
    ToyPolicy& policy = report.policy;
    const ToyPolicy reference = policy;
    const std::uint64_t eval_seed = seed ^ 0x5eed5eed5eed5eedULL;
    report.initial = evaluate_policy(policy, task, judge, options.eval_episodes, eval_seed);

    std::mt19937_64 rng(seed);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const ToyPolicy behavior = policy;
        std::vector<GroupBatch> batches;
        EpochRecord rec;
        rec.epoch = epoch;
        std::size_t count = 0;
        for (std::size_t k = 0; k < config.states_per_epoch; ++k) {
            GroupBatch batch;
            batch.state = task.draw(rng);
            for (std::size_t g = 0; g < config.group_size; ++g) {
                TraceSample s;
                s.state = batch.state;
                s.tokens = behavior.sample(s.state, rng);
                s.logprob_behavior = behavior.logprob(s.state, s.tokens);
                s.logprob_reference = reference.logprob(s.state, s.tokens);
                s.logprob_current = s.logprob_behavior;
                const RewardBreakdown r = trace_reward(s, judge, config);
                batch.rewards.push_back(r.total);
                rec.mean_reward += r.total;
                rec.mean_task_reward += r.task;
                rec.mean_length += static_cast<double>(s.tokens.size());
                ++count;
                batch.samples.push_back(std::move(s));
            }
            batch.advantages = group_advantages(batch.rewards);
            batches.push_back(std::move(batch));
        }
        rec.mean_reward /= static_cast<double>(count);
        rec.mean_task_reward /= static_cast<double>(count);
        rec.mean_length /= static_cast<double>(count);

        for (std::size_t step = 0; step < config.inner_steps; ++step) {
            const auto grad = surrogate_gradient(policy, batches, config.clip_epsilon);
            if (step == 0) {
                double sq = 0.0;
                for (double g : grad) sq += g * g;
                rec.gradient_norm = std::sqrt(sq);
            }
            auto params = policy.parameters();
            for (std::size_t i = 0; i < params.size(); ++i) {
                params[i] += config.learning_rate * grad[i];
                if (!std::isfinite(params[i])) {
                    throw TrainingError("parameters diverged at epoch " + std::to_string(epoch));
                }
            }
        }
        rec.objective = surrogate_objective(policy, batches, config.clip_epsilon);
        report.epochs.push_back(rec);
    }
    report.final = evaluate_policy(policy, task, judge, options.eval_episodes, eval_seed);
    return report;
}

void write_training_report(std::ostream& out, const TrainingReport& report, const PolicyConfig& config) {
    using ordered_json = nlohmann::ordered_json;
    for (const auto& e : report.epochs) {
        ordered_json j;
        j["epoch"] = e.epoch;
        j["mean_reward"] = e.mean_reward;
        j["mean_task_reward"] = e.mean_task_reward;
        j["mean_length"] = e.mean_length;
        j["J"] = e.objective;
        j["gradient_norm"] = e.gradient_norm;
        out << j.dump() << '\n';
    }
    ordered_json summary;
    summary["beta1"] = config.beta1;
    summary["beta2"] = config.beta2;
    summary["clip_epsilon"] = config.clip_epsilon;
    summary["group_size"] = config.group_size;
    summary["kl_penalty_coef"] = config.kl_penalty_coef;
    summary["epochs"] = report.epochs.size();
    summary["initial_task_reward"] = report.initial.mean_task_reward;
    summary["initial_length"] = report.initial.mean_length;
    summary["final_task_reward"] = report.final.mean_task_reward;
    summary["final_length"] = report.final.mean_length;
    summary["eval_episodes"] = report.final.episodes;
    ordered_json j;
    j["final"] = summary;
    out << j.dump() << '\n';
}

}  // namespace mmmem
