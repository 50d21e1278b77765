#pragma once
// SIB-GRPO: per-trace reward with length and reference log-ratio penalties,
// group-standardized advantages, the PPO-style clipped surrogate, and a toy
// trainer that optimizes a small tabular trace policy with analytic
// gradients.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mmmem {

// Token 0 is STOP (and doubles as the begin-of-trace context).
inline constexpr int kStopToken = 0;

// State of the toy consolidation task: a sensory window of tokens, the latest
// memory token, and the planted keyword the trace must record.
struct ToyState {
    std::vector<int> window;
    int memory_token = 0;
    int keyword = 1;
    std::uint64_t feature = 0;  // what the policy conditions on (hashed into buckets)
};

struct TraceSample {
    ToyState state;
    std::vector<int> tokens;  // content tokens, STOP excluded
    double logprob_behavior = 0.0;   // log pi_old(m|s)
    double logprob_reference = 0.0;  // log pi_ref(m|s)
    double logprob_current = 0.0;    // log pi_theta(m|s), refreshed every update
};

struct RewardBreakdown {
    double task = 0.0;
    double length_penalty = 0.0;  // beta1 * Length(m)
    double ratio_penalty = 0.0;   // beta2 * (log pi_old - log pi_ref)
    double total = 0.0;           // task - length_penalty - ratio_penalty
};

struct PolicyConfig {
    double beta1 = 0.1;
    double beta2 = 0.3;
    double clip_epsilon = 0.2;
    std::size_t group_size = 8;
    double learning_rate = 0.5;
    std::size_t epochs = 1000;
    std::size_t states_per_epoch = 16;
    std::size_t inner_steps = 4;
    // Carried for provenance; the reference anchor is the beta2 reward term.
    double kl_penalty_coef = 0.1;

    void validate() const;
};

// Supplies R_vqa in [0, 1] for a sampled trace.
class TraceJudge {
public:
    virtual ~TraceJudge() = default;
    virtual double task_reward(const TraceSample& sample) const = 0;
};

RewardBreakdown trace_reward(const TraceSample& sample, const TraceJudge& judge, const PolicyConfig& config);

// (r_i - mean) / (population std + 1e-8); all zeros when the std is exactly 0.
std::vector<double> group_advantages(std::span<const double> rewards);

// J = (1/G) sum_i min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i),
// rho_i = exp(logprob_current - logprob_behavior).
double clipped_objective(std::span<const TraceSample> samples, std::span<const double> advantages,
                         double clip_epsilon);

// dJ/d(logprob_current_i) for each sample: rho_i A_i / G where the unclipped
// branch is active, else 0.
std::vector<double> clipped_objective_weights(std::span<const TraceSample> samples,
                                              std::span<const double> advantages, double clip_epsilon);

// Autoregressive tabular policy: logits[bucket][prefix][next], bucket =
// feature mod buckets, prefix = the content tokens emitted so far (every
// prefix shorter than max_length has its own row). Token 0 is STOP. A trace
// of max_length content tokens terminates without emitting STOP.
class ToyPolicy {
public:
    ToyPolicy(std::uint32_t vocab, std::uint32_t buckets, std::uint32_t max_length);

    std::uint32_t vocab() const { return vocab_; }
    std::uint32_t buckets() const { return buckets_; }
    std::uint32_t max_length() const { return max_length_; }
    std::size_t contexts() const { return contexts_; }

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }

    std::uint32_t bucket(const ToyState& state) const {
        return static_cast<std::uint32_t>(state.feature % buckets_);
    }

    // Next-token distribution after `prefix` (shorter than max_length).
    std::vector<double> next_distribution(std::uint32_t bucket, std::span<const int> prefix) const;

    double logprob(const ToyState& state, std::span<const int> trace) const;

    // grad += scale * d logprob / d params
    void accumulate_logprob_gradient(const ToyState& state, std::span<const int> trace, double scale,
                                     std::span<double> grad) const;

    std::vector<int> sample(const ToyState& state, std::mt19937_64& rng) const;

    void randomize(std::uint64_t seed, double scale);

    bool operator==(const ToyPolicy&) const = default;

private:
    std::size_t row_offset(std::uint32_t bucket, std::size_t context) const;
    std::vector<double> row_distribution(std::size_t offset) const;
    void check_token(int token) const;

    std::uint32_t vocab_;
    std::uint32_t buckets_;
    std::uint32_t max_length_;
    std::size_t contexts_;
    std::vector<double> params_;
};

// Checkpoint: "MMPO" | version u32 | vocab u32 | buckets u32 | float32 LE
// parameters (buckets * contexts * vocab). max_length follows from the table
// size.
void save_checkpoint(const std::filesystem::path& path, const ToyPolicy& policy);
ToyPolicy load_checkpoint(const std::filesystem::path& path);

// Planted-keyword task: the window holds the keyword among distractors and
// the trace earns R_vqa = 1 iff a downstream lookup over the trace alone finds
// the keyword.
class PlantedKeywordTask {
public:
    PlantedKeywordTask(std::uint32_t vocab = 9, std::uint32_t window = 4);

    std::uint32_t vocab() const { return vocab_; }
    ToyState draw(std::mt19937_64& rng) const;

private:
    std::uint32_t vocab_;
    std::uint32_t window_;
};

class KeywordJudge final : public TraceJudge {
public:
    double task_reward(const TraceSample& sample) const override;
};

struct GroupBatch {
    ToyState state;
    std::vector<TraceSample> samples;
    std::vector<double> rewards;
    std::vector<double> advantages;
};

// Mean of clipped_objective over groups, with logprob_current recomputed
// under `policy`.
double surrogate_objective(const ToyPolicy& policy, std::vector<GroupBatch>& batches, double clip_epsilon);
std::vector<double> surrogate_gradient(const ToyPolicy& policy, std::vector<GroupBatch>& batches,
                                       double clip_epsilon);

struct EpochRecord {
    std::size_t epoch = 0;
    double mean_reward = 0.0;       // mean total reward
    double mean_task_reward = 0.0;  // mean R_vqa
    double mean_length = 0.0;
    double objective = 0.0;      // J at the behavior snapshot after the last inner step
    double gradient_norm = 0.0;  // first inner step
};

struct PolicyEvaluation {
    double mean_task_reward = 0.0;
    double mean_length = 0.0;
    std::size_t episodes = 0;
};

PolicyEvaluation evaluate_policy(const ToyPolicy& policy, const PlantedKeywordTask& task, const TraceJudge& judge,
                                 std::size_t episodes, std::uint64_t seed);

struct ToyTrainingOptions {
    std::uint32_t vocab = 9;
    std::uint32_t window = 4;
    std::uint32_t buckets = 16;
    std::uint32_t max_length = 3;
    std::size_t eval_episodes = 400;
};

struct TrainingReport {
    std::vector<EpochRecord> epochs;
    PolicyEvaluation initial;
    PolicyEvaluation final;
    ToyPolicy policy;
};

TrainingReport train_toy(const PolicyConfig& config, const ToyTrainingOptions& options, std::uint64_t seed);

// One JSON record per epoch, then one {"final": ...} summary record.
void write_training_report(std::ostream& out, const TrainingReport& report, const PolicyConfig& config);

}  // namespace mmmem
