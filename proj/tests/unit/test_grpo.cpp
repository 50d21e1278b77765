#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "mmmem/error.hpp"
#include "mmmem/grpo.hpp"
#include "grpo_oracles.hpp"
#include "synthetic.hpp"

using namespace mmmem;

namespace {

class FixedJudge final : public TraceJudge {
public:
    explicit FixedJudge(double v) : v_(v) {}
    double task_reward(const TraceSample&) const override { return v_; }

private:
    double v_;
};

class BrokenJudge final : public TraceJudge {
public:
    double task_reward(const TraceSample&) const override { throw std::runtime_error("judge down"); }
};

TraceSample sample_with(std::vector<int> tokens, double lp_behavior, double lp_reference = 0.0) {
    TraceSample s;
    s.tokens = std::move(tokens);
    s.logprob_behavior = lp_behavior;
    s.logprob_reference = lp_reference;
    s.logprob_current = lp_behavior;
    return s;
}

TraceSample with_ratio(double rho) {
    TraceSample s;
    s.logprob_behavior = -1.0;
    s.logprob_current = -1.0 + std::log(rho);
    return s;
}

// Enumerate every trace up to max_length: prefixes of content tokens, each
// either stopped early or full length.
void enumerate(std::uint32_t vocab, std::uint32_t max_len, std::vector<int>& prefix,
               std::vector<std::vector<int>>& out) {
    out.push_back(prefix);
    if (prefix.size() == max_len) return;
    for (int t = 1; t < static_cast<int>(vocab); ++t) {
        prefix.push_back(t);
        enumerate(vocab, max_len, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace

TEST(TraceReward, Examples) {
    PolicyConfig cfg;
    auto s = sample_with({1, 2, 3, 4, 5}, 0.2, 0.0);
    auto r = trace_reward(s, FixedJudge(1.0), cfg);
    EXPECT_NEAR(r.total, 0.44, 1e-12);
    EXPECT_NEAR(r.length_penalty, 0.5, 1e-12);
    EXPECT_NEAR(r.ratio_penalty, 0.06, 1e-12);
    EXPECT_EQ(r.total, r.task - r.length_penalty - r.ratio_penalty);

    r = trace_reward(sample_with({}, 0.0), FixedJudge(0.0), cfg);
    EXPECT_EQ(r.total, 0.0);

    cfg.beta1 = 0.0;
    cfg.beta2 = 0.0;
    r = trace_reward(sample_with({1, 1, 1}, -3.0, -1.0), FixedJudge(0.7), cfg);
    EXPECT_EQ(r.total, 0.7);
}

TEST(TraceReward, JudgeFailurePropagates) {
    EXPECT_THROW(trace_reward(sample_with({}, 0), BrokenJudge(), {}), AdapterError);
}

TEST(TraceReward, RecompositionIsExact) {
    std::mt19937_64 rng(12);
    PolicyConfig cfg;
    for (int t = 0; t < 200; ++t) {
        cfg.beta1 = test_support::uniform(rng, 0, 1);
        cfg.beta2 = test_support::uniform(rng, 0, 1);
        auto s = sample_with(std::vector<int>(test_support::uniform_int(rng, 0, 6), 1), test_support::uniform(rng, -5, 0),
                             test_support::uniform(rng, -5, 0));
        const auto r = trace_reward(s, FixedJudge(test_support::uniform(rng, 0, 1)), cfg);
        EXPECT_EQ(r.total, r.task - r.length_penalty - r.ratio_penalty);
    }
}

TEST(GroupAdvantages, Examples) {
    EXPECT_EQ(group_advantages(std::vector<double>{0.44, 0.44, 0.44}), (std::vector<double>{0, 0, 0}));
    const auto a = group_advantages(std::vector<double>{0, 1});
    EXPECT_NEAR(a[0], -1.0, 1e-7);
    EXPECT_NEAR(a[1], 1.0, 1e-7);
    const auto b = group_advantages(std::vector<double>{1, 2, 3});
    EXPECT_NEAR(b[0], -1.2247, 1e-4);
    EXPECT_EQ(b[1], 0.0);
    EXPECT_NEAR(b[2], 1.2247, 1e-4);
    EXPECT_THROW(group_advantages(std::vector<double>{1}), ContractError);
}

TEST(GroupAdvantages, ZeroMeanUnitVariance) {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> r(test_support::uniform_int(rng, 2, 16));
        for (auto& x : r) x = test_support::uniform(rng, -3, 3);
        const auto a = group_advantages(r);
        const double n = static_cast<double>(a.size());
        const double mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
        double var = 0.0;
        for (double x : a) var += (x - mean) * (x - mean);
        EXPECT_NEAR(mean, 0.0, 1e-6);
        // the 1e-8 stabilizer shrinks the variance to sd^2 / (sd + 1e-8)^2
        double rm = std::accumulate(r.begin(), r.end(), 0.0) / n, rv = 0.0;
        for (double x : r) rv += (x - rm) * (x - rm);
        const double sd = std::sqrt(rv / n);
        EXPECT_NEAR(var / n, sd * sd / ((sd + 1e-8) * (sd + 1e-8)), 1e-12);
        if (sd >= 0.02) EXPECT_NEAR(var / n, 1.0, 1e-6);

        const double c = test_support::uniform(rng, -10, 10);
        auto shifted = r;
        for (auto& x : shifted) x += c;
        const auto a2 = group_advantages(shifted);
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], a2[i], 1e-6);
    }
}

TEST(ClippedObjective, Examples) {
    std::vector<TraceSample> up{with_ratio(1.5)};
    EXPECT_NEAR(clipped_objective(up, std::vector<double>{1.0}, 0.2), 1.2, 1e-12);
    std::vector<TraceSample> down{with_ratio(0.5)};
    EXPECT_NEAR(clipped_objective(down, std::vector<double>{-1.0}, 0.2), -0.8, 1e-12);
    std::vector<TraceSample> ones{with_ratio(1.0), with_ratio(1.0), with_ratio(1.0)};
    const auto adv = group_advantages(std::vector<double>{0.1, 0.5, 0.9});
    EXPECT_NEAR(clipped_objective(ones, adv, 0.2), 0.0, 1e-12);
    EXPECT_NEAR(clipped_objective(ones, adv, 0.999999), 0.0, 1e-12);
}

TEST(ClippedObjective, NonFiniteRatioNamesSample) {
    std::vector<TraceSample> s{with_ratio(1.0), with_ratio(1.0)};
    s[1].logprob_current = 1000.0;
    try {
        clipped_objective(s, std::vector<double>{1, -1}, 0.2);
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("sample 1"), std::string::npos);
    }
}

TEST(ClippedObjective, ShiftInvariance) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 200; ++t) {
        const auto g = test_support::uniform_int(rng, 2, 10);
        std::vector<TraceSample> s;
        std::vector<double> r;
        for (std::size_t i = 0; i < g; ++i) {
            s.push_back(with_ratio(test_support::uniform(rng, 0.5, 1.5)));
            r.push_back(test_support::uniform(rng, -1, 1));
        }
        auto shifted = r;
        const double c = test_support::uniform(rng, -5, 5);
        for (auto& x : shifted) x += c;
        EXPECT_NEAR(clipped_objective(s, group_advantages(r), 0.2),
                    clipped_objective(s, group_advantages(shifted), 0.2), 1e-6);
    }
}

TEST(ToyPolicy, UniformLogprob) {
    ToyPolicy p(4, 1, 3);
    const ToyState st = test_support::toy_state(1, 0);
    EXPECT_NEAR(p.logprob(st, std::vector<int>{1, 2, 3}), 3.0 * std::log(0.25), 1e-12);
    EXPECT_THROW(p.logprob(st, std::vector<int>{4}), ContractError);
    EXPECT_THROW(p.logprob(st, std::vector<int>{0}), ContractError);
    EXPECT_THROW(p.logprob(st, std::vector<int>{1, 1, 1, 1}), ContractError);
}

TEST(ToyPolicy, CertainChainHasZeroLogprob) {
    ToyPolicy p(3, 1, 2);
    const ToyState st = test_support::toy_state(1, 0);
    // push all mass onto token 2, then token 1
    auto params = p.parameters();
    // rows: [empty prefix][prefix 1][prefix 2], 3 logits each
    params[0 * 3 + 2] = 1000.0;
    params[2 * 3 + 1] = 1000.0;
    EXPECT_NEAR(p.logprob(st, std::vector<int>{2, 1}), 0.0, 1e-12);
    std::mt19937_64 rng(1);
    EXPECT_EQ(p.sample(st, rng), (std::vector<int>{2, 1}));
}

TEST(ToyPolicy, EnumeratedTraceProbabilitiesSumToOne) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t) {
        const auto vocab = static_cast<std::uint32_t>(test_support::uniform_int(rng, 2, 5));
        const auto len = static_cast<std::uint32_t>(test_support::uniform_int(rng, 1, 3));
        ToyPolicy p(vocab, 2, len);
        p.randomize(rng(), 2.0);
        const ToyState st = test_support::toy_state(1, test_support::uniform_int(rng, 0, 5));
        std::vector<std::vector<int>> traces;
        std::vector<int> prefix;
        enumerate(vocab, len, prefix, traces);
        double total = 0.0;
        for (const auto& tr : traces) total += std::exp(p.logprob(st, tr));
        EXPECT_NEAR(total, 1.0, 1e-12);

        // probability of stopping right after the empty prefix equals the
        // enumerated mass of the empty trace
        const auto first = p.next_distribution(p.bucket(st), std::vector<int>{});
        EXPECT_NEAR(std::exp(p.logprob(st, std::vector<int>{})), len > 0 ? first[kStopToken] : 1.0, 1e-12);
    }
}

TEST(ToyPolicy, SamplingMatchesEnumeration) {
    ToyPolicy p(3, 1, 2);
    p.randomize(5, 1.0);
    const ToyState st = test_support::toy_state(1, 0);
    std::mt19937_64 rng(6);
    std::map<std::vector<int>, int> counts;
    const int n = 40000;
    for (int i = 0; i < n; ++i) ++counts[p.sample(st, rng)];
    std::vector<std::vector<int>> traces;
    std::vector<int> prefix;
    enumerate(3, 2, prefix, traces);
    for (const auto& tr : traces) {
        EXPECT_NEAR(counts[tr] / static_cast<double>(n), std::exp(p.logprob(st, tr)), 0.01);
    }
}

TEST(ToyPolicy, LogprobGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(44);
    for (int t = 0; t < 20; ++t) {
        ToyPolicy p(4, 2, 2);
        p.randomize(rng(), 1.0);
        const ToyState st = test_support::toy_state(2, test_support::uniform_int(rng, 0, 3));
        const auto tr = p.sample(st, rng);
        std::vector<double> grad(p.parameters().size(), 0.0);
        p.accumulate_logprob_gradient(st, tr, 1.0, grad);
        auto params = p.parameters();
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double keep = params[i];
            params[i] = keep + 1e-6;
            const double up = p.logprob(st, tr);
            params[i] = keep - 1e-6;
            const double down = p.logprob(st, tr);
            params[i] = keep;
            EXPECT_NEAR(grad[i], (up - down) / 2e-6, 1e-6);
        }
    }
}

TEST(SurrogateGradient, MatchesFiniteDifferences) {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 50; ++t) {
        const auto check = test_support::gradient_check_instance(rng);
        EXPECT_LE(check.relative_error, 1e-4) << "instance " << t;
    }
}

TEST(SurrogateGradient, AtBehaviorObjectiveIsMeanAdvantage) {
    std::mt19937_64 rng(99);
    ToyPolicy p(5, 2, 3);
    p.randomize(3, 1.0);
    auto batches = test_support::random_batches(rng, p, 4, 8);
    EXPECT_NEAR(surrogate_objective(p, batches, 0.2), 0.0, 1e-9);
    EXPECT_NEAR(surrogate_objective(p, batches, 0.999), 0.0, 1e-9);
}

TEST(Checkpoint, RoundTrip) {
    test_support::TempDir dir;
    ToyPolicy p(9, 16, 3);
    p.randomize(17, 0.5);
    save_checkpoint(dir / "p.mmpo", p);
    const auto q = load_checkpoint(dir / "p.mmpo");
    EXPECT_EQ(q.vocab(), 9u);
    EXPECT_EQ(q.buckets(), 16u);
    EXPECT_EQ(q.max_length(), 3u);
    for (std::size_t i = 0; i < p.parameters().size(); ++i) {
        EXPECT_EQ(q.parameters()[i], static_cast<double>(static_cast<float>(p.parameters()[i])));
    }
}

TEST(Checkpoint, CorruptionDetected) {
    test_support::TempDir dir;
    ToyPolicy p(4, 2, 2);
    save_checkpoint(dir / "p.mmpo", p);
    std::ifstream in(dir / "p.mmpo", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    {
        std::ofstream out(dir / "bad.mmpo", std::ios::binary);
        out << "XXXX" << bytes.substr(4);
    }
    EXPECT_THROW(load_checkpoint(dir / "bad.mmpo"), CorruptionError);
    {
        std::ofstream out(dir / "short.mmpo", std::ios::binary);
        out << bytes.substr(0, bytes.size() - 4);
    }
    EXPECT_THROW(load_checkpoint(dir / "short.mmpo"), CorruptionError);
}

TEST(PlantedKeywordTask, WindowHoldsKeywordAndDistinctTokens) {
    PlantedKeywordTask task(9, 4);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto s = task.draw(rng);
        ASSERT_EQ(s.window.size(), 4u);
        EXPECT_NE(std::find(s.window.begin(), s.window.end(), s.keyword), s.window.end());
        std::set<int> uniq(s.window.begin(), s.window.end());
        EXPECT_EQ(uniq.size(), 4u);
        for (int t : s.window) {
            EXPECT_GE(t, 1);
            EXPECT_LE(t, 8);
        }
    }
    EXPECT_THROW(PlantedKeywordTask(9, 9), ContractError);
}

TEST(TrainToy, GroupSizeOneRejected) {
    PolicyConfig cfg;
    cfg.group_size = 1;
    EXPECT_THROW(train_toy(cfg, {}, 42), ContractError);
}

TEST(TrainToy, ImprovesOverBaselineAndIsDeterministic) {
    PolicyConfig cfg;
    cfg.epochs = 200;
    ToyTrainingOptions opt;
    opt.eval_episodes = 200;
    const auto a = train_toy(cfg, opt, 42);
    EXPECT_GT(a.final.mean_task_reward, a.initial.mean_task_reward);
    EXPECT_GT(a.epochs.back().mean_reward, a.epochs.front().mean_reward);
    const auto b = train_toy(cfg, opt, 42);
    EXPECT_EQ(a.policy, b.policy);

    std::stringstream report;
    write_training_report(report, a, cfg);
    const auto lines = split_lines(report.str());
    EXPECT_EQ(lines.size(), cfg.epochs + 1);
    EXPECT_NE(lines.back().find("\"final\""), std::string::npos);
}
