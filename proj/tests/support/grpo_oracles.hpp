#pragma once
// Finite-difference and enumeration oracles for the GRPO code.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mmmem/grpo.hpp"
#include "synthetic.hpp"

namespace mmmem::test_support {

struct GradientCheck {
    double relative_error = 0.0;
    double analytic_norm = 0.0;
};

// Random toy instance: behavior policy is a small perturbation of the
// current one, so ratios cover both clipped and unclipped regions.
inline std::vector<GroupBatch> random_batches(std::mt19937_64& rng, const ToyPolicy& behavior, std::size_t groups,
                                              std::size_t group_size) {
    std::vector<GroupBatch> batches;
    for (std::size_t g = 0; g < groups; ++g) {
        GroupBatch b;
        b.state = toy_state(static_cast<int>(uniform_int(rng, 1, behavior.vocab() - 1)), rng());
        for (std::size_t i = 0; i < group_size; ++i) {
            TraceSample s;
            s.state = b.state;
            s.tokens = behavior.sample(s.state, rng);
            s.logprob_behavior = behavior.logprob(s.state, s.tokens);
            s.logprob_current = s.logprob_behavior;
            b.samples.push_back(s);
            b.rewards.push_back(uniform(rng, -1.0, 1.0));
        }
        b.advantages = group_advantages(b.rewards);
        batches.push_back(std::move(b));
    }
    return batches;
}

// True when every ratio sits at least `margin` away from a clip kink, so the
// objective is smooth around the current parameters.
inline bool away_from_kinks(const ToyPolicy& policy, std::vector<GroupBatch>& batches, double eps, double margin) {
    surrogate_objective(policy, batches, eps);
    for (const auto& b : batches) {
        for (const auto& s : b.samples) {
            const double rho = std::exp(s.logprob_current - s.logprob_behavior);
            if (std::fabs(rho - (1.0 + eps)) < margin || std::fabs(rho - (1.0 - eps)) < margin) return false;
        }
    }
    return true;
}

inline GradientCheck finite_difference_check(ToyPolicy policy, std::vector<GroupBatch>& batches, double eps,
                                             double h = 1e-5) {
    const auto analytic = surrogate_gradient(policy, batches, eps);
    auto params = policy.parameters();
    double diff = 0.0;
    double ref = 0.0;
    double an = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + h;
        const double up = surrogate_objective(policy, batches, eps);
        params[i] = keep - h;
        const double down = surrogate_objective(policy, batches, eps);
        params[i] = keep;
        const double numeric = (up - down) / (2.0 * h);
        diff += (analytic[i] - numeric) * (analytic[i] - numeric);
        ref += numeric * numeric;
        an += analytic[i] * analytic[i];
    }
    GradientCheck out;
    out.analytic_norm = std::sqrt(an);
    out.relative_error = std::sqrt(diff) / std::max(std::sqrt(ref), 1e-12);
    return out;
}

// One instance of the gradient check: random policy, random behavior nearby,
// retried until no ratio sits on a kink and the gradient is not identically
// zero (all samples clipped), where a relative error means nothing.
inline GradientCheck gradient_check_instance(std::mt19937_64& rng, double eps = 0.2) {
    for (;;) {
        const auto vocab = static_cast<std::uint32_t>(uniform_int(rng, 3, 5));
        const auto buckets = static_cast<std::uint32_t>(uniform_int(rng, 1, 3));
        const auto len = static_cast<std::uint32_t>(uniform_int(rng, 1, 3));
        ToyPolicy behavior(vocab, buckets, len);
        behavior.randomize(rng(), 1.0);
        ToyPolicy current = behavior;
        for (auto& p : current.parameters()) p += uniform(rng, -0.3, 0.3);
        auto batches = random_batches(rng, behavior, uniform_int(rng, 1, 3), uniform_int(rng, 2, 6));
        if (!away_from_kinks(current, batches, eps, 1e-3)) continue;
        const auto check = finite_difference_check(current, batches, eps);
        if (check.analytic_norm < 1e-6) continue;
        return check;
    }
}

}  // namespace mmmem::test_support
