#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "agency/errors.hpp"
#include "agency/math.hpp"
#include "agency/models.hpp"

namespace agency {

// ---------------------------------------------------------------------------
// Worked-example environments
// ---------------------------------------------------------------------------

/// Single-step MDP of a pilot choosing between a safe low peak and a risky
/// high peak over a chasm. Transition rows do not depend on the current
/// state: both actions are equally available from anywhere.
inline MDPModel build_paraglider() {
    MDPModel m;
    m.states = {"low-peak", "high-peak", "chasm"};
    m.actions = {"climb-low", "climb-high"};
    const std::vector<double> row_low = {0.6, 0.0, 0.4};
    const std::vector<double> row_high = {0.0, 0.4, 0.6};
    m.transition = {{row_low, row_low, row_low}, {row_high, row_high, row_high}};
    m.reward = {1.0, 1.5, 0.0};
    m.horizon = 1;
    require_valid(m);
    return m;
}

enum class TmazeVariant {
    absorbing,    // arms trap the agent; payoff +1 / -1 on the entered arm
    correctable,  // arms can be left; payoff +1 per period spent in the correct arm
};

/// T-maze with latent reward context. 8 states = {left-context, right-context}
/// x {center, left-arm, right-arm, cue}; 4 deterministic movement actions;
/// 5 observations. Cue locations reveal the context exactly; arms emit
/// reward/punishment deterministically by context; the center is silent.
///
/// The model's reward vector stays non-negative (+1 on the context-correct
/// arm). The signed payoff channel used for lotteries and expected-utility
/// analysis is shipped alongside, as are the observation payoffs and the
/// uniform-context initial belief.
struct TmazeBundle {
    POMDPModel model;
    std::vector<double> state_payoffs;
    std::vector<double> obs_payoffs;
    BeliefState initial_belief;
    TmazeVariant variant;

    // action indices
    static constexpr std::size_t kGoLeft = 0;
    static constexpr std::size_t kGoRight = 1;
    static constexpr std::size_t kGoCue = 2;
    static constexpr std::size_t kStay = 3;
    // observation indices
    static constexpr std::size_t kObsNull = 0;
    static constexpr std::size_t kObsCueLeft = 1;
    static constexpr std::size_t kObsCueRight = 2;
    static constexpr std::size_t kObsReward = 3;
    static constexpr std::size_t kObsPunish = 4;

    static constexpr std::size_t state_index(std::size_t context, std::size_t location) {
        return context * 4 + location;  // location: 0 center, 1 left arm, 2 right arm, 3 cue
    }
};

inline TmazeBundle build_tmaze(TmazeVariant variant) {
    constexpr std::size_t kCenter = 0, kLeftArm = 1, kRightArm = 2, kCue = 3;
    POMDPModel p;
    p.base.states = {"left-ctx:center", "left-ctx:left-arm", "left-ctx:right-arm",
                     "left-ctx:cue",    "right-ctx:center",  "right-ctx:left-arm",
                     "right-ctx:right-arm", "right-ctx:cue"};
    p.base.actions = {"go-left", "go-right", "go-cue", "stay"};
    p.observations = {"null", "cue-says-left", "cue-says-right", "reward", "punishment"};
    p.base.horizon = 2;

    const std::size_t n = p.base.states.size();
    p.base.transition.assign(p.base.actions.size(),
                             std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
    for (std::size_t ctx = 0; ctx < 2; ++ctx) {
        for (std::size_t loc = 0; loc < 4; ++loc) {
            const std::size_t s = TmazeBundle::state_index(ctx, loc);
            const bool trapped =
                variant == TmazeVariant::absorbing && (loc == kLeftArm || loc == kRightArm);
            const auto destination = [&](std::size_t action) -> std::size_t {
                if (trapped) return s;
                switch (action) {
                    case TmazeBundle::kGoLeft:
                        return TmazeBundle::state_index(ctx, kLeftArm);
                    case TmazeBundle::kGoRight:
                        return TmazeBundle::state_index(ctx, kRightArm);
                    case TmazeBundle::kGoCue:
                        return TmazeBundle::state_index(ctx, kCue);
                    default:
                        return s;
                }
            };
            for (std::size_t a = 0; a < p.base.actions.size(); ++a)
                p.base.transition[a][s][destination(a)] = 1.0;
        }
    }

    p.likelihood.assign(n, std::vector<double>(p.observations.size(), 0.0));
    p.base.reward.assign(n, 0.0);
    TmazeBundle bundle{std::move(p), std::vector<double>(n, 0.0),
                       std::vector<double>(5, 0.0),
                       BeliefState{CategoricalDist::uniform(1)}, variant};
    for (std::size_t ctx = 0; ctx < 2; ++ctx) {
        const bool reward_left = ctx == 0;
        bundle.model.likelihood[TmazeBundle::state_index(ctx, kCenter)][TmazeBundle::kObsNull] = 1.0;
        bundle.model.likelihood[TmazeBundle::state_index(ctx, kCue)]
                               [reward_left ? TmazeBundle::kObsCueLeft : TmazeBundle::kObsCueRight] =
            1.0;
        const std::size_t correct = TmazeBundle::state_index(ctx, reward_left ? kLeftArm : kRightArm);
        const std::size_t wrong = TmazeBundle::state_index(ctx, reward_left ? kRightArm : kLeftArm);
        bundle.model.likelihood[correct][TmazeBundle::kObsReward] = 1.0;
        bundle.model.likelihood[wrong][TmazeBundle::kObsPunish] = 1.0;

        bundle.model.base.reward[correct] = 1.0;
        bundle.state_payoffs[correct] = 1.0;
        bundle.state_payoffs[wrong] = variant == TmazeVariant::absorbing ? -1.0 : 0.0;
    }
    bundle.obs_payoffs[TmazeBundle::kObsReward] = 1.0;
    bundle.obs_payoffs[TmazeBundle::kObsPunish] =
        variant == TmazeVariant::absorbing ? -1.0 : 0.0;

    std::vector<double> belief(n, 0.0);
    belief[TmazeBundle::state_index(0, kCenter)] = 0.5;
    belief[TmazeBundle::state_index(1, kCenter)] = 0.5;
    bundle.initial_belief = BeliefState{CategoricalDist(std::move(belief))};

    require_valid(bundle.model);
    return bundle;
}

/// Coin-toss doubling lottery truncated at n_terms: outcome 2^i with
/// probability 2^-i for i = 1..n_terms, plus a terminal outcome 2^n_terms
/// carrying the residual tail mass 2^-n_terms so the distribution sums to 1
/// exactly (all masses are dyadic).
inline Lottery build_st_petersburg(int n_terms) {
    if (n_terms < 1 || n_terms > 60)
        throw std::invalid_argument(
            "st petersburg truncation must lie in [1, 60] to keep payouts exactly representable");
    std::vector<double> outcomes;
    std::vector<double> probs;
    outcomes.reserve(n_terms + 1);
    probs.reserve(n_terms + 1);
    double payout = 1.0;
    double mass = 1.0;
    for (int i = 1; i <= n_terms; ++i) {
        payout *= 2.0;
        mass *= 0.5;
        outcomes.push_back(payout);
        probs.push_back(mass);
    }
    outcomes.push_back(payout);  // tail outcome equals the final stake
    probs.push_back(mass);
    return Lottery(std::move(outcomes), CategoricalDist(std::move(probs)));
}

// ---------------------------------------------------------------------------
// Seeded random instances
// ---------------------------------------------------------------------------

struct InstanceSpec {
    enum class Kind { mdp, pomdp };
    Kind kind = Kind::mdp;
    std::size_t n_states = 3;
    std::size_t n_actions = 2;
    std::size_t n_obs = 3;
    std::uint64_t seed = 0;
    double reward_lo = 0.0;
    double reward_hi = 2.0;
};

namespace detail {

/// Deterministic uniform in [0, 1) from raw generator bits; avoids the
/// implementation-defined std::uniform_real_distribution.
class SeededUniform {
public:
    explicit SeededUniform(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    double next() {
        // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z = z ^ (z >> 31);
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }

    double exponential() { return -std::log1p(-next()); }

private:
    std::uint64_t state_;
};

/// Flat simplex draw floored away from zero: min entry >= 1e-6 after
/// renormalization, so downstream KL identities never hit zero denominators.
inline std::vector<double> random_positive_row(SeededUniform& rng, std::size_t n) {
    constexpr double kFloor = 1.01e-6;
    std::vector<double> row(n);
    double sum = 0.0;
    for (double& x : row) {
        x = rng.exponential();
        sum += x;
    }
    double floored_sum = 0.0;
    for (double& x : row) {
        x = std::max(x / sum, kFloor);
        floored_sum += x;
    }
    for (double& x : row) x /= floored_sum;
    return row;
}

}  // namespace detail

/// Deterministic-in-seed random MDP with strictly positive transition rows.
inline MDPModel random_mdp(const InstanceSpec& spec) {
    if (spec.n_states < 2) throw std::invalid_argument("random instance needs >= 2 states");
    if (spec.n_actions < 1) throw std::invalid_argument("random instance needs >= 1 action");
    if (!(spec.reward_lo >= 0.0) || spec.reward_lo > spec.reward_hi)
        throw std::invalid_argument("reward range must satisfy 0 <= lo <= hi");
    detail::SeededUniform rng(spec.seed);
    MDPModel m;
    for (std::size_t s = 0; s < spec.n_states; ++s) m.states.push_back("s" + std::to_string(s));
    for (std::size_t a = 0; a < spec.n_actions; ++a) m.actions.push_back("a" + std::to_string(a));
    m.transition.resize(spec.n_actions);
    for (std::size_t a = 0; a < spec.n_actions; ++a)
        for (std::size_t s = 0; s < spec.n_states; ++s)
            m.transition[a].push_back(detail::random_positive_row(rng, spec.n_states));
    for (std::size_t s = 0; s < spec.n_states; ++s)
        m.reward.push_back(spec.reward_lo + rng.next() * (spec.reward_hi - spec.reward_lo));
    m.horizon = 2;
    require_valid(m);
    return m;
}

/// Deterministic-in-seed random POMDP; likelihood rows share the positivity
/// floor of the transition rows.
inline POMDPModel random_pomdp(const InstanceSpec& spec) {
    if (spec.n_obs < 2) throw std::invalid_argument("random pomdp needs >= 2 observations");
    POMDPModel p;
    p.base = random_mdp(spec);
    // Continue a second deterministic stream so the MDP part matches the
    // pure-MDP instance of the same seed.
    detail::SeededUniform rng(spec.seed ^ 0xda3e39cb94b95bdbull);
    for (std::size_t o = 0; o < spec.n_obs; ++o)
        p.observations.push_back("o" + std::to_string(o));
    for (std::size_t s = 0; s < spec.n_states; ++s)
        p.likelihood.push_back(detail::random_positive_row(rng, spec.n_obs));
    require_valid(p);
    return p;
}

/// Spec-driven dispatcher over the two instance kinds.
inline std::variant<MDPModel, POMDPModel> random_instance(const InstanceSpec& spec) {
    if (spec.kind == InstanceSpec::Kind::mdp) return random_mdp(spec);
    return random_pomdp(spec);
}

/// A random interior belief (same positivity floor as transition rows).
inline BeliefState random_belief(std::uint64_t seed, std::size_t n_states) {
    detail::SeededUniform rng(seed ^ 0xc2b2ae3d27d4eb4full);
    return BeliefState{CategoricalDist(detail::random_positive_row(rng, n_states))};
}

}  // namespace agency
