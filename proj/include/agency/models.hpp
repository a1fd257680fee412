#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "agency/errors.hpp"
#include "agency/math.hpp"

namespace agency {

// ---------------------------------------------------------------------------
// Utility functions over rewards
// ---------------------------------------------------------------------------

/// Parametric utility family applied to a reward argument:
/// linear r, power r^c (c > 0), natural log ln r (r > 0), affine a*r + b (a > 0).
class UtilityFunction {
public:
    enum class Kind { linear, power, log, affine };

    static UtilityFunction linear() { return UtilityFunction(Kind::linear, 0, 0); }
    static UtilityFunction power(double c) {
        if (!(c > 0.0)) throw std::invalid_argument("power utility requires exponent c > 0");
        return UtilityFunction(Kind::power, c, 0);
    }
    static UtilityFunction natural_log() { return UtilityFunction(Kind::log, 0, 0); }
    static UtilityFunction affine(double a, double b) {
        if (!(a > 0.0)) throw std::invalid_argument("affine utility requires slope a > 0");
        return UtilityFunction(Kind::affine, a, b);
    }

    double operator()(double r) const {
        switch (kind_) {
            case Kind::linear:
                return r;
            case Kind::power:
                if (r < 0.0)
                    throw DomainError("power utility undefined for negative argument " +
                                      std::to_string(r));
                return std::pow(r, a_);
            case Kind::log:
                if (!(r > 0.0))
                    throw DomainError("log utility requires strictly positive argument, got " +
                                      std::to_string(r));
                return std::log(r);
            case Kind::affine:
                return a_ * r + b_;
        }
        return r;  // unreachable
    }

    Kind kind() const { return kind_; }
    double power_exponent() const { return a_; }
    double affine_slope() const { return a_; }
    double affine_offset() const { return b_; }

    std::string describe() const {
        switch (kind_) {
            case Kind::linear:
                return "linear";
            case Kind::power:
                return "power(c=" + std::to_string(a_) + ")";
            case Kind::log:
                return "log";
            case Kind::affine:
                return "affine(a=" + std::to_string(a_) + ",b=" + std::to_string(b_) + ")";
        }
        return "?";
    }

private:
    UtilityFunction(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
    Kind kind_;
    double a_;  // power exponent or affine slope
    double b_;  // affine offset
};

inline double utility_apply(const UtilityFunction& u, double r) { return u(r); }

// ---------------------------------------------------------------------------
// Lotteries and risk attitudes
// ---------------------------------------------------------------------------

/// Finite lottery: a probability distribution over real-valued outcomes.
struct Lottery {
    std::vector<double> outcomes;
    CategoricalDist dist;

    Lottery(std::vector<double> outcomes_, CategoricalDist dist_)
        : outcomes(std::move(outcomes_)), dist(std::move(dist_)) {
        if (outcomes.size() != dist.support_size())
            throw std::invalid_argument("lottery outcomes and probabilities differ in length");
    }
};

inline double lottery_expected_value(const Lottery& l) {
    return expectation(l.dist, l.outcomes);
}

inline double lottery_expected_utility(const Lottery& l, const UtilityFunction& u) {
    double e = 0.0;
    for (std::size_t i = 0; i < l.outcomes.size(); ++i) e += l.dist[i] * u(l.outcomes[i]);
    return e;
}

enum class RiskAttitude { averse, neutral, loving };

inline constexpr double kRiskClassifyTol = 1e-12;

/// Compares u(E[L]) against E[u(L)] for one supplied lottery. No global
/// concavity classification is inferred.
inline RiskAttitude classify_risk_attitude(const UtilityFunction& u, const Lottery& l) {
    bool degenerate = l.dist.support_size() == 1;
    for (std::size_t i = 0; i < l.dist.support_size() && !degenerate; ++i)
        if (l.dist[i] == 1.0) degenerate = true;
    if (degenerate)
        throw DegenerateLottery("risk attitude undefined for a single certain outcome");

    const double utility_of_mean = u(lottery_expected_value(l));
    const double mean_utility = lottery_expected_utility(l, u);
    if (utility_of_mean > mean_utility + kRiskClassifyTol) return RiskAttitude::averse;
    if (utility_of_mean < mean_utility - kRiskClassifyTol) return RiskAttitude::loving;
    return RiskAttitude::neutral;
}

// ---------------------------------------------------------------------------
// Environment models
// ---------------------------------------------------------------------------

/// Finite-horizon MDP. Transition rows are stored raw so that invalid models
/// can be represented and reported by validate_model; every other operation
/// in this library assumes a model that validates cleanly.
/// reward is per posterior state (actions do not enter the reward function)
/// and must be non-negative. The discount is fixed at 1.
struct MDPModel {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    // transition[action][state] = probability row over posterior states
    std::vector<std::vector<std::vector<double>>> transition;
    std::vector<double> reward;
    int horizon = 1;
    double discount = 1.0;

    std::size_t n_states() const { return states.size(); }
    std::size_t n_actions() const { return actions.size(); }

    const std::vector<double>& row(std::size_t action, std::size_t state) const {
        return transition[action][state];
    }
    CategoricalDist row_dist(std::size_t action, std::size_t state) const {
        return CategoricalDist(transition[action][state]);
    }
};

/// POMDP: an MDP plus observations emitted from latent states.
struct POMDPModel {
    MDPModel base;
    std::vector<std::string> observations;
    // likelihood[state] = probability row over observations
    std::vector<std::vector<double>> likelihood;

    std::size_t n_states() const { return base.n_states(); }
    std::size_t n_actions() const { return base.n_actions(); }
    std::size_t n_obs() const { return observations.size(); }
};

/// Exact Bayesian belief over latent states.
struct BeliefState {
    CategoricalDist dist;
};

/// Fixed, unconditionally executed action sequence.
struct PolicySpec {
    std::vector<std::size_t> actions;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

namespace detail {

inline void check_probability_row(const std::vector<double>& row, std::size_t expected_len,
                                  const std::string& path, ValidationReport& report) {
    if (row.size() != expected_len) {
        report.violations.push_back(path + ": row length " + std::to_string(row.size()) +
                                    ", expected " + std::to_string(expected_len));
        return;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (!std::isfinite(row[i]) || row[i] < 0.0)
            report.violations.push_back(path + "[" + std::to_string(i) +
                                        "]: negative or non-finite probability");
        else
            sum += row[i];
    }
    if (std::abs(sum - 1.0) > kNormalizationTol)
        report.violations.push_back(path + ": row sums to " + std::to_string(sum) +
                                    ", expected 1 within 1e-9");
}

}  // namespace detail

/// Lists every violated model invariant with an index path. Empty iff valid.
inline ValidationReport validate_model(const MDPModel& m) {
    ValidationReport report;
    if (m.states.empty()) report.violations.push_back("states: empty");
    if (m.actions.empty()) report.violations.push_back("actions: empty");
    if (m.horizon < 1)
        report.violations.push_back("horizon: " + std::to_string(m.horizon) + ", expected >= 1");
    if (m.discount != 1.0)
        report.violations.push_back("discount: " + std::to_string(m.discount) +
                                    ", fixed at 1 in this model family");

    if (m.reward.size() != m.n_states())
        report.violations.push_back("reward: length " + std::to_string(m.reward.size()) +
                                    ", expected " + std::to_string(m.n_states()));
    for (std::size_t s = 0; s < m.reward.size(); ++s)
        if (!std::isfinite(m.reward[s]) || m.reward[s] < 0.0)
            report.violations.push_back("reward[" + std::to_string(s) +
                                        "]: negative or non-finite");

    if (m.transition.size() != m.n_actions()) {
        report.violations.push_back("transition: " + std::to_string(m.transition.size()) +
                                    " action slices, expected " + std::to_string(m.n_actions()));
        return report;
    }
    for (std::size_t a = 0; a < m.transition.size(); ++a) {
        if (m.transition[a].size() != m.n_states()) {
            report.violations.push_back("transition[" + std::to_string(a) + "]: " +
                                        std::to_string(m.transition[a].size()) +
                                        " rows, expected " + std::to_string(m.n_states()));
            continue;
        }
        for (std::size_t s = 0; s < m.transition[a].size(); ++s)
            detail::check_probability_row(
                m.transition[a][s], m.n_states(),
                "transition[" + std::to_string(a) + "][" + std::to_string(s) + "]", report);
    }
    return report;
}

inline ValidationReport validate_model(const POMDPModel& p) {
    ValidationReport report = validate_model(p.base);
    if (p.observations.empty()) report.violations.push_back("observations: empty");
    if (p.likelihood.size() != p.n_states()) {
        report.violations.push_back("likelihood: " + std::to_string(p.likelihood.size()) +
                                    " rows, expected " + std::to_string(p.n_states()));
        return report;
    }
    for (std::size_t s = 0; s < p.likelihood.size(); ++s)
        detail::check_probability_row(p.likelihood[s], p.n_obs(),
                                      "likelihood[" + std::to_string(s) + "]", report);
    return report;
}

/// Throws ValidationError unless the model validates cleanly.
template <typename Model>
inline void require_valid(const Model& m) {
    ValidationReport r = validate_model(m);
    if (!r.ok()) throw ValidationError(r.violations);
}

// ---------------------------------------------------------------------------
// Preference distributions
// ---------------------------------------------------------------------------

/// Target distribution over states or observations that an agent is steered
/// towards. When built by Gibbs reweighting it remembers the softmax log
/// normalizer of its potentials, which lets evaluators reproduce the
/// unnormalized-preference convention (log preference = raw potential).
struct PreferenceDistribution {
    enum class Over { states, observations };
    enum class Provenance { explicit_dist, gibbs };

    Over over;
    CategoricalDist dist;
    Provenance provenance = Provenance::explicit_dist;
    double beta = 1.0;
    // ln sum_i exp(beta * potential_i); 0 for explicit preferences
    double log_partition = 0.0;

    static PreferenceDistribution explicit_over_states(CategoricalDist d) {
        return {Over::states, std::move(d), Provenance::explicit_dist, 1.0, 0.0};
    }
    static PreferenceDistribution explicit_over_observations(CategoricalDist d) {
        return {Over::observations, std::move(d), Provenance::explicit_dist, 1.0, 0.0};
    }
};

/// Gibbs preference from arbitrary potentials. The prior defaults to uniform,
/// in which case the result is exactly the softmax of beta * potentials.
inline PreferenceDistribution preference_from_potentials(
    PreferenceDistribution::Over over, const std::vector<double>& potentials, double beta,
    const std::optional<CategoricalDist>& prior = std::nullopt) {
    const CategoricalDist p = prior ? *prior : CategoricalDist::uniform(potentials.size());
    PreferenceDistribution pref{over, gibbs(p, potentials, beta),
                                PreferenceDistribution::Provenance::gibbs, beta,
                                log_sum_exp(potentials, beta)};
    return pref;
}

/// Preference over states from a model's rewards passed through a utility
/// function. With uniform prior, linear utility and beta = 1 this is the
/// softmax-of-rewards preference.
inline PreferenceDistribution preference_from_rewards(
    const MDPModel& m, const UtilityFunction& u, double beta,
    const std::optional<CategoricalDist>& prior = std::nullopt) {
    std::vector<double> potentials(m.reward.size());
    for (std::size_t s = 0; s < m.reward.size(); ++s) potentials[s] = u(m.reward[s]);
    if (prior && prior->support_size() != m.n_states())
        throw std::invalid_argument("preference prior support must equal the state count");
    return preference_from_potentials(PreferenceDistribution::Over::states, potentials, beta,
                                      prior);
}

}  // namespace agency
