#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "agency/errors.hpp"
#include "agency/math.hpp"
#include "agency/models.hpp"

namespace agency {

inline constexpr double kTieTol = 1e-9;
inline constexpr double kBranchWeightTol = 1e-9;

// ---------------------------------------------------------------------------
// Single-step objective evaluators
// ---------------------------------------------------------------------------

/// Expected utility of next-step rewards: E over P(s'|a, s_now) of u(R(s')).
/// Zero-probability successors are skipped, so their rewards need not lie in
/// the utility's domain.
inline double expected_utility(const MDPModel& m, std::size_t s_now, std::size_t a,
                               const UtilityFunction& u) {
    const auto& row = m.row(a, s_now);
    double e = 0.0;
    for (std::size_t s = 0; s < row.size(); ++s)
        if (row[s] > 0.0) e += row[s] * u(m.reward[s]);
    return e;
}

enum class EfeForm { kl, entropy_surprise };

/// Single-step expected free energy in an MDP. The two forms are the same
/// quantity computed along different routes:
///   kl               : KL[P(s'|a, s_now) || pref]
///   entropy_surprise : -H[P(s'|a, s_now)] - E[ln pref]
inline Nats efe_mdp(const MDPModel& m, std::size_t s_now, std::size_t a,
                    const PreferenceDistribution& pref, EfeForm form = EfeForm::kl) {
    if (pref.over != PreferenceDistribution::Over::states)
        throw std::invalid_argument("efe_mdp needs a preference over states");
    if (pref.dist.support_size() != m.n_states())
        throw std::invalid_argument("efe_mdp: preference support does not match state count");
    const CategoricalDist predicted = m.row_dist(a, s_now);
    if (form == EfeForm::kl) return kl_divergence(predicted, pref.dist);

    double surprise = 0.0;
    for (std::size_t s = 0; s < predicted.support_size(); ++s) {
        if (predicted[s] == 0.0) continue;
        if (pref.dist[s] == 0.0)
            throw AbsoluteContinuityViolation("efe_mdp: preference assigns zero mass to state " +
                                              std::to_string(s) + " reachable under the action");
        surprise -= predicted[s] * std::log(pref.dist[s]);
    }
    return -entropy(predicted) + Nats{surprise};
}

/// Exact Bayes update of a predictive state distribution on observation o.
inline BeliefState exact_posterior(const POMDPModel& p, const BeliefState& predicted,
                                   std::size_t o) {
    std::vector<double> post(p.n_states(), 0.0);
    double evidence = 0.0;
    for (std::size_t s = 0; s < p.n_states(); ++s) {
        post[s] = p.likelihood[s][o] * predicted.dist[s];
        evidence += post[s];
    }
    if (evidence <= 0.0)
        throw ZeroEvidence("observation " + std::to_string(o) +
                           " has zero probability under the predictive distribution");
    for (double& x : post) x /= evidence;
    return BeliefState{CategoricalDist(std::move(post))};
}

/// One-step state prediction: the transition mixture sum_s belief(s) P(s'|a,s).
inline BeliefState predicted_state_prior(const POMDPModel& p, const BeliefState& belief,
                                         std::size_t a) {
    std::vector<double> pred(p.n_states(), 0.0);
    for (std::size_t s = 0; s < p.n_states(); ++s) {
        const double b = belief.dist[s];
        if (b == 0.0) continue;
        const auto& row = p.base.row(a, s);
        for (std::size_t s2 = 0; s2 < p.n_states(); ++s2) pred[s2] += b * row[s2];
    }
    return BeliefState{CategoricalDist(std::move(pred))};
}

/// Marginal observation probabilities under the predicted state distribution.
inline std::vector<double> observation_marginal(const POMDPModel& p, const BeliefState& predicted) {
    std::vector<double> w(p.n_obs(), 0.0);
    for (std::size_t s = 0; s < p.n_states(); ++s) {
        const double ps = predicted.dist[s];
        if (ps == 0.0) continue;
        for (std::size_t o = 0; o < p.n_obs(); ++o) w[o] += ps * p.likelihood[s][o];
    }
    return w;
}

/// Flattened (state, observation) joint index; state-major layout.
inline std::size_t joint_index(std::size_t s, std::size_t o, std::size_t n_obs) {
    return s * n_obs + o;
}

/// Predicted joint P(o,s|a) = P(o|s) * predicted(s) as a flat categorical
/// distribution in state-major layout.
inline CategoricalDist predicted_joint(const POMDPModel& p, const BeliefState& belief,
                                       std::size_t a) {
    const BeliefState pred = predicted_state_prior(p, belief, a);
    std::vector<double> joint(p.n_states() * p.n_obs(), 0.0);
    for (std::size_t s = 0; s < p.n_states(); ++s)
        for (std::size_t o = 0; o < p.n_obs(); ++o)
            joint[joint_index(s, o, p.n_obs())] = pred.dist[s] * p.likelihood[s][o];
    return CategoricalDist(std::move(joint));
}

enum class PomdpEfeForm { risk_ambiguity, value };

/// risk + ambiguity decomposition:
///   E_{predicted}[H[P(o|s)]] + KL[predicted || pref_states]
inline Nats efe_pomdp_risk_ambiguity(const POMDPModel& p, const BeliefState& belief, std::size_t a,
                                     const PreferenceDistribution& pref_states) {
    if (pref_states.over != PreferenceDistribution::Over::states ||
        pref_states.dist.support_size() != p.n_states())
        throw std::invalid_argument("risk term needs a state preference matching the model");
    const BeliefState pred = predicted_state_prior(p, belief, a);
    double ambiguity = 0.0;
    for (std::size_t s = 0; s < p.n_states(); ++s)
        if (pred.dist[s] > 0.0)
            ambiguity += pred.dist[s] * entropy(CategoricalDist(p.likelihood[s])).value();
    return Nats{ambiguity} + kl_divergence(pred.dist, pref_states.dist);
}

/// negative intrinsic - extrinsic decomposition:
///   -E_{P(o|a)}[KL[posterior(o) || predicted]] - E_{P(o,s|a)}[ln pref_obs]
/// Observations with zero marginal probability are pruned with zero weight.
inline Nats efe_pomdp_value(const POMDPModel& p, const BeliefState& belief, std::size_t a,
                            const PreferenceDistribution& pref_obs) {
    if (pref_obs.over != PreferenceDistribution::Over::observations ||
        pref_obs.dist.support_size() != p.n_obs())
        throw std::invalid_argument("value form needs an observation preference matching the model");
    const BeliefState pred = predicted_state_prior(p, belief, a);
    const std::vector<double> obs_w = observation_marginal(p, pred);
    double intrinsic = 0.0;
    double extrinsic = 0.0;
    for (std::size_t o = 0; o < p.n_obs(); ++o) {
        if (obs_w[o] == 0.0) continue;
        if (pref_obs.dist[o] == 0.0)
            throw AbsoluteContinuityViolation(
                "observation preference assigns zero mass to reachable observation " +
                std::to_string(o));
        const BeliefState post = exact_posterior(p, pred, o);
        intrinsic += obs_w[o] * kl_divergence(post.dist, pred.dist).value();
        extrinsic += obs_w[o] * std::log(pref_obs.dist[o]);
    }
    return Nats{-intrinsic - extrinsic};
}

/// Single-step expected free energy in a POMDP, in either decomposition.
/// The two forms agree only under matched state/observation preferences;
/// callers compare them via their residual rather than assuming equality.
inline Nats efe_pomdp(const POMDPModel& p, const BeliefState& belief, std::size_t a,
                      const PreferenceDistribution& pref_states,
                      const PreferenceDistribution& pref_obs, PomdpEfeForm form) {
    return form == PomdpEfeForm::risk_ambiguity
               ? efe_pomdp_risk_ambiguity(p, belief, a, pref_states)
               : efe_pomdp_value(p, belief, a, pref_obs);
}

/// The deliberation-bounded optimal posterior: prior reweighted by
/// exponentiated utilities at inverse temperature beta.
inline CategoricalDist itbr_optimal_posterior(const CategoricalDist& prior,
                                              const std::vector<double>& utilities, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("itbr posterior requires beta > 0");
    return gibbs(prior, utilities, beta);
}

/// Bounded-rational free energy of a candidate posterior q over next states:
///   E_q[u(R)] - (1/beta) KL[q || P(s'|a, s_now)]
/// Maximized over q by the Gibbs posterior.
inline double itbr_free_energy_mdp(const MDPModel& m, std::size_t s_now, std::size_t a,
                                   const CategoricalDist& q, const UtilityFunction& u,
                                   double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("itbr free energy requires beta > 0");
    if (q.support_size() != m.n_states())
        throw std::invalid_argument("itbr_free_energy_mdp: posterior support mismatch");
    const CategoricalDist prior = m.row_dist(a, s_now);
    double eu = 0.0;
    for (std::size_t s = 0; s < q.support_size(); ++s)
        if (q[s] > 0.0) eu += q[s] * u(m.reward[s]);
    return eu - kl_divergence(q, prior).value() / beta;
}

/// POMDP analogue over a joint posterior q(o,s|a) (state-major flat layout).
/// The utility argument is u(R(s)): observation- and action-independent.
inline double itbr_free_energy_pomdp(const POMDPModel& p, const BeliefState& belief, std::size_t a,
                                     const CategoricalDist& q_joint, const UtilityFunction& u,
                                     double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("itbr free energy requires beta > 0");
    if (q_joint.support_size() != p.n_states() * p.n_obs())
        throw std::invalid_argument("itbr_free_energy_pomdp: joint support mismatch");
    const CategoricalDist prior = predicted_joint(p, belief, a);
    double eu = 0.0;
    for (std::size_t s = 0; s < p.n_states(); ++s)
        for (std::size_t o = 0; o < p.n_obs(); ++o) {
            const double qso = q_joint[joint_index(s, o, p.n_obs())];
            if (qso > 0.0) eu += qso * u(p.base.reward[s]);
        }
    return eu - kl_divergence(q_joint, prior).value() / beta;
}

/// KL[P(s'|a, s_now) || pref_star]: action selection by minimal divergence
/// from a target state distribution.
inline Nats divergence_objective_mdp(const MDPModel& m, std::size_t s_now, std::size_t a,
                                     const PreferenceDistribution& pref_star) {
    if (pref_star.over != PreferenceDistribution::Over::states ||
        pref_star.dist.support_size() != m.n_states())
        throw std::invalid_argument("divergence objective needs a state preference");
    return kl_divergence(m.row_dist(a, s_now), pref_star.dist);
}

/// Joint divergence objective for POMDPs:
///   KL[Q(o,s|a) || P*(o,s)]  with  Q(o,s|a) = P(o|s) predicted(s)
/// and the target joint factorized as P*(o,s) = pref_obs(o) * posterior_o(s).
/// Computed literally as the joint sum; the extrinsic-minus-intrinsic route
/// lives in the identity verifiers.
inline Nats feef(const POMDPModel& p, const BeliefState& belief, std::size_t a,
                 const PreferenceDistribution& pref_obs) {
    if (pref_obs.over != PreferenceDistribution::Over::observations ||
        pref_obs.dist.support_size() != p.n_obs())
        throw std::invalid_argument("feef needs an observation preference matching the model");
    const BeliefState pred = predicted_state_prior(p, belief, a);
    const std::vector<double> obs_w = observation_marginal(p, pred);
    double total = 0.0;
    for (std::size_t o = 0; o < p.n_obs(); ++o) {
        if (obs_w[o] == 0.0) continue;
        if (pref_obs.dist[o] == 0.0)
            throw AbsoluteContinuityViolation(
                "observation preference assigns zero mass to reachable observation " +
                std::to_string(o));
        const BeliefState post = exact_posterior(p, pred, o);
        for (std::size_t s = 0; s < p.n_states(); ++s) {
            const double q = pred.dist[s] * p.likelihood[s][o];
            if (q == 0.0) continue;
            total += q * std::log(q / (pref_obs.dist[o] * post.dist[s]));
        }
    }
    return Nats{total};
}

// ---------------------------------------------------------------------------
// Objective specifications and action selection
// ---------------------------------------------------------------------------

struct RewardMaxObjective {};

struct ExpectedUtilityObjective {
    UtilityFunction u;
    // Optional payoff channel replacing the model's rewards; unlike rewards
    // it may contain negative entries.
    std::optional<std::vector<double>> payoffs;
};

struct EfeMdpObjective {
    PreferenceDistribution pref;
    EfeForm form = EfeForm::kl;
};

struct EfePomdpRiskAmbiguityObjective {
    PreferenceDistribution pref_states;
    PreferenceDistribution pref_obs;
};

struct EfePomdpValueObjective {
    PreferenceDistribution pref_obs;
};

struct ItbrMdpObjective {
    double beta;
    UtilityFunction u;
};

struct ItbrPomdpObjective {
    double beta;
    UtilityFunction u;
};

struct DivergenceMdpObjective {
    PreferenceDistribution pref;
};

struct FeefObjective {
    PreferenceDistribution pref_obs;
};

using ObjectiveSpec =
    std::variant<RewardMaxObjective, ExpectedUtilityObjective, EfeMdpObjective,
                 EfePomdpRiskAmbiguityObjective, EfePomdpValueObjective, ItbrMdpObjective,
                 ItbrPomdpObjective, DivergenceMdpObjective, FeefObjective>;

enum class OptimizationSense { maximize, minimize };

/// Each objective kind carries a fixed optimization sense.
inline OptimizationSense objective_sense(const ObjectiveSpec& spec) {
    return std::visit(
        [](const auto& s) -> OptimizationSense {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, RewardMaxObjective> ||
                          std::is_same_v<T, ExpectedUtilityObjective> ||
                          std::is_same_v<T, ItbrMdpObjective> ||
                          std::is_same_v<T, ItbrPomdpObjective>)
                return OptimizationSense::maximize;
            else
                return OptimizationSense::minimize;
        },
        spec);
}

inline std::string objective_name(const ObjectiveSpec& spec) {
    struct Namer {
        std::string operator()(const RewardMaxObjective&) const { return "reward-max"; }
        std::string operator()(const ExpectedUtilityObjective& o) const {
            return "expected-utility[" + o.u.describe() + "]";
        }
        std::string operator()(const EfeMdpObjective&) const { return "efe-mdp"; }
        std::string operator()(const EfePomdpRiskAmbiguityObjective&) const {
            return "efe-pomdp[risk-ambiguity]";
        }
        std::string operator()(const EfePomdpValueObjective&) const { return "efe-pomdp[value]"; }
        std::string operator()(const ItbrMdpObjective&) const { return "itbr-mdp"; }
        std::string operator()(const ItbrPomdpObjective&) const { return "itbr-pomdp"; }
        std::string operator()(const DivergenceMdpObjective&) const { return "divergence-mdp"; }
        std::string operator()(const FeefObjective&) const { return "feef"; }
    };
    return std::visit(Namer{}, spec);
}

/// Per-action objective values with the optimal set under the objective's
/// sense. Ties are reported as sets, never broken arbitrarily.
struct ActionEvaluation {
    std::vector<double> values;
    std::vector<std::size_t> optimal_set;
    bool tie = false;
};

namespace detail {

inline ActionEvaluation pick_optimal(std::vector<double> values, OptimizationSense sense,
                                     double tie_tol) {
    ActionEvaluation eval;
    eval.values = std::move(values);
    double best = eval.values.front();
    for (double v : eval.values)
        best = sense == OptimizationSense::maximize ? std::max(best, v) : std::min(best, v);
    for (std::size_t a = 0; a < eval.values.size(); ++a)
        if (std::abs(eval.values[a] - best) <= tie_tol) eval.optimal_set.push_back(a);
    eval.tie = eval.optimal_set.size() > 1;
    return eval;
}

inline const std::vector<double>& payoff_vector(const MDPModel& m,
                                                const ExpectedUtilityObjective& o) {
    if (o.payoffs) {
        if (o.payoffs->size() != m.n_states())
            throw std::invalid_argument("payoff override length does not match state count");
        return *o.payoffs;
    }
    return m.reward;
}

/// Expected u(payoff) under a predicted state distribution; zero-probability
/// entries are skipped.
inline double expected_payoff_utility(const CategoricalDist& pred,
                                      const std::vector<double>& payoffs,
                                      const UtilityFunction& u) {
    double e = 0.0;
    for (std::size_t s = 0; s < pred.support_size(); ++s)
        if (pred[s] > 0.0) e += pred[s] * u(payoffs[s]);
    return e;
}

/// Single-step objective value on an MDP for a predicted next-state
/// distribution (shared by select_action and policy evaluation).
inline double mdp_step_value(const MDPModel& m, const CategoricalDist& pred,
                             const ObjectiveSpec& spec) {
    if (std::holds_alternative<RewardMaxObjective>(spec)) return expectation(pred, m.reward);
    if (const auto* eu = std::get_if<ExpectedUtilityObjective>(&spec))
        return expected_payoff_utility(pred, payoff_vector(m, *eu), eu->u);
    if (const auto* efe = std::get_if<EfeMdpObjective>(&spec)) {
        if (efe->form == EfeForm::kl) return kl_divergence(pred, efe->pref.dist).value();
        double surprise = 0.0;
        for (std::size_t s = 0; s < pred.support_size(); ++s) {
            if (pred[s] == 0.0) continue;
            if (efe->pref.dist[s] == 0.0)
                throw AbsoluteContinuityViolation("preference assigns zero mass to reachable state " +
                                                  std::to_string(s));
            surprise -= pred[s] * std::log(efe->pref.dist[s]);
        }
        return -entropy(pred).value() + surprise;
    }
    if (const auto* itbr = std::get_if<ItbrMdpObjective>(&spec)) {
        std::vector<double> utilities(m.n_states());
        for (std::size_t s = 0; s < m.n_states(); ++s) utilities[s] = itbr->u(m.reward[s]);
        return gibbs_log_partition(pred, utilities, itbr->beta) / itbr->beta;
    }
    if (const auto* div = std::get_if<DivergenceMdpObjective>(&spec))
        return kl_divergence(pred, div->pref.dist).value();
    throw std::invalid_argument("objective requires a POMDP, got an MDP");
}

/// Single-step objective value on a POMDP at a belief (nats-valued kinds and
/// single-step expected utility).
inline double pomdp_step_value(const POMDPModel& p, const BeliefState& belief, std::size_t a,
                               const ObjectiveSpec& spec) {
    if (std::holds_alternative<RewardMaxObjective>(spec)) {
        const BeliefState pred = predicted_state_prior(p, belief, a);
        return expectation(pred.dist, p.base.reward);
    }
    if (const auto* eu = std::get_if<ExpectedUtilityObjective>(&spec)) {
        const BeliefState pred = predicted_state_prior(p, belief, a);
        return expected_payoff_utility(pred.dist, payoff_vector(p.base, *eu), eu->u);
    }
    if (const auto* risk = std::get_if<EfePomdpRiskAmbiguityObjective>(&spec))
        return efe_pomdp_risk_ambiguity(p, belief, a, risk->pref_states).value();
    if (const auto* value = std::get_if<EfePomdpValueObjective>(&spec))
        return efe_pomdp_value(p, belief, a, value->pref_obs).value();
    if (const auto* itbr = std::get_if<ItbrPomdpObjective>(&spec)) {
        const CategoricalDist prior = predicted_joint(p, belief, a);
        std::vector<double> utilities(prior.support_size());
        for (std::size_t s = 0; s < p.n_states(); ++s)
            for (std::size_t o = 0; o < p.n_obs(); ++o)
                utilities[joint_index(s, o, p.n_obs())] = itbr->u(p.base.reward[s]);
        return gibbs_log_partition(prior, utilities, itbr->beta) / itbr->beta;
    }
    if (const auto* fe = std::get_if<FeefObjective>(&spec))
        return feef(p, belief, a, fe->pref_obs).value();
    throw std::invalid_argument("objective requires an MDP, got a POMDP");
}

}  // namespace detail

/// Evaluates the objective for every action from a known current state and
/// returns all actions attaining the optimum within tie_tol.
inline ActionEvaluation select_action(const MDPModel& m, std::size_t s_now,
                                      const ObjectiveSpec& spec, double tie_tol = kTieTol) {
    std::vector<double> values(m.n_actions());
    for (std::size_t a = 0; a < m.n_actions(); ++a)
        values[a] = detail::mdp_step_value(m, m.row_dist(a, s_now), spec);
    return detail::pick_optimal(std::move(values), objective_sense(spec), tie_tol);
}

/// POMDP variant: evaluates the objective for every action at a belief.
inline ActionEvaluation select_action(const POMDPModel& p, const BeliefState& belief,
                                      const ObjectiveSpec& spec, double tie_tol = kTieTol) {
    std::vector<double> values(p.n_actions());
    for (std::size_t a = 0; a < p.n_actions(); ++a)
        values[a] = detail::pomdp_step_value(p, belief, a, spec);
    return detail::pick_optimal(std::move(values), objective_sense(spec), tie_tol);
}

// ---------------------------------------------------------------------------
// Finite-horizon policy evaluation
// ---------------------------------------------------------------------------

/// Two-step policy whose second action reacts to the observation received
/// after the first step. Fixed sequences are the special case of a constant
/// reaction row.
struct ReactivePolicy2 {
    std::size_t first_action;
    std::vector<std::size_t> second_action_by_obs;
};

namespace detail {

// Weighted particle over (state, accumulated payoff).
struct PathParticle {
    std::size_t state;
    double accumulated;
    double weight;
};

inline double finish_utility(const std::vector<PathParticle>& particles, const UtilityFunction& u,
                             bool apply_utility) {
    double total = 0.0;
    for (const auto& pp : particles)
        total += pp.weight * (apply_utility ? u(pp.accumulated) : pp.accumulated);
    return total;
}

inline std::vector<PathParticle> advance_particles(const MDPModel& m,
                                                   const std::vector<PathParticle>& particles,
                                                   std::size_t a,
                                                   const std::vector<double>& payoffs) {
    std::vector<PathParticle> next;
    for (const auto& pp : particles) {
        const auto& row = m.row(a, pp.state);
        for (std::size_t s2 = 0; s2 < row.size(); ++s2)
            if (row[s2] > 0.0)
                next.push_back({s2, pp.accumulated + payoffs[s2], pp.weight * row[s2]});
    }
    return next;
}

inline void check_branch_conservation(double total_weight) {
    if (std::abs(total_weight - 1.0) > kBranchWeightTol)
        throw std::logic_error("belief-tree observation weights sum to " +
                               std::to_string(total_weight) + ", expected 1 within 1e-9");
}

}  // namespace detail

/// Cumulative finite-horizon value of a fixed action sequence on an MDP:
/// the sum over steps of the single-step objective evaluated on the
/// propagated state distribution (undiscounted).
inline double evaluate_policy(const MDPModel& m, std::size_t s0, const PolicySpec& pi,
                              const ObjectiveSpec& spec) {
    if (pi.actions.size() > static_cast<std::size_t>(m.horizon))
        throw std::invalid_argument("policy longer than the model horizon");
    CategoricalDist current = CategoricalDist::delta(m.n_states(), s0);
    double total = 0.0;
    for (std::size_t a : pi.actions) {
        if (a >= m.n_actions()) throw std::invalid_argument("policy action index out of range");
        std::vector<double> pred(m.n_states(), 0.0);
        for (std::size_t s = 0; s < m.n_states(); ++s) {
            if (current[s] == 0.0) continue;
            const auto& row = m.row(a, s);
            for (std::size_t s2 = 0; s2 < m.n_states(); ++s2) pred[s2] += current[s] * row[s2];
        }
        CategoricalDist predicted(std::move(pred));
        total += detail::mdp_step_value(m, predicted, spec);
        current = std::move(predicted);
    }
    return total;
}

namespace detail {

/// Recursive belief-tree accumulation of per-step POMDP objective values.
/// Branches on every observation with its marginal probability; zero-evidence
/// branches are pruned with zero weight.
inline double pomdp_policy_nats(const POMDPModel& p, const BeliefState& belief,
                                const std::vector<std::size_t>& actions, std::size_t step,
                                const ObjectiveSpec& spec) {
    if (step == actions.size()) return 0.0;
    const std::size_t a = actions[step];
    double total = pomdp_step_value(p, belief, a, spec);
    if (step + 1 == actions.size()) return total;

    const BeliefState pred = predicted_state_prior(p, belief, a);
    const std::vector<double> obs_w = observation_marginal(p, pred);
    double mass = 0.0;
    for (double w : obs_w) mass += w;
    check_branch_conservation(mass);
    for (std::size_t o = 0; o < p.n_obs(); ++o) {
        if (obs_w[o] == 0.0) continue;
        const BeliefState post = exact_posterior(p, pred, o);
        total += obs_w[o] * pomdp_policy_nats(p, post, actions, step + 1, spec);
    }
    return total;
}

}  // namespace detail

/// Finite-horizon policy value on a POMDP by exact belief-tree rollout.
/// Per-step objectives accumulate along observation branches weighted by
/// their exact probabilities. For reward-seeking objectives (reward-max,
/// expected utility) the value is the expected utility of the undiscounted
/// cumulative payoff across full paths.
inline double evaluate_policy(const POMDPModel& p, const BeliefState& init, const PolicySpec& pi,
                              const ObjectiveSpec& spec) {
    if (pi.actions.size() > static_cast<std::size_t>(p.base.horizon))
        throw std::invalid_argument("policy longer than the model horizon");
    for (std::size_t a : pi.actions)
        if (a >= p.n_actions()) throw std::invalid_argument("policy action index out of range");

    if (const auto* eu = std::get_if<ExpectedUtilityObjective>(&spec)) {
        // Observations cannot influence a fixed sequence, so the path
        // expectation reduces to the underlying MDP rollout.
        const std::vector<double>& payoffs = detail::payoff_vector(p.base, *eu);
        std::vector<detail::PathParticle> particles;
        for (std::size_t s = 0; s < p.n_states(); ++s)
            if (init.dist[s] > 0.0) particles.push_back({s, 0.0, init.dist[s]});
        for (std::size_t a : pi.actions)
            particles = detail::advance_particles(p.base, particles, a, payoffs);
        return detail::finish_utility(particles, eu->u, true);
    }
    if (std::holds_alternative<RewardMaxObjective>(spec)) {
        ExpectedUtilityObjective linear{UtilityFunction::linear(), std::nullopt};
        return evaluate_policy(p, init, pi, ObjectiveSpec{linear});
    }
    return detail::pomdp_policy_nats(p, init, pi.actions, 0, spec);
}

/// Two-step reactive policy value on a POMDP. The second action is chosen by
/// the observation received after the first step; branches with zero
/// observation probability are pruned.
inline double evaluate_reactive_policy(const POMDPModel& p, const BeliefState& init,
                                       const ReactivePolicy2& pi, const ObjectiveSpec& spec) {
    if (p.base.horizon < 2) throw std::invalid_argument("reactive policy needs horizon >= 2");
    if (pi.second_action_by_obs.size() != p.n_obs())
        throw std::invalid_argument("reaction row must map every observation to an action");
    if (pi.first_action >= p.n_actions()) throw std::invalid_argument("action index out of range");
    for (std::size_t a : pi.second_action_by_obs)
        if (a >= p.n_actions()) throw std::invalid_argument("action index out of range");

    const bool reward_seeking = std::holds_alternative<ExpectedUtilityObjective>(spec) ||
                                std::holds_alternative<RewardMaxObjective>(spec);
    if (reward_seeking) {
        ExpectedUtilityObjective eu =
            std::holds_alternative<RewardMaxObjective>(spec)
                ? ExpectedUtilityObjective{UtilityFunction::linear(), std::nullopt}
                : std::get<ExpectedUtilityObjective>(spec);
        const std::vector<double>& payoffs = detail::payoff_vector(p.base, eu);

        std::vector<detail::PathParticle> particles;
        for (std::size_t s = 0; s < p.n_states(); ++s)
            if (init.dist[s] > 0.0) particles.push_back({s, 0.0, init.dist[s]});
        particles = detail::advance_particles(p.base, particles, pi.first_action, payoffs);

        // Split by the observation emitted from the arrived-at state, react,
        // then advance each branch under its chosen second action.
        double total = 0.0;
        for (std::size_t o = 0; o < p.n_obs(); ++o) {
            std::vector<detail::PathParticle> branch;
            for (const auto& pp : particles) {
                const double w = pp.weight * p.likelihood[pp.state][o];
                if (w > 0.0) branch.push_back({pp.state, pp.accumulated, w});
            }
            if (branch.empty()) continue;
            branch = detail::advance_particles(p.base, branch, pi.second_action_by_obs[o], payoffs);
            total += detail::finish_utility(branch, eu.u, true);
        }
        return total;
    }

    double total = detail::pomdp_step_value(p, init, pi.first_action, spec);
    const BeliefState pred = predicted_state_prior(p, init, pi.first_action);
    const std::vector<double> obs_w = observation_marginal(p, pred);
    double mass = 0.0;
    for (double w : obs_w) mass += w;
    detail::check_branch_conservation(mass);
    for (std::size_t o = 0; o < p.n_obs(); ++o) {
        if (obs_w[o] == 0.0) continue;
        const BeliefState post = exact_posterior(p, pred, o);
        total += obs_w[o] * detail::pomdp_step_value(p, post, pi.second_action_by_obs[o], spec);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Deliberation budget -> inverse temperature
// ---------------------------------------------------------------------------

struct BetaFromBudget {
    double beta = 0.0;
    double achieved_kl = 0.0;
    // True when the requested budget exceeds the attainable supremum
    // -ln(prior mass of the argmax utility set); beta is then merely large.
    bool capped = false;
};

inline constexpr double kBudgetTol = 1e-9;

/// Inverts the monotone map beta -> KL[gibbs(prior, u, beta) || prior] by
/// bisection, returning the beta whose deliberation cost matches the budget K
/// (in nats) within kBudgetTol.
inline BetaFromBudget kl_budget_to_beta(const CategoricalDist& prior,
                                        const std::vector<double>& utilities, double budget) {
    if (utilities.size() != prior.support_size())
        throw std::invalid_argument("kl_budget_to_beta: length mismatch");
    if (!(budget >= 0.0)) throw std::invalid_argument("budget must be non-negative");

    double umin = std::numeric_limits<double>::infinity();
    double umax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < utilities.size(); ++i) {
        if (prior[i] == 0.0) continue;
        umin = std::min(umin, utilities[i]);
        umax = std::max(umax, utilities[i]);
    }
    if (umin == umax)
        throw ConstantUtility("utilities constant on the prior support; beta is undefined");
    if (budget == 0.0) return {0.0, 0.0, false};

    const auto kl_at = [&](double beta) {
        return kl_divergence(gibbs(prior, utilities, beta), prior).value();
    };

    double argmax_mass = 0.0;
    for (std::size_t i = 0; i < utilities.size(); ++i)
        if (prior[i] > 0.0 && utilities[i] == umax) argmax_mass += prior[i];
    const double supremum = -std::log(argmax_mass);

    double hi = 1.0;
    const double target = std::min(budget, supremum);
    const bool capped = budget >= supremum - 1e-12;
    while (kl_at(hi) < target - kBudgetTol && hi < 1e15) hi *= 2.0;
    if (capped) return {hi, kl_at(hi), true};

    double lo = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double k = kl_at(mid);
        if (std::abs(k - budget) <= kBudgetTol) return {mid, k, false};
        (k < budget ? lo : hi) = mid;
    }
    const double mid = 0.5 * (lo + hi);
    return {mid, kl_at(mid), false};
}

}  // namespace agency
