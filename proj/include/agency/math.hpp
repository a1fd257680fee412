#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "agency/errors.hpp"

namespace agency {

/// Tolerance for accepting a probability vector as normalized on construction.
inline constexpr double kNormalizationTol = 1e-9;

/// Two distributions count as equal when no entry differs by more than this.
inline constexpr double kDistEqualityTol = 1e-12;

/// An information-theoretic quantity measured in nats (natural-log base).
class Nats {
public:
    constexpr Nats() = default;
    explicit constexpr Nats(double v) : value_(v) {}

    constexpr double value() const { return value_; }
    bool finite() const { return std::isfinite(value_); }

    constexpr Nats operator+(Nats rhs) const { return Nats{value_ + rhs.value_}; }
    constexpr Nats operator-(Nats rhs) const { return Nats{value_ - rhs.value_}; }
    constexpr Nats operator-() const { return Nats{-value_}; }
    Nats& operator+=(Nats rhs) {
        value_ += rhs.value_;
        return *this;
    }
    constexpr auto operator<=>(const Nats&) const = default;

private:
    double value_ = 0.0;
};

/// Normalized finite probability vector; the common currency of every
/// objective in this library. Entries are validated non-negative, required
/// to sum to 1 within kNormalizationTol, and renormalized exactly once at
/// construction. Never silently renormalized afterwards.
class CategoricalDist {
public:
    explicit CategoricalDist(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.empty())
            throw std::invalid_argument("categorical distribution needs support size >= 1");
        double sum = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) {
            if (!(probs_[i] >= 0.0) || !std::isfinite(probs_[i]))
                throw std::invalid_argument("probability entry " + std::to_string(i) +
                                            " is negative or non-finite");
            sum += probs_[i];
        }
        if (std::abs(sum - 1.0) > kNormalizationTol)
            throw std::invalid_argument("probabilities sum to " + std::to_string(sum) +
                                        ", expected 1 within 1e-9");
        for (double& p : probs_) p /= sum;
    }

    static CategoricalDist uniform(std::size_t support) {
        return CategoricalDist(std::vector<double>(support, 1.0 / static_cast<double>(support)));
    }

    static CategoricalDist delta(std::size_t support, std::size_t at) {
        std::vector<double> p(support, 0.0);
        p.at(at) = 1.0;
        return CategoricalDist(std::move(p));
    }

    std::size_t support_size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    const std::vector<double>& probs() const { return probs_; }

    bool approx_equal(const CategoricalDist& other, double tol = kDistEqualityTol) const {
        if (other.support_size() != support_size()) return false;
        for (std::size_t i = 0; i < probs_.size(); ++i)
            if (std::abs(probs_[i] - other.probs_[i]) > tol) return false;
        return true;
    }

private:
    std::vector<double> probs_;
};

/// Shannon entropy -sum p ln p, with the convention 0 ln 0 = 0.
/// Always in [0, ln(support_size)].
inline Nats entropy(const CategoricalDist& p) {
    double h = 0.0;
    for (double pi : p.probs())
        if (pi > 0.0) h -= pi * std::log(pi);
    return Nats{h};
}

/// KL divergence sum p ln(p/q) with 0 ln(0/q) = 0. Throws
/// AbsoluteContinuityViolation when p has mass on an entry where q has none.
inline Nats kl_divergence(const CategoricalDist& p, const CategoricalDist& q) {
    if (p.support_size() != q.support_size())
        throw std::invalid_argument("kl_divergence: support sizes differ");
    double d = 0.0;
    for (std::size_t i = 0; i < p.support_size(); ++i) {
        const double pi = p[i];
        if (pi == 0.0) continue;
        const double qi = q[i];
        if (qi == 0.0)
            throw AbsoluteContinuityViolation(
                "kl_divergence undefined: p[" + std::to_string(i) + "] = " +
                std::to_string(pi) + " but q[" + std::to_string(i) + "] = 0");
        d += pi * std::log(pi / qi);
    }
    return Nats{d};
}

/// Expectation sum_i p_i * values_i.
inline double expectation(const CategoricalDist& p, const std::vector<double>& values) {
    if (values.size() != p.support_size())
        throw std::invalid_argument("expectation: value vector length does not match support");
    double e = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) e += p[i] * values[i];
    return e;
}

/// Reweights a prior by exponentiated potentials,
///     out_i = prior_i * exp(beta * potential_i) / Z_beta,
/// stabilized by subtracting the max potential before exponentiation so that
/// potential magnitudes up to ~700 are safe. beta = 0 returns the prior.
inline CategoricalDist gibbs(const CategoricalDist& prior, const std::vector<double>& potentials,
                             double beta) {
    if (potentials.size() != prior.support_size())
        throw std::invalid_argument("gibbs: potential vector length does not match support");
    if (!(beta >= 0.0))
        throw std::invalid_argument("gibbs: beta must be non-negative");

    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < potentials.size(); ++i)
        if (prior[i] > 0.0) shift = std::max(shift, beta * potentials[i]);

    std::vector<double> w(potentials.size(), 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < potentials.size(); ++i) {
        if (prior[i] == 0.0) continue;
        w[i] = prior[i] * std::exp(beta * potentials[i] - shift);
        z += w[i];
    }
    if (z <= 0.0 || !std::isfinite(z))
        throw DegenerateNormalizer(
            "gibbs: reweighted prior mass vanished or is non-finite; cannot normalize");
    for (double& wi : w) wi /= z;
    return CategoricalDist(std::move(w));
}

/// ln sum_i prior_i exp(beta * potential_i): the log normalizer of gibbs().
/// This is also the optimal bounded free energy scaled by beta.
inline double gibbs_log_partition(const CategoricalDist& prior,
                                  const std::vector<double>& potentials, double beta) {
    if (potentials.size() != prior.support_size())
        throw std::invalid_argument("gibbs_log_partition: length mismatch");
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < potentials.size(); ++i)
        if (prior[i] > 0.0) shift = std::max(shift, beta * potentials[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < potentials.size(); ++i)
        if (prior[i] > 0.0) z += prior[i] * std::exp(beta * potentials[i] - shift);
    return shift + std::log(z);
}

/// ln sum_i exp(beta * v_i), stabilized. The softmax log normalizer.
inline double log_sum_exp(const std::vector<double>& values, double beta = 1.0) {
    if (values.empty()) throw std::invalid_argument("log_sum_exp of empty vector");
    double shift = -std::numeric_limits<double>::infinity();
    for (double v : values) shift = std::max(shift, beta * v);
    double z = 0.0;
    for (double v : values) z += std::exp(beta * v - shift);
    return shift + std::log(z);
}

}  // namespace agency
