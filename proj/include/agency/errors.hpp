#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace agency {

/// A distribution places mass where its reference distribution has none,
/// so the KL divergence is undefined (infinite). Callers decide whether to
/// treat this as +inf or as a hard error.
class AbsoluteContinuityViolation : public std::runtime_error {
public:
    explicit AbsoluteContinuityViolation(const std::string& msg)
        : std::runtime_error(msg) {}
};

/// Every Gibbs weight underflowed to zero, so the reweighted distribution
/// cannot be normalized.
class DegenerateNormalizer : public std::runtime_error {
public:
    explicit DegenerateNormalizer(const std::string& msg)
        : std::runtime_error(msg) {}
};

/// Argument outside a utility function's domain (e.g. log of a non-positive
/// reward, fractional power of a negative payoff).
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& msg) : std::domain_error(msg) {}
};

/// Risk attitudes are undefined for a lottery with a single certain outcome.
class DegenerateLottery : public std::runtime_error {
public:
    explicit DegenerateLottery(const std::string& msg)
        : std::runtime_error(msg) {}
};

/// Bayesian update on an observation that has zero probability under the
/// predictive distribution.
class ZeroEvidence : public std::runtime_error {
public:
    explicit ZeroEvidence(const std::string& msg) : std::runtime_error(msg) {}
};

/// Utilities are constant on the prior's support, so every inverse
/// temperature yields the same posterior and the budget map is degenerate.
class ConstantUtility : public std::runtime_error {
public:
    explicit ConstantUtility(const std::string& msg)
        : std::runtime_error(msg) {}
};

/// Malformed model or report file (syntax, missing/unknown fields).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A structurally well-formed model violates its invariants. Carries the
/// individual violations with index paths.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& vs) {
        std::string out = "model validation failed:";
        for (const auto& v : vs) {
            out += "\n  - ";
            out += v;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

}  // namespace agency
