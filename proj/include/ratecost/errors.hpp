#pragma once

#include <stdexcept>
#include <string>

namespace ratecost {

// Instance or argument rejected before any computation (shape mismatch,
// malformed config, inadmissible parameters).
class InvalidInstance : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The requested quantity exists in general but not for this instance
// (non-Gaussian noise where a Gaussian hypothesis is needed, unknown
// regularity constants, singular covariance, ...).
class Unsupported : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Target cost at or below the unconstrained minimum.
class InfeasibleCost : public std::domain_error {
public:
    InfeasibleCost(double b, double b_min)
        : std::domain_error("infeasible (b <= b_min=" + std::to_string(b_min) + ")"),
          b_(b), b_min_(b_min) {}

    double b() const noexcept { return b_; }
    double b_min() const noexcept { return b_min_; }

private:
    double b_;
    double b_min_;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + " after " +
                             std::to_string(iterations) + " iterations)"),
          residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

}  // namespace ratecost
