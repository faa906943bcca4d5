#pragma once

#include <stdexcept>
#include <string>

namespace p2pq {

/// Raised when a quantity is requested that only exists for a stable system
/// (rho_c < rho_s), e.g. the delay bounds.
class unstable_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Iterative or direct stationary solve did not reach the requested residual.
class convergence_error : public std::runtime_error {
public:
    convergence_error(const std::string& what, double last_residual)
        : std::runtime_error(what), last_residual_(last_residual) {}

    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// The truncation box holds too much probability on its boundary.
class truncation_error : public std::runtime_error {
public:
    truncation_error(const std::string& what, double tail_mass)
        : std::runtime_error(what), tail_mass_(tail_mass) {}

    double tail_mass() const noexcept { return tail_mass_; }

private:
    double tail_mass_;
};

}  // namespace p2pq
