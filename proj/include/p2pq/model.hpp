#pragma once

namespace p2pq {

/// Rates of the P2P queue: Poisson job arrivals (lambda_c), per-server
/// service rate (mu_c), Poisson server arrivals (lambda_s) and exponential
/// server lifetimes with mean 1/mu_s.
struct SystemParams {
    double lambda_c = 0.0;
    double mu_c = 0.0;
    double lambda_s = 0.0;
    double mu_s = 0.0;

    friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

/// Throws std::invalid_argument unless all four rates are finite and > 0.
void validate(const SystemParams& params);

/// Loads and service-rate statistics implied by SystemParams. The number of
/// servers is Poisson(rho_s) in steady state, so the aggregate rate
/// mu = n_s * mu_c has mean rho_s * mu_c and variance mu_bar * mu_c.
struct DerivedLoads {
    double rho_c = 0.0;
    double rho_s = 0.0;
    double mu_bar = 0.0;
    double sigma_mu = 0.0;
    double sigma_ns = 0.0;
    // Carried through so consumers need not keep the params alongside.
    double lambda_c = 0.0;
    double mu_c = 0.0;
};

DerivedLoads derive_loads(const SystemParams& params);

struct StabilityReport {
    bool stable = false;
    double margin = 0.0;       // mu_bar - lambda_c
    double utilization = 0.0;  // rho_c / rho_s
};

/// The single stability predicate used everywhere: rho_c < rho_s.
/// Equality is unstable.
bool is_stable(const DerivedLoads& loads) noexcept;

StabilityReport check_stability(const DerivedLoads& loads) noexcept;

/// Throws unstable_error naming `what` if the system is not stable.
void require_stable(const DerivedLoads& loads, const char* what);

}  // namespace p2pq
