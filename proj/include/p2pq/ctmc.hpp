#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "p2pq/model.hpp"

namespace p2pq::ctmc {

/// Finite box 0 <= i <= i_max jobs, 0 <= j <= j_max servers.
struct Truncation {
    int i_max = 1;
    int j_max = 1;

    std::size_t states() const noexcept {
        return static_cast<std::size_t>(i_max + 1) * static_cast<std::size_t>(j_max + 1);
    }
};

struct Transition {
    std::size_t state;  // target for outgoing lists, source for incoming lists
    double rate;
};

/// Sparse generator of the truncated (i, j) chain. States are numbered
/// i-major: index(i, j) = i * (j_max + 1) + j. Transitions that would leave
/// the box are dropped (reflecting truncation), so every row still sums to 0.
class Generator {
public:
    Generator(const SystemParams& params, Truncation trunc);

    const SystemParams& params() const noexcept { return params_; }
    const Truncation& truncation() const noexcept { return trunc_; }
    std::size_t size() const noexcept { return outflow_.size(); }

    std::size_t index(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(trunc_.j_max + 1) +
               static_cast<std::size_t>(j);
    }
    int jobs_of(std::size_t state) const noexcept {
        return static_cast<int>(state / static_cast<std::size_t>(trunc_.j_max + 1));
    }
    int servers_of(std::size_t state) const noexcept {
        return static_cast<int>(state % static_cast<std::size_t>(trunc_.j_max + 1));
    }

    std::span<const Transition> outgoing(std::size_t state) const noexcept;
    std::span<const Transition> incoming(std::size_t state) const noexcept;

    /// Total rate out of a state (minus the diagonal of Q).
    double outflow(std::size_t state) const noexcept { return outflow_[state]; }
    double outflow(int i, int j) const noexcept { return outflow_[index(i, j)]; }

    /// Largest outflow; the constant used to uniformize the chain.
    double uniformization_rate() const noexcept { return uniform_rate_; }

private:
    SystemParams params_;
    Truncation trunc_;
    std::vector<std::size_t> out_offsets_;
    std::vector<Transition> out_;
    std::vector<std::size_t> in_offsets_;
    std::vector<Transition> in_;
    std::vector<double> outflow_;
    double uniform_rate_ = 0.0;
};

/// Throws std::invalid_argument on invalid params or i_max, j_max < 1.
Generator build_generator(const SystemParams& params, Truncation trunc);

enum class SolverMethod {
    Auto,        // Direct unless the factorization would be too large
    Direct,      // sparse LU with one state pinned
    Relaxation,  // Gauss-Seidel sweeps on the uniformized kernel
};

struct SolveOptions {
    double tol = 1e-10;  // bound on the balance residual, see StateDistribution
    long max_iters = 200000;
    SolverMethod method = SolverMethod::Auto;
};

struct StateDistribution {
    Truncation trunc;
    std::vector<double> probs;  // i-major, same numbering as Generator
    /// Mass on the boundary row i = i_max or column j = j_max.
    double tail_mass_estimate = 0.0;
    double tail_mass_jobs = 0.0;     // row i = i_max only
    double tail_mass_servers = 0.0;  // column j = j_max only
    /// max_k |(pi Q)_k| / uniformization rate.
    double residual = 0.0;
    long iterations = 0;

    double at(int i, int j) const {
        return probs[static_cast<std::size_t>(i) * static_cast<std::size_t>(trunc.j_max + 1) +
                     static_cast<std::size_t>(j)];
    }
    std::vector<double> server_marginal() const;
    std::vector<double> job_marginal() const;
};

/// Stationary distribution of the truncated chain.
/// Throws convergence_error carrying the last residual if tol is not met.
StateDistribution solve_stationary(const Generator& gen, const SolveOptions& options = {});

/// max_k |(pi Q)_k| / uniformization rate for an arbitrary vector.
double balance_residual(const Generator& gen, std::span<const double> probs);

/// j_max = ceil(rho_s + 10 sqrt(rho_s)), i_max = ceil(50 (l2 + 1)).
/// Throws unstable_error for unstable params.
Truncation default_truncation(const SystemParams& params);

struct AutoSolveOptions {
    SolveOptions solve;
    double target_tail = 1e-10;
    std::size_t max_states = 4'000'000;
};

/// Solves on default_truncation(params), doubling i_max and/or j_max while
/// the corresponding boundary mass is >= target_tail.
/// Throws truncation_error if the box would exceed max_states.
StateDistribution solve_auto(const SystemParams& params, const AutoSolveOptions& options = {});

struct CtmcMoments {
    double e_nc = 0.0;
    double e_ns = 0.0;
    double e_nsnc = 0.0;
    double covariance = 0.0;
    /// |rho_c E[n_c] - E[n_s n_c] + rho_c|, zero for the untruncated chain.
    double identity_residual = 0.0;
};

/// Throws truncation_error if dist.tail_mass_estimate >= max_tail.
CtmcMoments moments(const StateDistribution& dist, const DerivedLoads& loads,
                    double max_tail = 1e-8);

/// E[n_c] of the chain restricted to j <= 1 (the two-state server).
/// Only the job boundary is checked against 1e-8; j_max = 1 is the model.
double two_state_oracle(const SystemParams& params, int i_max, const SolveOptions& options = {});

/// Dense dump with header "i,j,p".
void write_csv(std::ostream& out, const StateDistribution& dist);

}  // namespace p2pq::ctmc
