#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "p2pq/model.hpp"

namespace p2pq::sim {

struct SimConfig {
    std::uint64_t seed = 1;
    double horizon = 1e6;
    /// Discarded prefix; 10% of the horizon when unset.
    std::optional<double> warmup;
    int batches = 32;

    double effective_warmup() const noexcept { return warmup.value_or(0.1 * horizon); }
};

/// Throws std::invalid_argument unless 0 <= warmup < horizon, batches >= 10
/// and each batch is long enough to expect at least 10 arrivals of jobs or
/// servers (batch length * (lambda_c + lambda_s) >= 10).
void validate(const SimConfig& config, const SystemParams& params);

/// Time averages over [warmup, horizon]. The overload region is
/// n_s * mu_c <= lambda_c. Conditional means are absent when the region
/// was never visited.
struct SimReport {
    bool stable = false;
    double l_sim = 0.0;
    double ci_halfwidth = 0.0;  // 95%, batch means (or across replications)
    std::optional<double> l_overload_sim;
    std::optional<double> l_underload_sim;
    double a_sim = 0.0;
    double a_ci_halfwidth = 0.0;
    double e_ns_sim = 0.0;
    double e_nsnc_sim = 0.0;
    double cov_sim = 0.0;
    double cov_ci_halfwidth = 0.0;
    std::optional<double> l1;
    std::optional<double> l2;
    std::optional<double> alpha_emp;  // (l_sim - l1) / (l2 - l1)
    double overload_time_observed = 0.0;
    double underload_time_observed = 0.0;
    std::uint64_t events = 0;  // events after warmup
    int replications = 1;

    friend bool operator==(const SimReport&, const SimReport&) = default;
};

/// Gillespie simulation of the (n_c, n_s) chain, starting from an empty
/// queue and round(rho_s) servers. Bit-reproducible for fixed inputs.
SimReport run(const SystemParams& params, const SimConfig& config);

enum class SeedPolicy {
    Independent,  // replication r uses the seed's stream jumped r times
    Shared,       // every replication uses stream 0 (determinism checks)
};

struct Replicated {
    SimReport aggregate;
    std::vector<SimReport> replications;
};

/// n_reps >= 2 runs, executed on up to `threads` workers (0 = hardware
/// concurrency). The aggregate pools region times across replications and
/// takes its half-widths from the spread between replications, so it does
/// not depend on scheduling.
Replicated replicate(const SystemParams& params, const SimConfig& config, int n_reps,
                     unsigned threads = 0, SeedPolicy policy = SeedPolicy::Independent);

struct RateSample {
    double t = 0.0;
    int n_s = 0;
    double mu = 0.0;
};

/// Samples n_s(t) and mu(t) = n_s(t) mu_c at t = 0, dt, 2 dt, ... <= horizon.
std::vector<RateSample> rate_trace(const SystemParams& params, const SimConfig& config,
                                   double sample_interval);

/// Header "t,n_s,mu".
void write_trace_csv(std::ostream& out, std::span<const RateSample> trace);

}  // namespace p2pq::sim
