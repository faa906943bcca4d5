#pragma once

#include "p2pq/model.hpp"
#include "p2pq/poisson.hpp"

namespace p2pq::analytics {

/// Closed-form estimates for one stable parameter set.
struct AnalyticEstimates {
    double l1 = 0.0;  // constant-rate (M/M/1) lower bound
    double l2 = 0.0;  // two-state-server upper bound
    double a = 0.0;   // Pr{mu <= lambda_c}
    double b = 0.0;   // Pr{mu <= mu_bar}
    double alpha_hat = 0.0;
    double l_apk = 0.0;
    double l_underload = 0.0;
    double l_overload_assumed = 0.0;
    double covariance = 0.0;  // Cov(n_s, n_c) implied by l_apk
};

struct ServiceTimeMoments {
    double mean_s = 0.0;
    double var_s = 0.0;
};

/// lambda_c / (mu_bar - lambda_c). Throws unstable_error unless stable.
double lower_bound(const DerivedLoads& loads);

/// (1 + mu_c / mu_s) * lower_bound. Throws unstable_error unless stable.
double upper_bound(const SystemParams& params, const DerivedLoads& loads);

/// The same bound written as lambda_c (mu_s + mu_c) / (mu_c lambda_s - lambda_c mu_s),
/// which is the limit of the two-state mean as mu_c, mu_s grow at fixed ratio.
double two_state_limit_mean(const SystemParams& params);

struct OverloadProbs {
    double a = 0.0;
    double b = 0.0;
};

/// a = F(rho_c), b = F(rho_s) with F the extended Poisson(rho_s) CDF.
OverloadProbs overload_probs(const DerivedLoads& loads, CdfMode mode);

/// a / b clamped to [0, 1]. Requires 0 <= a <= b <= 1 up to the clamp and b > 0.
double alpha_hat(double a, double b);

/// Approximate P-K estimate and its companions. LinearInterp is the
/// default because PaperLiteral can push a and b above their true range.
AnalyticEstimates apk_estimate(const SystemParams& params, CdfMode mode = CdfMode::LinearInterp);

/// Cov(n_s, n_c) = rho_c - (rho_s - rho_c) L, evaluated as
/// (rho_s - rho_c) (l1 - L) so that L == l1 gives exactly zero.
double covariance_from_L(const DerivedLoads& loads, double mean_queue_length);

/// Delta-method moments of S = 1/mu with Var[mu] = mu_bar * mu_c:
/// E[S] ~ 1/mu_bar + Var[mu]/mu_bar^3, Var[S] ~ Var[mu]/mu_bar^4.
ServiceTimeMoments service_time_moments(const DerivedLoads& loads);

/// Classic M/G/1 Pollaczek-Khinchine mean number in system.
/// Throws unstable_error if lambda * mean_s >= 1.
double pk_mg1(double lambda, double mean_s, double var_s);

/// Exact solution of the queue whose server count is restricted to {0, 1}
/// (server arrivals at lambda_s only when absent). Generating functions
/// G0(z) = mu_s X / D(z) and G1(z) = (lambda_s + lambda_c - lambda_c z) X / D(z)
/// with X = lambda_s mu_c / (lambda_s + mu_s) - lambda_c and
/// D(z) = lambda_c^2 z^2 - lambda_c (lambda_s + mu_s + lambda_c + mu_c) z + mu_c (lambda_s + lambda_c).
class TwoStateSolution {
public:
    /// Throws unstable_error unless lambda_s mu_c / (lambda_s + mu_s) > lambda_c.
    explicit TwoStateSolution(const SystemParams& params);

    double g0_at(double z) const;
    double g1_at(double z) const;

    /// G0'(1) + G1'(1).
    double mean_queue_length() const noexcept { return mean_; }

    /// Alternative closed form
    /// -X [2 lc^2 ms - lc ms (ms + mc) + ls^2 lc] / [mc ls - lc (ls + ms)]^2.
    /// Disagrees with mean_queue_length() at finite rates (0.5 vs 2 on
    /// lc = ls = ms = 1, mc = 4); reporting only.
    double paper_literal_mean() const noexcept { return paper_literal_mean_; }

    double p00() const { return g0_at(0.0); }
    double p01() const { return g1_at(0.0); }

    const SystemParams& params() const noexcept { return params_; }

private:
    double denominator(double z) const noexcept;

    SystemParams params_;
    double x_ = 0.0;
    double mean_ = 0.0;
    double paper_literal_mean_ = 0.0;
};

TwoStateSolution two_state_solution(const SystemParams& params);

}  // namespace p2pq::analytics
