#include "p2pq/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "p2pq/errors.hpp"

namespace p2pq::analytics {

double lower_bound(const DerivedLoads& loads) {
    require_stable(loads, "lower bound");
    return loads.lambda_c / (loads.mu_bar - loads.lambda_c);
}

double upper_bound(const SystemParams& params, const DerivedLoads& loads) {
    return (1.0 + params.mu_c / params.mu_s) * lower_bound(loads);
}

double two_state_limit_mean(const SystemParams& params) {
    require_stable(derive_loads(params), "two-state limit mean");
    const auto& p = params;
    return p.lambda_c * (p.mu_s + p.mu_c) / (p.mu_c * p.lambda_s - p.lambda_c * p.mu_s);
}

OverloadProbs overload_probs(const DerivedLoads& loads, CdfMode mode) {
    OverloadProbs probs;
    probs.a = poisson_cdf_interpolated(loads.rho_c, loads.rho_s, mode);
    probs.b = poisson_cdf_interpolated(loads.rho_s, loads.rho_s, mode);
    return probs;
}

double alpha_hat(double a, double b) {
    if (!(b > 0.0) || !std::isfinite(b)) {
        std::ostringstream os;
        os << "alpha_hat needs b > 0, got b=" << b;
        throw std::invalid_argument(os.str());
    }
    if (!(a >= 0.0) || !std::isfinite(a)) {
        std::ostringstream os;
        os << "alpha_hat needs a >= 0, got a=" << a;
        throw std::invalid_argument(os.str());
    }
    return std::clamp(a / b, 0.0, 1.0);
}

double covariance_from_L(const DerivedLoads& loads, double mean_queue_length) {
    const double l1 = loads.lambda_c / (loads.mu_bar - loads.lambda_c);
    return (loads.rho_s - loads.rho_c) * (l1 - mean_queue_length);
}

AnalyticEstimates apk_estimate(const SystemParams& params, CdfMode mode) {
    const DerivedLoads loads = derive_loads(params);
    require_stable(loads, "approximate P-K estimate");

    AnalyticEstimates est;
    const double ratio = params.mu_c / params.mu_s;
    est.l1 = lower_bound(loads);
    est.l2 = (1.0 + ratio) * est.l1;

    const OverloadProbs probs = overload_probs(loads, mode);
    est.a = probs.a;
    est.b = probs.b;
    est.alpha_hat = alpha_hat(est.a, est.b);
    est.l_apk = (1.0 + ratio * est.alpha_hat) * est.l1;

    // Underload conditional mean, assuming the overload region sits at l2:
    // alpha' = (alpha_hat - a) / (1 - a).
    double alpha_under = 0.0;
    if (est.a < 1.0) alpha_under = std::clamp((est.alpha_hat - est.a) / (1.0 - est.a), 0.0, 1.0);
    est.l_underload = (1.0 + ratio * alpha_under) * est.l1;
    est.l_overload_assumed = est.l2;
    est.covariance = covariance_from_L(loads, est.l_apk);
    return est;
}

ServiceTimeMoments service_time_moments(const DerivedLoads& loads) {
    if (!(loads.mu_bar > 0.0)) throw std::invalid_argument("service_time_moments needs mu_bar > 0");
    const double var_mu = loads.mu_bar * loads.mu_c;
    const double m = loads.mu_bar;
    return {1.0 / m + var_mu / (m * m * m), var_mu / (m * m * m * m)};
}

double pk_mg1(double lambda, double mean_s, double var_s) {
    if (!(lambda > 0.0) || !(mean_s > 0.0) || !(var_s >= 0.0)) {
        throw std::invalid_argument("pk_mg1 needs lambda > 0, mean_s > 0, var_s >= 0");
    }
    const double rho = lambda * mean_s;
    if (!(rho < 1.0)) {
        std::ostringstream os;
        os << "M/G/1 utilization " << rho << " >= 1";
        throw unstable_error(os.str());
    }
    return rho + (rho * rho + lambda * lambda * var_s) / (2.0 * (1.0 - rho));
}

TwoStateSolution::TwoStateSolution(const SystemParams& params) : params_(params) {
    validate(params);
    const double lc = params.lambda_c;
    const double mc = params.mu_c;
    const double ls = params.lambda_s;
    const double ms = params.mu_s;

    x_ = ls * mc / (ls + ms) - lc;
    if (!(x_ > 0.0)) {
        std::ostringstream os;
        os << "two-state system unstable: lambda_s mu_c / (lambda_s + mu_s) = " << ls * mc / (ls + ms)
           << " <= lambda_c = " << lc;
        throw unstable_error(os.str());
    }

    // d/dz [X (ms + ls + lc - lc z) / D(z)] at z = 1.
    const double d1 = denominator(1.0);
    const double dd1 = lc * (lc - ls - ms - mc);
    mean_ = x_ * (-lc * d1 - (ms + ls) * dd1) / (d1 * d1);

    const double num = 2.0 * lc * lc * ms - lc * ms * (ms + mc) + ls * ls * lc;
    const double den = mc * ls - lc * (ls + ms);
    paper_literal_mean_ = -x_ * num / (den * den);
}

double TwoStateSolution::denominator(double z) const noexcept {
    const double lc = params_.lambda_c;
    return z * z * lc * lc - z * lc * (params_.lambda_s + params_.mu_s + lc + params_.mu_c) +
           params_.mu_c * (params_.lambda_s + lc);
}

double TwoStateSolution::g0_at(double z) const {
    if (!(std::abs(z) <= 1.0)) throw std::invalid_argument("generating function needs |z| <= 1");
    return params_.mu_s * x_ / denominator(z);
}

double TwoStateSolution::g1_at(double z) const {
    if (!(std::abs(z) <= 1.0)) throw std::invalid_argument("generating function needs |z| <= 1");
    return (params_.lambda_s + params_.lambda_c - params_.lambda_c * z) * x_ / denominator(z);
}

TwoStateSolution two_state_solution(const SystemParams& params) { return TwoStateSolution(params); }

}  // namespace p2pq::analytics
