#include "p2pq/report_json.hpp"

#include <optional>

namespace p2pq {

namespace {

nlohmann::json opt(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const SystemParams& p) {
    return {{"lambda_c", p.lambda_c}, {"mu_c", p.mu_c}, {"lambda_s", p.lambda_s}, {"mu_s", p.mu_s}};
}

nlohmann::json to_json(const DerivedLoads& l) {
    return {{"rho_c", l.rho_c},       {"rho_s", l.rho_s},       {"mu_bar", l.mu_bar},
            {"sigma_mu", l.sigma_mu}, {"sigma_ns", l.sigma_ns}};
}

nlohmann::json to_json(const StabilityReport& r) {
    return {{"stable", r.stable}, {"margin", r.margin}, {"utilization", r.utilization}};
}

nlohmann::json to_json(const analytics::AnalyticEstimates& e) {
    return {{"l1", e.l1},
            {"l2", e.l2},
            {"a", e.a},
            {"b", e.b},
            {"alpha_hat", e.alpha_hat},
            {"l_apk", e.l_apk},
            {"l_underload", e.l_underload},
            {"l_overload_assumed", e.l_overload_assumed},
            {"covariance", e.covariance}};
}

nlohmann::json to_json(const analytics::ServiceTimeMoments& m) {
    return {{"mean_s", m.mean_s}, {"var_s", m.var_s}};
}

nlohmann::json to_json(const ctmc::CtmcMoments& m) {
    return {{"e_nc", m.e_nc},
            {"e_ns", m.e_ns},
            {"e_nsnc", m.e_nsnc},
            {"covariance", m.covariance},
            {"identity_residual", m.identity_residual}};
}

nlohmann::json to_json(const sim::SimReport& r) {
    return {{"stable", r.stable},
            {"l_sim", r.l_sim},
            {"ci_halfwidth", r.ci_halfwidth},
            {"l_overload_sim", opt(r.l_overload_sim)},
            {"l_underload_sim", opt(r.l_underload_sim)},
            {"a_sim", r.a_sim},
            {"a_ci_halfwidth", r.a_ci_halfwidth},
            {"e_ns_sim", r.e_ns_sim},
            {"e_nsnc_sim", r.e_nsnc_sim},
            {"cov_sim", r.cov_sim},
            {"cov_ci_halfwidth", r.cov_ci_halfwidth},
            {"l1", opt(r.l1)},
            {"l2", opt(r.l2)},
            {"alpha_emp", opt(r.alpha_emp)},
            {"overload_time_observed", r.overload_time_observed},
            {"underload_time_observed", r.underload_time_observed},
            {"events", r.events},
            {"replications", r.replications}};
}

}  // namespace p2pq
