#include "p2pq/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "p2pq/errors.hpp"

namespace p2pq {

namespace {

void check_rate(double value, const char* name) {
    if (!std::isfinite(value) || !(value > 0.0)) {
        std::ostringstream os;
        os << name << " must be finite and strictly positive, got " << value;
        throw std::invalid_argument(os.str());
    }
}

}  // namespace

void validate(const SystemParams& params) {
    check_rate(params.lambda_c, "lambda_c");
    check_rate(params.mu_c, "mu_c");
    check_rate(params.lambda_s, "lambda_s");
    check_rate(params.mu_s, "mu_s");
}

DerivedLoads derive_loads(const SystemParams& params) {
    validate(params);
    DerivedLoads loads;
    loads.rho_c = params.lambda_c / params.mu_c;
    loads.rho_s = params.lambda_s / params.mu_s;
    loads.mu_bar = loads.rho_s * params.mu_c;
    loads.sigma_mu = std::sqrt(loads.mu_bar * params.mu_c);
    loads.sigma_ns = std::sqrt(loads.rho_s);
    loads.lambda_c = params.lambda_c;
    loads.mu_c = params.mu_c;
    return loads;
}

bool is_stable(const DerivedLoads& loads) noexcept { return loads.rho_c < loads.rho_s; }

StabilityReport check_stability(const DerivedLoads& loads) noexcept {
    StabilityReport report;
    report.stable = is_stable(loads);
    // (rho_s - rho_c) * mu_c == mu_bar - lambda_c, but its sign always agrees
    // with the predicate above.
    report.margin = (loads.rho_s - loads.rho_c) * loads.mu_c;
    report.utilization = loads.rho_c / loads.rho_s;
    return report;
}

void require_stable(const DerivedLoads& loads, const char* what) {
    if (!is_stable(loads)) {
        std::ostringstream os;
        os << what << " requires rho_c < rho_s (rho_c=" << loads.rho_c << ", rho_s=" << loads.rho_s
           << ")";
        throw unstable_error(os.str());
    }
}

}  // namespace p2pq
