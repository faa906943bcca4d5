#pragma once

#include <string_view>

namespace p2pq {

/// How a Poisson CDF is extended to a non-integer argument.
///
/// PaperLiteral adds (x - floor(x)) * rho^rho * e^-rho / Gamma(rho) to the
/// integer CDF at floor(x) and clamps to [0, 1]; the extra term does not
/// depend on x's integer part and can push the value above 1.
/// LinearInterp interpolates linearly between the integer CDF at floor(x)
/// and ceil(x).
enum class CdfMode { PaperLiteral, LinearInterp };

std::string_view to_string(CdfMode mode) noexcept;

/// Accepts "paper-literal" and "linear-interp"; throws std::invalid_argument.
CdfMode parse_cdf_mode(std::string_view name);

/// Pr{N = k} for N ~ Poisson(rho).
double poisson_pmf(long k, double rho);

/// Pr{N <= k} for N ~ Poisson(rho), by compensated direct summation.
/// Terms are generated recursively from e^-rho for rho <= 700; above that,
/// where e^-rho underflows, each term uses the saddle-point form
/// exp(-stirlerr(i) - bd0(i, rho)) / sqrt(2 pi i).
double poisson_cdf(long k, double rho);

/// Poisson CDF at a real argument x >= 0 under the given extension rule.
double poisson_cdf_interpolated(double x, double rho, CdfMode mode);

}  // namespace p2pq
