#include "p2pq/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace p2pq {

namespace {

constexpr double kLogSpaceThreshold = 700.0;

void check_rho(double rho) {
    if (!std::isfinite(rho) || !(rho > 0.0)) {
        std::ostringstream os;
        os << "Poisson mean must be finite and > 0, got " << rho;
        throw std::invalid_argument(os.str());
    }
}

// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// log(n!) - [(n + 1/2) log n - n + log sqrt(2 pi)], the Stirling remainder.
double stirlerr(double n) {
    constexpr double s0 = 1.0 / 12;
    constexpr double s1 = 1.0 / 360;
    constexpr double s2 = 1.0 / 1260;
    constexpr double s3 = 1.0 / 1680;
    constexpr double s4 = 1.0 / 1188;
    constexpr double log_sqrt_2pi = 0.918938533204672741780329736406;
    if (n <= 15.0) return std::lgamma(n + 1.0) - (n + 0.5) * std::log(n) + n - log_sqrt_2pi;
    const double nn = n * n;
    if (n > 500) return (s0 - s1 / nn) / n;
    if (n > 80) return (s0 - (s1 - s2 / nn) / nn) / n;
    if (n > 35) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// x log(x / m) + m - x without cancellation when x is close to m.
double bd0(double x, double m) {
    if (std::abs(x - m) < 0.1 * (x + m)) {
        double v = (x - m) / (x + m);
        double s = (x - m) * v;
        double ej = 2.0 * x * v;
        v *= v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v;
            const double next = s + ej / (2 * j + 1);
            if (next == s) return next;
            s = next;
        }
        return s;
    }
    return x * std::log(x / m) + m - x;
}

// Saddle-point form of the pmf; relative error a few ulps for any rho.
double pmf_saddle(long i, double rho) {
    if (i == 0) return std::exp(-rho);
    const double x = static_cast<double>(i);
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::exp(-stirlerr(x) - bd0(x, rho)) / std::sqrt(two_pi * x);
}

// Sums pmf(0..k). Stops early once i > rho and the remaining tail is
// provably below 1e-18 (the tail past i is dominated by a geometric series).
double cdf_sum(long k, double rho) {
    CompensatedSum acc;
    const bool log_space = rho > kLogSpaceThreshold;
    double term = log_space ? 0.0 : std::exp(-rho);
    for (long i = 0; i <= k; ++i) {
        if (log_space) {
            term = pmf_saddle(i, rho);
        } else if (i > 0) {
            term *= rho / static_cast<double>(i);
        }
        acc.add(term);
        const double next_ratio = rho / static_cast<double>(i + 1);
        if (next_ratio < 1.0 && term * next_ratio / (1.0 - next_ratio) < 1e-18) {
            break;
        }
    }
    return std::min(acc.value(), 1.0);
}

}  // namespace

std::string_view to_string(CdfMode mode) noexcept {
    switch (mode) {
        case CdfMode::PaperLiteral:
            return "paper-literal";
        case CdfMode::LinearInterp:
            return "linear-interp";
    }
    return "unknown";
}

CdfMode parse_cdf_mode(std::string_view name) {
    if (name == "paper-literal") return CdfMode::PaperLiteral;
    if (name == "linear-interp") return CdfMode::LinearInterp;
    throw std::invalid_argument("unknown CDF mode '" + std::string(name) +
                                "' (expected paper-literal or linear-interp)");
}

double poisson_pmf(long k, double rho) {
    check_rho(rho);
    if (k < 0) return 0.0;
    return pmf_saddle(k, rho);
}

double poisson_cdf(long k, double rho) {
    check_rho(rho);
    if (k < 0) return 0.0;
    return cdf_sum(k, rho);
}

double poisson_cdf_interpolated(double x, double rho, CdfMode mode) {
    check_rho(rho);
    if (!std::isfinite(x) || x < 0.0) {
        std::ostringstream os;
        os << "CDF argument must be finite and >= 0, got " << x;
        throw std::invalid_argument(os.str());
    }
    const double whole = std::floor(x);
    const double frac = x - whole;
    // Far beyond the mean the CDF is 1 to double precision.
    if (whole > rho + 40.0 * std::sqrt(rho) + 100.0) return 1.0;
    const auto k = static_cast<long>(whole);

    const double base = cdf_sum(k, rho);
    if (frac == 0.0) return base;

    double value = 0.0;
    switch (mode) {
        case CdfMode::PaperLiteral: {
            // rho^rho e^-rho / Gamma(rho) = rho * [rho^rho e^-rho / Gamma(rho + 1)].
            constexpr double two_pi = 6.283185307179586476925286766559;
            const double extra = rho * std::exp(-stirlerr(rho)) / std::sqrt(two_pi * rho);
            value = base + frac * extra;
            break;
        }
        case CdfMode::LinearInterp:
            value = std::lerp(base, cdf_sum(k + 1, rho), frac);
            break;
    }
    return std::clamp(value, 0.0, 1.0);
}

}  // namespace p2pq
