#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "p2pq/analytics.hpp"
#include "p2pq/ctmc.hpp"
#include "p2pq/poisson.hpp"
#include "p2pq/rng.hpp"
#include "p2pq/sim.hpp"

namespace sim = p2pq::sim;
using p2pq::SystemParams;

namespace {

sim::SimConfig config(std::uint64_t seed, double horizon, int batches = 32) {
    sim::SimConfig c;
    c.seed = seed;
    c.horizon = horizon;
    c.batches = batches;
    return c;
}

void check_decomposition(const sim::SimReport& r) {
    const double lo = r.l_overload_sim.value_or(0.0);
    const double lu = r.l_underload_sim.value_or(0.0);
    CHECK(r.a_sim * lo + (1.0 - r.a_sim) * lu == r.l_sim);
}

double sample_std(const std::vector<double>& xs) {
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double ss = 0.0;
    for (const double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / (xs.size() - 1));
}

}  // namespace

TEST_CASE("xoshiro streams") {
    p2pq::Xoshiro256pp a(42);
    p2pq::Xoshiro256pp b(42);
    for (int k = 0; k < 100; ++k) CHECK(a() == b());
    auto s0 = p2pq::Xoshiro256pp::for_stream(42, 0);
    auto s1 = p2pq::Xoshiro256pp::for_stream(42, 1);
    int equal = 0;
    for (int k = 0; k < 1000; ++k) equal += s0() == s1();
    CHECK(equal == 0);

    p2pq::Xoshiro256pp u(7);
    double sum = 0.0;
    for (int k = 0; k < 200000; ++k) {
        const double x = u.uniform_open0();
        CHECK_UNARY(x > 0.0 && x <= 1.0);
        sum += x;
    }
    CHECK(sum / 200000 == doctest::Approx(0.5).epsilon(0.01));
    CHECK(p2pq::hash_seed(1, 0) != p2pq::hash_seed(1, 1));
    CHECK(p2pq::hash_seed(1, 5) == p2pq::hash_seed(1, 5));
}

TEST_CASE("config validation") {
    const SystemParams p{1, 1, 2, 1};
    CHECK_NOTHROW(sim::validate(config(1, 1e4), p));
    CHECK_THROWS_AS(sim::validate(config(1, 0.0), p), std::invalid_argument);
    CHECK_THROWS_AS(sim::validate(config(1, 1e4, 5), p), std::invalid_argument);
    auto bad_warmup = config(1, 1e4);
    bad_warmup.warmup = 1e4;
    CHECK_THROWS_AS(sim::validate(bad_warmup, p), std::invalid_argument);
    bad_warmup.warmup = -1.0;
    CHECK_THROWS_AS(sim::validate(bad_warmup, p), std::invalid_argument);
    // 32 batches over 90 time units at 3 arrivals per unit is too short.
    CHECK_THROWS_AS(sim::run(p, config(1, 100)), std::invalid_argument);
    CHECK(config(1, 1000).effective_warmup() == 100.0);
}

TEST_CASE("determinism and decomposition") {
    const SystemParams p{50, 10, 10, 1};
    const auto a = sim::run(p, config(42, 2e4));
    const auto b = sim::run(p, config(42, 2e4));
    CHECK(a == b);
    check_decomposition(a);
    const auto c = sim::run(p, config(43, 2e4));
    CHECK(c.l_sim != a.l_sim);
    check_decomposition(c);
    CHECK(a.replications == 1);
    CHECK(a.events > 0);
}

TEST_CASE("near-empty queue") {
    const SystemParams p{0.001, 1, 10, 0.1};
    const auto r = sim::run(p, config(3, 1e6));
    const double l1 = 0.001 / (100 - 0.001);
    CHECK(r.l_sim < 0.01);
    CHECK(std::abs(r.l_sim - l1) <= r.ci_halfwidth);
    check_decomposition(r);
}

TEST_CASE("fig7 midpoint lies between the bounds") {
    const SystemParams p{50, 1, 10, 0.1};
    const auto r = sim::run(p, config(5, 2e5));
    REQUIRE(r.l1.has_value());
    REQUIRE(r.l2.has_value());
    CHECK(*r.l1 == doctest::Approx(1.0));
    CHECK(*r.l2 == doctest::Approx(11.0));
    CHECK(r.l_sim >= 1.0 - r.ci_halfwidth);
    CHECK(r.l_sim <= 11.0 + r.ci_halfwidth);
    CHECK(r.e_ns_sim == doctest::Approx(100).epsilon(0.02));
    CHECK(r.cov_sim <= r.cov_ci_halfwidth);
    check_decomposition(r);
}

TEST_CASE("long run covers the stationary mean") {
    const SystemParams p{1, 1, 2, 1};
    const auto exact = p2pq::ctmc::moments(p2pq::ctmc::solve_auto(p), p2pq::derive_loads(p));
    const auto r = sim::run(p, config(11, 1e7));
    CHECK(std::abs(r.l_sim - exact.e_nc) <= r.ci_halfwidth);
    CHECK(std::abs(r.cov_sim - exact.covariance) <= 3 * r.cov_ci_halfwidth);
    CHECK(r.cov_sim <= r.cov_ci_halfwidth);
    check_decomposition(r);
}

TEST_CASE("overload fraction converges to the integer Poisson cdf") {
    const SystemParams p{1.5, 1, 2, 1};
    const auto r = sim::run(p, config(17, 2e6));
    const double want = p2pq::poisson_cdf(1, 2.0);
    CHECK(std::abs(r.a_sim - want) <= 3 * r.a_ci_halfwidth);
    CHECK(r.overload_time_observed > 0.0);
    CHECK(r.underload_time_observed > 0.0);
}

TEST_CASE("unstable runs are flagged") {
    const auto r = sim::run({3, 1, 2, 1}, config(1, 1e4));
    CHECK_FALSE(r.stable);
    CHECK_FALSE(r.l1.has_value());
    CHECK_FALSE(r.alpha_emp.has_value());
}

TEST_CASE("overload region never visited leaves its mean absent") {
    // a is about 1e-20 here.
    const auto r = sim::run({10, 1, 10, 0.1}, config(2, 1e4));
    CHECK_FALSE(r.l_overload_sim.has_value());
    CHECK(r.a_sim == 0.0);
    check_decomposition(r);
}

TEST_CASE("replicate: shared seeds give identical replications") {
    const SystemParams p{1, 1, 2, 1};
    const auto rep = sim::replicate(p, config(9, 2e4), 2, 2, sim::SeedPolicy::Shared);
    REQUIRE(rep.replications.size() == 2);
    CHECK(rep.replications[0] == rep.replications[1]);
    CHECK_THROWS_AS(sim::replicate(p, config(9, 2e4), 1), std::invalid_argument);
}

TEST_CASE("replicate: independent of thread count") {
    const SystemParams p{1, 1, 2, 1};
    const auto one = sim::replicate(p, config(9, 2e4), 6, 1);
    const auto many = sim::replicate(p, config(9, 2e4), 6, 4);
    CHECK(one.aggregate == many.aggregate);
    for (std::size_t r = 0; r < 6; ++r) CHECK(one.replications[r] == many.replications[r]);
    CHECK(one.replications[0] != one.replications[1]);
    CHECK(one.aggregate.replications == 6);
    check_decomposition(one.aggregate);
}

TEST_CASE("replicate: aggregate CI covers the stationary mean") {
    const SystemParams p{1, 1, 2, 1};
    const auto exact = p2pq::ctmc::moments(p2pq::ctmc::solve_auto(p), p2pq::derive_loads(p));
    const auto rep = sim::replicate(p, config(21, 2e5), 16);
    CHECK(std::abs(rep.aggregate.l_sim - exact.e_nc) <= rep.aggregate.ci_halfwidth);
}

TEST_CASE("replicate: moderate load agrees with the approximate P-K estimate") {
    const SystemParams p{50, 10, 10, 1};
    const auto rep = sim::replicate(p, config(4, 2e4), 16);
    const double l_apk = p2pq::analytics::apk_estimate(p).l_apk;
    const double l = rep.aggregate.l_sim;
    CHECK(std::abs(l_apk - l) <= std::max(0.2 * l, 0.5));
}

TEST_CASE("rate trace fluctuation") {
    for (const double mu_c : {0.1, 1.0}) {
        const SystemParams p{1, mu_c, 10, mu_c / 10};
        const auto trace = sim::rate_trace(p, config(13, 2e5), 1.0);
        std::vector<double> mu;
        mu.reserve(trace.size());
        for (const auto& s : trace) mu.push_back(s.mu);
        const double mean = std::accumulate(mu.begin(), mu.end(), 0.0) / mu.size();
        CHECK(mean == doctest::Approx(100).epsilon(0.02));
        CHECK(sample_std(mu) == doctest::Approx(std::sqrt(100 * mu_c)).epsilon(0.10));
        CHECK(trace.front().t == 0.0);
        CHECK(trace.back().t <= 2e5);
    }
    CHECK_THROWS_AS(sim::rate_trace({1, 1, 1, 1}, config(1, 10), 0.0), std::invalid_argument);
}

TEST_CASE("rate trace server counts follow Poisson(rho_s)") {
    const SystemParams p{1, 1, 2, 1};
    const auto trace = sim::rate_trace(p, config(5, 1e6), 1.0);
    std::vector<double> freq(40, 0.0);
    for (const auto& s : trace) freq.at(s.n_s) += 1.0;
    double tv = 0.0;
    for (int j = 0; j < 40; ++j) tv += std::abs(freq[j] / trace.size() - p2pq::poisson_pmf(j, 2.0));
    CHECK(0.5 * tv < 0.01);

    std::ostringstream os;
    sim::write_trace_csv(os, std::span(trace).first(3));
    CHECK(os.str().rfind("t,n_s,mu\n", 0) == 0);
}
