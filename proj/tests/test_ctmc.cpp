#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "oracles.hpp"
#include "p2pq/analytics.hpp"
#include "p2pq/ctmc.hpp"
#include "p2pq/errors.hpp"
#include "p2pq/poisson.hpp"

namespace ctmc = p2pq::ctmc;
using p2pq::SystemParams;

namespace {

double rate_to(const ctmc::Generator& g, int i, int j, int ti, int tj) {
    double r = 0.0;
    for (const auto& t : g.outgoing(g.index(i, j))) {
        if (t.state == g.index(ti, tj)) r += t.rate;
    }
    return r;
}

}  // namespace

TEST_CASE("generator structure") {
    const SystemParams p{1.5, 4.0, 2.0, 0.5};
    const auto g = ctmc::build_generator(p, {6, 5});
    CHECK(g.size() == 7 * 6);

    const auto origin = g.outgoing(g.index(0, 0));
    CHECK(origin.size() == 2);
    CHECK(rate_to(g, 0, 0, 1, 0) == 1.5);
    CHECK(rate_to(g, 0, 0, 0, 1) == 2.0);
    CHECK(g.outflow(0, 0) == doctest::Approx(3.5));

    CHECK(g.outflow(3, 2) == doctest::Approx(1.5 + 2.0 + 2 * 0.5 + 2 * 4.0));
    CHECK(rate_to(g, 3, 2, 2, 2) == 8.0);
    CHECK(rate_to(g, 3, 2, 3, 1) == 1.0);

    CHECK(rate_to(g, 3, 0, 2, 0) == 0.0);
    CHECK(g.outflow(3, 0) == doctest::Approx(3.5));

    // Reflecting edges.
    CHECK(g.outgoing(g.index(6, 2)).size() == 3);
    CHECK(g.outflow(6, 2) == doctest::Approx(2.0 + 2 * 0.5 + 2 * 4.0));
    CHECK(g.outflow(2, 5) == doctest::Approx(1.5 + 5 * 0.5 + 5 * 4.0));

    // Incoming lists mirror outgoing lists and rows sum to the outflow.
    double max_out = 0.0;
    for (std::size_t s = 0; s < g.size(); ++s) {
        double sum = 0.0;
        for (const auto& t : g.outgoing(s)) {
            sum += t.rate;
            bool mirrored = false;
            for (const auto& back : g.incoming(t.state)) {
                if (back.state == s && back.rate == t.rate) mirrored = true;
            }
            CHECK(mirrored);
        }
        CHECK(sum == doctest::Approx(g.outflow(s)));
        CHECK(g.index(g.jobs_of(s), g.servers_of(s)) == s);
        max_out = std::max(max_out, g.outflow(s));
    }
    CHECK(g.uniformization_rate() == max_out);

    CHECK_THROWS_AS(ctmc::build_generator(p, {0, 3}), std::invalid_argument);
    CHECK_THROWS_AS(ctmc::build_generator(p, {3, 0}), std::invalid_argument);
    CHECK_THROWS_AS(ctmc::build_generator({0, 1, 1, 1}, {3, 3}), std::invalid_argument);
}

TEST_CASE("sparse solve matches dense oracle on tiny boxes") {
    // tol bounds the residual, not the error: relaxation on a slowly mixing
    // chain needs a much smaller residual for the same accuracy.
    std::mt19937_64 rng(2024);
    for (int k = 0; k < 25; ++k) {
        const auto p = oracle::random_stable(rng);
        const ctmc::Truncation t{14, 6};
        const auto want = oracle::dense_stationary(p, t.i_max, t.j_max);
        const auto g = ctmc::build_generator(p, t);

        ctmc::SolveOptions direct;
        direct.method = ctmc::SolverMethod::Direct;
        direct.tol = 1e-12;
        const auto d = ctmc::solve_stationary(g, direct);
        CHECK(d.residual <= 1e-12);

        ctmc::SolveOptions relax;
        relax.method = ctmc::SolverMethod::Relaxation;
        relax.tol = 1e-15;
        const auto r = ctmc::solve_stationary(g, relax);
        CHECK(r.residual <= 1e-15);

        for (std::size_t s = 0; s < want.size(); ++s) {
            CHECK(std::abs(d.probs[s] - want[s]) < 1e-12);
            CHECK(std::abs(r.probs[s] - want[s]) < 1e-8);
        }
    }
}

TEST_CASE("direct and relaxation agree on a realistic box") {
    const SystemParams p{1, 1, 2, 1};
    const auto g = ctmc::build_generator(p, {150, 17});
    ctmc::SolveOptions direct;
    direct.method = ctmc::SolverMethod::Direct;
    ctmc::SolveOptions relax;
    relax.method = ctmc::SolverMethod::Relaxation;
    relax.tol = 1e-13;
    const auto a = ctmc::solve_stationary(g, direct);
    const auto b = ctmc::solve_stationary(g, relax);
    const auto loads = p2pq::derive_loads(p);
    CHECK(ctmc::moments(a, loads).e_nc ==
          doctest::Approx(ctmc::moments(b, loads).e_nc).epsilon(1e-8));
    CHECK(b.iterations > 0);
}

TEST_CASE("relaxation reports its residual when it runs out of iterations") {
    const auto g = ctmc::build_generator({1, 1, 2, 1}, {150, 17});
    ctmc::SolveOptions opt;
    opt.method = ctmc::SolverMethod::Relaxation;
    opt.max_iters = 3;
    try {
        (void)ctmc::solve_stationary(g, opt);
        FAIL("expected convergence_error");
    } catch (const p2pq::convergence_error& e) {
        CHECK(e.last_residual() > opt.tol);
    }
    opt.tol = 0.0;
    CHECK_THROWS_AS(ctmc::solve_stationary(g, opt), std::invalid_argument);
}

TEST_CASE("two-state box: server marginal and worked example") {
    const SystemParams p{1, 4, 1, 1};
    const auto d = ctmc::solve_stationary(ctmc::build_generator(p, {400, 1}));
    const auto servers = d.server_marginal();
    CHECK(servers[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(servers[1] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(d.at(0, 1) == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(std::abs(ctmc::two_state_oracle(p, 400) - 2.0) < 1e-9);
}

TEST_CASE("starved servers concentrate mass on j = 0") {
    const SystemParams p{1, 4, 1e-12, 1};
    const auto d = ctmc::solve_stationary(ctmc::build_generator(p, {50, 1}));
    CHECK(d.server_marginal()[0] > 1.0 - 1e-11);
}

TEST_CASE("server marginal is Poisson(rho_s)") {
    const SystemParams p{1, 1, 2, 1};
    const auto d = ctmc::solve_stationary(ctmc::build_generator(p, {200, 40}));
    const auto servers = d.server_marginal();
    double tv = 0.0;
    for (int j = 0; j <= 40; ++j) tv += std::abs(servers[j] - p2pq::poisson_pmf(j, 2.0));
    CHECK(0.5 * tv < 1e-8);
}

TEST_CASE("server marginal does not depend on the job process") {
    const ctmc::Truncation t{120, 20};
    const auto a = ctmc::solve_stationary(ctmc::build_generator({0.5, 1, 3, 1}, t)).server_marginal();
    const auto b = ctmc::solve_stationary(ctmc::build_generator({4, 7, 3, 1}, t)).server_marginal();
    for (int j = 0; j <= 20; ++j) CHECK(std::abs(a[j] - b[j]) < 1e-10);
}

TEST_CASE("net flow across every cut vanishes") {
    const SystemParams p{2, 3, 1.5, 0.7};
    const ctmc::Truncation t{120, 16};
    const auto d = ctmc::solve_stationary(ctmc::build_generator(p, t));
    for (int k = 0; k < t.i_max; ++k) {
        double up = 0.0;
        double down = 0.0;
        for (int j = 0; j <= t.j_max; ++j) {
            up += d.at(k, j) * p.lambda_c;
            down += d.at(k + 1, j) * j * p.mu_c;
        }
        CHECK(std::abs(up - down) < 1e-10);
    }
    for (int k = 0; k < t.j_max; ++k) {
        double up = 0.0;
        double down = 0.0;
        for (int i = 0; i <= t.i_max; ++i) {
            up += d.at(i, k) * p.lambda_s;
            down += d.at(i, k + 1) * (k + 1) * p.mu_s;
        }
        CHECK(std::abs(up - down) < 1e-10);
    }
}

TEST_CASE("moments and identity residual") {
    const SystemParams p{1, 1, 2, 1};
    const auto loads = p2pq::derive_loads(p);
    const auto d = ctmc::solve_auto(p);
    const auto m = ctmc::moments(d, loads);
    CHECK(m.identity_residual < 1e-6);
    CHECK(m.covariance < 0.0);
    CHECK(m.e_ns == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(m.covariance == doctest::Approx(m.e_nsnc - m.e_ns * m.e_nc).epsilon(1e-12));
    CHECK(d.tail_mass_estimate < 1e-10);

    // Bounds bracket the exact mean.
    CHECK(m.e_nc > p2pq::analytics::lower_bound(loads));
    CHECK(m.e_nc < p2pq::analytics::upper_bound(p, loads));
}

TEST_CASE("identity residual shrinks as the box grows") {
    const SystemParams p{1, 1, 2, 1};
    const auto loads = p2pq::derive_loads(p);
    double prev = 1e300;
    for (const int i_max : {10, 20, 40, 80}) {
        const auto d = ctmc::solve_stationary(ctmc::build_generator(p, {i_max, 16}));
        const double r = ctmc::moments(d, loads, 1.0).identity_residual;
        CHECK(r < prev);
        prev = r;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("enlarging the box moves moments by at most the tail bound") {
    const SystemParams p{1.2, 1, 2, 0.8};
    const auto loads = p2pq::derive_loads(p);
    ctmc::Truncation t{40, 12};
    auto d = ctmc::solve_stationary(ctmc::build_generator(p, t));
    for (int step = 0; step < 3; ++step) {
        const ctmc::Truncation bigger{t.i_max * 2, t.j_max + 4};
        const auto e = ctmc::solve_stationary(ctmc::build_generator(p, bigger));
        const double bound = d.tail_mass_estimate * (t.i_max + t.j_max);
        CHECK(std::abs(ctmc::moments(e, loads, 1.0).e_nc - ctmc::moments(d, loads, 1.0).e_nc) <=
              bound + 1e-12);
        t = bigger;
        d = e;
    }
}

TEST_CASE("covariance is nonpositive on random stable points") {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 15; ++k) {
        auto p = oracle::random_stable(rng, 0.8);
        const auto loads = p2pq::derive_loads(p);
        if (loads.rho_s > 8.0) continue;
        const auto m = ctmc::moments(ctmc::solve_auto(p), loads);
        CHECK(m.covariance <= 0.0);
        CHECK(m.identity_residual < 1e-6);
    }
}

TEST_CASE("excess tail mass is reported") {
    const SystemParams p{1, 1, 2, 1};
    const auto d = ctmc::solve_stationary(ctmc::build_generator(p, {5, 3}));
    try {
        (void)ctmc::moments(d, p2pq::derive_loads(p));
        FAIL("expected truncation_error");
    } catch (const p2pq::truncation_error& e) {
        CHECK(e.tail_mass() >= 1e-8);
        CHECK(e.tail_mass() == d.tail_mass_estimate);
    }
    CHECK_THROWS_AS(ctmc::two_state_oracle(p, 5), p2pq::truncation_error);

    ctmc::AutoSolveOptions tiny;
    tiny.max_states = 10;
    CHECK_THROWS_AS(ctmc::solve_auto(p, tiny), p2pq::truncation_error);
    CHECK_THROWS_AS(ctmc::solve_auto({3, 1, 2, 1}), p2pq::unstable_error);
}

TEST_CASE("default truncation covers the bulk") {
    const auto t = ctmc::default_truncation({50, 10, 10, 1});
    CHECK(t.j_max == static_cast<int>(std::ceil(10 + 10 * std::sqrt(10.0))));
    CHECK(t.i_max == static_cast<int>(std::ceil(50 * (11 + 1))));
}

TEST_CASE("csv dump") {
    const auto d = ctmc::solve_stationary(ctmc::build_generator({1, 4, 1, 1}, {3, 1}));
    std::ostringstream os;
    ctmc::write_csv(os, d);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "i,j,p");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 8);
}
