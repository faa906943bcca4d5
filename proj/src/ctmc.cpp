#include "p2pq/ctmc.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "p2pq/analytics.hpp"
#include "p2pq/errors.hpp"

namespace p2pq::ctmc {

namespace {

// LU fill grows like states * (j_max + 1) for the i-major band.
constexpr double kMaxDirectFill = 6e7;

void finalize(const Generator& gen, StateDistribution& dist) {
    auto& p = dist.probs;
    for (double& v : p) {
        if (!(v > 0.0)) v = 0.0;  // also catches NaN
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw convergence_error("stationary solve produced no probability mass",
                                std::numeric_limits<double>::infinity());
    }
    for (double& v : p) {
        v /= total;
        if (v < 1e-300) v = 0.0;
    }

    const auto& t = dist.trunc;
    double jobs = 0.0;
    for (int j = 0; j <= t.j_max; ++j) jobs += dist.at(t.i_max, j);
    double servers = 0.0;
    for (int i = 0; i <= t.i_max; ++i) servers += dist.at(i, t.j_max);
    dist.tail_mass_jobs = jobs;
    dist.tail_mass_servers = servers;
    dist.tail_mass_estimate = jobs + servers - dist.at(t.i_max, t.j_max);
    dist.residual = balance_residual(gen, p);
}

// Pins pi[pin] = 1, drops the (redundant) balance equation of `pin` and
// solves the remaining sparse system pi Q = 0 restricted to the other states.
std::vector<double> direct_solve(const Generator& gen, std::size_t pin) {
    const std::size_t n = gen.size();
    const auto reduced = [pin](std::size_t k) { return k < pin ? k : k - 1; };
    const auto m = static_cast<Eigen::Index>(n - 1);

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(5 * n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    // Row k of Q^T is the balance equation of state k.
    for (std::size_t k = 0; k < n; ++k) {
        if (k == pin) continue;
        const auto row = static_cast<Eigen::Index>(reduced(k));
        triplets.emplace_back(row, row, -gen.outflow(k));
        for (const Transition& in : gen.incoming(k)) {
            if (in.state == pin) {
                rhs[row] -= in.rate;
            } else {
                triplets.emplace_back(row, static_cast<Eigen::Index>(reduced(in.state)), in.rate);
            }
        }
    }
    Eigen::SparseMatrix<double> a(m, m);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) {
        throw convergence_error("sparse LU factorization failed: " + lu.lastErrorMessage(),
                                std::numeric_limits<double>::infinity());
    }
    Eigen::VectorXd x = lu.solve(rhs);
    // One step of iterative refinement.
    const Eigen::VectorXd r = rhs - a * x;
    x += lu.solve(r);

    std::vector<double> pi(n);
    for (std::size_t k = 0; k < n; ++k) {
        pi[k] = (k == pin) ? 1.0 : x[static_cast<Eigen::Index>(reduced(k))];
    }
    return pi;
}

StateDistribution solve_direct(const Generator& gen, const SolveOptions& options) {
    const auto& t = gen.truncation();
    StateDistribution dist;
    dist.trunc = t;

    // Pin a state that carries real mass: empty queue, typical server count.
    const double rho_s = gen.params().lambda_s / gen.params().mu_s;
    const int j_pin = std::clamp(static_cast<int>(std::floor(rho_s)), 0, t.j_max);
    dist.probs = direct_solve(gen, gen.index(0, j_pin));
    finalize(gen, dist);

    if (dist.residual > options.tol) {
        // Retry pinned at the heaviest state of the first attempt.
        const auto heaviest = static_cast<std::size_t>(
            std::max_element(dist.probs.begin(), dist.probs.end()) - dist.probs.begin());
        dist.probs = direct_solve(gen, heaviest);
        finalize(gen, dist);
    }
    dist.iterations = 1;
    if (dist.residual > options.tol) {
        std::ostringstream os;
        os << "direct solve residual " << dist.residual << " exceeds tol " << options.tol;
        throw convergence_error(os.str(), dist.residual);
    }
    return dist;
}

// Gauss-Seidel on the uniformized kernel P = I + Q / Lambda. Solving
// pi_k = sum_l pi_l P_lk for pi_k gives pi_k = inflow_k / outflow_k, so the
// uniformization constant cancels out of the update.
StateDistribution solve_relaxation(const Generator& gen, const SolveOptions& options) {
    const std::size_t n = gen.size();
    StateDistribution dist;
    dist.trunc = gen.truncation();
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));

    double residual = std::numeric_limits<double>::infinity();
    long iter = 0;
    while (iter < options.max_iters) {
        ++iter;
        double change = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double inflow = 0.0;
            for (const Transition& in : gen.incoming(k)) inflow += pi[in.state] * in.rate;
            const double updated = inflow / gen.outflow(k);
            change = std::max(change, std::abs(updated - pi[k]));
            pi[k] = updated;
        }
        const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
        for (double& v : pi) v /= total;
        change /= total;

        if (change < options.tol || iter % 50 == 0) {
            residual = balance_residual(gen, pi);
            if (residual <= options.tol) break;
        }
    }
    dist.probs = std::move(pi);
    dist.iterations = iter;
    finalize(gen, dist);
    if (dist.residual > options.tol) {
        std::ostringstream os;
        os << "relaxation did not converge in " << iter << " sweeps (residual " << dist.residual
           << ", tol " << options.tol << ")";
        throw convergence_error(os.str(), dist.residual);
    }
    return dist;
}

}  // namespace

Generator::Generator(const SystemParams& params, Truncation trunc) : params_(params), trunc_(trunc) {
    validate(params);
    if (trunc.i_max < 1 || trunc.j_max < 1) {
        throw std::invalid_argument("truncation needs i_max >= 1 and j_max >= 1");
    }
    const std::size_t n = trunc.states();
    outflow_.assign(n, 0.0);
    out_offsets_.assign(n + 1, 0);
    out_.reserve(4 * n);

    for (int i = 0; i <= trunc.i_max; ++i) {
        for (int j = 0; j <= trunc.j_max; ++j) {
            const std::size_t k = index(i, j);
            out_offsets_[k] = out_.size();
            if (i < trunc.i_max) out_.push_back({index(i + 1, j), params.lambda_c});
            if (j < trunc.j_max) out_.push_back({index(i, j + 1), params.lambda_s});
            if (j > 0) out_.push_back({index(i, j - 1), j * params.mu_s});
            if (i > 0 && j > 0) out_.push_back({index(i - 1, j), j * params.mu_c});
            double total = 0.0;
            for (std::size_t e = out_offsets_[k]; e < out_.size(); ++e) total += out_[e].rate;
            outflow_[k] = total;
        }
    }
    out_offsets_[n] = out_.size();
    uniform_rate_ = *std::max_element(outflow_.begin(), outflow_.end());

    // Transpose into incoming lists.
    in_offsets_.assign(n + 1, 0);
    for (const Transition& t : out_) ++in_offsets_[t.state + 1];
    std::partial_sum(in_offsets_.begin(), in_offsets_.end(), in_offsets_.begin());
    in_.resize(out_.size());
    std::vector<std::size_t> cursor(in_offsets_.begin(), in_offsets_.end() - 1);
    for (std::size_t from = 0; from < n; ++from) {
        for (std::size_t e = out_offsets_[from]; e < out_offsets_[from + 1]; ++e) {
            in_[cursor[out_[e].state]++] = {from, out_[e].rate};
        }
    }
}

std::span<const Transition> Generator::outgoing(std::size_t state) const noexcept {
    return {out_.data() + out_offsets_[state], out_offsets_[state + 1] - out_offsets_[state]};
}

std::span<const Transition> Generator::incoming(std::size_t state) const noexcept {
    return {in_.data() + in_offsets_[state], in_offsets_[state + 1] - in_offsets_[state]};
}

Generator build_generator(const SystemParams& params, Truncation trunc) {
    return Generator(params, trunc);
}

std::vector<double> StateDistribution::server_marginal() const {
    std::vector<double> m(static_cast<std::size_t>(trunc.j_max + 1), 0.0);
    for (int i = 0; i <= trunc.i_max; ++i)
        for (int j = 0; j <= trunc.j_max; ++j) m[static_cast<std::size_t>(j)] += at(i, j);
    return m;
}

std::vector<double> StateDistribution::job_marginal() const {
    std::vector<double> m(static_cast<std::size_t>(trunc.i_max + 1), 0.0);
    for (int i = 0; i <= trunc.i_max; ++i)
        for (int j = 0; j <= trunc.j_max; ++j) m[static_cast<std::size_t>(i)] += at(i, j);
    return m;
}

double balance_residual(const Generator& gen, std::span<const double> probs) {
    double worst = 0.0;
    for (std::size_t k = 0; k < gen.size(); ++k) {
        double net = -probs[k] * gen.outflow(k);
        for (const Transition& in : gen.incoming(k)) net += probs[in.state] * in.rate;
        worst = std::max(worst, std::abs(net));
    }
    return worst / gen.uniformization_rate();
}

StateDistribution solve_stationary(const Generator& gen, const SolveOptions& options) {
    if (!(options.tol > 0.0)) throw std::invalid_argument("solver tol must be > 0");
    SolverMethod method = options.method;
    if (method == SolverMethod::Auto) {
        const double fill = static_cast<double>(gen.size()) * (gen.truncation().j_max + 1);
        method = fill <= kMaxDirectFill ? SolverMethod::Direct : SolverMethod::Relaxation;
    }
    return method == SolverMethod::Direct ? solve_direct(gen, options)
                                          : solve_relaxation(gen, options);
}

Truncation default_truncation(const SystemParams& params) {
    const DerivedLoads loads = derive_loads(params);
    const double l2 = analytics::upper_bound(params, loads);
    Truncation t;
    t.j_max = std::max(1, static_cast<int>(std::ceil(loads.rho_s + 10.0 * std::sqrt(loads.rho_s))));
    t.i_max = std::max(1, static_cast<int>(std::ceil(50.0 * (l2 + 1.0))));
    return t;
}

StateDistribution solve_auto(const SystemParams& params, const AutoSolveOptions& options) {
    Truncation t = default_truncation(params);
    while (true) {
        if (t.states() > options.max_states) {
            std::ostringstream os;
            os << "truncation " << t.i_max << "x" << t.j_max << " exceeds " << options.max_states
               << " states";
            throw truncation_error(os.str(), 1.0);
        }
        StateDistribution dist = solve_stationary(build_generator(params, t), options.solve);
        const bool grow_jobs = dist.tail_mass_jobs >= options.target_tail;
        const bool grow_servers = dist.tail_mass_servers >= options.target_tail;
        if (!grow_jobs && !grow_servers) return dist;
        if (grow_jobs) t.i_max *= 2;
        if (grow_servers) t.j_max *= 2;
    }
}

CtmcMoments moments(const StateDistribution& dist, const DerivedLoads& loads, double max_tail) {
    if (!(dist.tail_mass_estimate < max_tail)) {
        std::ostringstream os;
        os << "boundary mass " << dist.tail_mass_estimate << " >= " << max_tail
           << "; enlarge the truncation";
        throw truncation_error(os.str(), dist.tail_mass_estimate);
    }
    CtmcMoments m;
    for (int i = 0; i <= dist.trunc.i_max; ++i) {
        for (int j = 0; j <= dist.trunc.j_max; ++j) {
            const double p = dist.at(i, j);
            m.e_nc += i * p;
            m.e_ns += j * p;
            m.e_nsnc += static_cast<double>(i) * j * p;
        }
    }
    m.covariance = m.e_nsnc - m.e_ns * m.e_nc;
    m.identity_residual = std::abs(loads.rho_c * m.e_nc - m.e_nsnc + loads.rho_c);
    return m;
}

double two_state_oracle(const SystemParams& params, int i_max, const SolveOptions& options) {
    const StateDistribution dist = solve_stationary(build_generator(params, {i_max, 1}), options);
    if (!(dist.tail_mass_jobs < 1e-8)) {
        std::ostringstream os;
        os << "job boundary mass " << dist.tail_mass_jobs << " >= 1e-8 at i_max=" << i_max;
        throw truncation_error(os.str(), dist.tail_mass_jobs);
    }
    double mean = 0.0;
    for (int i = 0; i <= i_max; ++i) mean += i * (dist.at(i, 0) + dist.at(i, 1));
    return mean;
}

void write_csv(std::ostream& out, const StateDistribution& dist) {
    out << "i,j,p\n";
    char buf[64];
    for (int i = 0; i <= dist.trunc.i_max; ++i) {
        for (int j = 0; j <= dist.trunc.j_max; ++j) {
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", i, j, dist.at(i, j));
            out << buf;
        }
    }
}

}  // namespace p2pq::ctmc
