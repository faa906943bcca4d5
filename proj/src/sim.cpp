#include "p2pq/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "p2pq/analytics.hpp"
#include "p2pq/batch_means.hpp"
#include "p2pq/rng.hpp"
#include "parallel.hpp"

namespace p2pq::sim {

namespace {

struct RegionSums {
    double t_over = 0.0;
    double t_under = 0.0;
    double nc_over = 0.0;   // integral of n_c while overloaded
    double nc_under = 0.0;  // integral of n_c while underloaded
    double ns = 0.0;
    double nsnc = 0.0;

    void add(double dt, int i, int j, bool overload) noexcept {
        const double di = dt * i;
        if (overload) {
            t_over += dt;
            nc_over += di;
        } else {
            t_under += dt;
            nc_under += di;
        }
        ns += dt * j;
        nsnc += di * j;
    }

    RegionSums& operator+=(const RegionSums& o) noexcept {
        t_over += o.t_over;
        t_under += o.t_under;
        nc_over += o.nc_over;
        nc_under += o.nc_under;
        ns += o.ns;
        nsnc += o.nsnc;
        return *this;
    }

    double time() const noexcept { return t_over + t_under; }
};

int initial_servers(const SystemParams& p) {
    return static_cast<int>(std::llround(p.lambda_s / p.mu_s));
}

// Fills point estimates from pooled region sums. The mean queue length is
// assembled from the two regions so that
//   a * L_overload + (1 - a) * L_underload == L
// holds bit for bit.
void fill_from_sums(SimReport& r, const RegionSums& s) {
    const double total = s.time();
    r.a_sim = s.t_over / total;
    if (s.t_over > 0.0) r.l_overload_sim = s.nc_over / s.t_over;
    if (s.t_under > 0.0) r.l_underload_sim = s.nc_under / s.t_under;
    r.l_sim = r.a_sim * r.l_overload_sim.value_or(0.0) +
              (1.0 - r.a_sim) * r.l_underload_sim.value_or(0.0);
    r.e_ns_sim = s.ns / total;
    r.e_nsnc_sim = s.nsnc / total;
    r.cov_sim = r.e_nsnc_sim - r.e_ns_sim * r.l_sim;
    r.overload_time_observed = s.t_over;
    r.underload_time_observed = s.t_under;
}

void fill_bounds(SimReport& r, const SystemParams& params) {
    const DerivedLoads loads = derive_loads(params);
    r.stable = is_stable(loads);
    if (!r.stable) return;
    r.l1 = analytics::lower_bound(loads);
    r.l2 = analytics::upper_bound(params, loads);
    if (*r.l2 > *r.l1) r.alpha_emp = (r.l_sim - *r.l1) / (*r.l2 - *r.l1);
}

SimReport run_stream(const SystemParams& params, const SimConfig& config, Xoshiro256pp rng) {
    validate(config, params);

    const double lc = params.lambda_c;
    const double ls = params.lambda_s;
    const double horizon = config.horizon;
    const double warmup = config.effective_warmup();
    const int batches = config.batches;
    const double batch_len = (horizon - warmup) / batches;

    std::vector<RegionSums> per_batch(static_cast<std::size_t>(batches));
    int batch = 0;
    double batch_end = warmup + batch_len;

    int i = 0;
    int j = initial_servers(params);
    double t = 0.0;
    std::uint64_t events = 0;

    while (true) {
        const double death = j * params.mu_s;
        const double service = i > 0 ? j * params.mu_c : 0.0;
        const double total = lc + ls + death + service;
        const double next = t + rng.exponential(total);
        const double stop = std::min(next, horizon);

        if (stop > warmup) {
            const bool overload = j * params.mu_c <= lc;
            double from = std::max(t, warmup);
            while (stop > batch_end && batch + 1 < batches) {
                per_batch[static_cast<std::size_t>(batch)].add(batch_end - from, i, j, overload);
                from = batch_end;
                ++batch;
                batch_end = batch + 1 < batches ? warmup + (batch + 1) * batch_len : horizon;
            }
            per_batch[static_cast<std::size_t>(batch)].add(stop - from, i, j, overload);
        }
        if (next >= horizon) break;
        t = next;
        if (t > warmup) ++events;

        const double u = rng.uniform() * total;
        if (u < lc) {
            ++i;
        } else if (u < lc + ls) {
            ++j;
        } else if (u < lc + ls + death) {
            --j;
        } else {
            --i;
        }
    }

    RegionSums pooled;
    std::vector<double> l_batch, a_batch, cov_batch;
    for (const RegionSums& b : per_batch) {
        pooled += b;
        const double bt = b.time();
        const double l = (b.nc_over + b.nc_under) / bt;
        l_batch.push_back(l);
        a_batch.push_back(b.t_over / bt);
        cov_batch.push_back(b.nsnc / bt - (b.ns / bt) * l);
    }

    SimReport report;
    fill_from_sums(report, pooled);
    report.ci_halfwidth = mean_ci(l_batch).halfwidth;
    report.a_ci_halfwidth = mean_ci(a_batch).halfwidth;
    report.cov_ci_halfwidth = mean_ci(cov_batch).halfwidth;
    report.events = events;
    fill_bounds(report, params);
    return report;
}

}  // namespace

void validate(const SimConfig& config, const SystemParams& params) {
    p2pq::validate(params);
    const double warmup = config.effective_warmup();
    if (!std::isfinite(config.horizon) || !(config.horizon > 0.0)) {
        throw std::invalid_argument("horizon must be finite and > 0");
    }
    if (!(warmup >= 0.0) || !(warmup < config.horizon)) {
        throw std::invalid_argument("warmup must satisfy 0 <= warmup < horizon");
    }
    if (config.batches < 10) throw std::invalid_argument("batches must be >= 10");
    const double batch_len = (config.horizon - warmup) / config.batches;
    if (batch_len * (params.lambda_c + params.lambda_s) < 10.0) {
        std::ostringstream os;
        os << "horizon too short: each of " << config.batches << " batches spans " << batch_len
           << " time units, fewer than 10 expected arrivals";
        throw std::invalid_argument(os.str());
    }
}

SimReport run(const SystemParams& params, const SimConfig& config) {
    return run_stream(params, config, Xoshiro256pp(config.seed));
}

Replicated replicate(const SystemParams& params, const SimConfig& config, int n_reps,
                     unsigned threads, SeedPolicy policy) {
    if (n_reps < 2) throw std::invalid_argument("replicate needs n_reps >= 2");
    validate(config, params);

    Replicated out;
    out.replications.resize(static_cast<std::size_t>(n_reps));
    detail::parallel_for(n_reps, threads, [&](int r) {
        const std::uint64_t stream = policy == SeedPolicy::Shared ? 0 : static_cast<std::uint64_t>(r);
        out.replications[static_cast<std::size_t>(r)] =
            run_stream(params, config, Xoshiro256pp::for_stream(config.seed, stream));
    });

    RegionSums pooled;
    std::vector<double> l, a, cov;
    std::uint64_t events = 0;
    for (const SimReport& rep : out.replications) {
        pooled.t_over += rep.overload_time_observed;
        pooled.t_under += rep.underload_time_observed;
        pooled.nc_over += rep.l_overload_sim.value_or(0.0) * rep.overload_time_observed;
        pooled.nc_under += rep.l_underload_sim.value_or(0.0) * rep.underload_time_observed;
        const double rt = rep.overload_time_observed + rep.underload_time_observed;
        pooled.ns += rep.e_ns_sim * rt;
        pooled.nsnc += rep.e_nsnc_sim * rt;
        l.push_back(rep.l_sim);
        a.push_back(rep.a_sim);
        cov.push_back(rep.cov_sim);
        events += rep.events;
    }

    SimReport& agg = out.aggregate;
    fill_from_sums(agg, pooled);
    agg.ci_halfwidth = mean_ci(l).halfwidth;
    agg.a_ci_halfwidth = mean_ci(a).halfwidth;
    agg.cov_ci_halfwidth = mean_ci(cov).halfwidth;
    agg.events = events;
    agg.replications = n_reps;
    fill_bounds(agg, params);
    return out;
}

std::vector<RateSample> rate_trace(const SystemParams& params, const SimConfig& config,
                                   double sample_interval) {
    p2pq::validate(params);
    if (!(sample_interval > 0.0) || !std::isfinite(sample_interval)) {
        throw std::invalid_argument("sample_interval must be finite and > 0");
    }
    if (!(config.horizon > 0.0) || !std::isfinite(config.horizon)) {
        throw std::invalid_argument("horizon must be finite and > 0");
    }
    Xoshiro256pp rng(config.seed);
    std::vector<RateSample> trace;
    trace.reserve(static_cast<std::size_t>(config.horizon / sample_interval) + 1);

    int j = initial_servers(params);
    double t = 0.0;
    long k = 0;
    double sample_t = 0.0;
    while (sample_t <= config.horizon) {
        const double total = params.lambda_s + j * params.mu_s;
        const double next = t + rng.exponential(total);
        while (sample_t < next && sample_t <= config.horizon) {
            trace.push_back({sample_t, j, j * params.mu_c});
            sample_t = static_cast<double>(++k) * sample_interval;
        }
        t = next;
        if (rng.uniform() * total < params.lambda_s) {
            ++j;
        } else {
            --j;
        }
    }
    return trace;
}

void write_trace_csv(std::ostream& out, std::span<const RateSample> trace) {
    out << "t,n_s,mu\n";
    char buf[96];
    for (const RateSample& s : trace) {
        std::snprintf(buf, sizeof buf, "%.10g,%d,%.10g\n", s.t, s.n_s, s.mu);
        out << buf;
    }
}

}  // namespace p2pq::sim
