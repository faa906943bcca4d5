#include "p2pq/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "p2pq/errors.hpp"
#include "p2pq/rng.hpp"
#include "parallel.hpp"

namespace p2pq::sweep {

namespace {

const std::map<std::string, std::string, std::less<>>& aliases() {
    static const std::map<std::string, std::string, std::less<>> table = {
        {"lambda_c", "lambda_c"},     {"mu_c", "mu_c"},
        {"lambda_s", "lambda_s"},     {"mu_s", "mu_s"},
        {"mu_ratio", "mu_ratio"},     {"mu_c/mu_s", "mu_ratio"},
        {"load_ratio", "load_ratio"}, {"rho_c/rho_s", "load_ratio"},
    };
    return table;
}

std::string canonical(std::string_view name) {
    const auto it = aliases().find(name);
    if (it == aliases().end()) {
        throw std::invalid_argument("unknown sweep parameter '" + std::string(name) + "'");
    }
    return it->second;
}

std::vector<double> load_ratio_grid() {
    std::vector<double> v;
    for (int k = 1; k <= 9; ++k) v.push_back(k / 10.0);
    return v;
}

std::vector<double> lambda_c_grid() {
    std::vector<double> v;
    for (int k = 1; k <= 9; ++k) v.push_back(10.0 * k);
    return v;
}

SweepSpec fig_base() {
    SweepSpec spec;
    spec.fixed = {{"mu_ratio", 10.0}, {"lambda_s", 10.0}};
    return spec;
}

void put(std::ostream& out, const std::optional<double>& v) {
    if (v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.10g", *v);
        out << buf;
    }
}

}  // namespace

std::string_view to_string(Engine engine) noexcept {
    switch (engine) {
        case Engine::Analytic:
            return "analytic";
        case Engine::Ctmc:
            return "ctmc";
        case Engine::Sim:
            return "sim";
    }
    return "unknown";
}

Engine parse_engine(std::string_view name) {
    if (name == "analytic") return Engine::Analytic;
    if (name == "ctmc") return Engine::Ctmc;
    if (name == "sim") return Engine::Sim;
    throw std::invalid_argument("unknown engine '" + std::string(name) +
                                "' (expected analytic, ctmc or sim)");
}

SystemParams resolve(const Assignment& assignment) {
    std::map<std::string, double> v;
    for (const auto& [name, value] : assignment) {
        const std::string key = canonical(name);
        if (!v.emplace(key, value).second) {
            throw std::invalid_argument("sweep parameter '" + key + "' assigned twice");
        }
    }
    const auto need = [&](const char* key) {
        const auto it = v.find(key);
        if (it == v.end()) throw std::invalid_argument(std::string("sweep needs ") + key);
        return it->second;
    };
    const auto exactly_one = [&](const char* direct, const char* ratio) {
        const bool a = v.count(direct) > 0;
        const bool b = v.count(ratio) > 0;
        if (a == b) {
            throw std::invalid_argument(std::string("sweep needs exactly one of ") + direct + " and " +
                                        ratio);
        }
        return a;
    };

    SystemParams p;
    p.mu_c = need("mu_c");
    p.lambda_s = need("lambda_s");
    p.mu_s = exactly_one("mu_s", "mu_ratio") ? v.at("mu_s") : p.mu_c / v.at("mu_ratio");
    if (exactly_one("lambda_c", "load_ratio")) {
        p.lambda_c = v.at("lambda_c");
    } else {
        const double mu_bar = (p.lambda_s / p.mu_s) * p.mu_c;
        p.lambda_c = v.at("load_ratio") * mu_bar;
    }
    validate(p);
    return p;
}

std::vector<GridPoint> expand(const SweepSpec& spec) {
    if (spec.vary.empty() || spec.vary.size() > 2) {
        throw std::invalid_argument("a sweep varies one or two parameters");
    }
    for (const Axis& axis : spec.vary) {
        if (axis.values.empty()) throw std::invalid_argument("axis '" + axis.name + "' has no values");
    }
    std::vector<GridPoint> points;
    const Axis& outer = spec.vary[0];
    const Axis* inner = spec.vary.size() == 2 ? &spec.vary[1] : nullptr;
    const std::size_t inner_n = inner ? inner->values.size() : 1;
    for (double x : outer.values) {
        for (std::size_t k = 0; k < inner_n; ++k) {
            GridPoint pt;
            pt.assignment = spec.fixed;
            pt.assignment[outer.name] = x;
            if (inner) pt.assignment[inner->name] = inner->values[k];
            pt.params = resolve(pt.assignment);
            points.push_back(std::move(pt));
        }
    }
    return points;
}

std::vector<std::string> preset_names() {
    return {"fig7", "fig9", "fig10", "fig11a", "fig11b", "fig11c", "fig11d"};
}

SweepSpec preset(std::string_view name) {
    SweepSpec spec = fig_base();
    if (name == "fig7") {
        spec.vary = {{"mu_c", {0.1, 1.0, 10.0, 100.0}}, {"lambda_c", lambda_c_grid()}};
    } else if (name == "fig9") {
        spec.vary = {{"mu_c", {10.0, 50.0}}, {"load_ratio", load_ratio_grid()}};
    } else if (name == "fig10") {
        spec.vary = {{"mu_c", {1.0, 5.0, 10.0, 50.0}}, {"load_ratio", load_ratio_grid()}};
    } else if (name.starts_with("fig11") && name.size() == 6 && name[5] >= 'a' && name[5] <= 'd') {
        static constexpr double kMuC[] = {1.0, 5.0, 10.0, 50.0};
        spec.fixed["mu_c"] = kMuC[name[5] - 'a'];
        spec.vary = {{"load_ratio", load_ratio_grid()}};
    } else {
        throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
    }
    return spec;
}

SweepSpec spec_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("sweep spec must be a JSON object");
    SweepSpec spec;
    try {
        if (doc.contains("fixed")) {
            for (const auto& [k, v] : doc.at("fixed").items()) spec.fixed[k] = v.get<double>();
        }
        const auto& vary = doc.at("vary");
        if (vary.is_object()) {
            for (const auto& [k, v] : vary.items()) spec.vary.push_back({k, v.get<std::vector<double>>()});
        } else {
            for (const auto& axis : vary) {
                spec.vary.push_back(
                    {axis.at("name").get<std::string>(), axis.at("values").get<std::vector<double>>()});
            }
        }
        if (doc.contains("engines")) {
            spec.engines.clear();
            for (const auto& e : doc.at("engines")) spec.engines.insert(parse_engine(e.get<std::string>()));
        }
        if (doc.contains("mode")) spec.mode = parse_cdf_mode(doc.at("mode").get<std::string>());
        if (doc.contains("reps")) spec.reps = doc.at("reps").get<int>();
        if (doc.contains("sim")) {
            const auto& s = doc.at("sim");
            if (s.contains("seed")) spec.sim.seed = s.at("seed").get<std::uint64_t>();
            if (s.contains("horizon")) spec.sim.horizon = s.at("horizon").get<double>();
            if (s.contains("warmup")) spec.sim.warmup = s.at("warmup").get<double>();
            if (s.contains("batches")) spec.sim.batches = s.at("batches").get<int>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed sweep spec: ") + e.what());
    }
    return spec;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned jobs) {
    if (spec.reps < 1) throw std::invalid_argument("reps must be >= 1");
    const std::vector<GridPoint> points = expand(spec);
    std::vector<SweepRow> rows(points.size());

    detail::parallel_for(static_cast<int>(points.size()), jobs, [&](int k) {
        SweepRow& row = rows[static_cast<std::size_t>(k)];
        row.params = points[static_cast<std::size_t>(k)].params;
        row.loads = derive_loads(row.params);
        row.stable = is_stable(row.loads);
        if (!row.stable) return;

        if (spec.engines.count(Engine::Analytic)) {
            row.analytic = analytics::apk_estimate(row.params, spec.mode);
        }
        if (spec.engines.count(Engine::Sim)) {
            sim::SimConfig config = spec.sim;
            config.seed = hash_seed(spec.sim.seed, static_cast<std::uint64_t>(k));
            row.sim = spec.reps >= 2 ? sim::replicate(row.params, config, spec.reps, 1).aggregate
                                     : sim::run(row.params, config);
        }
        if (spec.engines.count(Engine::Ctmc)) {
            try {
                const auto dist = ctmc::solve_auto(row.params, spec.ctmc);
                row.ctmc_l = ctmc::moments(dist, row.loads).e_nc;
            } catch (const truncation_error&) {
            } catch (const convergence_error&) {
            }
        }
    });
    return rows;
}

std::string csv_header() {
    return "mu_c,mu_s,lambda_s,lambda_c,rho_c,rho_s,L1,L2,a,b,alpha_hat,L_apk,L_sim,L_sim_ci,"
           "L_overload_sim,L_underload_sim,a_sim,cov_sim,alpha_emp,ctmc_L,stable";
}

void write_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << csv_header() << '\n';
    using std::nullopt;
    for (const SweepRow& r : rows) {
        const auto& an = r.analytic;
        const auto& s = r.sim;
        const std::optional<double> cells[] = {
            r.params.mu_c,
            r.params.mu_s,
            r.params.lambda_s,
            r.params.lambda_c,
            r.loads.rho_c,
            r.loads.rho_s,
            an ? std::optional(an->l1) : nullopt,
            an ? std::optional(an->l2) : nullopt,
            an ? std::optional(an->a) : nullopt,
            an ? std::optional(an->b) : nullopt,
            an ? std::optional(an->alpha_hat) : nullopt,
            an ? std::optional(an->l_apk) : nullopt,
            s ? std::optional(s->l_sim) : nullopt,
            s ? std::optional(s->ci_halfwidth) : nullopt,
            s ? s->l_overload_sim : nullopt,
            s ? s->l_underload_sim : nullopt,
            s ? std::optional(s->a_sim) : nullopt,
            s ? std::optional(s->cov_sim) : nullopt,
            s ? s->alpha_emp : nullopt,
            r.ctmc_l,
        };
        bool first = true;
        for (const auto& c : cells) {
            if (!first) out << ',';
            first = false;
            put(out, c);
        }
        out << ',' << (r.stable ? 1 : 0) << '\n';
    }
}

}  // namespace p2pq::sweep
