// p2pq: analytic estimates, exact CTMC solutions and simulations of the
// P2P queue (FCFS jobs served jointly by a fluctuating server population).
//
//   p2pq analyze  --lambda-c 50 --mu-c 1 --lambda-s 10 --mu-s 0.1
//   p2pq solve    --lambda-c 1 --mu-c 1 --lambda-s 2 --mu-s 1 --out dist.csv
//   p2pq simulate --lambda-c 50 --mu-c 10 --lambda-s 10 --mu-s 1 --seed 42
//   p2pq sweep    --preset fig11d --out fig11d.csv --jobs 4
//
// Exit codes: 0 ok, 2 invalid input, 3 unstable parameters, 4 CTMC solver
// did not converge or its truncation box overflowed.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "p2pq/analytics.hpp"
#include "p2pq/ctmc.hpp"
#include "p2pq/errors.hpp"
#include "p2pq/report_json.hpp"
#include "p2pq/sim.hpp"
#include "p2pq/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitUnstable = 3;
constexpr int kExitSolver = 4;

using nlohmann::json;

struct ParamFlags {
    p2pq::SystemParams params;
    std::vector<CLI::Option*> options;

    void attach(CLI::App& app) {
        options = {
            app.add_option("--lambda-c", params.lambda_c, "Job arrival rate"),
            app.add_option("--mu-c", params.mu_c, "Service rate of one server"),
            app.add_option("--lambda-s", params.lambda_s, "Server arrival rate"),
            app.add_option("--mu-s", params.mu_s, "Reciprocal of the mean server lifetime"),
        };
    }

    void require() const {
        for (const CLI::Option* opt : options) {
            if (opt->count() == 0) {
                throw std::invalid_argument(opt->get_name() + " is required (flag or config file)");
            }
        }
    }
};

struct SimFlags {
    p2pq::sim::SimConfig config;
    double warmup = -1.0;
    int reps = 1;
    unsigned jobs = 0;
    std::vector<CLI::Option*> options;

    void attach(CLI::App& app) {
        options = {
            app.add_option("--seed", config.seed, "Base RNG seed")->capture_default_str(),
            app.add_option("--horizon", config.horizon, "Simulated time units")->capture_default_str(),
            app.add_option("--warmup", warmup, "Discarded prefix (default 10% of horizon)"),
            app.add_option("--batches", config.batches, "Batches for batch-means CIs")->capture_default_str(),
            app.add_option("--reps", reps, "Independent replications")->capture_default_str(),
        };
        app.add_option("--jobs", jobs, "Worker threads (0 = all cores)")->capture_default_str();
    }

    p2pq::sim::SimConfig resolved() const {
        p2pq::sim::SimConfig c = config;
        if (warmup >= 0.0) c.warmup = warmup;
        return c;
    }
};

// Applies a JSON config whose keys mirror long flag names ("lambda-c": 50).
// Options already given on the command line win.
void apply_config(CLI::App& sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::invalid_argument("config file '" + path + "': " + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("config file must hold a JSON object");
    for (const auto& [key, value] : doc.items()) {
        CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr) {
            throw std::invalid_argument("config key '" + key + "' is not a flag of '" + sub.get_name() + "'");
        }
        if (opt->count() > 0) continue;
        std::vector<std::string> values;
        const auto as_string = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
        if (value.is_array()) {
            for (const auto& v : value) values.push_back(as_string(v));
        } else {
            values.push_back(as_string(value));
        }
        for (const auto& v : values) opt->add_result(v);
        opt->run_callback();
    }
}

void emit(const json& doc, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << doc.dump(2) << '\n';
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::invalid_argument("cannot write '" + out_path + "'");
    out << doc.dump(2) << '\n';
}

int cmd_analyze(const p2pq::SystemParams& params, p2pq::CdfMode mode, bool two_state) {
    const p2pq::DerivedLoads loads = p2pq::derive_loads(params);
    const p2pq::StabilityReport stability = p2pq::check_stability(loads);
    json doc = {{"params", p2pq::to_json(params)},
                {"loads", p2pq::to_json(loads)},
                {"stability", p2pq::to_json(stability)},
                {"mode", std::string(p2pq::to_string(mode))}};
    if (!stability.stable) {
        std::cout << doc.dump(2) << '\n';
        std::cerr << "error: unstable parameters (rho_c >= rho_s)\n";
        return kExitUnstable;
    }
    doc["estimates"] = p2pq::to_json(p2pq::analytics::apk_estimate(params, mode));
    const auto moments = p2pq::analytics::service_time_moments(loads);
    doc["service_time"] = p2pq::to_json(moments);
    try {
        doc["pk_mg1_naive"] = p2pq::analytics::pk_mg1(params.lambda_c, moments.mean_s, moments.var_s);
    } catch (const p2pq::unstable_error&) {
        doc["pk_mg1_naive"] = nullptr;
    }
    if (two_state) {
        json ts = {{"limit_mean", p2pq::analytics::two_state_limit_mean(params)}};
        try {
            const auto sol = p2pq::analytics::two_state_solution(params);
            ts["stable"] = true;
            ts["mean_queue_length"] = sol.mean_queue_length();
            ts["paper_literal_mean"] = sol.paper_literal_mean();
            ts["p00"] = sol.p00();
            ts["p01"] = sol.p01();
        } catch (const p2pq::unstable_error&) {
            ts["stable"] = false;
        }
        doc["two_state"] = ts;
    }
    std::cout << doc.dump(2) << '\n';
    return kExitOk;
}

int cmd_solve(const p2pq::SystemParams& params, std::optional<int> i_max, std::optional<int> j_max,
              double tol, const std::string& method, const std::string& dist_out) {
    const p2pq::DerivedLoads loads = p2pq::derive_loads(params);
    p2pq::require_stable(loads, "solve");

    p2pq::ctmc::SolveOptions options;
    options.tol = tol;
    if (method == "direct") {
        options.method = p2pq::ctmc::SolverMethod::Direct;
    } else if (method == "relaxation") {
        options.method = p2pq::ctmc::SolverMethod::Relaxation;
    }

    p2pq::ctmc::StateDistribution dist;
    if (i_max || j_max) {
        p2pq::ctmc::Truncation t = p2pq::ctmc::default_truncation(params);
        if (i_max) t.i_max = *i_max;
        if (j_max) t.j_max = *j_max;
        dist = p2pq::ctmc::solve_stationary(p2pq::ctmc::build_generator(params, t), options);
    } else {
        p2pq::ctmc::AutoSolveOptions auto_options;
        auto_options.solve = options;
        dist = p2pq::ctmc::solve_auto(params, auto_options);
    }

    json doc = {{"params", p2pq::to_json(params)},
                {"truncation", {{"i_max", dist.trunc.i_max}, {"j_max", dist.trunc.j_max}}},
                {"tail_mass_estimate", dist.tail_mass_estimate},
                {"tail_mass_jobs", dist.tail_mass_jobs},
                {"tail_mass_servers", dist.tail_mass_servers},
                {"residual", dist.residual},
                {"iterations", dist.iterations}};
    try {
        doc["moments"] = p2pq::to_json(p2pq::ctmc::moments(dist, loads));
    } catch (const p2pq::truncation_error& e) {
        doc["moments"] = nullptr;
        doc["warning"] = e.what();
    }
    if (!dist_out.empty()) {
        std::ofstream out(dist_out);
        if (!out) throw std::invalid_argument("cannot write '" + dist_out + "'");
        p2pq::ctmc::write_csv(out, dist);
    }
    std::cout << doc.dump(2) << '\n';
    return doc["moments"].is_null() ? kExitSolver : kExitOk;
}

int cmd_simulate(const p2pq::SystemParams& params, const SimFlags& flags, const std::string& out,
                 const std::string& trace_out, double trace_interval) {
    const p2pq::sim::SimConfig config = flags.resolved();
    json doc = {{"params", p2pq::to_json(params)},
                {"config",
                 {{"seed", config.seed},
                  {"horizon", config.horizon},
                  {"warmup", config.effective_warmup()},
                  {"batches", config.batches}}}};
    if (flags.reps >= 2) {
        doc["report"] = p2pq::to_json(p2pq::sim::replicate(params, config, flags.reps, flags.jobs).aggregate);
    } else {
        doc["report"] = p2pq::to_json(p2pq::sim::run(params, config));
    }
    if (!trace_out.empty()) {
        std::ofstream tf(trace_out);
        if (!tf) throw std::invalid_argument("cannot write '" + trace_out + "'");
        const auto trace = p2pq::sim::rate_trace(params, config, trace_interval);
        p2pq::sim::write_trace_csv(tf, trace);
    }
    emit(doc, out);
    return kExitOk;
}

int cmd_sweep(p2pq::sweep::SweepSpec spec, const SimFlags& flags, const std::string& out_path) {
    const auto rows = p2pq::sweep::run_sweep(spec, flags.jobs);
    if (out_path.empty()) {
        p2pq::sweep::write_csv(std::cout, rows);
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::invalid_argument("cannot write '" + out_path + "'");
        p2pq::sweep::write_csv(out, rows);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"P2P queue analysis: bounds, approximate P-K estimate, CTMC oracle, simulation"};
    app.require_subcommand(1);
    std::string config_path;
    app.fallthrough();
    app.add_option("--config", config_path, "JSON file whose keys mirror long flags");

    std::string mode_name = "linear-interp";
    const auto add_mode = [&](CLI::App* sub) {
        sub->add_option("--mode", mode_name, "CDF interpolation: paper-literal or linear-interp")
            ->check(CLI::IsMember({"paper-literal", "linear-interp"}))
            ->capture_default_str();
    };

    // analyze
    CLI::App* analyze = app.add_subcommand("analyze", "Closed-form bounds and approximate P-K estimate");
    ParamFlags analyze_params;
    analyze_params.attach(*analyze);
    add_mode(analyze);
    bool two_state = false;
    analyze->add_flag("--two-state", two_state, "Also report the exact two-state-server solution");

    // solve
    CLI::App* solve = app.add_subcommand("solve", "Stationary distribution of the truncated CTMC");
    ParamFlags solve_params;
    solve_params.attach(*solve);
    std::optional<int> i_max;
    std::optional<int> j_max;
    double tol = 1e-10;
    std::string method = "auto";
    std::string dist_out;
    solve->add_option("--i-max", i_max, "Job truncation (default: automatic)");
    solve->add_option("--j-max", j_max, "Server truncation (default: automatic)");
    solve->add_option("--tol", tol, "Balance residual tolerance")->capture_default_str();
    solve->add_option("--method", method, "auto, direct or relaxation")
        ->check(CLI::IsMember({"auto", "direct", "relaxation"}))
        ->capture_default_str();
    solve->add_option("--out", dist_out, "Write the distribution as CSV (i,j,p)");

    // simulate
    CLI::App* simulate = app.add_subcommand("simulate", "Discrete-event simulation with batch-means CIs");
    ParamFlags sim_params;
    sim_params.attach(*simulate);
    SimFlags sim_flags;
    sim_flags.attach(*simulate);
    std::string sim_out;
    std::string trace_out;
    double trace_interval = 1.0;
    simulate->add_option("--out", sim_out, "Write the JSON report to a file");
    simulate->add_option("--trace-out", trace_out, "Write a service-rate trace CSV (t,n_s,mu)");
    simulate->add_option("--trace-interval", trace_interval, "Trace sampling interval")->capture_default_str();

    // sweep
    CLI::App* sweep = app.add_subcommand("sweep", "Parameter grid over the engines, CSV output");
    SimFlags sweep_flags;
    sweep_flags.attach(*sweep);
    add_mode(sweep);
    std::string preset_name;
    std::string spec_path;
    std::string sweep_out;
    std::vector<std::string> engines;
    auto* preset_opt = sweep->add_option("--preset", preset_name, "fig7, fig9, fig10, fig11a..fig11d");
    sweep->add_option("--spec", spec_path, "JSON sweep spec")->excludes(preset_opt);
    sweep->add_option("--engines", engines, "Subset of analytic, ctmc, sim")->delimiter(',');
    sweep->add_option("--out", sweep_out, "CSV output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        CLI::App* chosen = app.get_subcommands().front();
        if (!config_path.empty()) apply_config(*chosen, config_path);
        const p2pq::CdfMode mode = p2pq::parse_cdf_mode(mode_name);

        if (chosen == analyze) {
            analyze_params.require();
            return cmd_analyze(analyze_params.params, mode, two_state);
        }
        if (chosen == solve) {
            solve_params.require();
            return cmd_solve(solve_params.params, i_max, j_max, tol, method, dist_out);
        }
        if (chosen == simulate) {
            sim_params.require();
            return cmd_simulate(sim_params.params, sim_flags, sim_out, trace_out, trace_interval);
        }

        p2pq::sweep::SweepSpec spec;
        if (!preset_name.empty()) {
            spec = p2pq::sweep::preset(preset_name);
        } else if (!spec_path.empty()) {
            std::ifstream in(spec_path);
            if (!in) throw std::invalid_argument("cannot open spec '" + spec_path + "'");
            nlohmann::json doc;
            try {
                in >> doc;
            } catch (const nlohmann::json::exception& e) {
                throw std::invalid_argument(std::string("spec file: ") + e.what());
            }
            spec = p2pq::sweep::spec_from_json(doc);
        } else {
            throw std::invalid_argument("sweep needs --preset or --spec");
        }
        spec.mode = mode;
        for (CLI::Option* opt : sweep_flags.options) {
            if (opt->count() == 0) continue;
            const std::string name = opt->get_name();
            if (name == "--seed") spec.sim.seed = sweep_flags.config.seed;
            if (name == "--horizon") spec.sim.horizon = sweep_flags.config.horizon;
            if (name == "--warmup") spec.sim.warmup = sweep_flags.warmup;
            if (name == "--batches") spec.sim.batches = sweep_flags.config.batches;
            if (name == "--reps") spec.reps = sweep_flags.reps;
        }
        if (!engines.empty()) {
            spec.engines.clear();
            for (const auto& e : engines) spec.engines.insert(p2pq::sweep::parse_engine(e));
        }
        return cmd_sweep(spec, sweep_flags, sweep_out);
    } catch (const p2pq::unstable_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUnstable;
    } catch (const p2pq::convergence_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const p2pq::truncation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
