#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "p2pq/analytics.hpp"
#include "p2pq/ctmc.hpp"
#include "p2pq/model.hpp"
#include "p2pq/poisson.hpp"
#include "p2pq/sim.hpp"

namespace p2pq::sweep {

enum class Engine { Analytic, Ctmc, Sim };

std::string_view to_string(Engine engine) noexcept;
Engine parse_engine(std::string_view name);

/// Parameter names accepted in `fixed` and `vary`:
///   lambda_c, mu_c, lambda_s, mu_s   the four rates
///   mu_ratio   (alias "mu_c/mu_s")   resolves mu_s = mu_c / mu_ratio
///   load_ratio (alias "rho_c/rho_s") resolves lambda_c = load_ratio * mu_bar
/// mu_c and lambda_s must be given directly; each of mu_s and lambda_c must
/// be given exactly once, directly or through its ratio.
using Assignment = std::map<std::string, double>;

SystemParams resolve(const Assignment& assignment);

struct Axis {
    std::string name;
    std::vector<double> values;
};

struct SweepSpec {
    Assignment fixed;
    std::vector<Axis> vary;  // one or two axes; the first is the outer loop
    std::set<Engine> engines{Engine::Analytic, Engine::Sim};
    sim::SimConfig sim;
    int reps = 1;
    CdfMode mode = CdfMode::LinearInterp;
    ctmc::AutoSolveOptions ctmc;
};

struct GridPoint {
    Assignment assignment;
    SystemParams params;
};

/// Cartesian product of the axes in deterministic (row-major) order.
/// Throws std::invalid_argument on unknown names or unresolvable points.
std::vector<GridPoint> expand(const SweepSpec& spec);

/// fig7, fig9, fig10, fig11a, fig11b, fig11c, fig11d: mu_c/mu_s = 10 and
/// lambda_s = 10 throughout (so mu_bar = 100).
std::vector<std::string> preset_names();
SweepSpec preset(std::string_view name);

/// Reads {"fixed": {...}, "vary": {"name": [values], ...} or
/// [{"name": ..., "values": [...]}], "engines": [...], "mode": ...,
/// "reps": n, "sim": {"seed", "horizon", "warmup", "batches"}}.
SweepSpec spec_from_json(const nlohmann::json& doc);

struct SweepRow {
    SystemParams params;
    DerivedLoads loads;
    bool stable = false;
    std::optional<analytics::AnalyticEstimates> analytic;
    std::optional<sim::SimReport> sim;
    std::optional<double> ctmc_l;
};

/// Runs every requested engine on every stable grid point using up to
/// `jobs` workers (0 = hardware concurrency). Unstable points keep only
/// their parameters. Point k simulates with seed hash_seed(sim.seed, k), so
/// rows do not depend on `jobs`. A point whose CTMC box is too large or does
/// not converge leaves ctmc_l empty.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned jobs = 0);

std::string csv_header();

/// One line per row, in grid order; absent values are empty cells.
void write_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace p2pq::sweep
