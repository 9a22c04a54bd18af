#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "iss_parabolic/grid.hpp"
#include "iss_parabolic/solver.hpp"

namespace issp {

enum class ScenarioKind { simulate, sandwich, iss_check, lyapunov, backstepping_loop, kernel_synthesis };

std::string to_string(ScenarioKind kind);

/// One scenario file:
///
///   [scenario]  name, kind, seed
///   [problem]   a, reaction, k_reaction, initial, initial_coords, left, right,
///               disturbance, control_end
///   [grid]      n_interior, dt, t_final
///   [check]     estimate, p, theta, sigma, tolerance, gain, expect_rate,
///               rate_tol, epsilon, order_tol, min_growth
///
/// `key = value` lines, `#` starts a comment. Selectors:
///   reaction:     none | linear | bistable            (bistable: w - w^3)
///   initial:      zero | constant(c) | sin(m[,amp]) | linear(c0,c1) | random(modes)
///   disturbance:  zero | constant(c) | step(c,t_on) | sinusoid(amp,freq) | file(path)
struct Scenario {
    std::string name;
    ScenarioKind kind = ScenarioKind::simulate;
    std::uint64_t seed = 0;

    double a = 1.0;
    std::string reaction = "none";
    double k_reaction = 0.0;
    std::string initial = "zero";
    /// backstepping_loop only: `plant` or `target` coordinates for `initial`.
    std::string initial_coords = "plant";
    std::string left = "zero";
    std::string right = "zero";
    /// backstepping_loop only: actuator disturbance.
    std::string disturbance = "zero";
    std::string control_end = "left";

    std::size_t n_interior = 99;
    double dt = 1e-3;
    double t_final = 1.0;

    std::vector<std::string> estimates;
    double p = 2.0;
    std::optional<double> theta;
    std::optional<double> sigma;
    double tolerance = 0.02;
    std::optional<double> gain;
    std::optional<double> expect_rate;
    double rate_tol = 0.02;
    double epsilon = 0.1;
    double order_tol = 1e-10;
    std::optional<double> min_growth;

    /// Directory that relative `file(...)` paths resolve against.
    std::filesystem::path source_dir;
};

/// Throws ConfigError on malformed input or unknown keys and selectors.
Scenario parse_scenario(std::istream& is, const std::filesystem::path& source_dir = {});
Scenario load_scenario(const std::filesystem::path& file);

/// Disturbance selector evaluated on [0, t_final]. Throws ConfigError.
BoundarySignal make_signal(const std::string& spec, const Grid1D& grid,
                           const std::filesystem::path& source_dir = {});

/// Initial-data selector. `random(modes)` draws sum_m c_m sin(m pi z) with
/// c_m uniform in [-1/m, 1/m] from the seed and adds the linear lift that
/// matches (left, right). Other selectors are returned unchanged.
Field make_initial(const std::string& spec, const Grid1D& grid, std::uint64_t seed, double left,
                   double right);

struct RunOptions {
    std::filesystem::path out_root = "out";
    std::optional<double> tolerance;
    std::optional<std::uint64_t> seed;
    bool plots = true;
};

/// `--out` beats ISS_PARABOLIC_OUT beats "out".
std::filesystem::path resolve_out_root(const std::optional<std::filesystem::path>& flag);

struct CheckOutcome {
    std::string id;
    bool pass = false;
    double margin = 0.0;
};

struct ScenarioResult {
    std::string name;
    std::string kind;
    bool pass = false;
    double min_margin = 0.0;
    double wall_ms = 0.0;
    std::vector<CheckOutcome> checks;
    /// 0 pass, 1 check failure, 2 configuration error.
    int exit_code = 0;
    std::string error;
};

/// Runs one scenario and writes its artifacts under out_root/<name>/.
/// Configuration problems are reported through exit_code 2, not thrown.
ScenarioResult run_scenario(const Scenario& scenario, const RunOptions& options);
ScenarioResult run_scenario_file(const std::filesystem::path& file, const RunOptions& options);

struct SuiteResult {
    std::vector<ScenarioResult> rows;
    int exit_code = 0;
};

/// Every `*.scn` file of the directory in name order; no fail-fast.
/// exit_code 2 for an empty or missing directory or any configuration
/// error, else 1 if any scenario failed, else 0.
SuiteResult run_suite(const std::filesystem::path& dir, const RunOptions& options);

/// `name,kind,pass,min_margin,wall_ms`
void write_suite_header(std::ostream& os);
void write_suite_row(std::ostream& os, const ScenarioResult& row);

}  // namespace issp
