#include "iss_parabolic/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "iss_parabolic/backstepping.hpp"
#include "iss_parabolic/errors.hpp"
#include "iss_parabolic/iss.hpp"
#include "iss_parabolic/monotone.hpp"
#include "svg_plot.hpp"

namespace issp {

namespace fs = std::filesystem;

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::simulate: return "simulate";
        case ScenarioKind::sandwich: return "sandwich";
        case ScenarioKind::iss_check: return "iss_check";
        case ScenarioKind::lyapunov: return "lyapunov";
        case ScenarioKind::backstepping_loop: return "backstepping_loop";
        case ScenarioKind::kernel_synthesis: return "kernel_synthesis";
    }
    return "simulate";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Plain numbers, optionally multiplied by pi or pi^2 ("2*pi^2", "pi").
double parse_number(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) {
        throw ConfigError("expected a number, got an empty value");
    }
    double value = 1.0;
    std::stringstream ss(s);
    std::string factor;
    while (std::getline(ss, factor, '*')) {
        factor = trim(factor);
        if (factor == "pi") {
            value *= std::numbers::pi;
        } else if (factor == "pi^2") {
            value *= std::numbers::pi * std::numbers::pi;
        } else {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(factor, &used);
            } catch (const std::exception&) {
                throw ConfigError("not a number: '" + s + "'");
            }
            if (used != factor.size()) {
                throw ConfigError("not a number: '" + s + "'");
            }
            value *= v;
        }
    }
    if (!std::isfinite(value)) {
        throw ConfigError("non-finite number: '" + s + "'");
    }
    return value;
}

std::uint64_t parse_u64(const std::string& raw) {
    const std::string s = trim(raw);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used, 0);
    } catch (const std::exception&) {
        throw ConfigError("not an unsigned integer: '" + s + "'");
    }
    if (used != s.size() || s.front() == '-') {
        throw ConfigError("not an unsigned integer: '" + s + "'");
    }
    return v;
}

struct Selector {
    std::string name;
    std::vector<std::string> args;
};

Selector parse_selector(const std::string& raw) {
    const std::string s = trim(raw);
    const auto open = s.find('(');
    if (open == std::string::npos) {
        return {s, {}};
    }
    if (s.back() != ')') {
        throw ConfigError("malformed selector '" + s + "'");
    }
    Selector sel{trim(s.substr(0, open)), {}};
    const std::string inner = s.substr(open + 1, s.size() - open - 2);
    std::stringstream ss(inner);
    std::string arg;
    while (std::getline(ss, arg, ',')) {
        sel.args.push_back(trim(arg));
    }
    return sel;
}

void require_args(const Selector& sel, std::size_t lo, std::size_t hi) {
    if (sel.args.size() < lo || sel.args.size() > hi) {
        throw ConfigError("selector '" + sel.name + "' takes " + std::to_string(lo) +
                          (lo == hi ? "" : "-" + std::to_string(hi)) + " argument(s)");
    }
}

ScenarioKind parse_kind(const std::string& s) {
    static const std::map<std::string, ScenarioKind> kinds = {
        {"simulate", ScenarioKind::simulate},
        {"sandwich", ScenarioKind::sandwich},
        {"iss_check", ScenarioKind::iss_check},
        {"lyapunov", ScenarioKind::lyapunov},
        {"backstepping_loop", ScenarioKind::backstepping_loop},
        {"kernel_synthesis", ScenarioKind::kernel_synthesis},
    };
    const auto it = kinds.find(s);
    if (it == kinds.end()) {
        throw ConfigError("unknown scenario kind '" + s + "'");
    }
    return it->second;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty() && item != "none") {
            out.push_back(item);
        }
    }
    return out;
}

void validate(const Scenario& s) {
    if (s.name.empty()) {
        throw ConfigError("[scenario] name is required");
    }
    for (char c : s.name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
            throw ConfigError("scenario name may only contain letters, digits, '_', '-', '.'");
        }
    }
    if (s.reaction != "none" && s.reaction != "linear" && s.reaction != "bistable") {
        throw ConfigError("unknown reaction '" + s.reaction + "'");
    }
    if (s.initial_coords != "plant" && s.initial_coords != "target") {
        throw ConfigError("initial_coords must be 'plant' or 'target'");
    }
    if (s.control_end != "left" && s.control_end != "right") {
        throw ConfigError("control_end must be 'left' or 'right'");
    }
    static const std::vector<std::string> known = {"eq50", "eq51", "eq52", "eq53", "eq63"};
    for (const auto& e : s.estimates) {
        if (std::find(known.begin(), known.end(), e) == known.end()) {
            throw ConfigError("unknown estimate '" + e + "'");
        }
    }
    if (!(s.tolerance >= 0.0) || !(s.rate_tol > 0.0) || !(s.epsilon > 0.0) || !(s.order_tol >= 0.0)) {
        throw ConfigError("tolerances and epsilon must be positive");
    }
    if (!(s.p >= 1.0)) {
        throw ConfigError("p must be at least 1");
    }
}

}  // namespace

Scenario parse_scenario(std::istream& is, const fs::path& source_dir) {
    Scenario s;
    s.source_dir = source_dir;
    std::string section;
    std::string line;
    int lineno = 0;
    bool saw_kind = false;

    using Setter = std::function<void(const std::string&)>;
    const std::map<std::string, std::map<std::string, Setter>> keys = {
        {"scenario",
         {
             {"name", [&](const std::string& v) { s.name = v; }},
             {"kind", [&](const std::string& v) { s.kind = parse_kind(v); saw_kind = true; }},
             {"seed", [&](const std::string& v) { s.seed = parse_u64(v); }},
         }},
        {"problem",
         {
             {"a", [&](const std::string& v) { s.a = parse_number(v); }},
             {"reaction", [&](const std::string& v) { s.reaction = v; }},
             {"k_reaction", [&](const std::string& v) { s.k_reaction = parse_number(v); }},
             {"initial", [&](const std::string& v) { s.initial = v; }},
             {"initial_coords", [&](const std::string& v) { s.initial_coords = v; }},
             {"left", [&](const std::string& v) { s.left = v; }},
             {"right", [&](const std::string& v) { s.right = v; }},
             {"disturbance", [&](const std::string& v) { s.disturbance = v; }},
             {"control_end", [&](const std::string& v) { s.control_end = v; }},
         }},
        {"grid",
         {
             {"n_interior",
              [&](const std::string& v) { s.n_interior = static_cast<std::size_t>(parse_u64(v)); }},
             {"dt", [&](const std::string& v) { s.dt = parse_number(v); }},
             {"t_final", [&](const std::string& v) { s.t_final = parse_number(v); }},
         }},
        {"check",
         {
             {"estimate", [&](const std::string& v) { s.estimates = split_list(v); }},
             {"p",
              [&](const std::string& v) {
                  s.p = (trim(v) == "inf") ? kInf : parse_number(v);
              }},
             {"theta", [&](const std::string& v) { s.theta = parse_number(v); }},
             {"sigma", [&](const std::string& v) { s.sigma = parse_number(v); }},
             {"tolerance", [&](const std::string& v) { s.tolerance = parse_number(v); }},
             {"gain", [&](const std::string& v) { s.gain = parse_number(v); }},
             {"expect_rate", [&](const std::string& v) { s.expect_rate = parse_number(v); }},
             {"rate_tol", [&](const std::string& v) { s.rate_tol = parse_number(v); }},
             {"epsilon", [&](const std::string& v) { s.epsilon = parse_number(v); }},
             {"order_tol", [&](const std::string& v) { s.order_tol = parse_number(v); }},
             {"min_growth", [&](const std::string& v) { s.min_growth = parse_number(v); }},
         }},
    };

    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(where + "malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (!keys.contains(section)) {
                throw ConfigError(where + "unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where + "expected key = value");
        }
        if (section.empty()) {
            throw ConfigError(where + "key outside of any section");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& table = keys.at(section);
        const auto it = table.find(key);
        if (it == table.end()) {
            throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
        }
        try {
            it->second(value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    if (!saw_kind) {
        throw ConfigError("[scenario] kind is required");
    }
    validate(s);
    return s;
}

Scenario load_scenario(const fs::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ConfigError("cannot open scenario file " + file.string());
    }
    try {
        return parse_scenario(in, file.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(file.filename().string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Catalogs

BoundarySignal make_signal(const std::string& spec, const Grid1D& grid, const fs::path& source_dir) {
    const Selector sel = parse_selector(spec);
    const double t_end = grid.t_final();
    if (sel.name == "zero") {
        require_args(sel, 0, 0);
        return BoundarySignal::constant(0.0);
    }
    if (sel.name == "constant") {
        require_args(sel, 1, 1);
        return BoundarySignal::constant(parse_number(sel.args[0]));
    }
    if (sel.name == "step") {
        require_args(sel, 2, 2);
        const double c = parse_number(sel.args[0]);
        const double t_on = parse_number(sel.args[1]);
        if (!(t_on > 0.0)) {
            return BoundarySignal::constant(c);
        }
        std::vector<double> t{0.0, t_on};
        std::vector<double> v{0.0, c};
        if (t_end > t_on) {
            t.push_back(t_end);
            v.push_back(c);
        }
        return BoundarySignal::sampled(std::move(t), std::move(v));
    }
    if (sel.name == "sinusoid") {
        require_args(sel, 2, 2);
        const double amp = parse_number(sel.args[0]);
        const double freq = parse_number(sel.args[1]);
        std::vector<double> t;
        std::vector<double> v;
        for (std::size_t k = 0; k <= grid.steps(); ++k) {
            t.push_back(grid.time(k));
            v.push_back(amp * std::sin(freq * grid.time(k)));
        }
        return BoundarySignal::sampled(std::move(t), std::move(v));
    }
    if (sel.name == "file") {
        require_args(sel, 1, 1);
        fs::path path = sel.args[0];
        if (path.is_relative()) {
            path = source_dir / path;
        }
        std::ifstream in(path);
        if (!in) {
            throw ConfigError("cannot open disturbance file " + path.string());
        }
        std::vector<double> t;
        std::vector<double> v;
        std::string line;
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.empty() || line.front() == '#' || std::isalpha(static_cast<unsigned char>(line.front()))) {
                continue;
            }
            const auto comma = line.find(',');
            if (comma == std::string::npos) {
                throw ConfigError("disturbance file rows must be 't,value'");
            }
            t.push_back(parse_number(line.substr(0, comma)));
            v.push_back(parse_number(line.substr(comma + 1)));
        }
        try {
            return BoundarySignal::sampled(std::move(t), std::move(v));
        } catch (const InvalidParameter& e) {
            throw ConfigError(std::string("disturbance file: ") + e.what());
        }
    }
    throw ConfigError("unknown disturbance selector '" + sel.name + "'");
}

Field make_initial(const std::string& spec, const Grid1D& grid, std::uint64_t seed, double left,
                   double right) {
    const Selector sel = parse_selector(spec);
    const double pi = std::numbers::pi;
    if (sel.name == "zero") {
        require_args(sel, 0, 0);
        return Field::zeros(grid);
    }
    if (sel.name == "constant") {
        require_args(sel, 1, 1);
        return Field::constant(grid, parse_number(sel.args[0]));
    }
    if (sel.name == "sin") {
        require_args(sel, 1, 2);
        const double m = parse_number(sel.args[0]);
        const double amp = sel.args.size() > 1 ? parse_number(sel.args[1]) : 1.0;
        std::vector<double> v(grid.n_nodes());
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = amp * std::sin(m * pi * grid.z(i));
        }
        if (m == std::round(m)) {
            v.front() = 0.0;
            v.back() = 0.0;
        }
        return Field(grid, std::move(v));
    }
    if (sel.name == "linear") {
        require_args(sel, 2, 2);
        const double c0 = parse_number(sel.args[0]);
        const double c1 = parse_number(sel.args[1]);
        return Field::from_function(grid, [&](double z) { return c0 * (1.0 - z) + c1 * z; });
    }
    if (sel.name == "random") {
        require_args(sel, 0, 1);
        const int modes = sel.args.empty() ? 5 : static_cast<int>(parse_number(sel.args[0]));
        if (modes < 1) {
            throw ConfigError("random(modes) needs at least one mode");
        }
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::vector<double> c(static_cast<std::size_t>(modes));
        for (int m = 1; m <= modes; ++m) {
            c[static_cast<std::size_t>(m - 1)] = unit(rng) / m;
        }
        std::vector<double> v(grid.n_nodes());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double z = grid.z(i);
            double acc = left * (1.0 - z) + right * z;
            for (int m = 1; m <= modes; ++m) {
                acc += c[static_cast<std::size_t>(m - 1)] * std::sin(m * pi * z);
            }
            v[i] = acc;
        }
        v.front() = left;
        v.back() = right;
        return Field(grid, std::move(v));
    }
    throw ConfigError("unknown initial selector '" + sel.name + "'");
}

fs::path resolve_out_root(const std::optional<fs::path>& flag) {
    if (flag) {
        return *flag;
    }
    if (const char* env = std::getenv("ISS_PARABOLIC_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return "out";
}

// ---------------------------------------------------------------------------
// Running

namespace {

struct Context {
    const Scenario& s;
    const RunOptions& opt;
    fs::path dir;
    double tol;
    std::uint64_t seed;
    std::vector<CheckOutcome> checks;

    void add(std::string id, bool pass, double margin) {
        checks.push_back({std::move(id), pass, margin});
    }

    std::ofstream open(const std::string& file) const {
        std::ofstream out(dir / file);
        if (!out) {
            throw ConfigError("cannot write " + (dir / file).string());
        }
        return out;
    }

    void plot(const detail::PlotSpec& spec, const std::vector<detail::PlotSeries>& series) const {
        if (!opt.plots) {
            return;
        }
        auto out = open("plot.svg");
        detail::write_svg_plot(out, spec, series);
    }
};

Grid1D make_grid(const Scenario& s) {
    try {
        return Grid1D(s.n_interior, s.dt, s.t_final);
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("[grid] ") + e.what());
    }
}

Reaction make_reaction(const Scenario& s, const Field& x0, double u_sup) {
    if (s.reaction == "none") {
        return Reaction::none();
    }
    if (s.reaction == "linear") {
        return Reaction::linear(s.k_reaction);
    }
    // w - w^3 has slope 1 - 3w^2; the solution stays within the range below.
    const double range = std::max(1.0, x0.max_abs() + u_sup) + 1.0;
    return Reaction::custom([](double, double w, double) { return w - w * w * w; },
                            {1.0, 3.0 * range * range - 1.0});
}

SemilinearProblem make_problem(const Scenario& s, const Grid1D& grid, std::uint64_t seed) {
    const BoundarySignal left = make_signal(s.left, grid, s.source_dir);
    const BoundarySignal right = make_signal(s.right, grid, s.source_dir);
    const Field x0 = make_initial(s.initial, grid, seed, left(0.0), right(0.0));
    const double u_sup = std::max(left.sup_norm(), right.sup_norm());
    try {
        return SemilinearProblem(s.a, make_reaction(s, x0, u_sup), x0, left, right);
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("[problem] ") + e.what());
    }
}

std::vector<double> norms(const Trajectory& traj, double p) {
    std::vector<double> out;
    out.reserve(traj.size());
    for (const auto& st : traj.states()) {
        out.push_back(norm_lp(st, p));
    }
    return out;
}

std::vector<double> to_vec(std::span<const double> s) {
    return {s.begin(), s.end()};
}

std::string p_label(double p) {
    char buf[32];
    if (std::isinf(p)) {
        return "inf";
    }
    std::snprintf(buf, sizeof buf, "%g", p);
    return buf;
}

// Relative check of a fitted rate against the expected one.
void check_rate(Context& ctx, const std::string& id, double measured, double expected) {
    const double rel = std::abs(measured - expected) / std::abs(expected);
    ctx.add(id, rel <= ctx.s.rate_tol, (ctx.s.rate_tol - rel) / ctx.s.rate_tol);
}

void write_trajectory(const Context& ctx, const std::string& file, const Trajectory& traj) {
    auto out = ctx.open(file);
    write_trajectory_csv(out, traj);
}

void run_simulate(Context& ctx) {
    const Scenario& s = ctx.s;
    const Grid1D grid = make_grid(s);
    const auto problem = make_problem(s, grid, ctx.seed);
    const Trajectory traj = simulate(problem, grid);
    write_trajectory(ctx, "trajectory.csv", traj);

    const auto n = norms(traj, s.p);
    std::vector<ReportRow> rows;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double ref = s.expect_rate ? std::exp(-*s.expect_rate * traj.times()[k]) * n[0] : n[k];
        rows.push_back({traj.times()[k], n[k], ref, (ref - n[k]) / std::max(ref, 1e-12)});
    }
    {
        auto out = ctx.open("report.csv");
        write_report_rows(out, rows);
    }
    if (s.expect_rate) {
        check_rate(ctx, "decay_rate", fit_decay_rate(traj.times(), n), *s.expect_rate);
    }
    ctx.plot({"norm of x(t)", "t", "|x|_" + p_label(s.p), s.expect_rate.has_value()},
             {{"|x|_" + p_label(s.p), to_vec(traj.times()), n}});
}

void run_sandwich(Context& ctx) {
    const Scenario& s = ctx.s;
    const Grid1D grid = make_grid(s);
    const auto problem = make_problem(s, grid, ctx.seed);
    const SandwichReport rep = constant_reduction_experiment(problem, grid, s.epsilon, s.order_tol);
    write_trajectory(ctx, "trajectory.csv", rep.original);
    {
        auto out = ctx.open("report.csv");
        write_sandwich_csv(out, rep);
    }
    const double worst = std::max(rep.low_side.worst_violation, rep.high_side.worst_violation);
    ctx.add("sandwich", rep.pass, -worst);
    ctx.plot({"sandwich gaps", "t", "min gap", false},
             {{"x - x_lower", to_vec(rep.original.times()), rep.low_side.min_gap},
              {"x_upper - x", to_vec(rep.original.times()), rep.high_side.min_gap}});
}

// Heat runs used to fit the exp-ISS constants on a given grid.
std::vector<Trajectory> calibration_runs(double a, const Grid1D& grid, bool left, bool right) {
    const auto zero = BoundarySignal::constant(0.0);
    const auto unit = make_signal("step(1, " + std::to_string(grid.dt()) + ")", grid);
    const Field sine = make_initial("sin(1)", grid, 0, 0.0, 0.0);
    const Field nil = Field::zeros(grid);
    std::vector<Trajectory> runs;
    runs.push_back(simulate(SemilinearProblem(a, Reaction::none(), sine, zero, zero), grid));
    if (left) {
        runs.push_back(simulate(SemilinearProblem(a, Reaction::none(), nil, unit, zero), grid));
    }
    if (right) {
        runs.push_back(simulate(SemilinearProblem(a, Reaction::none(), nil, zero, unit), grid));
    }
    if (left && right) {
        runs.push_back(simulate(SemilinearProblem(a, Reaction::none(), nil, unit, unit), grid));
    }
    return runs;
}

void run_iss_check(Context& ctx) {
    const Scenario& s = ctx.s;
    if (s.estimates.empty()) {
        throw ConfigError("iss_check needs [check] estimate");
    }
    const Grid1D grid = make_grid(s);
    const auto problem = make_problem(s, grid, ctx.seed);
    const Trajectory traj = simulate(problem, grid);
    write_trajectory(ctx, "trajectory.csv", traj);

    std::vector<ISSReport> reports;
    for (const auto& id : s.estimates) {
        try {
            if (id == "eq50") {
                reports.push_back(check_eq50(problem, traj, ctx.tol,
                                             s.gain.value_or(std::numbers::inv_pi)));
            } else if (id == "eq51") {
                reports.push_back(check_eq51(problem, traj, ctx.tol,
                                             s.gain.value_or(std::numbers::inv_sqrt3)));
            } else if (id == "eq52") {
                if (!s.sigma || !s.theta) {
                    throw ConfigError("eq52 needs sigma and theta");
                }
                reports.push_back(check_eq52(problem, traj, *s.sigma, *s.theta, ctx.tol));
            } else if (id == "eq53") {
                const auto runs = calibration_runs(s.a, grid, true, true);
                const auto c = estimate_exp_iss_constants(runs, s.p);
                reports.push_back(check_eq53(traj, c, s.p, ctx.tol));
            } else {
                throw ConfigError("estimate " + id + " does not apply to iss_check");
            }
        } catch (const InapplicableEstimate& e) {
            throw ConfigError(e.what());
        } catch (const InvalidParameter& e) {
            throw ConfigError(e.what());
        }
    }
    for (std::size_t r = 0; r < reports.size(); ++r) {
        const auto& rep = reports[r];
        ctx.add(to_string(rep.id), rep.pass, rep.margin);
        if (r == 0) {
            auto out = ctx.open("report.csv");
            write_report_csv(out, rep);
        }
        auto out = ctx.open("report_" + to_string(rep.id) + ".csv");
        write_report_csv(out, rep);
    }
    std::vector<detail::PlotSeries> series;
    for (const auto& rep : reports) {
        std::vector<double> t, lhs, rhs;
        for (const auto& row : rep.rows) {
            t.push_back(row.t);
            lhs.push_back(row.lhs);
            rhs.push_back(row.rhs);
        }
        series.push_back({to_string(rep.id) + " lhs", t, lhs});
        series.push_back({to_string(rep.id) + " rhs", std::move(t), std::move(rhs)});
    }
    const bool decay = problem.left().sup_norm() == 0.0 && problem.right().sup_norm() == 0.0;
    ctx.plot({"ISS estimates", "t", "norm", decay}, series);
}

void run_lyapunov(Context& ctx) {
    const Scenario& s = ctx.s;
    const Grid1D grid = make_grid(s);
    const auto problem = make_problem(s, grid, ctx.seed);
    DecayCertificate cert;
    try {
        cert = lyapunov_decay_certificate(problem, grid, s.p, ctx.tol);
    } catch (const InapplicableEstimate& e) {
        throw ConfigError(e.what());
    } catch (const InvalidParameter& e) {
        throw ConfigError(e.what());
    }
    {
        auto out = ctx.open("report.csv");
        write_report_rows(out, cert.rows);
    }
    write_trajectory(ctx, "trajectory.csv", simulate(problem, grid));
    ctx.add("lyapunov_derivative", cert.derivative_ok, cert.derivative_margin);
    double norm_margin = kInf;
    for (const auto& r : cert.rows) {
        norm_margin = std::min(norm_margin, r.margin);
    }
    ctx.add("lyapunov_norm", cert.norm_ok, norm_margin);
    const double need = cert.norm_rate * (1.0 - ctx.tol);
    ctx.add("lyapunov_rate", cert.measured_norm_rate >= need,
            (cert.measured_norm_rate - cert.norm_rate) / cert.norm_rate);
    std::vector<double> t, lhs, rhs;
    for (const auto& r : cert.rows) {
        t.push_back(r.t);
        lhs.push_back(r.lhs);
        rhs.push_back(r.rhs);
    }
    ctx.plot({"Lyapunov decay, p = " + p_label(s.p), "t", "|x|_p", true},
             {{"|x|_p", t, lhs}, {"certified bound", t, rhs}});
}

void run_backstepping(Context& ctx) {
    const Scenario& s = ctx.s;
    const Grid1D grid = make_grid(s);
    const bool left = s.control_end == "left";
    const BoundarySignal d = make_signal(s.disturbance, grid, s.source_dir);
    VolterraKernel kernel = solve_kernel(s.a, s.k_reaction, grid);
    if (!left) {
        kernel = kernel.mirrored();
    }
    const Field g = make_initial(s.initial, grid, ctx.seed, 0.0, 0.0);
    Field y0 = g;
    if (s.initial_coords == "target") {
        if (std::abs((left ? g.front() : g.back()) - d(0.0)) > 1e-12 ||
            std::abs(left ? g.back() : g.front()) > 1e-12) {
            throw ConfigError("target initial data must equal d(0) at the controlled end and vanish at the other");
        }
        y0 = apply_transform(solve_inverse_kernel(kernel), g);
    } else {
        try {
            y0 = compatible_initial(kernel, g, d(0.0));
        } catch (const InvalidParameter& e) {
            throw ConfigError(e.what());
        }
    }
    const ClosedLoopRun run = simulate_closed_loop(s.a, kernel, y0, d, grid);
    write_trajectory(ctx, "trajectory.csv", run.y);
    write_trajectory(ctx, "x_trajectory.csv", run.x);

    const auto ny = norms(run.y, s.p);
    const auto nx = norms(run.x, s.p);

    double worst_bc = 0.0;
    for (std::size_t k = 0; k < run.x.size(); ++k) {
        const double xb = left ? run.x.boundary_left()[k] : run.x.boundary_right()[k];
        worst_bc = std::max(worst_bc, std::abs(xb - run.disturbance[k]));
    }
    ctx.add("target_boundary", worst_bc <= 1e-9, (1e-9 - worst_bc) / 1e-9);

    if (s.expect_rate) {
        const std::size_t half = run.y.size() / 2;
        const double rate = fit_decay_rate(run.y.times().subspan(half),
                                           std::span<const double>(ny).subspan(half));
        check_rate(ctx, "closed_loop_rate", rate, *s.expect_rate);
    }
    if (s.min_growth) {
        const Trajectory open = simulate_open_loop(s.a, s.k_reaction, g, grid);
        const double growth = norm_lp(open.final_state(), s.p) / norm_lp(open.initial(), s.p);
        ctx.add("open_loop_growth", growth >= *s.min_growth, (growth - *s.min_growth) / *s.min_growth);
    }
    bool wrote_report = false;
    for (const auto& id : s.estimates) {
        if (id != "eq63") {
            throw ConfigError("estimate " + id + " does not apply to backstepping_loop");
        }
        const auto runs = calibration_runs(s.a, grid, left, !left);
        Eq63Constants c;
        c.target = estimate_exp_iss_constants(runs, s.p);
        c.equivalence = estimate_equivalence_constants(kernel, solve_inverse_kernel(kernel), s.p);
        const ISSReport rep = certify_eq63(run.y, run.disturbance, c, s.p, ctx.tol);
        ctx.add("eq63", rep.pass, rep.margin);
        auto out = ctx.open("report.csv");
        write_report_csv(out, rep);
        wrote_report = true;
    }
    if (!wrote_report) {
        std::vector<ReportRow> rows;
        for (std::size_t k = 0; k < run.y.size(); ++k) {
            rows.push_back({run.y.times()[k], ny[k], nx[k], 0.0});
        }
        auto out = ctx.open("report.csv");
        out << "# lhs = |y|_p, rhs = |x|_p\n";
        write_report_rows(out, rows);
    }
    const bool decay = d.sup_norm() == 0.0;
    ctx.plot({"closed loop", "t", "norm", decay},
             {{"|y|_" + p_label(s.p), to_vec(run.y.times()), ny},
              {"|x|_" + p_label(s.p), to_vec(run.x.times()), nx}});
}

void run_kernel(Context& ctx) {
    const Scenario& s = ctx.s;
    const Grid1D grid = make_grid(s);
    VolterraKernel kernel = solve_kernel(s.a, s.k_reaction, grid);
    if (s.control_end == "right") {
        kernel = kernel.mirrored();
    }
    const VolterraKernel inverse = solve_inverse_kernel(kernel);
    {
        auto out = ctx.open("kernel.csv");
        write_kernel_csv(out, kernel);
    }
    {
        auto out = ctx.open("inverse_kernel.csv");
        write_kernel_csv(out, inverse);
    }

    constexpr double limit = 1e-8;
    std::mt19937_64 rng(ctx.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    auto out = ctx.open("report.csv");
    out << "trial,roundtrip_error,limit\n";
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(grid.n_nodes());
        for (double& e : v) {
            e = normal(rng);
        }
        const Field y(grid, std::move(v));
        const Field back = apply_transform(inverse, apply_transform(kernel, y));
        double err = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            err = std::max(err, std::abs(back[i] - y[i]));
        }
        worst = std::max(worst, err);
        char buf[80];
        std::snprintf(buf, sizeof buf, "%d,%.17g,%g\n", trial, err, limit);
        out << buf;
    }
    ctx.add("roundtrip", worst < limit, (limit - worst) / limit);

    const std::size_t row = kernel.control_end() == ControlEnd::left ? 0 : grid.last();
    std::vector<double> z, kv, lv;
    for (std::size_t j = 0; j < grid.n_nodes(); ++j) {
        z.push_back(grid.z(j));
        kv.push_back(kernel.at(row, j));
        lv.push_back(inverse.at(row, j));
    }
    ctx.plot({"feedback kernel row", "s", "kernel value", false},
             {{"k(row, s)", z, kv}, {"l(row, s)", z, lv}});
}

}  // namespace

ScenarioResult run_scenario(const Scenario& scenario, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    ScenarioResult result;
    result.name = scenario.name;
    result.kind = to_string(scenario.kind);
    Context ctx{scenario, options, options.out_root / scenario.name,
                options.tolerance.value_or(scenario.tolerance), options.seed.value_or(scenario.seed), {}};
    try {
        std::error_code ec;
        fs::create_directories(ctx.dir, ec);
        if (ec) {
            throw ConfigError("cannot create " + ctx.dir.string() + ": " + ec.message());
        }
        switch (scenario.kind) {
            case ScenarioKind::simulate: run_simulate(ctx); break;
            case ScenarioKind::sandwich: run_sandwich(ctx); break;
            case ScenarioKind::iss_check: run_iss_check(ctx); break;
            case ScenarioKind::lyapunov: run_lyapunov(ctx); break;
            case ScenarioKind::backstepping_loop: run_backstepping(ctx); break;
            case ScenarioKind::kernel_synthesis: run_kernel(ctx); break;
        }
        result.checks = ctx.checks;
        result.pass = std::all_of(ctx.checks.begin(), ctx.checks.end(),
                                  [](const CheckOutcome& c) { return c.pass; });
        result.min_margin = 0.0;
        if (!ctx.checks.empty()) {
            result.min_margin = kInf;
            for (const auto& c : ctx.checks) {
                result.min_margin = std::min(result.min_margin, c.margin);
            }
        }
        result.exit_code = result.pass ? 0 : 1;
        auto out = ctx.open("summary.csv");
        out << "estimate_id,pass,min_margin\n";
        for (const auto& c : ctx.checks) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", c.margin);
            out << c.id << ',' << (c.pass ? "true" : "false") << ',' << buf << '\n';
        }
    } catch (const ConfigError& e) {
        result.pass = false;
        result.exit_code = 2;
        result.error = e.what();
    } catch (const Error& e) {
        result.pass = false;
        result.exit_code = 2;
        result.error = e.what();
    }
    result.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return result;
}

ScenarioResult run_scenario_file(const fs::path& file, const RunOptions& options) {
    try {
        return run_scenario(load_scenario(file), options);
    } catch (const ConfigError& e) {
        ScenarioResult r;
        r.name = file.stem().string();
        r.kind = "unknown";
        r.exit_code = 2;
        r.error = e.what();
        return r;
    }
}

SuiteResult run_suite(const fs::path& dir, const RunOptions& options) {
    SuiteResult suite;
    std::vector<fs::path> files;
    std::error_code ec;
    if (fs::is_directory(dir, ec)) {
        for (const auto& entry : fs::directory_iterator(dir, ec)) {
            if (entry.is_regular_file() && entry.path().extension() == ".scn") {
                files.push_back(entry.path());
            }
        }
    }
    if (files.empty()) {
        suite.exit_code = 2;
        return suite;
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        suite.rows.push_back(run_scenario_file(f, options));
    }
    for (const auto& r : suite.rows) {
        suite.exit_code = std::max(suite.exit_code, r.exit_code);
    }
    return suite;
}

void write_suite_header(std::ostream& os) {
    os << "name,kind,pass,min_margin,wall_ms\n";
}

void write_suite_row(std::ostream& os, const ScenarioResult& row) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.6g,%.1f", row.min_margin, row.wall_ms);
    os << row.name << ',' << row.kind << ',' << (row.pass ? "true" : "false") << ',' << buf << '\n';
}

}  // namespace issp
