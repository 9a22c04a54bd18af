// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <random>
#include <string>
#include <vector>

#include "iss_parabolic/backstepping.hpp"
#include "iss_parabolic/errors.hpp"
#include "iss_parabolic/iss.hpp"
#include "iss_parabolic/monotone.hpp"
#include "iss_parabolic/scenario.hpp"
#include "iss_parabolic/solver.hpp"
#include "oracles.hpp"

using namespace issp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::vector<double> l2_norms(const Trajectory& traj) {
    std::vector<double> out;
    for (const auto& s : traj.states()) {
        out.push_back(norm_lp(s, 2.0));
    }
    return out;
}

double late_rate(const Trajectory& traj, const std::vector<double>& n) {
    const std::size_t half = traj.size() / 2;
    return fit_decay_rate(traj.times().subspan(half), std::span<const double>(n).subspan(half));
}

Outcome eigen_decay() {
    const auto t0 = Clock::now();
    const Grid1D g(199, 1e-4, 0.3);
    const auto zero = BoundarySignal::constant(0.0);
    const SemilinearProblem prob(1.0, Reaction::none(), oracle::sine(g), zero, zero);
    const Trajectory traj = simulate(prob, g);
    const auto n = l2_norms(traj);
    const double rate = fit_decay_rate(traj.times(), n);
    const double rel = std::abs(rate - oracle::pi * oracle::pi) / (oracle::pi * oracle::pi);
    const double secs = seconds_since(t0);
    return {rel <= 0.02 && secs < 5.0,
            "rate " + fmt("%.5f", rate) + ", rel err " + fmt("%.2e", rel) + " (<= 0.02), " +
                fmt("%.2f", secs) + " s (< 5)"};
}

Outcome eq51_random() {
    const auto t0 = Clock::now();
    const Grid1D g(49, 1e-3, 1.0);
    std::vector<std::future<double>> jobs;
    for (int trial = 0; trial < 100; ++trial) {
        jobs.push_back(std::async(std::launch::async, [trial, &g] {
            std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(trial));
            const auto left = oracle::random_input(g, rng);
            const auto right = oracle::random_input(g, rng);
            const Field x0 = oracle::smooth_field(g, rng, left(0.0), right(0.0));
            const SemilinearProblem prob(1.0, Reaction::none(), x0, left, right);
            const auto rep = check_eq51(prob, simulate(prob, g), 0.02);
            return rep.margin;
        }));
    }
    double worst = kInf;
    for (auto& j : jobs) {
        worst = std::min(worst, j.get());
    }
    const double secs = seconds_since(t0);
    return {worst >= -0.02 && secs < 60.0,
            "min relative margin " + fmt("%.4f", worst) + " over 100 runs (>= -0.02), " +
                fmt("%.2f", secs) + " s (< 60)"};
}

Outcome eq50_steady() {
    const Grid1D g(99, 1e-3, 3.0);
    const auto one = BoundarySignal::constant(1.0);
    const SemilinearProblem prob(1.0, Reaction::none(), Field::constant(g, 1.0), one, one);
    const Trajectory traj = simulate(prob, g);
    const auto rep = check_eq50(prob, traj);
    const double w = norm_weighted_sin(traj.final_state());
    const double target = 2.0 / oracle::pi;
    const double rel = std::abs(w - target) / target;
    const double gain_sum = rep.rows.back().rhs - std::exp(-oracle::pi * oracle::pi * 3.0) * rep.initial_norm;
    const bool gains = std::abs(gain_sum - target) < 1e-12;
    return {rel <= 0.01 && gains && rep.pass,
            "steady weighted L1 " + fmt("%.6f", w) + " vs 2/pi, rel err " + fmt("%.2e", rel) +
                " (<= 0.01); gain sum " + fmt("%.6f", gain_sum)};
}

Outcome lyapunov() {
    const Grid1D g(199, 1e-4, 0.2);
    const auto zero = BoundarySignal::constant(0.0);
    const SemilinearProblem prob(1.0, Reaction::none(), oracle::sine(g), zero, zero);
    bool ok = true;
    std::string detail;
    for (double p : {3.0, 4.0, 8.0}) {
        const auto cert = lyapunov_decay_certificate(prob, g, p, 0.02);
        const bool rate_ok = cert.measured_norm_rate >= cert.norm_rate * (1.0 - 0.02);
        ok = ok && cert.pass && rate_ok;
        detail += "p=" + fmt("%g", p) + ": " + fmt("%.3f", cert.measured_norm_rate) + " >= " +
                  fmt("%.3f", cert.norm_rate) + "; ";
    }
    const double e4 = lyapunov_norm_rate(1.0, 4.0);
    ok = ok && std::abs(e4 - 0.75 * oracle::pi * oracle::pi) < 1e-12 && std::abs(e4 - 7.402) < 1e-3;
    return {ok, detail + "exponent(p=4) " + fmt("%.4f", e4)};
}

Outcome sandwich() {
    const Grid1D g(49, 1e-3, 0.5);
    int passed = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::mt19937_64 rng(5000 + static_cast<std::uint64_t>(trial));
        const auto left = oracle::random_input(g, rng);
        const auto right = oracle::random_input(g, rng);
        const Field x0 = oracle::smooth_field(g, rng, left(0.0), right(0.0));
        Reaction f = Reaction::none();
        if (trial % 3 == 1) {
            f = Reaction::linear(5.0);
        } else if (trial % 3 == 2) {
            const double range = std::max(1.0, x0.max_abs() + 1.0) + 1.0;
            f = Reaction::custom([](double, double w, double) { return w - w * w * w; },
                                 {1.0, 3.0 * range * range - 1.0});
        }
        const SemilinearProblem prob(1.0, f, x0, left, right);
        const auto rep = constant_reduction_experiment(prob, g, 0.1, 1e-10);
        passed += rep.pass ? 1 : 0;
        worst = std::max({worst, rep.low_side.worst_violation, rep.high_side.worst_violation});
    }
    return {passed == 50, std::to_string(passed) + "/50 sandwiches hold, worst violation " +
                              fmt("%.2e", worst) + " (tol 1e-10)"};
}

double max_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

Outcome axioms() {
    int passed = 0;
    double worst_cocycle = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::mt19937_64 rng(7000 + static_cast<std::uint64_t>(trial));
        const Grid1D g(39, 1e-3, 0.4);
        const auto left = oracle::random_input(g, rng);
        const auto right = oracle::random_input(g, rng);
        const Field x0 = oracle::smooth_field(g, rng, left(0.0), right(0.0));
        const Reaction f = trial % 2 == 0 ? Reaction::none() : Reaction::linear(3.0);
        const SemilinearProblem prob(1.0, f, x0, left, right);
        const Trajectory full = simulate(prob, g);

        // identity
        bool ok = max_diff(full.initial(), x0) == 0.0;

        // cocycle: stop at t1, restart with shifted inputs
        const std::size_t k1 = 150;
        const double t1 = g.time(k1);
        const Grid1D head(39, 1e-3, t1);
        const Trajectory first = simulate(prob, head);
        const SemilinearProblem rest_prob =
            prob.with_data(first.final_state(), left.shifted(t1), right.shifted(t1));
        const Trajectory rest = simulate(rest_prob, g.with_horizon(g.t_final() - t1));
        double cocycle = 0.0;
        for (std::size_t k = 0; k < rest.size(); ++k) {
            cocycle = std::max(cocycle, max_diff(rest.state(k), full.state(k1 + k)));
        }
        worst_cocycle = std::max(worst_cocycle, cocycle);
        ok = ok && rest.size() + k1 == full.size() && cocycle <= 1e-12;

        // causality: change the inputs after t_c only
        const double t_c = g.time(200);
        std::vector<double> tt, vv;
        for (std::size_t k = 0; k <= g.steps(); ++k) {
            tt.push_back(g.time(k));
            vv.push_back(k <= 200 ? left(g.time(k)) : left(g.time(k)) + 0.7);
        }
        const SemilinearProblem altered =
            prob.with_data(x0, BoundarySignal::sampled(tt, vv), right);
        const Trajectory other = simulate(altered, g);
        for (std::size_t k = 0; k < full.size() && full.times()[k] <= t_c; ++k) {
            ok = ok && max_diff(other.state(k), full.state(k)) == 0.0;
        }
        ok = ok && max_diff(other.final_state(), full.final_state()) > 0.0;
        passed += ok ? 1 : 0;
    }
    return {passed == 20, std::to_string(passed) + "/20 instances; worst cocycle defect " +
                              fmt("%.2e", worst_cocycle) + " (<= 1e-12), causality bitwise"};
}

double commutation_residual(std::size_t n, double dt) {
    const Grid1D g(n, dt, 0.1);
    const auto kernel = solve_kernel(1.0, 10.0, g);
    const auto inverse = solve_inverse_kernel(kernel);
    const Field y0 = apply_transform(inverse, oracle::sine(g));
    const auto run = simulate_closed_loop(1.0, kernel, y0, BoundarySignal::constant(0.0), g);
    return residual(1.0, Reaction::none(), run.x);
}

Outcome kernel() {
    const Grid1D g(199, 1e-3, 1e-3);
    const double lam = 10.0;
    const auto k = solve_kernel(1.0, lam, g);
    double oracle_err = 0.0;
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        for (std::size_t j = i; j < g.n_nodes(); ++j) {
            oracle_err = std::max(oracle_err, std::abs(k.at(i, j) - oracle::direct_kernel(lam, g.z(i), g.z(j))));
        }
    }
    const auto l = solve_inverse_kernel(k);
    std::mt19937_64 rng(77);
    double rt = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Field y = oracle::noise_field(g, rng);
        rt = std::max(rt, max_diff(apply_transform(l, apply_transform(k, y)), y));
    }
    const double r1 = commutation_residual(39, 4e-4);
    const double r2 = commutation_residual(79, 1e-4);
    const double order = std::log2(r1 / r2);
    return {oracle_err < 1e-6 && rt < 1e-8 && order >= 1.8,
            "oracle sup diff " + fmt("%.2e", oracle_err) + " (< 1e-6), round trip " +
                fmt("%.2e", rt) + " (< 1e-8), residual order " + fmt("%.3f", order) + " (>= 1.8)"};
}

Outcome robustness() {
    const double a = 1.0;
    const double c = 15.0;
    const Grid1D g(99, 1e-4, 0.5);
    const Field s = oracle::sine(g);

    const Trajectory open = simulate_open_loop(a, c, s, g);
    const double growth = norm_lp(open.final_state(), 2.0) / norm_lp(open.initial(), 2.0);

    const auto kernel = solve_kernel(a, c, g);
    const auto inverse = solve_inverse_kernel(kernel);
    const Field y0 = apply_transform(inverse, s);
    const auto free_run = simulate_closed_loop(a, kernel, y0, BoundarySignal::constant(0.0), g);
    const auto ny = l2_norms(free_run.y);
    const double rate = late_rate(free_run.y, ny);
    const double rate_rel = std::abs(rate - oracle::pi * oracle::pi) / (oracle::pi * oracle::pi);

    // Target-system constants from heat runs driven at z = 0.
    const Grid1D gl(99, 1e-4, 1.5);
    const auto zero = BoundarySignal::constant(0.0);
    std::vector<Trajectory> runs;
    runs.push_back(simulate(SemilinearProblem(a, Reaction::none(), oracle::sine(gl), zero, zero), gl));
    runs.push_back(simulate(SemilinearProblem(a, Reaction::none(), Field::zeros(gl),
                                              oracle::step(gl, 1.0, gl.dt()), zero), gl));
    Eq63Constants consts;
    consts.target = estimate_exp_iss_constants(runs, 2.0);
    consts.equivalence = estimate_equivalence_constants(kernel, inverse, 2.0);

    const Grid1D gs(99, 1e-4, 1.5);
    const auto ks = solve_kernel(a, c, gs);
    const auto d = oracle::step(gs, 0.5, gs.dt());
    const auto forced = simulate_closed_loop(a, ks, Field::zeros(gs), d, gs);
    const auto rep = certify_eq63(forced.y, forced.disturbance, consts, 2.0, 0.02);
    const double steady = norm_lp(forced.y.final_state(), 2.0);
    const double cap = consts.equivalence.k2 * consts.target.gamma * 0.5;

    const bool ok = growth >= 10.0 && rate_rel <= 0.05 && rep.pass && steady <= cap;
    return {ok, "open-loop growth " + fmt("%.2f", growth) + "x (>= 10), closed-loop rate " +
                    fmt("%.4f", rate) + " rel err " + fmt("%.2e", rate_rel) + " (<= 0.05), eq63 margin " +
                    fmt("%.4f", rep.margin) + ", steady |y|_2 " + fmt("%.4f", steady) +
                    " <= K2*gamma*0.5 = " + fmt("%.4f", cap)};
}

Outcome negative_control() {
    RunOptions opt;
    opt.out_root = std::filesystem::temp_directory_path() / "issp_acceptance";
    opt.plots = false;
    const auto r = run_scenario_file(ISSP_NEGATIVE_FIXTURE, opt);
    bool named = false;
    for (const auto& c : r.checks) {
        named = named || (c.id == "eq50" && !c.pass);
    }
    return {r.exit_code == 1 && named,
            "tampered eq50 fixture exit code " + std::to_string(r.exit_code) + " (== 1), min margin " +
                fmt("%.4f", r.min_margin)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"eigenfunction decay rate", eigen_decay},
        {"L2 estimate on 100 random scenarios", eq51_random},
        {"weighted L1 steady-state sharpness", eq50_steady},
        {"Lp Lyapunov decay certificate", lyapunov},
        {"constant-input sandwich suite", sandwich},
        {"control-system axioms", axioms},
        {"kernel validation", kernel},
        {"backstepping robustness", robustness},
        {"negative control", negative_control},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o{false, ""};
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %zu %s: %s | %s\n", i + 1, o.pass ? "PASS" : "FAIL",
                    criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
