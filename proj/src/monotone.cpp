#include "iss_parabolic/monotone.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <ostream>
#include <string>

#include "iss_parabolic/errors.hpp"

namespace issp {

OrderingReport check_ordering(const Trajectory& low, const Trajectory& high, double tol) {
    if (!low.grid().same_mesh(high.grid()) || low.size() != high.size()) {
        throw IncompatibleTrajectory("check_ordering: trajectories live on different grids");
    }
    for (std::size_t k = 0; k < low.size(); ++k) {
        if (low.times()[k] != high.times()[k]) {
            throw IncompatibleTrajectory("check_ordering: time points differ");
        }
    }
    OrderingReport report;
    report.min_gap.resize(low.size());
    for (std::size_t k = 0; k < low.size(); ++k) {
        const auto lo = low.state(k).values();
        const auto hi = high.state(k).values();
        double gap = kInf;
        for (std::size_t i = 0; i < lo.size(); ++i) {
            const double d = hi[i] - lo[i];
            gap = std::min(gap, d);
            if (-d > report.worst_violation) {
                report.worst_violation = -d;
                report.time_index = k;
                report.node_index = i;
                report.t = low.times()[k];
                report.z = low.grid().z(i);
            }
        }
        report.min_gap[k] = gap;
    }
    report.pass = report.worst_violation <= tol;
    return report;
}

double cutoff_hat(double z, double delta) {
    const double dist = std::min(z, 1.0 - z);
    return std::max(0.0, 1.0 - dist / delta);
}

Bracket build_bracket(const Field& x, double u_sup, double epsilon, double delta) {
    if (!(u_sup >= 0.0) || !(epsilon > 0.0) || !(delta > 0.0) || delta > 0.5) {
        throw InvalidParameter("build_bracket: need u_sup >= 0, epsilon > 0, 0 < delta <= 1/2");
    }
    const Grid1D& g = x.grid();
    const double level = u_sup + epsilon;
    std::vector<double> lo(x.size());
    std::vector<double> hi(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double k = cutoff_hat(g.z(i), delta);
        if (k > 0.0 && std::abs(x[i]) > level) {
            throw IncompatibilityError("build_bracket: |x| exceeds u_sup + epsilon at z=" +
                                       std::to_string(g.z(i)) + " inside the cutoff layer");
        }
        lo[i] = (1.0 - k) * x[i] - level * k;
        hi[i] = (1.0 - k) * x[i] + level * k;
    }
    return Bracket{Field(g, std::move(lo)), Field(g, std::move(hi)), -level, level, epsilon, delta};
}

double select_cutoff_width(const Field& x, double u_sup, double epsilon) {
    // Below h only the boundary nodes sit inside the layer.
    const double h = x.grid().h();
    for (double delta = 0.25;; delta *= 0.5) {
        try {
            build_bracket(x, u_sup, epsilon, delta);
            return delta;
        } catch (const IncompatibilityError&) {
            if (delta < h) {
                break;
            }
        }
    }
    throw IncompatibilityError("select_cutoff_width: no admissible cutoff width; the state is "
                               "incompatible with the input bound at the boundary");
}

bool bracket_invariants_hold(const Bracket& b, const Field& x, double u_sup, double p, double tol) {
    const double level = u_sup + b.epsilon;
    if (b.u_minus != -level || b.u_plus != level) {
        return false;
    }
    if (b.x_minus.front() != b.u_minus || b.x_minus.back() != b.u_minus ||
        b.x_plus.front() != b.u_plus || b.x_plus.back() != b.u_plus) {
        return false;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (b.x_minus[i] > x[i] + tol || x[i] > b.x_plus[i] + tol) {
            return false;
        }
    }
    // mu(G) = 1 on the unit interval.
    const double bound = std::isinf(p) ? x.max_abs() + level : norm_lp(x, p) + level;
    const double slack = tol * std::max(1.0, bound);
    return norm_lp(b.x_minus, p) <= bound + slack && norm_lp(b.x_plus, p) <= bound + slack;
}

SandwichReport constant_reduction_experiment(const SemilinearProblem& problem, const Grid1D& grid,
                                             double epsilon, double tol) {
    if (problem.left().is_closed_loop() || problem.right().is_closed_loop()) {
        throw InvalidParameter("constant_reduction_experiment: needs open-loop boundary signals");
    }
    const Field& x0 = problem.initial();
    const double u_sup = std::max(problem.left().sup_norm(), problem.right().sup_norm());
    const double delta = select_cutoff_width(x0, u_sup, epsilon);
    Bracket bracket = build_bracket(x0, u_sup, epsilon, delta);

    const auto lower_problem =
        problem.with_data(bracket.x_minus, BoundarySignal::constant(bracket.u_minus),
                          BoundarySignal::constant(bracket.u_minus));
    const auto upper_problem =
        problem.with_data(bracket.x_plus, BoundarySignal::constant(bracket.u_plus),
                          BoundarySignal::constant(bracket.u_plus));

    // The three runs are independent.
    auto lower_run = std::async(std::launch::async, [&] { return simulate(lower_problem, grid); });
    auto upper_run = std::async(std::launch::async, [&] { return simulate(upper_problem, grid); });
    Trajectory original = simulate(problem, grid);
    Trajectory lower = lower_run.get();
    Trajectory upper = upper_run.get();

    OrderingReport low_side = check_ordering(lower, original, tol);
    OrderingReport high_side = check_ordering(original, upper, tol);
    const bool pass = low_side.pass && high_side.pass;
    return SandwichReport{std::move(original), std::move(lower), std::move(upper),
                          std::move(bracket), std::move(low_side), std::move(high_side), pass};
}

void write_sandwich_csv(std::ostream& os, const SandwichReport& report) {
    os << "t,min_gap_low,min_gap_high\n";
    char buf[96];
    const auto times = report.original.times();
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.10g,%.17g,%.17g\n", times[k], report.low_side.min_gap[k],
                      report.high_side.min_gap[k]);
        os << buf;
    }
}

}  // namespace issp
