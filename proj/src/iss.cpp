#include "iss_parabolic/iss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "iss_parabolic/errors.hpp"

namespace issp {

namespace {

constexpr double kRhsFloor = 1e-12;
constexpr double kPi = std::numbers::pi;

double relative_margin(double lhs, double rhs) {
    return (rhs - lhs) / std::max(rhs, kRhsFloor);
}

void require_heat(const SemilinearProblem& problem, const char* who) {
    if (!problem.reaction().is_zero()) {
        throw InapplicableEstimate(std::string(who) + ": needs the heat equation (f = 0)");
    }
    if (problem.left().is_closed_loop() || problem.right().is_closed_loop()) {
        throw InapplicableEstimate(std::string(who) + ": needs open-loop boundary data");
    }
}

void require_tol(double tol) {
    if (!(tol >= 0.0) || !std::isfinite(tol)) {
        throw InvalidParameter("ISS check: tolerance must be finite and nonnegative");
    }
}

struct InputSups {
    std::vector<double> left;
    std::vector<double> right;
    std::vector<double> both;
};

InputSups input_sups(const Trajectory& traj) {
    InputSups s{running_sup(traj.boundary_left()), running_sup(traj.boundary_right()), {}};
    s.both.resize(s.left.size());
    for (std::size_t k = 0; k < s.both.size(); ++k) {
        s.both[k] = std::max(s.left[k], s.right[k]);
    }
    return s;
}

// Boundary nodes of sampled sin(m pi z) data sit at rounding level.
bool is_zero_input(const Trajectory& traj) {
    const auto sup = input_sups(traj).both;
    return sup.back() <= 1e-12 * std::max(1.0, traj.initial().max_abs());
}

bool is_zero_initial(const Trajectory& traj) {
    return traj.initial().max_abs() == 0.0;
}

std::vector<double> norm_series(const Trajectory& traj, double p) {
    std::vector<double> out(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out[k] = norm_lp(traj.state(k), p);
    }
    return out;
}

}  // namespace

std::string to_string(EstimateId id) {
    switch (id) {
        case EstimateId::eq50: return "eq50";
        case EstimateId::eq51: return "eq51";
        case EstimateId::eq52: return "eq52";
        case EstimateId::eq53: return "eq53";
        case EstimateId::eq63: return "eq63";
        case EstimateId::generic: return "generic";
    }
    return "generic";
}

namespace detail {

void finalize_report(ISSReport& report) {
    double worst = kInf;
    for (auto& row : report.rows) {
        row.margin = relative_margin(row.lhs, row.rhs);
        worst = std::min(worst, row.margin);
    }
    report.margin = report.rows.empty() ? 0.0 : worst;
    report.pass = report.margin >= -report.tolerance;
}

}  // namespace detail

bool satisfies_generic_bound(const ISSReport& report) {
    for (std::size_t k = 0; k < report.rows.size(); ++k) {
        const auto& row = report.rows[k];
        const double u = k < report.input_sup.size() ? report.input_sup[k] : 0.0;
        const double rhs = report.beta(report.initial_norm, row.t) + report.gamma(u);
        if (relative_margin(row.lhs, rhs) < -report.tolerance) {
            return false;
        }
    }
    return true;
}

ISSReport check_eq50(const SemilinearProblem& problem, const Trajectory& traj, double tol,
                     double gain) {
    require_heat(problem, "check_eq50");
    require_tol(tol);
    if (!(gain >= 0.0)) {
        throw InvalidParameter("check_eq50: gain must be nonnegative");
    }
    const double a = problem.a();
    const auto sup = input_sups(traj);
    ISSReport report;
    report.id = EstimateId::eq50;
    report.tolerance = tol;
    report.parameters = {{"a", a}, {"gain", gain}};
    report.initial_norm = norm_weighted_sin(traj.initial());
    report.input_sup = sup.both;
    report.beta = KLBound::exponential_linear(1.0, a * kPi * kPi);
    report.gamma = GainFn::linear(2.0 * gain);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double t = traj.times()[k];
        const double lhs = norm_weighted_sin(traj.state(k));
        const double rhs = std::exp(-a * kPi * kPi * t) * report.initial_norm +
                           gain * sup.left[k] + gain * sup.right[k];
        report.rows.push_back({t, lhs, rhs, 0.0});
    }
    detail::finalize_report(report);
    return report;
}

ISSReport check_eq51(const SemilinearProblem& problem, const Trajectory& traj, double tol,
                     double gain) {
    require_heat(problem, "check_eq51");
    require_tol(tol);
    if (!(gain >= 0.0)) {
        throw InvalidParameter("check_eq51: gain must be nonnegative");
    }
    const double a = problem.a();
    const auto sup = input_sups(traj);
    ISSReport report;
    report.id = EstimateId::eq51;
    report.tolerance = tol;
    report.parameters = {{"a", a}, {"gain", gain}, {"p", 2.0}};
    report.initial_norm = norm_lp(traj.initial(), 2.0);
    report.input_sup = sup.both;
    // sqrt(e/(2-e)) <= sqrt(e) for e in (0,1].
    report.beta = KLBound::exponential_linear(1.0, 0.5 * a * kPi * kPi);
    report.gamma = GainFn::linear(2.0 * gain);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double t = traj.times()[k];
        const double e = std::exp(-a * kPi * kPi * t);
        const double lhs = norm_lp(traj.state(k), 2.0);
        const double rhs = std::sqrt(e / (2.0 - e)) * report.initial_norm +
                           gain * (sup.left[k] + sup.right[k]);
        report.rows.push_back({t, lhs, rhs, 0.0});
    }
    detail::finalize_report(report);
    return report;
}

ISSReport check_eq52(const SemilinearProblem& problem, const Trajectory& traj, double sigma,
                     double theta, double tol) {
    require_heat(problem, "check_eq52");
    require_tol(tol);
    const double a = problem.a();
    if (!(sigma > 0.0) || !(sigma < a * kPi * kPi)) {
        throw InvalidParameter("check_eq52: sigma must lie in (0, a*pi^2)");
    }
    const double phi = std::sqrt(sigma / a);
    if (!(theta > 0.0) || !(theta < kPi - phi)) {
        throw InvalidParameter("check_eq52: theta must lie in (0, pi - sqrt(sigma/a))");
    }
    const double ratio = std::sin(theta + phi) / std::sin(theta);
    const auto sup = input_sups(traj);
    ISSReport report;
    report.id = EstimateId::eq52;
    report.tolerance = tol;
    report.parameters = {{"a", a},     {"sigma", sigma}, {"theta", theta},
                         {"phi", phi}, {"boundary_weight_d0", ratio}};
    report.initial_norm = norm_weighted_sup(traj.initial(), theta, phi);
    report.input_sup = sup.both;
    report.beta = KLBound::exponential_linear(1.0, sigma);
    report.gamma = GainFn::linear(std::max(1.0, ratio));
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double t = traj.times()[k];
        const double lhs = norm_weighted_sup(traj.state(k), theta, phi);
        const double rhs = std::max({std::exp(-sigma * t) * report.initial_norm,
                                     ratio * sup.left[k], sup.right[k]});
        report.rows.push_back({t, lhs, rhs, 0.0});
    }
    detail::finalize_report(report);
    return report;
}

double lyapunov_norm_rate(double a, double p) {
    return a * (p - 1.0) * 4.0 * kPi * kPi / (p * p);
}

DecayCertificate lyapunov_decay_certificate(const SemilinearProblem& problem, const Grid1D& grid,
                                            double p, double tol) {
    require_heat(problem, "lyapunov_decay_certificate");
    require_tol(tol);
    if (problem.left().sup_norm() != 0.0 || problem.right().sup_norm() != 0.0) {
        throw InapplicableEstimate("lyapunov_decay_certificate: needs zero boundary data");
    }
    if (!(p >= 2.0) || !std::isfinite(p)) {
        throw InvalidParameter("lyapunov_decay_certificate: p must lie in [2, inf)");
    }
    const Trajectory traj = simulate(problem, grid);
    const double a = problem.a();

    DecayCertificate cert;
    cert.p = p;
    cert.functional_rate = a * (p - 1.0) * 4.0 * kPi * kPi / p;
    cert.norm_rate = lyapunov_norm_rate(a, p);

    const auto times = traj.times();
    const std::size_t n = traj.size();
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) {
        v[k] = lp_functional(traj.state(k), p);
    }

    // Centered differences inside, one-sided at both ends.
    cert.derivative_margin = kInf;
    for (std::size_t k = 0; k < n && n >= 2; ++k) {
        const std::size_t lo = k == 0 ? 0 : k - 1;
        const std::size_t hi = k + 1 == n ? k : k + 1;
        const double dv = (v[hi] - v[lo]) / (times[hi] - times[lo]);
        const double scale = cert.functional_rate * v[k];
        if (!(scale > 0.0)) {
            continue;
        }
        cert.derivative_margin = std::min(cert.derivative_margin, (-dv - scale) / scale);
    }
    if (cert.derivative_margin == kInf) {
        cert.derivative_margin = 0.0;
    }
    cert.derivative_ok = cert.derivative_margin >= -tol;

    const double x0 = norm_lp(traj.initial(), p);
    std::vector<double> norms = norm_series(traj, p);
    cert.norm_ok = true;
    for (std::size_t k = 0; k < n; ++k) {
        const double rhs = std::exp(-cert.norm_rate * times[k]) * x0;
        cert.rows.push_back({times[k], norms[k], rhs, relative_margin(norms[k], rhs)});
        if (norms[k] > rhs * (1.0 + tol) + kRhsFloor) {
            cert.norm_ok = false;
        }
    }
    cert.measured_norm_rate = x0 > 0.0 ? fit_decay_rate(times, norms) : kInf;
    cert.pass = cert.derivative_ok && cert.norm_ok;
    return cert;
}

namespace {

struct DecayFit {
    double m;
    double sigma;
};

DecayFit fit_zero_input(std::span<const Trajectory> runs, double p) {
    double sigma = kInf;
    std::size_t used = 0;
    for (const auto& traj : runs) {
        if (!is_zero_input(traj) || is_zero_initial(traj)) {
            continue;
        }
        if (traj.size() < 4) {
            throw EstimationError("estimate: zero-input run too short to fit a decay rate");
        }
        const auto norms = norm_series(traj, p);
        const std::size_t half = traj.size() / 2;
        const double rate = fit_decay_rate(traj.times().subspan(half),
                                           std::span<const double>(norms).subspan(half));
        sigma = std::min(sigma, rate);
        ++used;
    }
    if (used == 0) {
        throw EstimationError("estimate: no zero-input run with nonzero initial data");
    }
    if (!(sigma > 0.0)) {
        throw EstimationError("estimate: zero-input runs do not decay");
    }
    double m = 1.0;
    for (const auto& traj : runs) {
        const auto sup = input_sups(traj).both;
        const double x0 = norm_lp(traj.initial(), p);
        if (!(x0 > 0.0)) {
            continue;
        }
        const double floor = 1e-12 * std::max(1.0, traj.initial().max_abs());
        for (std::size_t k = 0; k < traj.size(); ++k) {
            if (sup[k] > floor) {
                break;
            }
            const double ratio =
                norm_lp(traj.state(k), p) * std::exp(sigma * traj.times()[k]) / x0;
            m = std::max(m, ratio);
        }
    }
    return {m, sigma};
}

}  // namespace

ExpIssConstants estimate_exp_iss_constants(std::span<const Trajectory> scenarios, double p) {
    if (!(p >= 1.0)) {
        throw InvalidParameter("estimate_exp_iss_constants: p must lie in [1, inf]");
    }
    const DecayFit fit = fit_zero_input(scenarios, p);
    ExpIssConstants c{fit.m, fit.sigma, 0.0};

    for (const auto& traj : scenarios) {
        if (!is_zero_initial(traj) || is_zero_input(traj)) {
            continue;
        }
        const auto sup = input_sups(traj).both;
        for (std::size_t k = 0; k < traj.size(); ++k) {
            if (sup[k] > 0.0) {
                c.gamma = std::max(c.gamma, norm_lp(traj.state(k), p) / sup[k]);
            }
        }
    }
    // Raise gamma until every provided scenario satisfies the bound.
    for (const auto& traj : scenarios) {
        const auto sup = input_sups(traj).both;
        const double x0 = norm_lp(traj.initial(), p);
        for (std::size_t k = 0; k < traj.size(); ++k) {
            if (!(sup[k] > 0.0)) {
                continue;
            }
            const double transient = c.m * std::exp(-c.sigma * traj.times()[k]) * x0;
            const double need = (norm_lp(traj.state(k), p) - transient) / sup[k];
            c.gamma = std::max(c.gamma, need);
        }
    }
    return c;
}

ISSReport check_eq53(const Trajectory& traj, const ExpIssConstants& constants, double p,
                     double tol) {
    require_tol(tol);
    if (!(constants.m > 0.0) || !(constants.sigma > 0.0) || !(constants.gamma >= 0.0)) {
        throw InvalidParameter("check_eq53: need M > 0, sigma > 0, gamma >= 0");
    }
    const auto sup = input_sups(traj);
    ISSReport report;
    report.id = EstimateId::eq53;
    report.tolerance = tol;
    report.parameters = {{"p", p}, {"M", constants.m}, {"sigma", constants.sigma},
                         {"gamma", constants.gamma}};
    report.initial_norm = norm_lp(traj.initial(), p);
    report.input_sup = sup.both;
    report.beta = KLBound::exponential_linear(constants.m, constants.sigma);
    report.gamma = GainFn::linear(constants.gamma);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double t = traj.times()[k];
        const double lhs = norm_lp(traj.state(k), p);
        const double rhs = report.beta(report.initial_norm, t) + constants.gamma * sup.both[k];
        report.rows.push_back({t, lhs, rhs, 0.0});
    }
    detail::finalize_report(report);
    return report;
}

ISSReport check_zero_input_stability(std::span<const Trajectory> scenarios, double p,
                                     double tol) {
    require_tol(tol);
    for (const auto& traj : scenarios) {
        if (!is_zero_input(traj)) {
            throw EstimationError("check_zero_input_stability: every run must have zero input");
        }
    }
    const DecayFit fit = fit_zero_input(scenarios, p);
    ISSReport report;
    report.id = EstimateId::generic;
    report.tolerance = tol;
    report.parameters = {{"p", p}, {"M", fit.m}, {"sigma", fit.sigma}};
    report.beta = KLBound::exponential_linear(fit.m, fit.sigma);
    report.gamma = GainFn::linear(0.0);
    // Rows of all runs, normalized by their initial norms.
    report.initial_norm = 1.0;
    for (const auto& traj : scenarios) {
        const double x0 = norm_lp(traj.initial(), p);
        for (std::size_t k = 0; k < traj.size(); ++k) {
            const double t = traj.times()[k];
            const double lhs = x0 > 0.0 ? norm_lp(traj.state(k), p) / x0 : 0.0;
            report.rows.push_back({t, lhs, x0 > 0.0 ? report.beta(1.0, t) : 0.0, 0.0});
            report.input_sup.push_back(0.0);
        }
    }
    detail::finalize_report(report);
    return report;
}

void write_report_rows(std::ostream& os, std::span<const ReportRow> rows) {
    os << "t,lhs,rhs,margin\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.10g,%.17g,%.17g,%.17g\n", r.t, r.lhs, r.rhs, r.margin);
        os << buf;
    }
}

void write_report_csv(std::ostream& os, const ISSReport& report) {
    write_report_rows(os, report.rows);
}

void write_summary_csv(std::ostream& os, const ISSReport& report) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", report.margin);
    os << "estimate_id,pass,min_margin\n"
       << to_string(report.id) << ',' << (report.pass ? "true" : "false") << ',' << buf << '\n';
}

}  // namespace issp
