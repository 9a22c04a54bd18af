#include "iss_parabolic/backstepping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>

#include "iss_parabolic/errors.hpp"

namespace issp {

// ---------------------------------------------------------------------------
// VolterraKernel

VolterraKernel::VolterraKernel(const Grid1D& grid, double lam, KernelDirection direction,
                               KernelOrientation orientation, std::vector<double> samples)
    : grid_(grid),
      lam_(lam),
      direction_(direction),
      orientation_(orientation),
      samples_(std::move(samples)) {
    const std::size_t n = grid_.n_nodes();
    if (samples_.size() != n * n) {
        throw InvalidParameter("VolterraKernel: expected n_nodes^2 samples");
    }
    if (!std::isfinite(lam_)) {
        throw InvalidParameter("VolterraKernel: lam must be finite");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = samples_[i * n + j];
            if (!std::isfinite(v)) {
                throw InvalidParameter("VolterraKernel: non-finite sample");
            }
            if (!in_triangle(i, j) && v != 0.0) {
                throw InvalidParameter("VolterraKernel: nonzero sample outside the triangle");
            }
        }
    }
}

double VolterraKernel::weight(std::size_t i, std::size_t j) const noexcept {
    const std::size_t last = grid_.last();
    const std::size_t lo = orientation_ == KernelOrientation::upper ? i : 0;
    const std::size_t hi = orientation_ == KernelOrientation::upper ? last : i;
    if (j < lo || j > hi || lo == hi) {
        return 0.0;
    }
    return (j == lo || j == hi) ? 0.5 * grid_.h() : grid_.h();
}

VolterraKernel VolterraKernel::mirrored() const {
    const std::size_t n = n_nodes();
    std::vector<double> flipped(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            flipped[i * n + j] = samples_[(n - 1 - i) * n + (n - 1 - j)];
        }
    }
    const auto other = orientation_ == KernelOrientation::upper ? KernelOrientation::lower
                                                                : KernelOrientation::upper;
    VolterraKernel out(grid_, lam_, direction_, other, std::move(flipped));
    out.iterations_ = iterations_;
    return out;
}

// ---------------------------------------------------------------------------
// Kernel synthesis

namespace {

// G on the lattice xi = alpha*D, eta = beta*D, 0 <= beta <= alpha,
// alpha + beta <= N. Row alpha holds beta = 0..min(alpha, N - alpha).
class Lattice {
public:
    explicit Lattice(std::size_t n_span) : n_(n_span), rows_(n_span + 1) {
        for (std::size_t alpha = 0; alpha <= n_; ++alpha) {
            rows_[alpha].assign(std::min(alpha, n_ - alpha) + 1, 0.0);
        }
    }
    std::size_t span() const noexcept { return n_; }
    std::vector<double>& row(std::size_t alpha) { return rows_[alpha]; }
    const std::vector<double>& row(std::size_t alpha) const { return rows_[alpha]; }
    double at(std::size_t alpha, std::size_t beta) const { return rows_[alpha][beta]; }

private:
    std::size_t n_;
    std::vector<std::vector<double>> rows_;
};

struct LatticeSolution {
    Lattice g;
    std::size_t iterations;
};

LatticeSolution solve_lattice(double lam, std::size_t n_span, double spacing) {
    const double c = 0.25 * lam;
    Lattice g(n_span);
    Lattice inner(n_span);
    for (std::size_t alpha = 0; alpha <= n_span; ++alpha) {
        auto& r = g.row(alpha);
        for (std::size_t beta = 0; beta < r.size(); ++beta) {
            r[beta] = c * static_cast<double>(alpha - beta) * spacing;
        }
    }
    if (lam == 0.0) {
        return {std::move(g), 0};
    }
    const double half = 0.5 * spacing;
    for (std::size_t it = 1; it <= kKernelMaxIterations; ++it) {
        // inner(tau, beta) = int_0^{beta D} G(tau, sigma) dsigma
        for (std::size_t tau = 0; tau <= n_span; ++tau) {
            const auto& src = g.row(tau);
            auto& dst = inner.row(tau);
            dst[0] = 0.0;
            for (std::size_t beta = 1; beta < src.size(); ++beta) {
                dst[beta] = dst[beta - 1] + half * (src[beta - 1] + src[beta]);
            }
        }
        // G(alpha, beta) = c (xi - eta) + c int_eta^xi inner(tau, beta) dtau
        double diff = 0.0;
        const std::size_t beta_max = n_span / 2;
        for (std::size_t beta = 0; beta <= beta_max; ++beta) {
            double acc = 0.0;
            double prev = inner.at(beta, beta);
            for (std::size_t alpha = beta; alpha + beta <= n_span; ++alpha) {
                if (alpha > beta) {
                    const double cur = inner.at(alpha, beta);
                    acc += half * (prev + cur);
                    prev = cur;
                }
                const double next = c * (static_cast<double>(alpha - beta) * spacing + acc);
                double& slot = g.row(alpha)[beta];
                diff = std::max(diff, std::abs(next - slot));
                slot = next;
            }
        }
        if (!std::isfinite(diff)) {
            throw SynthesisError("solve_kernel: successive approximation diverged");
        }
        if (diff < kKernelTol) {
            return {std::move(g), it};
        }
    }
    throw SynthesisError("solve_kernel: no convergence within " +
                         std::to_string(kKernelMaxIterations) + " iterations");
}

std::vector<double> sample_lattice(const Lattice& g, std::size_t m, std::size_t refine) {
    // Node (i, j), j >= i, sits at alpha = r(2m - i - j), beta = r(j - i).
    const std::size_t n = m + 1;
    std::vector<double> out(n * n, 0.0);
    for (std::size_t i = 0; i <= m; ++i) {
        for (std::size_t j = i; j <= m; ++j) {
            out[i * n + j] = g.at(refine * (2 * m - i - j), refine * (j - i));
        }
    }
    return out;
}

// Dense trapezoid operator (K y)_i = sum_j w_ij k_ij y_j.
std::vector<double> operator_matrix(const VolterraKernel& kernel) {
    const std::size_t n = kernel.n_nodes();
    std::vector<double> out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] = kernel.weight(i, j) * kernel.at(i, j);
        }
    }
    return out;
}

// Index range [lo, hi] of the nonzero entries of row i.
std::pair<std::size_t, std::size_t> row_range(const VolterraKernel& kernel, std::size_t i) {
    if (kernel.orientation() == KernelOrientation::upper) {
        return {i, kernel.n_nodes() - 1};
    }
    return {0, i};
}

}  // namespace

VolterraKernel solve_kernel(double a, double k_reaction, const Grid1D& grid) {
    if (!(a > 0.0) || !std::isfinite(a)) {
        throw InvalidParameter("solve_kernel: diffusion coefficient must be positive");
    }
    if (!std::isfinite(k_reaction)) {
        throw InvalidParameter("solve_kernel: reaction coefficient must be finite");
    }
    const double lam = k_reaction / a;
    const std::size_t m = grid.last();
    const double h = grid.h();

    const LatticeSolution coarse = solve_lattice(lam, 2 * m, h);
    const LatticeSolution fine = solve_lattice(lam, 4 * m, 0.5 * h);
    std::vector<double> k1 = sample_lattice(coarse.g, m, 1);
    const std::vector<double> k2 = sample_lattice(fine.g, m, 2);
    // Trapezoid error is even in the spacing.
    for (std::size_t idx = 0; idx < k1.size(); ++idx) {
        k1[idx] = (4.0 * k2[idx] - k1[idx]) / 3.0;
    }
    VolterraKernel out(grid, lam, KernelDirection::direct, KernelOrientation::upper, std::move(k1));
    out.set_iterations(std::max(coarse.iterations, fine.iterations));
    return out;
}

VolterraKernel solve_inverse_kernel(const VolterraKernel& direct) {
    const std::size_t n = direct.n_nodes();
    const std::vector<double> kmat = operator_matrix(direct);

    // Solve L + K + K L = 0 by substitution. Row i couples to rows strictly
    // between i and j, which are already final in this sweep order.
    std::vector<double> lmat(n * n, 0.0);
    const bool upper = direct.orientation() == KernelOrientation::upper;
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t i = upper ? n - 1 - step : step;
        const auto [lo, hi] = row_range(direct, i);
        for (std::size_t j = lo; j <= hi; ++j) {
            const std::size_t r_lo = upper ? i + 1 : j;
            const std::size_t r_end = upper ? j + 1 : i;
            double acc = kmat[i * n + j];
            for (std::size_t r = r_lo; r < r_end; ++r) {
                acc += kmat[i * n + r] * lmat[r * n + j];
            }
            const double pivot = 1.0 + kmat[i * n + i];
            if (!(std::abs(pivot) > 0.0) || !std::isfinite(acc)) {
                throw SynthesisError("solve_inverse_kernel: singular transform");
            }
            lmat[i * n + j] = -acc / pivot;
        }
    }

    // (I + L)(I + K) - I = L + K + L K
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [lo, hi] = row_range(direct, i);
        for (std::size_t j = lo; j <= hi; ++j) {
            double acc = lmat[i * n + j] + kmat[i * n + j];
            const std::size_t r_lo = std::min(i, j);
            const std::size_t r_hi = std::max(i, j);
            for (std::size_t r = r_lo; r <= r_hi; ++r) {
                acc += lmat[i * n + r] * kmat[r * n + j];
            }
            worst = std::max(worst, std::abs(acc));
        }
    }
    if (worst > 1e-8) {
        throw SynthesisError("solve_inverse_kernel: composition check failed, defect " +
                             std::to_string(worst));
    }

    std::vector<double> samples(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [lo, hi] = row_range(direct, i);
        for (std::size_t j = lo; j <= hi; ++j) {
            const double w = direct.weight(i, j);
            // Zero-length rows carry no weight; l = -k there.
            samples[i * n + j] = w > 0.0 ? lmat[i * n + j] / w : -direct.at(i, j);
        }
    }
    VolterraKernel out(direct.grid(), direct.lam(), KernelDirection::inverse,
                       direct.orientation(), std::move(samples));
    out.set_iterations(1);
    return out;
}

Field apply_transform(const VolterraKernel& kernel, const Field& y) {
    if (y.grid().n_interior() != kernel.grid().n_interior()) {
        throw InvalidParameter("apply_transform: field and kernel live on different grids");
    }
    const std::size_t n = kernel.n_nodes();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [lo, hi] = row_range(kernel, i);
        double acc = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) {
            acc += kernel.weight(i, j) * kernel.at(i, j) * y[j];
        }
        out[i] = y[i] + acc;
    }
    return Field(y.grid(), std::move(out));
}

std::vector<double> feedback_weights(const VolterraKernel& kernel) {
    const std::size_t n = kernel.n_nodes();
    const std::size_t row = kernel.control_end() == ControlEnd::left ? 0 : n - 1;
    std::vector<double> c(n);
    for (std::size_t j = 0; j < n; ++j) {
        c[j] = kernel.weight(row, j) * kernel.at(row, j);
    }
    return c;
}

double feedback(const VolterraKernel& kernel, const Field& y, double d) {
    if (y.grid().n_interior() != kernel.grid().n_interior()) {
        throw InvalidParameter("feedback: field and kernel live on different grids");
    }
    const auto c = feedback_weights(kernel);
    double u = d;
    for (std::size_t j = 0; j < c.size(); ++j) {
        u -= c[j] * y[j];
    }
    return u;
}

Field compatible_initial(const VolterraKernel& kernel, const Field& g, double d0) {
    const Grid1D& grid = g.grid();
    const bool left = kernel.control_end() == ControlEnd::left;
    const std::size_t ctrl = left ? 0 : grid.last();
    const std::size_t free_end = left ? grid.last() : 0;
    if (g[free_end] != 0.0) {
        throw InvalidParameter("compatible_initial: data must vanish at the uncontrolled end");
    }
    const auto c = feedback_weights(kernel);
    double lift_dot = 1.0;
    double g_dot = g[ctrl];
    for (std::size_t j = 0; j < c.size(); ++j) {
        const double lift = left ? 1.0 - grid.z(j) : grid.z(j);
        lift_dot += c[j] * lift;
        g_dot += c[j] * g[j];
    }
    if (!(std::abs(lift_dot) > 1e-12)) {
        throw NumericalError("compatible_initial: degenerate lift");
    }
    const double alpha = (d0 - g_dot) / lift_dot;
    std::vector<double> out(g.values().begin(), g.values().end());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] += alpha * (left ? 1.0 - grid.z(j) : grid.z(j));
    }
    out[free_end] = 0.0;
    return Field(grid, std::move(out));
}

ClosedLoopRun simulate_closed_loop(double a, const VolterraKernel& kernel, const Field& y0,
                                   const BoundarySignal& d, const Grid1D& grid) {
    if (kernel.direction() != KernelDirection::direct) {
        throw InvalidParameter("simulate_closed_loop: needs a direct kernel");
    }
    if (y0.grid().n_interior() != kernel.grid().n_interior() ||
        grid.n_interior() != kernel.grid().n_interior()) {
        throw InvalidParameter("simulate_closed_loop: grid does not match the kernel");
    }
    if (d.is_closed_loop()) {
        throw InvalidParameter("simulate_closed_loop: disturbance must be open-loop");
    }
    const double k_reaction = kernel.lam() * a;
    const auto loop = BoundarySignal::closed_loop(d, feedback_weights(kernel));
    const auto zero = BoundarySignal::constant(0.0);
    const bool left = kernel.control_end() == ControlEnd::left;
    const SemilinearProblem plant(a, Reaction::linear(k_reaction), y0, left ? loop : zero,
                                  left ? zero : loop);
    Trajectory y = simulate(plant, grid);

    std::vector<Field> xs;
    std::vector<double> dist;
    std::vector<double> ctrl;
    xs.reserve(y.size());
    dist.reserve(y.size());
    ctrl.reserve(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) {
        xs.push_back(apply_transform(kernel, y.state(k)));
        dist.push_back(d(y.times()[k]));
        ctrl.push_back(left ? y.boundary_left()[k] : y.boundary_right()[k]);
    }
    Trajectory x(std::vector<double>(y.times().begin(), y.times().end()), std::move(xs));
    return {std::move(y), std::move(x), std::move(dist), std::move(ctrl)};
}

ClosedLoopRun simulate_closed_loop(double a, double k_reaction, const Field& y0,
                                   const BoundarySignal& d, const Grid1D& grid, ControlEnd end) {
    VolterraKernel kernel = solve_kernel(a, k_reaction, grid);
    if (end == ControlEnd::right) {
        kernel = kernel.mirrored();
    }
    return simulate_closed_loop(a, kernel, y0, d, grid);
}

Trajectory simulate_open_loop(double a, double k_reaction, const Field& y0, const Grid1D& grid) {
    const SemilinearProblem plant(a, Reaction::linear(k_reaction), y0, BoundarySignal::constant(0.0),
                                  BoundarySignal::constant(0.0));
    return simulate(plant, grid);
}

namespace {

double schur_bound(const VolterraKernel& kernel, double p) {
    const std::size_t n = kernel.n_nodes();
    const Grid1D& grid = kernel.grid();
    double rows = 0.0;
    std::vector<double> cols(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = std::abs(kernel.weight(i, j) * kernel.at(i, j));
            row += v;
            cols[j] += grid.weight(i) * v;
        }
        rows = std::max(rows, row);
    }
    double colmax = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        colmax = std::max(colmax, cols[j] / grid.weight(j));
    }
    if (std::isinf(p)) {
        return rows;
    }
    return std::pow(rows, 1.0 - 1.0 / p) * std::pow(colmax, 1.0 / p);
}

}  // namespace

EquivalenceConstants estimate_equivalence_constants(const VolterraKernel& direct,
                                                    const VolterraKernel& inverse, double p) {
    if (!(p >= 1.0)) {
        throw InvalidParameter("estimate_equivalence_constants: p must lie in [1, inf]");
    }
    if (direct.direction() != KernelDirection::direct ||
        inverse.direction() != KernelDirection::inverse ||
        direct.orientation() != inverse.orientation() ||
        direct.grid().n_interior() != inverse.grid().n_interior()) {
        throw InvalidParameter("estimate_equivalence_constants: needs a matching direct/inverse pair");
    }
    EquivalenceConstants c;
    c.k2 = 1.0 + schur_bound(inverse, p);
    c.k1 = 1.0 / (1.0 + schur_bound(direct, p));

    std::mt19937_64 rng(0x6b65726eULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Grid1D& grid = direct.grid();
    c.min_ratio = kInf;
    c.max_ratio = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> v(grid.n_nodes());
        for (double& e : v) {
            e = normal(rng);
        }
        const Field y(grid, std::move(v));
        const Field x = apply_transform(direct, y);
        const double ratio = norm_lp(y, p) / norm_lp(x, p);
        c.min_ratio = std::min(c.min_ratio, ratio);
        c.max_ratio = std::max(c.max_ratio, ratio);
    }
    const double slack = 1e-12;
    if (c.min_ratio < c.k1 * (1.0 - slack) || c.max_ratio > c.k2 * (1.0 + slack)) {
        throw SynthesisError("estimate_equivalence_constants: sampled ratio outside [K1, K2]");
    }
    return c;
}

ISSReport certify_eq63(const Trajectory& y, std::span<const double> disturbance,
                       const Eq63Constants& constants, double p, double tol) {
    const auto& eq = constants.equivalence;
    const auto& tg = constants.target;
    if (!(eq.k1 > 0.0) || !(eq.k2 >= eq.k1) || !(tg.m > 0.0) || !(tg.sigma > 0.0) ||
        !(tg.gamma >= 0.0)) {
        throw InvalidParameter("certify_eq63: missing or invalid constants");
    }
    if (disturbance.size() != y.size()) {
        throw InvalidParameter("certify_eq63: disturbance must be sampled at the trajectory times");
    }
    if (!(tol >= 0.0)) {
        throw InvalidParameter("certify_eq63: tolerance must be nonnegative");
    }
    ISSReport report;
    report.id = EstimateId::eq63;
    report.tolerance = tol;
    report.parameters = {{"p", p},          {"K1", eq.k1},     {"K2", eq.k2},
                         {"M", tg.m},       {"sigma", tg.sigma}, {"gamma", tg.gamma}};
    report.initial_norm = norm_lp(y.initial(), p);
    report.input_sup = running_sup(disturbance);
    report.beta = KLBound::exponential_linear(eq.k2 / eq.k1 * tg.m, tg.sigma);
    report.gamma = GainFn::linear(eq.k2 * tg.gamma);
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double t = y.times()[k];
        const double lhs = norm_lp(y.state(k), p);
        const double rhs = report.beta(report.initial_norm, t) + report.gamma(report.input_sup[k]);
        report.rows.push_back({t, lhs, rhs, 0.0});
    }
    detail::finalize_report(report);
    return report;
}

void write_kernel_csv(std::ostream& os, const VolterraKernel& kernel) {
    os << "z,s,k_value\n";
    const Grid1D& grid = kernel.grid();
    const std::size_t n = kernel.n_nodes();
    char buf[96];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!kernel.in_triangle(i, j)) {
                continue;
            }
            std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.17g\n", grid.z(i), grid.z(j),
                          kernel.at(i, j));
            os << buf;
        }
    }
}

}  // namespace issp
