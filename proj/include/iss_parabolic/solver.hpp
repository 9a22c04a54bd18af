#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "iss_parabolic/grid.hpp"

namespace issp {

/// Dirichlet data for one end of the interval.
///
/// Three kinds:
///  - constant: u(t) = k;
///  - sampled: piecewise-linear through (times, values), held constant
///    outside the table;
///  - closed-loop: u(t) = d(t) - sum_j weights[j] * x(t, z_j), a linear
///    functional of the state at the same time level (actuator disturbance
///    d plus state feedback). The solver resolves it implicitly.
class BoundarySignal {
public:
    enum class Kind { constant, sampled, closed_loop };

    static BoundarySignal constant(double value);
    static BoundarySignal sampled(std::vector<double> times, std::vector<double> values);
    static BoundarySignal closed_loop(const BoundarySignal& disturbance, std::vector<double> weights);

    /// Zero constant signal.
    BoundarySignal() = default;

    Kind kind() const noexcept { return kind_; }
    bool is_closed_loop() const noexcept { return kind_ == Kind::closed_loop; }

    /// Signal value at t. For closed-loop signals this is the disturbance d(t).
    double operator()(double t) const;

    /// Sup of |u| (of |d| for closed-loop) over the defining samples.
    double sup_norm() const noexcept { return sup_; }

    /// Last time covered by the table (infinite for constants).
    double horizon() const noexcept;

    /// s -> u(s + offset).
    BoundarySignal shifted(double offset) const;

    /// Feedback weights of a closed-loop signal (empty otherwise).
    std::span<const double> feedback_weights() const noexcept { return weights_; }
    const BoundarySignal& disturbance() const;

    /// Closed-loop boundary value for a given state: d(t) - <weights, x>.
    double resolve(double t, std::span<const double> state) const;

private:
    Kind kind_ = Kind::constant;
    double value_ = 0.0;
    std::vector<double> times_;
    std::vector<double> values_;
    std::vector<double> weights_;
    std::shared_ptr<const BoundarySignal> disturbance_;
    double sup_ = 0.0;
};

/// One-sided Lipschitz data of the reaction term in w over the working
/// range: for w1 > w2,
///   -lipschitz_below * (w1 - w2) <= f(z,w1,xi) - f(z,w2,xi) < lipschitz_k * (w1 - w2).
struct ReactionBounds {
    double lipschitz_k = 0.0;
    double lipschitz_below = 0.0;
};

/// Reaction term f(z, w, xi) of the semilinear operator.
class Reaction {
public:
    using Fn = std::function<double(double z, double w, double xi)>;

    static Reaction none();
    /// f = k * w
    static Reaction linear(double k);
    /// Caller-declared bounds must hold on the range the solution visits.
    static Reaction custom(Fn f, ReactionBounds bounds, bool uses_gradient = false);

    double operator()(double z, double w, double xi) const { return fn_(z, w, xi); }
    bool is_zero() const noexcept { return zero_; }
    bool uses_gradient() const noexcept { return uses_gradient_; }
    const ReactionBounds& bounds() const noexcept { return bounds_; }
    /// Slope when f = k*w; used by the backstepping module.
    double linear_coefficient() const noexcept { return linear_k_; }

private:
    Fn fn_ = [](double, double, double) { return 0.0; };
    ReactionBounds bounds_;
    bool zero_ = true;
    bool uses_gradient_ = false;
    double linear_k_ = 0.0;
};

/// x_t = a x_zz + f(z, x, x_z) on (0,1) with Dirichlet data at both ends.
class SemilinearProblem {
public:
    /// Rejects a <= 0 and initial data that does not match the boundary
    /// signals at t = 0.
    SemilinearProblem(double a, Reaction reaction, Field initial, BoundarySignal left,
                      BoundarySignal right);

    double a() const noexcept { return a_; }
    const Reaction& reaction() const noexcept { return reaction_; }
    double lipschitz_k() const noexcept { return reaction_.bounds().lipschitz_k; }
    const Field& initial() const noexcept { return initial_; }
    const BoundarySignal& left() const noexcept { return left_; }
    const BoundarySignal& right() const noexcept { return right_; }
    const Grid1D& grid() const noexcept { return initial_.grid(); }

    /// Same operator, new data.
    SemilinearProblem with_data(Field initial, BoundarySignal left, BoundarySignal right) const;

    /// Largest dt for which the IMEX step keeps the discrete order.
    double max_monotone_dt() const noexcept;

private:
    double a_;
    Reaction reaction_;
    Field initial_;
    BoundarySignal left_;
    BoundarySignal right_;
};

/// Advance from t to t+dt: backward-Euler diffusion (tridiagonal solve),
/// explicit reaction at (z, x(t,z), gradient), boundary values at t+dt.
///
/// Throws MonotonicityLoss when dt * max(lipschitz_k, lipschitz_below) >= 1.
Field step(const SemilinearProblem& problem, const Field& state, double t, double dt);

/// Repeated `step` from t = 0 to the grid horizon. The trajectory holds
/// grid.steps() + 1 states at t_k = k*dt.
Trajectory simulate(const SemilinearProblem& problem, const Grid1D& grid);

/// max |D_t x - a D_zz x - f| over interior nodes and interior times, with
/// central differences in both variables.
double residual(const SemilinearProblem& problem, const Trajectory& traj);
double residual(double a, const Reaction& reaction, const Trajectory& traj);

/// CSV with header `t,z,value`, one row per (time, node), time-major.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Running maximum of |values| (max_{s<=t_k} |d(s)| on the sample points).
std::vector<double> running_sup(std::span<const double> values);

}  // namespace issp
