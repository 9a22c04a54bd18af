#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace issp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Uniform discretization of [0,1] plus a uniform time step.
///
/// Nodes are z_i = i*h for i = 0..n_interior+1, so both boundary nodes are
/// part of every field. Times are t_k = k*dt for k = 0..steps().
class Grid1D {
public:
    Grid1D(std::size_t n_interior, double dt, double t_final);

    std::size_t n_interior() const noexcept { return n_interior_; }
    std::size_t n_nodes() const noexcept { return n_interior_ + 2; }
    std::size_t last() const noexcept { return n_interior_ + 1; }
    double h() const noexcept { return h_; }
    double dt() const noexcept { return dt_; }
    double t_final() const noexcept { return t_final_; }

    double z(std::size_t i) const noexcept { return static_cast<double>(i) * h_; }
    double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt_; }

    /// Number of time steps, ceil(t_final/dt).
    std::size_t steps() const noexcept { return steps_; }

    /// Same spatial resolution and time step.
    bool same_mesh(const Grid1D& other) const noexcept {
        return n_interior_ == other.n_interior_ && dt_ == other.dt_;
    }

    /// Trapezoid weight of node i (h/2 at the ends, h inside).
    double weight(std::size_t i) const noexcept {
        return (i == 0 || i == last()) ? 0.5 * h_ : h_;
    }

    Grid1D with_horizon(double t_final) const { return Grid1D(n_interior_, dt_, t_final); }

    bool operator==(const Grid1D& other) const noexcept = default;

private:
    std::size_t n_interior_;
    double h_;
    double dt_;
    double t_final_;
    std::size_t steps_;
};

/// Nodal samples of a function on a Grid1D, boundary nodes included.
class Field {
public:
    Field(const Grid1D& grid, std::vector<double> values);

    static Field zeros(const Grid1D& grid);
    static Field constant(const Grid1D& grid, double value);
    static Field from_function(const Grid1D& grid, const std::function<double(double)>& fn);

    const Grid1D& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double front() const noexcept { return values_.front(); }
    double back() const noexcept { return values_.back(); }

    double max_abs() const noexcept;

private:
    Grid1D grid_;
    std::vector<double> values_;
};

/// States sampled at increasing times together with the Dirichlet data that
/// produced them. states[k][0] == boundary_left[k] and
/// states[k][last] == boundary_right[k] hold exactly.
class Trajectory {
public:
    Trajectory(std::vector<double> times, std::vector<Field> states);

    const Grid1D& grid() const noexcept { return states_.front().grid(); }
    std::size_t size() const noexcept { return times_.size(); }
    std::span<const double> times() const noexcept { return times_; }
    const std::vector<Field>& states() const noexcept { return states_; }
    const Field& state(std::size_t k) const noexcept { return states_[k]; }
    const Field& initial() const noexcept { return states_.front(); }
    const Field& final_state() const noexcept { return states_.back(); }
    std::span<const double> boundary_left() const noexcept { return left_; }
    std::span<const double> boundary_right() const noexcept { return right_; }

    /// Prefix containing the first `count` samples.
    Trajectory truncated(std::size_t count) const;

private:
    std::vector<double> times_;
    std::vector<Field> states_;
    std::vector<double> left_;
    std::vector<double> right_;
};

/// Composite-trapezoid L^p norm; p = kInf gives the nodal maximum.
double norm_lp(const Field& x, double p);
double norm_lp(std::span<const double> values, double h, double p);

/// Trapezoid approximation of the integral of sin(pi z)|x(z)| over [0,1].
double norm_weighted_sin(const Field& x);

/// max_z sin(theta+phi)|x(z)| / sin(theta+z*phi), taken over all nodes.
double norm_weighted_sup(const Field& x, double theta, double phi);

/// Trapezoid integral of |x|^p (the L^p Lyapunov functional).
double lp_functional(const Field& x, double p);

/// Least-squares slope of log(values) against times, returned as a decay
/// rate (positive when decaying). Samples with values <= floor are skipped.
double fit_decay_rate(std::span<const double> times, std::span<const double> values,
                      double floor = 1e-250);

}  // namespace issp
