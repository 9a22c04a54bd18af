#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "iss_parabolic/grid.hpp"
#include "iss_parabolic/solver.hpp"

namespace issp {

inline constexpr double kDefaultOrderingTol = 1e-10;

/// Outcome of a nodewise comparison of two trajectories.
struct OrderingReport {
    bool pass = true;
    /// max(0, low - high) over all nodes and times.
    double worst_violation = 0.0;
    std::size_t time_index = 0;
    std::size_t node_index = 0;
    double t = 0.0;
    double z = 0.0;
    /// min_i (high - low) at each recorded time.
    std::vector<double> min_gap;
};

/// Passes iff high - low >= -tol at every node and time. Both trajectories
/// must share the mesh and the time points.
OrderingReport check_ordering(const Trajectory& low, const Trajectory& high,
                              double tol = kDefaultOrderingTol);

/// Lower and upper states with constant boundary data sandwiching (x, u):
///   x_minus = (1-k) x - (U + eps) k,   u_minus = -(U + eps)
///   x_plus  = (1-k) x + (U + eps) k,   u_plus  = +(U + eps)
/// where U is the sup-norm of the input and k the cutoff hat of width delta.
struct Bracket {
    Field x_minus;
    Field x_plus;
    double u_minus;
    double u_plus;
    double epsilon;
    double cutoff_delta;
};

/// Piecewise-linear cutoff: 1 at z in {0,1}, 0 at distance >= delta.
double cutoff_hat(double z, double delta);

/// Builds the bracket for a given cutoff width. Throws IncompatibilityError
/// if some node inside the cutoff layer has |x| > u_sup + epsilon.
Bracket build_bracket(const Field& x, double u_sup, double epsilon, double delta);

/// Largest dyadic width 2^-j <= 1/4 for which the bracket is admissible.
/// The scan stops after the first width below h, where only the boundary
/// nodes are cut off; failing there throws IncompatibilityError.
double select_cutoff_width(const Field& x, double u_sup, double epsilon);

/// Bracket ordering and the norm bounds
///   ||x_pm||_p <= ||x||_p + (u_sup + eps) * mu(G)^{1/p}   (mu(G) = 1).
bool bracket_invariants_hold(const Bracket& b, const Field& x, double u_sup, double p,
                             double tol = 1e-12);

struct SandwichReport {
    Trajectory original;
    Trajectory lower;
    Trajectory upper;
    Bracket bracket;
    OrderingReport low_side;   // lower <= original
    OrderingReport high_side;  // original <= upper
    bool pass;
};

/// Runs the original problem and the two constant-input bracketing problems
/// and checks lower <= original <= upper at every recorded time.
SandwichReport constant_reduction_experiment(const SemilinearProblem& problem, const Grid1D& grid,
                                             double epsilon, double tol = kDefaultOrderingTol);

/// CSV `t,min_gap_low,min_gap_high`.
void write_sandwich_csv(std::ostream& os, const SandwichReport& report);

}  // namespace issp
