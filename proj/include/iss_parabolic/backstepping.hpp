#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "iss_parabolic/grid.hpp"
#include "iss_parabolic/iss.hpp"
#include "iss_parabolic/solver.hpp"

namespace issp {

/// Backstepping boundary control of the reaction-diffusion plant
///
///   y_t = a y_zz + c y,   y(t,1) = 0,   y(t,0) = u(t)
///
/// through the Volterra transform x(z) = y(z) + int_z^1 k(z,s) y(s) ds onto
/// the target x_t = a x_zz, x(t,0) = d(t), x(t,1) = 0. The control is
///   u(t) = d(t) - int_0^1 k(0,s) y(t,s) ds.
///
/// Kernel equations. Substituting the transform into the plant and
/// integrating by parts twice leaves
///   y(z) [c + 2a d/dz k(z,z)] + int_z^1 [a k_ss + c k - a k_zz] y ds
/// plus a boundary term a k(z,1) y_s(z,1). All three must vanish, so with
/// lam = c/a
///   k_zz - k_ss = lam k   on 0 <= z <= s <= 1,
///   k(z,1) = 0,   k(z,z) = (lam/2)(1 - z).
/// In the variables Z = 1-z, S = 1-s, xi = Z+S, eta = Z-S, G(xi,eta) = k,
/// this is G_{xi eta} = (lam/4) G with G(xi,0) = lam xi / 4, G(xi,xi) = 0,
/// equivalently the integral equation
///   G(xi,eta) = (lam/4)(xi - eta) + (lam/4) int_eta^xi int_0^eta G(tau,sigma) dsigma dtau
/// on 0 <= eta <= xi, xi + eta <= 2. The kernel depends on (a, c) only
/// through lam.
///
/// The inverse transform y(z) = x(z) + int_z^1 l(z,s) x(s) ds has
///   l(z,s) = -k(z,s) - int_z^s k(z,r) l(r,s) dr.
///
/// Mirroring z -> 1-z moves the actuator to z = 1: the kernel becomes
/// k~(z,s) = k(1-z,1-s) on s <= z and the transform integrates over [0,z].

enum class KernelDirection { direct, inverse };

/// upper: samples on s >= z (transform integrates over [z,1]);
/// lower: samples on s <= z (transform integrates over [0,z]).
enum class KernelOrientation { upper, lower };

enum class ControlEnd { left, right };

/// Triangular kernel sampled on the nodes of a Grid1D.
class VolterraKernel {
public:
    /// `samples` is row-major n_nodes x n_nodes, k(z_i, s_j) at [i*n + j].
    /// Entries outside the triangle must be zero.
    VolterraKernel(const Grid1D& grid, double lam, KernelDirection direction,
                   KernelOrientation orientation, std::vector<double> samples);

    const Grid1D& grid() const noexcept { return grid_; }
    double lam() const noexcept { return lam_; }
    KernelDirection direction() const noexcept { return direction_; }
    KernelOrientation orientation() const noexcept { return orientation_; }
    ControlEnd control_end() const noexcept {
        return orientation_ == KernelOrientation::upper ? ControlEnd::left : ControlEnd::right;
    }

    std::size_t n_nodes() const noexcept { return grid_.n_nodes(); }
    double at(std::size_t i, std::size_t j) const noexcept { return samples_[i * n_nodes() + j]; }
    std::span<const double> samples() const noexcept { return samples_; }
    bool in_triangle(std::size_t i, std::size_t j) const noexcept {
        return orientation_ == KernelOrientation::upper ? j >= i : j <= i;
    }

    /// Trapezoid weight of node j in the integral of row i.
    double weight(std::size_t i, std::size_t j) const noexcept;

    /// k(1-z, 1-s), orientation flipped.
    VolterraKernel mirrored() const;

    /// Number of successive-approximation sweeps used to build the kernel.
    std::size_t iterations() const noexcept { return iterations_; }
    void set_iterations(std::size_t n) noexcept { iterations_ = n; }

private:
    Grid1D grid_;
    double lam_;
    KernelDirection direction_;
    KernelOrientation orientation_;
    std::vector<double> samples_;
    std::size_t iterations_ = 0;
};

inline constexpr double kKernelTol = 1e-10;
inline constexpr std::size_t kKernelMaxIterations = 200;

/// Direct kernel for diffusion a and reaction coefficient k_reaction, upper
/// orientation. Successive approximation of the characteristic integral
/// equation on two lattices (spacing h and h/2) combined by Richardson
/// extrapolation. Throws SynthesisError if the iterates have not settled
/// below kKernelTol after kKernelMaxIterations sweeps.
VolterraKernel solve_kernel(double a, double k_reaction, const Grid1D& grid);

/// Inverse kernel of the discrete transform: L = -K - K L solved by
/// triangular substitution on the trapezoid operators, so that
/// apply_transform with the result inverts apply_transform with `direct` up
/// to rounding. Throws SynthesisError if the composition (I+L)(I+K) - I
/// exceeds 1e-8.
VolterraKernel solve_inverse_kernel(const VolterraKernel& direct);

/// x_i = y_i + trapezoid of k(z_i, .) y over the row's interval.
Field apply_transform(const VolterraKernel& kernel, const Field& y);

/// Feedback weights c with u = d - sum_j c_j y_j (row 0 for an upper
/// kernel, row n-1 for a lower one, trapezoid weights included).
std::vector<double> feedback_weights(const VolterraKernel& kernel);

/// d - sum_j c_j y_j.
double feedback(const VolterraKernel& kernel, const Field& y, double d);

/// g plus a linear lift vanishing at the uncontrolled end, chosen so that
/// g(controlled end) = feedback(kernel, g, d0). The uncontrolled end of g
/// must already be zero.
Field compatible_initial(const VolterraKernel& kernel, const Field& g, double d0);

struct ClosedLoopRun {
    Trajectory y;
    /// apply_transform(kernel, y) at every recorded time.
    Trajectory x;
    /// d(t_k) and u(t_k).
    std::vector<double> disturbance;
    std::vector<double> control;
};

/// Closed-loop plant y_t = a y_zz + c y with the feedback law at the
/// kernel's control end and zero data at the other end. The boundary value
/// is resolved implicitly together with the diffusion solve.
ClosedLoopRun simulate_closed_loop(double a, const VolterraKernel& kernel, const Field& y0,
                                   const BoundarySignal& d, const Grid1D& grid);

/// Synthesizes the kernel (mirrored for ControlEnd::right) and runs the loop.
ClosedLoopRun simulate_closed_loop(double a, double k_reaction, const Field& y0,
                                   const BoundarySignal& d, const Grid1D& grid,
                                   ControlEnd end = ControlEnd::left);

/// Plant with u = 0 at both ends.
Trajectory simulate_open_loop(double a, double k_reaction, const Field& y0, const Grid1D& grid);

struct EquivalenceConstants {
    /// K1 |x|_p <= |y|_p <= K2 |x|_p
    double k1 = 1.0;
    double k2 = 1.0;
    /// Extremes of |y|_p / |x|_p seen on the random sanity fields.
    double min_ratio = 1.0;
    double max_ratio = 1.0;
};

/// K2 = 1 + |L|_p, K1 = 1 / (1 + |K|_p), with the operator norms bounded by
/// the Schur test |T|_p <= A^{1-1/p} B^{1/p} on the trapezoid-weighted
/// spaces (A: max row sum, B: max weighted column sum). Checked on 100
/// seeded random fields; a violation throws SynthesisError.
EquivalenceConstants estimate_equivalence_constants(const VolterraKernel& direct,
                                                    const VolterraKernel& inverse, double p);

struct Eq63Constants {
    EquivalenceConstants equivalence;
    ExpIssConstants target;
};

/// |y(t)|_p <= (K2/K1) M e^{-sigma t} |y0|_p + K2 gamma max_{s<=t}|d(s)|,
/// with d sampled at the trajectory times.
ISSReport certify_eq63(const Trajectory& y, std::span<const double> disturbance,
                       const Eq63Constants& constants, double p, double tol = kDefaultIssTol);

/// CSV `z,s,k_value` over the kernel's triangle.
void write_kernel_csv(std::ostream& os, const VolterraKernel& kernel);

}  // namespace issp
