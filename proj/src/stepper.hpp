#pragma once

#include <span>
#include <vector>

#include "iss_parabolic/solver.hpp"

namespace issp::detail {

// IMEX stepper with the tridiagonal factorization cached for a fixed dt.
class Stepper {
public:
    Stepper(const SemilinearProblem& problem, const Grid1D& grid, double dt);

    // State at t_next from the state one step earlier.
    std::vector<double> advance(std::span<const double> x, double t_next) const;

private:
    void solve(std::vector<double>& rhs) const;

    const SemilinearProblem& problem_;
    Grid1D grid_;
    double dt_;
    double r_ = 0.0;
    std::vector<double> cprime_;
    std::vector<double> inv_denom_;
    bool closed_left_ = false;
    bool closed_right_ = false;
    std::vector<double> w_left_;   // A^{-1}(r e_1)
    std::vector<double> w_right_;  // A^{-1}(r e_n)
};

}  // namespace issp::detail
