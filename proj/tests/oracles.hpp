// Independent reference computations for the test suites.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "iss_parabolic/grid.hpp"
#include "iss_parabolic/solver.hpp"

namespace oracle {

inline constexpr double pi = std::numbers::pi;

// I1(sqrt(q))/sqrt(q) by its power series; q < 0 gives J1(sqrt(-q))/sqrt(-q).
inline double i1_ratio(double q) {
    double term = 0.5;
    double sum = term;
    for (int m = 1; m < 200; ++m) {
        term *= (q / 4.0) / (m * (m + 1.0));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) {
            break;
        }
    }
    return sum;
}

// Closed-form kernel of x = y + int_z^1 k(z,s) y(s) ds for lam = c/a, s >= z.
inline double direct_kernel(double lam, double z, double s) {
    const double zz = 1.0 - z;
    const double ss = 1.0 - s;
    return lam * ss * i1_ratio(lam * (zz * zz - ss * ss));
}

// Inverse kernel: -lam (1-s) J1(sqrt q)/sqrt q.
inline double inverse_kernel(double lam, double z, double s) {
    const double zz = 1.0 - z;
    const double ss = 1.0 - s;
    return -lam * ss * i1_ratio(-lam * (zz * zz - ss * ss));
}

// Eigenvalues (ascending) of the Dirichlet operator a D_zz + k on n interior nodes.
inline Eigen::VectorXd discrete_spectrum(double a, double k, std::size_t n) {
    const double h = 1.0 / static_cast<double>(n + 1);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        m(i, i) = -2.0 * a / (h * h) + k;
        if (i > 0) {
            m(i, i - 1) = a / (h * h);
        }
        if (i + 1 < m.rows()) {
            m(i, i + 1) = a / (h * h);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

// sum_{m=1..modes} c_m sin(m pi z) + left (1-z) + right z, c_m uniform in [-amp/m, amp/m].
inline issp::Field smooth_field(const issp::Grid1D& g, std::mt19937_64& rng, double left = 0.0,
                                double right = 0.0, int modes = 5, double amp = 1.0) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<double> c(static_cast<std::size_t>(modes));
    for (int m = 1; m <= modes; ++m) {
        c[static_cast<std::size_t>(m - 1)] = amp * unit(rng) / m;
    }
    std::vector<double> v(g.n_nodes());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double z = g.z(i);
        double acc = left * (1.0 - z) + right * z;
        for (int m = 1; m <= modes; ++m) {
            acc += c[static_cast<std::size_t>(m - 1)] * std::sin(m * pi * z);
        }
        v[i] = acc;
    }
    v.front() = left;
    v.back() = right;
    return issp::Field(g, std::move(v));
}

inline issp::Field noise_field(const issp::Grid1D& g, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(g.n_nodes());
    for (double& e : v) {
        e = normal(rng);
    }
    return issp::Field(g, std::move(v));
}

// sin(pi z) with exact zeros at both ends.
inline issp::Field sine(const issp::Grid1D& g, double mode = 1.0) {
    std::vector<double> v(g.n_nodes());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = std::sin(mode * pi * g.z(i));
    }
    v.front() = 0.0;
    v.back() = 0.0;
    return issp::Field(g, std::move(v));
}

// amp sin(freq t + phase) tabulated on the step times.
inline issp::BoundarySignal sinusoid(const issp::Grid1D& g, double amp, double freq,
                                     double phase = 0.0) {
    std::vector<double> t, v;
    for (std::size_t k = 0; k <= g.steps(); ++k) {
        t.push_back(g.time(k));
        v.push_back(amp * std::sin(freq * g.time(k) + phase));
    }
    return issp::BoundarySignal::sampled(std::move(t), std::move(v));
}

// 0 at t = 0, ramps to c at t_on, held afterwards.
inline issp::BoundarySignal step(const issp::Grid1D& g, double c, double t_on) {
    return issp::BoundarySignal::sampled({0.0, t_on, std::max(g.t_final(), t_on) + 1.0},
                                         {0.0, c, c});
}

// Random bounded input: a sinusoid or a step, sup <= 1.
inline issp::BoundarySignal random_input(const issp::Grid1D& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < 0.5) {
        return sinusoid(g, 2.0 * u(rng) - 1.0, 0.5 + 20.0 * u(rng), 2.0 * pi * u(rng));
    }
    return step(g, 2.0 * u(rng) - 1.0, g.dt() + 0.5 * u(rng));
}

}  // namespace oracle
