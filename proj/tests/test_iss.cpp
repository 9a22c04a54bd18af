#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "iss_parabolic/errors.hpp"
#include "iss_parabolic/iss.hpp"
#include "oracles.hpp"

using namespace issp;

namespace {

const BoundarySignal zero = BoundarySignal::constant(0.0);
constexpr double pi2 = oracle::pi * oracle::pi;

SemilinearProblem heat(const Field& x0, BoundarySignal l = zero, BoundarySignal r = zero) {
    return SemilinearProblem(1.0, Reaction::none(), x0, std::move(l), std::move(r));
}

}  // namespace

TEST_CASE("eq50 on the eigenfunction is nearly sharp") {
    const Grid1D g(199, 1e-4, 0.3);
    const auto prob = heat(oracle::sine(g));
    const auto rep = check_eq50(prob, simulate(prob, g));
    CHECK(rep.pass);
    CHECK(satisfies_generic_bound(rep));
    CHECK(rep.initial_norm == doctest::Approx(0.5).epsilon(1e-4));
    for (const auto& row : rep.rows) {
        CHECK(row.lhs == doctest::Approx(0.5 * std::exp(-pi2 * row.t)).epsilon(0.01));
        CHECK(std::abs(row.margin) < 0.01);
    }
}

TEST_CASE("eq50 margin is flat in time for eigen data") {
    const Grid1D g(199, 1e-4, 0.3);
    const auto prob = heat(oracle::sine(g));
    const auto rep = check_eq50(prob, simulate(prob, g));
    for (std::size_t k = 1; k < rep.rows.size(); ++k) {
        CHECK(rep.rows[k].margin <= rep.rows[k - 1].margin + 1e-3);
    }
    const auto rep51 = check_eq51(prob, simulate(prob, g));
    for (std::size_t k = 1; k < rep51.rows.size(); ++k) {
        CHECK(rep51.rows[k].margin >= rep51.rows[k - 1].margin - 1e-3);
    }
}

TEST_CASE("zero data passes every estimate") {
    const Grid1D g(49, 1e-3, 0.2);
    const auto prob = heat(Field::zeros(g));
    const auto traj = simulate(prob, g);
    CHECK(check_eq50(prob, traj).pass);
    CHECK(check_eq51(prob, traj).pass);
    CHECK(check_eq52(prob, traj, 5.0, 0.5).pass);
    CHECK(check_eq50(prob, traj).margin == 0.0);
}

TEST_CASE("eq50 steady state under unit inputs") {
    const Grid1D g(99, 1e-3, 3.0);
    const auto one = BoundarySignal::constant(1.0);
    const auto prob = heat(Field::constant(g, 1.0), one, one);
    const auto rep = check_eq50(prob, simulate(prob, g));
    CHECK(rep.pass);
    CHECK(rep.rows.back().lhs == doctest::Approx(2.0 / oracle::pi).epsilon(1e-3));
    CHECK(rep.rows.back().margin >= 0.0);
    CHECK(rep.rows.back().margin < 0.01);
}

TEST_CASE("eq51 transient and gain") {
    const Grid1D g(199, 1e-4, 0.1);
    const auto prob = heat(oracle::sine(g));
    const auto rep = check_eq51(prob, simulate(prob, g));
    CHECK(rep.pass);
    const double e = std::exp(-pi2 * 0.1);
    const auto& last = rep.rows.back();
    CHECK(last.t == doctest::Approx(0.1));
    CHECK(last.rhs == doctest::Approx(std::sqrt(e / (2.0 - e)) * std::sqrt(0.5)).epsilon(1e-6));
    CHECK(last.lhs == doctest::Approx(e * std::sqrt(0.5)).epsilon(1e-3));
    CHECK(rep.parameters.at("gain") == doctest::Approx(1.0 / std::sqrt(3.0)));
}

TEST_CASE("eq52 weights and decay") {
    const Grid1D g(99, 1e-3, 0.5);
    std::mt19937_64 rng(5);
    const auto prob = heat(oracle::smooth_field(g, rng));
    const auto rep = check_eq52(prob, simulate(prob, g), 5.0, 0.6);
    CHECK(rep.pass);
    const double phi = rep.parameters.at("phi");
    CHECK(rep.parameters.at("boundary_weight_d0") ==
          doctest::Approx(std::sin(0.6 + phi) / std::sin(0.6)));
    CHECK_THROWS_AS(check_eq52(prob, simulate(prob, g), -1.0, 0.6), InvalidParameter);
    CHECK_THROWS_AS(check_eq52(prob, simulate(prob, g), 5.0, 0.0), InvalidParameter);
}

TEST_CASE("estimates refuse inapplicable problems") {
    const Grid1D g(19, 1e-3, 0.05);
    const SemilinearProblem react(1.0, Reaction::linear(1.0), oracle::sine(g), zero, zero);
    const auto traj = simulate(react, g);
    CHECK_THROWS_AS(check_eq50(react, traj), InapplicableEstimate);
    CHECK_THROWS_AS(check_eq51(react, traj), InapplicableEstimate);
    CHECK_THROWS_AS(check_eq52(react, traj, 1.0, 0.5), InapplicableEstimate);
}

TEST_CASE("eq50 and eq51 hold on random driven runs") {
    std::mt19937_64 rng(123);
    const Grid1D g(49, 1e-3, 0.6);
    for (int trial = 0; trial < 15; ++trial) {
        const auto l = oracle::random_input(g, rng);
        const auto r = oracle::random_input(g, rng);
        const auto prob = heat(oracle::smooth_field(g, rng, l(0.0), r(0.0)), l, r);
        const auto traj = simulate(prob, g);
        const auto r50 = check_eq50(prob, traj);
        const auto r51 = check_eq51(prob, traj);
        CHECK(r50.pass);
        CHECK(r51.pass);
        CHECK(satisfies_generic_bound(r50) == r50.pass);
    }
}

TEST_CASE("Lyapunov rate formula") {
    CHECK(lyapunov_norm_rate(1.0, 4.0) == doctest::Approx(0.75 * pi2));
    CHECK(lyapunov_norm_rate(1.0, 4.0) == doctest::Approx(7.402).epsilon(1e-4));
    CHECK(lyapunov_norm_rate(1.0, 2.0 + 1e-9) == doctest::Approx(pi2));
    CHECK(lyapunov_norm_rate(2.0, 3.0) == doctest::Approx(2.0 * 2.0 * 4.0 * pi2 / 9.0));
}

TEST_CASE("Lyapunov certificate") {
    const Grid1D g(199, 1e-4, 0.1);
    const auto prob = heat(oracle::sine(g));
    const auto cert = lyapunov_decay_certificate(prob, g, 4.0);
    CHECK(cert.pass);
    CHECK(cert.derivative_ok);
    CHECK(cert.measured_norm_rate > cert.norm_rate);
    CHECK_THROWS_AS(lyapunov_decay_certificate(prob, g, 1.5), InvalidParameter);
    const auto one = BoundarySignal::constant(1.0);
    CHECK_THROWS_AS(lyapunov_decay_certificate(heat(Field::constant(g, 1.0), one, one), g, 4.0),
                    InapplicableEstimate);
}

TEST_CASE("exp-ISS fit on the eigenfunction") {
    const Grid1D g(199, 1e-4, 0.3);
    std::vector<Trajectory> runs{simulate(heat(oracle::sine(g)), g)};
    const auto c = estimate_exp_iss_constants(runs, 2.0);
    CHECK(c.sigma == doctest::Approx(pi2).epsilon(0.02));
    CHECK(c.m == doctest::Approx(1.0).epsilon(0.02));
    CHECK(c.gamma == 0.0);
}

TEST_CASE("exp-ISS sup gain is at least one") {
    const Grid1D g(49, 1e-3, 2.0);
    const auto one = BoundarySignal::constant(1.0);
    std::vector<Trajectory> runs{
        simulate(heat(oracle::sine(g)), g),
        simulate(heat(Field::zeros(g), oracle::step(g, 1.0, g.dt()), oracle::step(g, 1.0, g.dt())), g)};
    const auto c = estimate_exp_iss_constants(runs, kInf);
    CHECK(c.gamma >= 1.0);
    std::vector<Trajectory> only_zero{runs.front()};
    CHECK_NOTHROW(estimate_exp_iss_constants(only_zero, kInf));
    std::vector<Trajectory> only_forced{runs.back()};
    CHECK_THROWS_AS(estimate_exp_iss_constants(only_forced, kInf), EstimationError);
    (void)one;
}

TEST_CASE("fitted eq53 constants cross-validate and survive truncation") {
    const Grid1D g(49, 1e-3, 1.0);
    std::vector<Trajectory> runs{
        simulate(heat(oracle::sine(g)), g),
        simulate(heat(Field::zeros(g), oracle::step(g, 1.0, g.dt()), zero), g),
        simulate(heat(Field::zeros(g), zero, oracle::step(g, 1.0, g.dt())), g),
        simulate(heat(Field::zeros(g), oracle::step(g, 1.0, g.dt()), oracle::step(g, 1.0, g.dt())), g)};
    const auto c = estimate_exp_iss_constants(runs, 2.0);
    for (const auto& r : runs) {
        CHECK(check_eq53(r, c, 2.0).pass);
    }
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 5; ++trial) {
        const auto l = oracle::random_input(g, rng);
        const auto r = oracle::random_input(g, rng);
        const auto held = simulate(heat(oracle::smooth_field(g, rng, l(0.0), r(0.0)), l, r), g);
        const auto rep = check_eq53(held, c, 2.0);
        CHECK(rep.margin >= -0.02);
        for (std::size_t count : {held.size() / 4, held.size() / 2}) {
            CHECK(check_eq53(held.truncated(count), c, 2.0).pass);
        }
    }
}

TEST_CASE("zero-input stability has no input term") {
    const Grid1D g(49, 1e-3, 0.5);
    std::mt19937_64 rng(4);
    std::vector<Trajectory> runs;
    for (int i = 0; i < 3; ++i) {
        runs.push_back(simulate(heat(oracle::smooth_field(g, rng)), g));
    }
    const auto rep = check_zero_input_stability(runs, 2.0);
    CHECK(rep.pass);
    REQUIRE(rep.gamma.linear_coefficient());
    CHECK(*rep.gamma.linear_coefficient() == 0.0);
}

TEST_CASE("report CSV layout") {
    const Grid1D g(9, 1e-2, 0.03);
    const auto prob = heat(oracle::sine(g));
    const auto rep = check_eq50(prob, simulate(prob, g));
    std::ostringstream rows, summary;
    write_report_csv(rows, rep);
    write_summary_csv(summary, rep);
    CHECK(rows.str().rfind("t,lhs,rhs,margin\n", 0) == 0);
    CHECK(summary.str().rfind("estimate_id,pass,min_margin\neq50,", 0) == 0);
}
