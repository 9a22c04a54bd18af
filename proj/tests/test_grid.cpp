#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "iss_parabolic/comparison.hpp"
#include "iss_parabolic/errors.hpp"
#include "iss_parabolic/grid.hpp"
#include "oracles.hpp"

using namespace issp;

TEST_CASE("grid construction and validation") {
    const Grid1D g(9, 0.01, 0.1);
    CHECK(g.n_nodes() == 11);
    CHECK(g.h() == doctest::Approx(0.1));
    CHECK(g.steps() == 10);
    CHECK(g.z(g.last()) == doctest::Approx(1.0));
    CHECK_THROWS_AS(Grid1D(0, 0.01, 1.0), InvalidParameter);
    CHECK_THROWS_AS(Grid1D(9, 0.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(Grid1D(9, 0.01, -1.0), InvalidParameter);
}

TEST_CASE("fields reject non-finite entries") {
    const Grid1D g(3, 0.1, 1.0);
    CHECK_THROWS_AS(Field(g, {0.0, 1.0, std::nan(""), 0.0, 0.0}), InvalidField);
    CHECK_THROWS_AS(Field(g, {0.0, std::numeric_limits<double>::infinity(), 0.0, 0.0, 0.0}),
                    InvalidField);
    CHECK_THROWS(Field(g, {0.0, 1.0}));
}

TEST_CASE("norm_lp closed forms") {
    const Grid1D g(199, 1e-3, 1.0);
    CHECK(norm_lp(Field::constant(g, 1.0), 2.0) == doctest::Approx(1.0).epsilon(1e-14));
    for (double p : {1.0, 2.0, 3.5, kInf}) {
        CHECK(norm_lp(Field::zeros(g), p) == 0.0);
    }
    CHECK(norm_lp(oracle::sine(g), 2.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    CHECK(norm_lp(oracle::sine(g), kInf) == doctest::Approx(1.0));
    CHECK_THROWS_AS(norm_lp(oracle::sine(g), 0.5), InvalidParameter);
}

TEST_CASE("weighted sin norm") {
    const Grid1D g(199, 1e-3, 1.0);
    CHECK(norm_weighted_sin(Field::constant(g, 1.0)) == doctest::Approx(2.0 / oracle::pi).epsilon(1e-4));
    CHECK(norm_weighted_sin(Field::zeros(g)) == 0.0);
    CHECK(norm_weighted_sin(oracle::sine(g)) == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("weighted sup norm") {
    const Grid1D g(99, 1e-3, 1.0);
    CHECK(norm_weighted_sup(Field::zeros(g), 0.5, 0.5) == 0.0);
    std::vector<double> v(g.n_nodes(), 0.0);
    v.back() = -3.0;
    CHECK(norm_weighted_sup(Field(g, v), 0.3, 1.1) == doctest::Approx(3.0));
    CHECK(norm_weighted_sup(Field::constant(g, 1.0), oracle::pi / 4, oracle::pi / 4) ==
          doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(norm_weighted_sup(Field::zeros(g), 0.0, 0.5), InvalidParameter);
    CHECK_THROWS_AS(norm_weighted_sup(Field::zeros(g), 2.0, 1.5), InvalidParameter);
}

TEST_CASE("norm monotonicity and triangle inequality on random pairs") {
    std::mt19937_64 rng(11);
    const Grid1D g(63, 1e-3, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Field x = oracle::noise_field(g, rng);
        const Field y = oracle::noise_field(g, rng);
        std::vector<double> bigger(g.n_nodes()), sum(g.n_nodes());
        for (std::size_t i = 0; i < g.n_nodes(); ++i) {
            bigger[i] = (std::abs(x[i]) + std::abs(y[i])) * (y[i] < 0 ? -1.0 : 1.0);
            sum[i] = x[i] + y[i];
        }
        for (double p : {1.0, 2.0, 3.0, 7.0, kInf}) {
            CHECK(norm_lp(x, p) <= norm_lp(Field(g, bigger), p));
            CHECK(norm_lp(Field(g, sum), p) <= norm_lp(x, p) + norm_lp(y, p) + 1e-12);
        }
    }
}

TEST_CASE("quadrature converges at second order") {
    double prev = 0.0;
    for (std::size_t n : {50u, 100u, 200u}) {
        const Grid1D g(n, 1e-3, 1.0);
        const double e2 = std::abs(norm_lp(oracle::sine(g), 2.0) - std::sqrt(0.5));
        const double e1 = std::abs(norm_lp(oracle::sine(g), 1.0) - 2.0 / oracle::pi);
        if (prev > 0.0) {
            CHECK(std::log2(prev / e1) > 1.8);
        }
        prev = e1;
        CHECK(e2 < 1e-12);
    }
}

TEST_CASE("fit_decay_rate recovers exponentials") {
    std::vector<double> t, v;
    for (int k = 0; k <= 100; ++k) {
        t.push_back(0.01 * k);
        v.push_back(3.0 * std::exp(-2.5 * t.back()));
    }
    CHECK(fit_decay_rate(t, v) == doctest::Approx(2.5).epsilon(1e-10));
}

TEST_CASE("KL evaluation") {
    const auto b1 = KLBound::exponential_linear(1.0, 1.0);
    CHECK(kl_eval(b1, 2.0, 0.0) == doctest::Approx(2.0));
    CHECK(kl_eval(b1, 0.0, 3.0) == 0.0);
    const auto b2 = KLBound::exponential_linear(2.0, oracle::pi * oracle::pi);
    CHECK(kl_eval(b2, 1.0, 0.1) == doctest::Approx(2.0 * std::exp(-0.1 * oracle::pi * oracle::pi)));
    CHECK(kl_eval(b2, 1.0, 0.1) == doctest::Approx(0.745416).epsilon(1e-5));
    CHECK_THROWS_AS(KLBound::exponential_linear(0.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(KLBound::exponential_linear(1.0, 0.0), InvalidParameter);
}

TEST_CASE("gain algebra") {
    const auto g = GainFn::linear(2.0) + GainFn::power(1.0, 2.0);
    CHECK(g(3.0) == doctest::Approx(15.0));
    CHECK_FALSE(g.is_linear());
    const auto lin = GainFn::linear(2.0).compose(GainFn::linear(3.0)).scaled(0.5);
    REQUIRE(lin.linear_coefficient());
    CHECK(*lin.linear_coefficient() == doctest::Approx(3.0));
    CHECK_THROWS_AS(GainFn::linear(-1.0), InvalidParameter);
    CHECK_THROWS_AS(GainFn::power(1.0, 0.0), InvalidParameter);
}

TEST_CASE("combine_bounds") {
    const auto id = GainFn::identity();
    const auto [bh, gh] = combine_bounds(KLBound::exponential_linear(1.0, 1.0), id, id, id, id);
    CHECK(bh.is_exponential_linear());
    CHECK(gh.is_linear());
    CHECK(kl_eval(bh, 1.0, 0.0) == doctest::Approx(16.0));
    CHECK(kl_eval(bh, 1.0, 2.0) == doctest::Approx(16.0 * std::exp(-2.0)));
    CHECK(gh(1.0) == doctest::Approx(20.0));
    for (double t : {0.0, 1.0, 5.0}) {
        CHECK(kl_eval(bh, 0.0, t) == 0.0);
    }
}

TEST_CASE("combine_bounds preserves the KL and K-infinity invariants") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    const std::vector<double> radii = {0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0};
    const std::vector<double> times = {0.0, 0.1, 1.0, 10.0, 100.0};
    for (int trial = 0; trial < 30; ++trial) {
        const auto beta = KLBound::exponential(u(rng), u(rng), GainFn::power(1.0, u(rng)));
        const auto gamma = GainFn::linear(u(rng)) + GainFn::power(u(rng), u(rng));
        const auto rho = GainFn::linear(u(rng));
        const auto eta = GainFn::power(1.0, u(rng));
        const auto xi = GainFn::linear(u(rng));
        REQUIRE(sampled_kl(beta, radii, times));
        REQUIRE(sampled_k_infinity(gamma, radii));
        const auto [bh, gh] = combine_bounds(beta, gamma, rho, eta, xi);
        CHECK(sampled_kl(bh, radii, times));
        CHECK(sampled_k_infinity(gh, radii));
    }
}
