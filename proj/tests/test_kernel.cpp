#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fracsing/error.hpp"
#include "fracsing/kernel.hpp"
#include "oracles.hpp"

using namespace fracsing;

TEST_SUITE("kernel") {

TEST_CASE("sphere areas and reciprocal gamma") {
    const double pi = std::numbers::pi;
    CHECK(sphere_area(0) == doctest::Approx(2.0));
    CHECK(sphere_area(1) == doctest::Approx(2 * pi));
    CHECK(sphere_area(2) == doctest::Approx(4 * pi));
    CHECK(angular_mass(2) == doctest::Approx(pi));
    CHECK(angular_mass(3) == doctest::Approx(2.0));
    CHECK(reciprocal_gamma(0.0) == 0.0);
    CHECK(reciprocal_gamma(-2.0) == 0.0);
    CHECK(reciprocal_gamma(0.5) == doctest::Approx(1 / std::sqrt(pi)));
    CHECK(reciprocal_gamma(-0.5) == doctest::Approx(-1 / (2 * std::sqrt(pi))));
    CHECK(reciprocal_gamma(5.0) == doctest::Approx(1.0 / 24));
}

TEST_CASE("C(tau) against frozen values") {
    CHECK(c_tau(-0.5, 2, 0.5).value == doctest::Approx(oracle::kC_m0p5).epsilon(1e-9));
    CHECK(c_tau(-1.25, 2, 0.5).value == doctest::Approx(oracle::kC_m1p25).epsilon(1e-9));
    CHECK(c_tau(-1.5, 2, 0.5).value == doctest::Approx(oracle::kC_m1p5).epsilon(1e-9));
    CHECK(std::abs(c_tau(-1.75, 2, 0.25).value) == doctest::Approx(oracle::kScale_2_0p25).epsilon(1e-9));
    CHECK(std::abs(c_tau(-2.5, 3, 0.5).value) == doctest::Approx(oracle::kScale_3_0p5).epsilon(1e-9));
    CHECK(std::abs(c_tau(-2.25, 3, 0.75).value) == doctest::Approx(oracle::kScale_3_0p75).epsilon(1e-9));
    CHECK(c_tau_oracle(-0.5, 2, 0.5) == doctest::Approx(oracle::kC_m0p5).epsilon(1e-12));
    CHECK(c_tau_oracle(-1.25, 2, 0.5) == doctest::Approx(oracle::kC_m1p25).epsilon(1e-12));
}

TEST_CASE("C vanishes at the fundamental exponent") {
    for (auto [n, a] : {std::pair{2, 0.5}, {2, 0.25}, {3, 0.5}, {3, 0.75}}) {
        const double scale = std::abs(c_tau(-n + a, n, a).value);
        CHECK(std::abs(c_tau(2 * a - n, n, a).value) / scale < 1e-6);
        CHECK(c_tau_oracle(2 * a - n, n, a) == 0.0);
    }
}

TEST_CASE("oracle sign flips once, at 2a - N") {
    for (auto [n, a] : {std::pair{2, 0.5}, {3, 0.75}}) {
        int flips = 0;
        double prev = c_tau_oracle(-n + 0.01, n, a);
        for (int k = 1; k < 200; ++k) {
            const double tau = -n + 0.01 + (n - 0.02) * k / 199.0;
            const double v = c_tau_oracle(tau, n, a);
            if (std::abs(tau - (2 * a - n)) < 1e-9) continue;
            if ((v > 0) != (prev > 0)) ++flips;
            prev = v;
        }
        CHECK(flips == 1);
    }
}

TEST_CASE("quadrature and oracle agree across the range") {
    for (double tau : {-1.9, -1.6, -1.3, -0.7, -0.3, -0.1}) {
        const double q = c_tau(tau, 2, 0.5).value;
        CHECK(q == doctest::Approx(c_tau_oracle(tau, 2, 0.5)).epsilon(1e-7));
    }
}

TEST_CASE("exponent outside (-N, 0) is rejected") {
    CHECK_THROWS_AS(c_tau(0.1, 2, 0.5), Error);
    CHECK_THROWS_AS(c_tau(-2.0, 2, 0.5), Error);
    CHECK_THROWS_AS(c_tau_oracle(-3.5, 3, 0.5), Error);
    try {
        c_tau(0.5, 2, 0.5);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OutOfRange);
    }
}

TEST_CASE("angular kernel is positive and symmetric") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 3.0);
    for (int dim : {2, 3}) {
        for (int k = 0; k < 20; ++k) {
            const double r = u(rng), s = u(rng);
            if (std::abs(r - s) < 1e-3) continue;
            const double krs = angular_kernel(r, s, dim, 0.5).value;
            const double ksr = angular_kernel(s, r, dim, 0.5).value;
            CHECK(krs > 0.0);
            CHECK(krs / std::pow(s, dim - 1) == doctest::Approx(ksr / std::pow(r, dim - 1)).epsilon(1e-8));
        }
    }
    CHECK_THROWS_AS(angular_kernel(0.5, 0.5, 2, 0.5), Error);
}

TEST_CASE("truncated kernel equals the full kernel beyond the cutoff") {
    const double full = angular_kernel(0.5, 0.8, 2, 0.5).value;
    CHECK(truncated_kernel(0.5, 0.8, 0.1, 2, 0.5) == doctest::Approx(full).epsilon(1e-9));
    CHECK(truncated_kernel(0.5, 0.5, 0.1, 2, 0.5) > 0.0);
    CHECK(truncated_kernel(0.5, 0.52, 0.1, 2, 0.5) < angular_kernel(0.5, 0.52, 2, 0.5).value);
}

TEST_CASE("closed-form flap of a power") {
    const ModelParams mp{2, 0.5, 1.8};
    CHECK(flap_power_exact(-1.0, 0.3, mp) == 0.0);
    CHECK(flap_power_exact(-0.5, 1.0, mp) == doctest::Approx(-oracle::kC_m0p5));
    for (double r : {0.1, 0.7, 2.0})
        CHECK(flap_power_exact(-0.5, 2 * r, mp) ==
              doctest::Approx(std::pow(2.0, -1.5) * flap_power_exact(-0.5, r, mp)).epsilon(1e-14));
}

TEST_CASE("polar quadrature of the operator matches closed forms") {
    const ModelParams mp{2, 0.5, 1.8};
    auto pw = [](double s) { return std::pow(s, -0.5); };
    for (double r : {0.3, 1.0})
        CHECK(flap_radial(pw, r, mp).value == doctest::Approx(flap_power_exact(-0.5, r, mp)).epsilon(1e-7));
    auto fund = [](double s) { return 1.0 / s; };
    CHECK(std::abs(flap_radial(fund, 0.5, mp).value) < 1e-6);
    const double kappa = torsion_constant(2, 0.5);
    CHECK(kappa == doctest::Approx(oracle::kTorsion_2_0p5).epsilon(1e-10));
    auto tors = [](double s) { return exact_torsion(s, 2, 0.5); };
    for (double r : {0.05, 0.4, 0.9}) CHECK(flap_radial(tors, r, mp).value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Monte Carlo estimates agree within three standard errors") {
    const ModelParams mp{2, 0.5, 1.8};
    auto c = flap_montecarlo([](double) { return 3.0; }, 0.5, mp, 20000, 1);
    CHECK(std::abs(c.value) <= 3 * c.error_estimate + 1e-12);
    auto f = flap_montecarlo([](double s) { return 1.0 / s; }, 0.5, mp, 200000, 2);
    CHECK(std::abs(f.value) <= 3 * f.error_estimate);
    auto p = flap_montecarlo([](double s) { return std::pow(s, -0.5); }, 1.0, mp, 200000, 3);
    CHECK(std::abs(p.value - flap_power_exact(-0.5, 1.0, mp)) <= 3 * p.error_estimate);
    auto again = flap_montecarlo([](double s) { return std::pow(s, -0.5); }, 1.0, mp, 200000, 3);
    CHECK(again.value == p.value);
    CHECK_THROWS_AS(flap_montecarlo([](double) { return 1.0; }, 0.5, mp, 10, 1), Error);
}

}
