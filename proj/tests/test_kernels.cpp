#include <doctest.h>

#include <cmath>
#include <random>

#include "fdot/kernels.hpp"
#include "oracle_mpfr.hpp"

using namespace fdot;

namespace {
const OpticalMedium kMedium = OpticalMedium::make(0.219, 1.0, 0.01, 0.5493);
}

TEST_CASE("medium derivation") {
    CHECK(kMedium.D == doctest::Approx(0.073).epsilon(1e-15));
    CHECK(kMedium.mu_A == doctest::Approx(0.00219).epsilon(1e-15));
    CHECK_THROWS_AS(OpticalMedium::make(-1.0, 1.0, 0.01, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(OpticalMedium::make(0.219, 1.0, 0.01, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Fluorophore::make(kMedium, -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Fluorophore::make(kMedium, 0.0, 1.5), std::invalid_argument);
    CHECK(Fluorophore::make(kMedium, 600.0, 0.5).c_f == doctest::Approx(0.1095));
}

TEST_CASE("excitation density frozen value and contracts") {
    // independent arbitrary-precision evaluation of the closed form
    const double v = excitation_density(kMedium, {0.0, 0.0, 10.0}, 1000.0, {0.0, 0.0});
    CHECK(v == doctest::Approx(5.2626321057733433810e-8).epsilon(1e-10));
    CHECK_THROWS_AS(excitation_density(kMedium, {0, 0, 1}, 0.0, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(excitation_density(kMedium, {0, 0, -1}, 1.0, {0, 0}), std::invalid_argument);
}

TEST_CASE("excitation density lateral isotropy") {
    const double a = excitation_density(kMedium, {3.0, 4.0, 10.0}, 800.0, {0.0, 0.0});
    const double b = excitation_density(kMedium, {5.0, 0.0, 10.0}, 800.0, {0.0, 0.0});
    CHECK(a == doctest::Approx(b).epsilon(1e-15));
}

TEST_CASE("absorption shift multiplies kernels by exp(-c dt dmu)") {
    const OpticalMedium shifted = OpticalMedium::make(0.219, 1.0, 0.01 + 0.004, 0.5493);
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> ut(5.0, 5000.0), ud(0.5, 60.0);
    for (int i = 0; i < 25; ++i) {
        const double t = ut(eng), z = ud(eng);
        const double factor = std::exp(-kMedium.c * 0.004 * t);
        CHECK(excitation_density(shifted, {1, 2, z}, t, {0, 0}) ==
              doctest::Approx(factor * excitation_density(kMedium, {1, 2, z}, t, {0, 0}))
                  .epsilon(1e-12));
        CHECK(green_kernel(shifted, {0, 0, 0.5}, {1, -3, z}, t) ==
              doctest::Approx(factor * green_kernel(kMedium, {0, 0, 0.5}, {1, -3, z}, t))
                  .epsilon(1e-12));
    }
}

TEST_CASE("excitation density decays after the peak") {
    const Point3 x{0, 0, 10};
    double peak = 0.0;
    for (double t = 10.0; t <= 3000.0; t += 10.0)
        peak = std::max(peak, excitation_density(kMedium, x, t, {0, 0}));
    CHECK(excitation_density(kMedium, x, 1e4, {0, 0}) < peak);
}

TEST_CASE("green_k3 symmetry, frozen value and beta=0 reduction") {
    CHECK(green_k3(kMedium, 0.0, 11.0, 500.0) ==
          doctest::Approx(0.20570642917504202649).epsilon(1e-12));
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> ud(0.0, 40.0), ut(1.0, 4000.0);
    for (int i = 0; i < 40; ++i) {
        const double x3 = ud(eng), y3 = ud(eng), dt = ut(eng);
        CHECK(green_k3(kMedium, x3, y3, dt) == doctest::Approx(green_k3(kMedium, y3, x3, dt)).epsilon(1e-15));
    }
    const OpticalMedium beta_eps = OpticalMedium::make(0.219, 1.0, 0.01, 1e-300);
    const double x3 = 3.0, y3 = 7.0, dt = 200.0;
    const double fourDt = 4 * beta_eps.D * dt;
    const double expect = std::exp(-(x3 + y3) * (x3 + y3) / fourDt) +
                          std::exp(-(x3 - y3) * (x3 - y3) / fourDt);
    CHECK(green_k3(beta_eps, x3, y3, dt) == doctest::Approx(expect).epsilon(1e-10));
    CHECK_THROWS_AS(green_k3(kMedium, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("green_kernel frozen value, factorization, translation invariance") {
    CHECK(green_kernel(kMedium, {0, 0, 0}, {1, -3, 11}, 800.0) ==
          doctest::Approx(1.6232580729193868555e-6).epsilon(1e-12));
    const Point3 x{2, -1, 4}, y{-3, 5, 9};
    const double dt = 600.0;
    const double lat2 = (x.x1 - y.x1) * (x.x1 - y.x1) + (x.x2 - y.x2) * (x.x2 - y.x2);
    const double pref = std::exp(-kMedium.mu_A * dt) / std::pow(4 * M_PI * kMedium.D * dt, 1.5) *
                        std::exp(-lat2 / (4 * kMedium.D * dt));
    CHECK(green_kernel(kMedium, x, y, dt) ==
          doctest::Approx(pref * green_k3(kMedium, x.x3, y.x3, dt)).epsilon(1e-14));
    const Point3 xs{x.x1 + 5, x.x2 - 3, x.x3}, ys{y.x1 + 5, y.x2 - 3, y.x3};
    CHECK(green_kernel(kMedium, xs, ys, dt) == doctest::Approx(green_kernel(kMedium, x, y, dt)).epsilon(1e-14));
    CHECK(green_kernel(kMedium, x, y, dt) > 0.0);
}

TEST_CASE("boundary_k3 vs multiprecision oracle") {
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> ud(0.1, 60.0), ut(0.5, 5000.0);
    for (int i = 0; i < 60; ++i) {
        const double y3 = ud(eng), tau = ut(eng);
        const double ours = boundary_k3(kMedium, y3, tau);
        const double oracle = fdot_test::boundary_k3_mp(y3, tau, kMedium.D, kMedium.beta);
        CHECK(ours == doctest::Approx(oracle).epsilon(1e-11));
    }
}

TEST_CASE("overflow safety over the documented ranges") {
    // t in [1e-3, 1e6] ps, depths in [0, 200] mm: finite and non-negative
    for (double lt = -3.0; lt <= 6.0; lt += 0.5) {
        const double t = std::pow(10.0, lt);
        for (double z : {0.0, 1.0, 20.0, 100.0, 200.0}) {
            const double ue = excitation_density(kMedium, {0, 0, z}, t, {0, 0});
            CHECK(std::isfinite(ue));
            CHECK(ue >= 0.0);
            const double k = green_kernel(kMedium, {0, 0, 0}, {1, 1, std::max(z, 0.1)}, t);
            CHECK(std::isfinite(k));
            CHECK(k >= 0.0);
        }
    }
}
