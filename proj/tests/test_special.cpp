#include <doctest.h>

#include <cmath>
#include <random>

#include "fdot/special.hpp"
#include "oracle_mpfr.hpp"

using fdot::erfcx;

TEST_CASE("erfcx frozen values") {
    CHECK(erfcx(0.0) == 1.0);
    // independent arbitrary-precision evaluations
    CHECK(erfcx(1.0) == doctest::Approx(0.42758357615580700441).epsilon(1e-14));
    CHECK(erfcx(0.5) == doctest::Approx(0.61569034419292587487).epsilon(1e-14));
    CHECK(erfcx(8.0) == doctest::Approx(0.069985166200880927723).epsilon(1e-14));
    CHECK(erfcx(30.0) == doctest::Approx(0.018795888861416751497).epsilon(1e-14));
    CHECK(erfcx(-3.0) == doctest::Approx(16205.988853999586625).epsilon(1e-13));
}

TEST_CASE("erfcx large-argument asymptote") {
    const double z = 1e6;
    CHECK(erfcx(z) * std::sqrt(M_PI) * z == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::isfinite(erfcx(1e8)));
    CHECK(erfcx(1e8) > 0.0);
}

TEST_CASE("erfcx vs multiprecision oracle over the contract domain") {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> neg(-6.0, 0.0);
    for (int i = 0; i < 200; ++i) {
        const double z = neg(eng);
        CHECK(erfcx(z) == doctest::Approx(fdot_test::erfcx_mp(z)).epsilon(1e-12));
    }
    // log-spaced positive sweep up to 1e8, crossing the asymptotic switch
    for (double lg = -3.0; lg <= 8.0; lg += 0.05) {
        const double z = std::pow(10.0, lg);
        CHECK(erfcx(z) == doctest::Approx(fdot_test::erfcx_mp(z)).epsilon(1e-12));
    }
}

TEST_CASE("erf_diff matches naive difference away from the tails") {
    CHECK(fdot::erf_diff(-0.3, 1.2) == doctest::Approx(std::erf(1.2) - std::erf(-0.3)).epsilon(1e-15));
    // far same-sign tails keep relative accuracy instead of cancelling
    const double a = 7.0, b = 7.5;
    const double expect = std::erfc(a) - std::erfc(b);
    CHECK(fdot::erf_diff(a, b) == doctest::Approx(expect).epsilon(1e-13));
    CHECK(fdot::erf_diff(-b, -a) == doctest::Approx(expect).epsilon(1e-13));
    CHECK(fdot::erf_diff(a, b) > 0.0);
}
