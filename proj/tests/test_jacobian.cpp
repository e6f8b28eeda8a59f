#include <doctest.h>

#include "oracles.hpp"
#include "vpstab/jacobian.hpp"

using namespace vpstab;

TEST_CASE("phase area: Kepler closed form and brute-force quadrature") {
    oracle::Kepler kep{1.0};
    PointMassPotential pot(1.0);
    JacobianEvaluator jac(pot);

    double a = jac.value(-0.125, 1.0);
    CHECK(a == doctest::Approx(kep.aphi(-0.125, 1.0)).epsilon(1e-10));
    CHECK(a == doctest::Approx(248.0502134423985).epsilon(1e-8));

    // independent brute-force midpoint quadrature (slow path, once)
    double bf = oracle::aphiBruteForce([&](double r) { return pot.phi(r); }, -0.125, 1.0,
                                       kep.rPeri(-0.125, 1.0), kep.rApo(-0.125, 1.0), 1000000);
    CHECK(a == doctest::Approx(bf).epsilon(1e-6));

    double a2 = jac.value(-0.02, 1.0);
    CHECK(a2 == doctest::Approx(kep.aphi(-0.02, 1.0)).epsilon(1e-10));
    CHECK(a2 == doctest::Approx(32.0 * oracle::kPi * oracle::kPi * oracle::kPi).epsilon(1e-9));
    // upper bound 16 pi^2 M |e|^{-1/2}
    CHECK(a2 <= 16.0 * oracle::kPi * oracle::kPi / std::sqrt(0.02));
}

TEST_CASE("phase area limits: zero at the floor, +inf sentinel for e >= 0") {
    PointMassPotential pot(1.0);
    JacobianEvaluator jac(pot);
    double eMin = jac.floor(1.0).eMin;
    CHECK(eMin == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(jac.value(eMin, 1.0) == 0.0);
    CHECK(jac.value(eMin - 0.1, 1.0) == 0.0);
    CHECK(jac.value(0.0, 1.0) == kInf);
    CHECK(jac.value(0.5, 1.0) == kInf);
    CHECK(std::isinf(jac.value(0.0, 1.0)));
    // a -> 0 as e -> floor from above
    CHECK(jac.value(eMin * (1.0 - 1e-8), 1.0) < 1e-2);
}

TEST_CASE("derivative in e: Kepler closed form and finite differences") {
    oracle::Kepler kep{1.0};
    PointMassPotential pot(1.0);
    JacobianEvaluator jac(pot);

    CHECK(jac.derivE(-0.125, 1.0) == doctest::Approx(kep.daphi(-0.125, 1.0)).epsilon(1e-9));
    CHECK(jac.derivE(-0.125, 1.0) ==
          doctest::Approx(64.0 * oracle::kPi * oracle::kPi * oracle::kPi).epsilon(1e-8));

    double h = 1e-6;
    double fd = oracle::centralDiff([&](double e) { return jac.value(e, 1.0); }, -0.125, h);
    CHECK(jac.derivE(-0.125, 1.0) == doctest::Approx(fd).epsilon(1e-5));

    CHECK_THROWS_AS(jac.derivE(-0.6, 1.0), std::domain_error);
    CHECK_THROWS_AS(jac.derivE(0.1, 1.0), std::domain_error);

    // monotone approach to the circular-orbit limit near the floor
    double eMin = jac.floor(1.0).eMin;
    double prev = kInf;
    for (double frac : {1e-2, 1e-4, 1e-6}) {
        double e = eMin * (1.0 - frac);
        double v = jac.derivE(e, 1.0);
        CHECK(std::isfinite(v));
        CHECK(v <= prev * (1.0 + 1e-6));
        prev = v;
    }
    // Kepler limit value at the floor
    CHECK(prev == doctest::Approx(kep.daphi(eMin, 1.0)).epsilon(1e-4));
}

TEST_CASE("inverse: Kepler closed form and round trips") {
    oracle::Kepler kep{1.0};
    PointMassPotential pot(1.0);
    JacobianEvaluator jac(pot);

    double s = 8.0 * oracle::kPi * oracle::kPi * oracle::kPi;
    CHECK(jac.inverse(s, 1.0) == doctest::Approx(-0.125).epsilon(1e-10));

    std::uint64_t state = 11;
    auto urand = [&]() {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        return double(state >> 11) * 0x1.0p-53;
    };
    for (int i = 0; i < 100; ++i) {
        double ell = 0.2 + 2.0 * urand();
        double eMin = kep.eFloor(ell);
        double e = eMin * (0.02 + 0.96 * urand());
        double a = jac.value(e, ell);
        double back = jac.inverse(a, ell);
        CHECK(back == doctest::Approx(e).epsilon(1e-9));
    }
    CHECK_THROWS_AS(jac.inverse(-1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(jac.inverse(0.0, 1.0), std::domain_error);

    // s -> 0+ drives e to the floor
    CHECK(jac.inverse(1e-8, 1.0) == doctest::Approx(jac.floor(1.0).eMin).epsilon(1e-6));
}

TEST_CASE("monotonicity of a_phi in e at fixed ell") {
    PointMassPotential pot(2.0);
    JacobianEvaluator jac(pot);
    for (double ell : {0.3, 1.0, 2.5}) {
        double eMin = jac.floor(ell).eMin;
        double prev = 0.0;
        for (int k = 1; k <= 30; ++k) {
            double e = eMin * (1.0 - double(k) / 31.0);
            double a = jac.value(e, ell);
            CHECK(a > prev);
            prev = a;
        }
    }
}

TEST_CASE("lower bound estiminf with the potential floor constant") {
    // a(e, ell) >= (4 pi^2 / 3) |e|^{-1/2} m_phi when |e| < m^2 / (4 (2m + ell))
    PointMassPotential pot(1.0);
    JacobianEvaluator jac(pot);
    double m = potentialFloor(static_cast<const BasePotential&>(pot));
    for (double ell : {0.2, 0.7, 1.9}) {
        double cap = m * m / (4.0 * (2.0 * m + ell));
        for (double frac : {0.9, 0.5, 0.1}) {
            double e = -cap * frac;
            double a = jac.value(e, ell);
            CHECK(a >= 4.0 * oracle::kPi * oracle::kPi / 3.0 * m / std::sqrt(-e));
        }
    }
}
