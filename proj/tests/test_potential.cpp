#include <doctest.h>

#include "oracles.hpp"
#include "vpstab/potential.hpp"

using namespace vpstab;

TEST_CASE("solvePoisson: zero source gives zero potential") {
    RadialGrid grid = RadialGrid::uniform(10.0, 64);
    std::vector<double> rho(grid.size(), 0.0);
    RadialPotential pot = solvePoisson(grid, rho);
    CHECK(pot.mass() == 0.0);
    CHECK(pot.phi(1.0) == 0.0);
    CHECK(pot.isZero());
}

TEST_CASE("solvePoisson: uniform ball matches the closed form") {
    // rho = rho0 on r < R; phi = -2 pi rho0 (R^2 - r^2/3) inside, -M/r outside
    const double rho0 = 0.3, R = 2.0;
    RadialGrid grid = RadialGrid::uniform(8.0, 1601); // node exactly at r = R
    std::vector<double> rho(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        // midpoint value at the jump node keeps the trapezoid second order
        if (grid.r[i] < R) rho[i] = rho0;
        else if (grid.r[i] == R) rho[i] = 0.5 * rho0;
        else rho[i] = 0.0;
    }
    RadialPotential pot = solvePoisson(grid, rho);

    const double M = 4.0 * kPi / 3.0 * rho0 * R * R * R;
    CHECK(pot.mass() == doctest::Approx(M).epsilon(1e-5));
    for (double r : {0.0, 0.5, 1.0, 1.9}) {
        double exact = -2.0 * kPi * rho0 * (R * R - r * r / 3.0);
        CHECK(pot.phi(r) == doctest::Approx(exact).epsilon(1e-5));
    }
    for (double r : {2.5, 4.0, 7.9}) {
        CHECK(pot.phi(r) == doctest::Approx(-M / r).epsilon(1e-5));
    }

    // independent trapezoid oracle for the two integrals of the solver
    std::vector<double> s2rho(grid.size()), srho(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        s2rho[i] = grid.r[i] * grid.r[i] * rho[i];
        srho[i] = grid.r[i] * rho[i];
    }
    auto mOr = oracle::cumulativeTrapezoid(grid.r, s2rho);
    auto sOr = oracle::cumulativeTrapezoid(grid.r, srho);
    for (std::size_t i = 1; i < grid.size(); i += 197) {
        double mExp = 4.0 * kPi * mOr[i];
        double phiExp = -mExp / grid.r[i] - 4.0 * kPi * (sOr.back() - sOr[i]);
        CHECK(pot.nodeValues()[i] == doctest::Approx(phiExp).epsilon(1e-12));
        CHECK(pot.nodeDerivs()[i] ==
              doctest::Approx(mExp / (grid.r[i] * grid.r[i])).epsilon(1e-12));
    }
}

TEST_CASE("solvePoisson rejects negative density and flags truncation") {
    RadialGrid grid = RadialGrid::uniform(4.0, 32);
    std::vector<double> rho(grid.size(), 1.0);
    rho[5] = -1e-3;
    CHECK_THROWS_AS(solvePoisson(grid, rho), std::domain_error);

    std::vector<double> undecayed(grid.size(), 0.1);
    RadialPotential pot = solvePoisson(grid, undecayed);
    CHECK(pot.truncationWarning());
}

TEST_CASE("potential invariants: monotone, nonpositive, far field") {
    const double rho0 = 1.0, R = 1.0;
    RadialGrid grid = RadialGrid::uniform(6.0, 241);
    std::vector<double> rho(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) rho[i] = grid.r[i] < R ? rho0 : 0.0;
    RadialPotential pot = solvePoisson(grid, rho);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(pot.nodeValues()[i] <= 0.0);
        CHECK(pot.nodeDerivs()[i] >= 0.0);
        if (i) CHECK(pot.nodeValues()[i] >= pot.nodeValues()[i - 1]);
        // Eq.-style floor: phi(r) >= max(phi(0), -M/r)
        if (grid.r[i] > 0.0)
            CHECK(pot.nodeValues()[i] >=
                  std::max(pot.phiAtZero(), -pot.mass() / grid.r[i]) - 1e-12);
    }
    double rEdge = grid.rMax();
    CHECK(std::fabs(rEdge * pot.phi(rEdge) + pot.mass()) <= 1e-6 * pot.mass());
}

TEST_CASE("effective potential: Kepler value and limits") {
    PointMassPotential kep(1.0);
    CHECK(kep.psi(1.0, 1.0) == doctest::Approx(-0.5));
    CHECK(kep.psi(1e9, 1.0) == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(kep.psi(0.0, 1.0) == kInf);

    // phi = 0, ell = 2, r = 2 -> centrifugal term only
    RadialGrid grid = RadialGrid::uniform(10.0, 32);
    RadialPotential zero = solvePoisson(grid, std::vector<double>(grid.size(), 0.0));
    CHECK(zero.psi(2.0, 2.0) == doctest::Approx(0.25));
}

TEST_CASE("orbitBounds: Kepler turning points against the quadratic oracle") {
    oracle::Kepler kep{1.0};
    PointMassPotential pot(1.0);

    EffectiveOrbit orb = orbitBounds(pot, -0.125, 1.0);
    CHECK(orb.eMin == doctest::Approx(kep.eFloor(1.0)).epsilon(1e-10));
    CHECK(orb.r0 == doctest::Approx(kep.r0(1.0)).epsilon(1e-10));
    CHECK(orb.rPeri == doctest::Approx(kep.rPeri(-0.125, 1.0)).epsilon(1e-10));
    CHECK(orb.rApo == doctest::Approx(kep.rApo(-0.125, 1.0)).epsilon(1e-10));
    CHECK(orb.rPeri == doctest::Approx(0.5358983848622454).epsilon(1e-9));
    CHECK(orb.rApo == doctest::Approx(7.464101615137754).epsilon(1e-9));

    // degenerate circular orbit
    EffectiveOrbit circ = orbitBounds(pot, -0.5, 1.0);
    CHECK(circ.empty);
    CHECK(circ.rPeri == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(circ.rApo == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(orbitBounds(pot, 0.1, 1.0), std::domain_error);
}

TEST_CASE("orbit bound inequalities hold on random Kepler orbits") {
    oracle::Kepler kep{1.3};
    PointMassPotential pot(1.3);
    std::uint64_t state = 42;
    auto urand = [&]() {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        return double(state >> 11) * 0x1.0p-53;
    };
    for (int i = 0; i < 200; ++i) {
        double ell = 0.1 + 3.0 * urand();
        double eMin = kep.eFloor(ell);
        double e = eMin + (0.0 - eMin) * (0.02 + 0.96 * urand());
        EffectiveOrbit orb = orbitBounds(pot, e, ell);
        double M = pot.mass();
        CHECK(orb.rPeri >= ell / (2.0 * M) - 1e-12);
        CHECK(orb.rPeri < orb.rApo);
        CHECK(orb.rApo <= M / std::fabs(e) + 1e-12);
        // max(phi(0), -M^2/(2 ell)) <= eMin < 0 (phi(0) = -inf for Kepler)
        CHECK(orb.eMin >= -M * M / (2.0 * ell) - 1e-12);
        CHECK(orb.eMin < 0.0);
    }
}

TEST_CASE("ell -> floor energy is continuous and monotone on a solved ball") {
    const double rho0 = 1.0, R = 1.0;
    RadialGrid grid = RadialGrid::uniform(6.0, 241);
    std::vector<double> rho(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) rho[i] = grid.r[i] < R ? rho0 : 0.0;
    RadialPotential pot = solvePoisson(grid, rho);
    double prev = -kInf;
    double prevEll = 0.0;
    for (int k = 1; k <= 60; ++k) {
        double ell = 0.05 * k;
        double eMin = orbitEnergyFloor(pot, ell).eMin;
        CHECK(eMin >= std::max(pot.phiAtZero(), -sq(pot.mass()) / (2.0 * ell)) - 1e-10);
        CHECK(eMin < 0.0);
        if (k > 1) {
            CHECK(eMin >= prev);                       // nondecreasing in ell
            CHECK(eMin - prev <= 2.0 * (ell - prevEll) *
                                     (0.5 / sq(orbitEnergyFloor(pot, prevEll).r0)) +
                                     1e-6); // O(d ell) increments
        }
        prev = eMin;
        prevEll = ell;
    }
}

TEST_CASE("potentialFloor: Kepler tail limit and refinement stability") {
    PointMassPotential kep(1.0);
    CHECK(potentialFloor(static_cast<const BasePotential&>(kep)) == doctest::Approx(1.0).epsilon(1e-6));

    const double rho0 = 0.3, R = 2.0;
    RadialGrid grid = RadialGrid::uniform(8.0, 801);
    std::vector<double> rho(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) rho[i] = grid.r[i] < R ? rho0 : 0.0;
    RadialPotential pot = solvePoisson(grid, rho);
    double floorCoarse = potentialFloor(pot);
    // dense-scan oracle
    double best = pot.mass();
    for (int i = 0; i <= 2000000; ++i) {
        double r = 8.0 * i / 2000000.0;
        best = std::min(best, (r + 1.0) * std::fabs(pot.phi(r)));
    }
    CHECK(floorCoarse == doctest::Approx(best).epsilon(1e-10));
    CHECK(floorCoarse > 0.0);

    RadialPotential zero = solvePoisson(grid, std::vector<double>(grid.size(), 0.0));
    CHECK_THROWS_AS(potentialFloor(zero), std::domain_error);
}

TEST_CASE("concavityMinorant: boundary zeros, Kepler identity, sampling bound") {
    PointMassPotential pot(1.0);
    EffectiveOrbit orb = orbitBounds(pot, -0.125, 1.0);
    CHECK(concavityMinorant(orb, orb.rPeri) == doctest::Approx(0.0));
    CHECK(concavityMinorant(orb, orb.rApo) == doctest::Approx(0.0));

    // for the pure point mass rho = 0, so the bound is an identity
    for (double t : {0.1, 0.35, 0.5, 0.75, 0.9}) {
        double r = orb.rPeri + t * (orb.rApo - orb.rPeri);
        double lhs = concavityMinorant(orb, r);
        double rhs = -0.125 - pot.psi(r, 1.0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
    double rMid = 1.0;
    CHECK(concavityMinorant(orb, rMid) == doctest::Approx(0.375).epsilon(1e-4));
    CHECK_THROWS_AS(concavityMinorant(orb, orb.rApo + 0.1), std::domain_error);

    // solved potential: minorant must stay below e - psi at interior samples
    const double rho0 = 1.0, R = 1.0;
    RadialGrid grid = RadialGrid::uniform(6.0, 241);
    std::vector<double> rho(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) rho[i] = grid.r[i] < R ? rho0 : 0.0;
    RadialPotential ball = solvePoisson(grid, rho);
    std::uint64_t state = 7;
    auto urand = [&]() {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        return double(state >> 11) * 0x1.0p-53;
    };
    for (int i = 0; i < 100; ++i) {
        double ell = 0.05 + 1.5 * urand();
        double eMin = orbitEnergyFloor(ball, ell).eMin;
        double e = eMin + (0.0 - eMin) * (0.05 + 0.9 * urand());
        EffectiveOrbit o = orbitBounds(ball, e, ell);
        for (int k = 0; k < 10; ++k) {
            double r = o.rPeri + (o.rApo - o.rPeri) * (0.05 + 0.9 * urand());
            CHECK(concavityMinorant(o, r) <= e - ball.psi(r, ell) + 1e-10);
        }
    }
}
