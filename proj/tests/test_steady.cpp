#include <doctest.h>

#include "oracles.hpp"
#include "vpstab/steady.hpp"

using namespace vpstab;

TEST_CASE("ansatz values and derivatives at pinned points") {
    SteadyStateModel king = SteadyStateModel::king(-1.0);
    CHECK(ansatzEval(king, -2.0, 0.5) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
    CHECK(ansatzDerivE(king, -2.0, 0.5) == doctest::Approx(-std::exp(1.0)).epsilon(1e-12));
    CHECK(ansatzEval(king, -1.0, 0.5) == 0.0);
    CHECK(ansatzEval(king, -0.5, 0.5) == 0.0);

    SteadyStateModel poly = SteadyStateModel::polytrope(-1.0, 1.0, 0.0);
    CHECK(ansatzEval(poly, -1.5, 2.0) == doctest::Approx(0.5));
    CHECK(ansatzDerivE(poly, -1.5, 2.0) == doctest::Approx(-1.0));

    // q < 1 boundary singularity needs an interior margin
    SteadyStateModel soft = SteadyStateModel::polytrope(-1.0, 0.5, 0.0);
    CHECK_THROWS_AS(ansatzDerivE(soft, -1.01, 0.0), std::domain_error);
    CHECK(ansatzDerivE(soft, -1.5, 0.0, 0.1) < 0.0);

    SteadyStateModel mk = SteadyStateModel::michieKing(-1.0, 2.0);
    CHECK(ansatzEval(mk, -2.0, 1.0) ==
          doctest::Approx(std::exp(-0.125) * (std::exp(1.0) - 1.0)).epsilon(1e-12));

    // Osipkov-Merritt: support shrinks with ell, derivative negative inside
    SteadyStateModel om = SteadyStateModel::osipkovMerritt(-1.0, 1.0, 2.0);
    CHECK(ansatzEval(om, -1.2, 0.1) == doctest::Approx(sq(0.2 - 0.05)).epsilon(1e-12));
    CHECK(ansatzEval(om, -1.2, 1.0) == 0.0);
    CHECK(ansatzDerivE(om, -1.2, 0.1) < 0.0);

    CHECK_THROWS_AS(SteadyStateModel::polytrope(-1.0, 4.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(SteadyStateModel::king(0.5), std::domain_error);
}

TEST_CASE("derivative of F is negative on sampled interior support points") {
    for (auto model : {SteadyStateModel::king(-0.5), SteadyStateModel::michieKing(-1.0, 1.5),
                       SteadyStateModel::polytrope(-1.0, 1.5, 0.5),
                       SteadyStateModel::osipkovMerritt(-1.0, 2.0, 2.0)}) {
        std::uint64_t state = 3;
        auto urand = [&]() {
            state = state * 6364136223846793005ull + 1442695040888963407ull;
            return double(state >> 11) * 0x1.0p-53;
        };
        int inside = 0;
        for (int i = 0; i < 1000; ++i) {
            double e = -1.0 - 2.0 * urand();
            double ell = 2.0 * urand();
            if (ansatzEval(model, e, ell) > 1e-14) {
                ++inside;
                CHECK(ansatzDerivE(model, e, ell) < 0.0);
            }
        }
        CHECK(inside > 100);
    }
}

TEST_CASE("density from potential: zero ansatz and polytrope closed form") {
    PlummerPotential pot(2.0, 1.0);

    // F = 0 gives rho = 0 (double-power with zero coefficient)
    SteadyStateModel zero = SteadyStateModel::doublePower(-1.0, {{0.0, 1.0, 0.0}});
    CHECK(densityFromPotential(zero, pot, 0.7) == 0.0);

    // isotropic polytrope: rho = c_q (e0 - phi)_+^{q + 3/2},
    // c_q = 4 sqrt2 pi B(q + 1, 3/2)
    for (double q : {1.0, 2.0}) {
        SteadyStateModel poly = SteadyStateModel::polytrope(-1.0, q, 0.0);
        double cq = 4.0 * std::sqrt(2.0) * kPi *
                    std::exp(std::lgamma(q + 1.0) + std::lgamma(1.5) - std::lgamma(q + 2.5));
        for (double r : {0.0, 0.3, 0.8, 1.4}) {
            double w = -1.0 - pot.phi(r);
            double expect = w > 0.0 ? cq * std::pow(w, q + 1.5) : 0.0;
            double got = densityFromPotential(poly, pot, r);
            if (expect > 0.0) CHECK(got == doctest::Approx(expect).epsilon(1e-7));
        }
    }
}

namespace {

// direct 3-D velocity quadrature oracle: rho = 2 pi \int\int F w^2 sin(theta)
double densityVelocityOracle(const SteadyStateModel& m, const BasePotential& pot, double r,
                             int nw = 400, int nth = 200) {
    double phiR = pot.phi(r);
    double wMax = std::sqrt(std::max(2.0 * (m.e0 - phiR), 0.0));
    if (wMax <= 0.0) return 0.0;
    const GaussRule& gw = gaussLegendre(nw);
    const GaussRule& gt = gaussLegendre(nth);
    double sum = 0.0;
    for (int i = 0; i < nw; ++i) {
        double w = 0.5 * wMax * (1.0 + gw.x[i]);
        double jw = 0.5 * wMax * gw.w[i];
        double e = 0.5 * w * w + phiR;
        for (int j = 0; j < nth; ++j) {
            double th = 0.5 * oracle::kPi * (1.0 + gt.x[j]);
            double jt = 0.5 * oracle::kPi * gt.w[j];
            double st = std::sin(th);
            double ell = r * r * w * w * st * st;
            sum += jw * jt * 2.0 * oracle::kPi * w * w * st * ansatzEval(m, e, ell);
        }
    }
    return sum;
}

} // namespace

TEST_CASE("density: (e, ell) quadrature agrees with 3-D velocity quadrature") {
    PlummerPotential pot(3.0, 1.2);
    auto models = {SteadyStateModel::king(-0.5), SteadyStateModel::michieKing(-1.0, 1.5),
                   SteadyStateModel::polytrope(-0.8, 1.5, 1.0),
                   SteadyStateModel::osipkovMerritt(-1.0, 1.5, 2.0)};
    for (const auto& m : models) {
        for (double r : {0.2, 0.5, 0.9, 1.3, 1.8, 2.2, 0.05, 0.7, 1.05, 1.55}) {
            double a = densityFromPotential(m, pot, r);
            double b = densityVelocityOracle(m, pot, r);
            if (b > 1e-12)
                CHECK(a == doctest::Approx(b).epsilon(1e-6));
            else
                CHECK(std::fabs(a - b) < 1e-12);
        }
    }
}

TEST_CASE("solveSteadyState: King model satisfies the virial theorem") {
    RadialGrid grid = fitGrid(SteadyStateModel::king(-0.5), 301);
    SteadyStateSolution sol = solveSteadyState(SteadyStateModel::king(-0.5), grid);
    CHECK(sol.mass > 0.1);
    CHECK(sol.residual <= 1e-10);
    CHECK(sol.virialRatio <= 1e-3);
    CHECK(sol.supportRadius > 0.05);
    CHECK(sol.supportRadius < grid.rMax());
    CHECK(sol.hamiltonian < 0.0);

    // self-consistency: re-solving Poisson from rho_Q returns phi_Q
    RadialPotential re = solvePoisson(grid, sol.rhoQ);
    double supDiff = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        supDiff = std::max(supDiff,
                           std::fabs(re.nodeValues()[i] - sol.phiQ.nodeValues()[i]));
    CHECK(supDiff <= 1e-8);
}

TEST_CASE("solveSteadyState: polytrope density matches the 1-D reduction") {
    RadialGrid grid = fitGrid(SteadyStateModel::polytrope(-1.0, 1.0, 0.0), 301);
    SteadyStateSolution sol = solveSteadyState(SteadyStateModel::polytrope(-1.0, 1.0, 0.0), grid);
    CHECK(sol.virialRatio <= 1e-3);
    double cq = 16.0 * std::sqrt(2.0) * kPi / 15.0; // 4 sqrt2 pi B(2, 3/2)
    for (std::size_t i = 0; i < grid.size(); i += 25) {
        double w = -1.0 - sol.phiQ.nodeValues()[i];
        double expect = w > 0.0 ? cq * std::pow(w, 2.5) : 0.0;
        if (expect > 1e-10)
            CHECK(sol.rhoQ[i] == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("solveSteadyState: second-order grid convergence of phi_Q") {
    RadialGrid base = fitGrid(SteadyStateModel::king(-0.5), 76);
    auto solveOn = [&](std::size_t n) {
        RadialGrid grid = RadialGrid::uniform(base.rMax(), n);
        return solveSteadyState(SteadyStateModel::king(-0.5), grid);
    };
    SteadyStateSolution a = solveOn(76), b = solveOn(151), c = solveOn(301);
    auto supDiff = [&](const SteadyStateSolution& s1, const SteadyStateSolution& s2) {
        double d = 0.0;
        for (double r = 0.0; r <= base.rMax() * 0.95; r += base.rMax() / 240.0)
            d = std::max(d, std::fabs(s1.phiQ.phi(r) - s2.phiQ.phi(r)));
        return d;
    };
    double d1 = supDiff(a, b), d2 = supDiff(b, c);
    CHECK(d2 < d1);
    CHECK(d1 / d2 > 2.5); // ~4 for a second-order scheme
    CHECK(d1 / d2 < 8.0);
}

TEST_CASE("steady solution: support bound in ell and profile identity") {
    RadialGrid grid = fitGrid(SteadyStateModel::king(-0.5), 241);
    SteadyStateSolution sol = solveSteadyState(SteadyStateModel::king(-0.5), grid);
    CHECK(sol.ellMax > 0.0);
    // floor energy crosses e0 at ellMax
    CHECK(orbitEnergyFloor(sol.phiQ, sol.ellMax * 0.99).eMin < sol.model.e0);
    CHECK(orbitEnergyFloor(sol.phiQ, sol.ellMax * 1.01).eMin > sol.model.e0);

    // Q*(a(e, ell), ell) = F(e, ell) on the support
    const JacobianEvaluator& jac = sol.jacobian();
    for (double frac : {0.05, 0.3, 0.7}) {
        double ell = frac * sol.ellMax;
        double eMin = jac.floor(ell).eMin;
        for (double t : {0.15, 0.5, 0.85}) {
            double e = eMin + (sol.model.e0 - eMin) * t;
            double s = jac.value(e, ell);
            CHECK(sol.profile(s, ell) == doctest::Approx(sol.F(e, ell)).epsilon(1e-7));
        }
    }
}

TEST_CASE("solver failure paths: vacuum collapse reported") {
    RadialGrid grid = RadialGrid::uniform(12.0, 64);
    SolveSettings s;
    s.initialDepthFactor = 0.5; // well shallower than the cutoff: no support
    CHECK_THROWS_AS(solveSteadyState(SteadyStateModel::king(-0.5), grid, s), ConvergenceError);
}
