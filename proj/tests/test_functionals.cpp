#include <doctest.h>

#include "oracles.hpp"
#include "vpstab/functionals.hpp"
#include "vpstab/quadrature.hpp"

using namespace vpstab;

namespace {

SteadyStateSolution& king() {
    static SteadyStateSolution sol = [] {
        SteadyStateModel m = SteadyStateModel::king(-0.5);
        return solveSteadyState(m, fitGrid(m, 241));
    }();
    return sol;
}

PhaseDF synthesizeQ(int nr, int nu, int nEll) {
    const SteadyStateSolution& sol = king();
    PhaseGridSpec spec;
    spec.nr = nr;
    spec.nu = nu;
    spec.nEll = nEll;
    spec.rMax = sol.supportRadius * 1.02;
    spec.uMax = std::sqrt(2.0 * (sol.model.e0 - sol.phiQ.phiAtZero())) * 1.02;
    spec.ellMax = sol.ellMax;
    PhaseDF df = makePhaseGrid(spec);
    fillPhaseDF(df, [&](double r, double u, double ell) { return sol.Q(r, u, ell); });
    return df;
}

PhaseDF randomizedState(const PhaseDF& base, std::uint64_t seed, double amp) {
    PhaseDF g = base;
    Rng rng(seed);
    for (auto& sl : g.slices)
        for (auto& v : sl.f) v *= 1.0 + amp * (2.0 * rng.uniform() - 1.0);
    return g;
}

} // namespace

TEST_CASE("hamiltonian report: empty state and scaling homogeneity") {
    PhaseGridSpec spec;
    spec.nr = 16;
    spec.nu = 16;
    spec.nEll = 4;
    PhaseDF zero = makePhaseGrid(spec);
    EnergyReport rep = hamiltonian(zero);
    CHECK(rep.mass == 0.0);
    CHECK(rep.kinetic == 0.0);
    CHECK(rep.fieldEnergy == 0.0);
    CHECK(rep.hamiltonian == 0.0);

    PhaseDF q = synthesizeQ(64, 64, 10);
    EnergyReport r1 = hamiltonian(q);
    CHECK(r1.hamiltonian == r1.kinetic - r1.fieldEnergy); // exact as stored
    for (double mu : {0.5, 2.0}) {
        PhaseDF scaled = q;
        for (auto& sl : scaled.slices)
            for (auto& v : sl.f) v *= mu;
        EnergyReport r2 = hamiltonian(scaled);
        CHECK(r2.kinetic == doctest::Approx(mu * r1.kinetic).epsilon(1e-12));
        CHECK(r2.fieldEnergy == doctest::Approx(mu * mu * r1.fieldEnergy).epsilon(1e-12));
    }
}

TEST_CASE("hamiltonian of Q: dual-route oracle") {
    const SteadyStateSolution& sol = king();
    PhaseDF q = synthesizeQ(192, 192, 24);
    EnergyReport rep = hamiltonian(q);
    // independent high-resolution radial quadrature of the same functionals
    CHECK(rep.kinetic == doctest::Approx(sol.kineticEnergy).epsilon(1e-5));
    CHECK(rep.fieldEnergy == doctest::Approx(-sol.potentialEnergy).epsilon(1e-4));
    CHECK(rep.hamiltonian == doctest::Approx(sol.hamiltonian).epsilon(2e-4));
}

TEST_CASE("casimir functionals") {
    PhaseDF q = synthesizeQ(64, 64, 10);
    double mass = casimir(q, [](double s, double) { return s; });
    CHECK(mass == doctest::Approx(q.mass()).epsilon(1e-12));
    double l2 = casimir(q, [](double s, double) { return s * s; });
    CHECK(l2 == doctest::Approx(sq(q.lpNorm(2.0))).epsilon(1e-12));
    CHECK_THROWS_AS(casimir(q, [](double, double) { return 1.0; }), std::domain_error);

    // equimeasurable pair carries equal Casimirs, including ell-weighted ones
    const SteadyStateSolution& sol = king();
    PhaseDF hat = rearrangeWithPotential(schwarzProfile(q), sol.phiQ, q);
    auto Gl = [](double s, double ell) { return s * ell; };
    CHECK(casimir(hat, Gl) == doctest::Approx(casimir(q, Gl)).epsilon(0.02));
    auto G2 = [](double s, double) { return s * s; };
    CHECK(casimir(hat, G2) == doctest::Approx(casimir(q, G2)).epsilon(0.02));
}

TEST_CASE("energy identity is exact algebra for the discrete functionals") {
    PhaseDF q = synthesizeQ(64, 64, 10);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        PhaseDF f = randomizedState(q, seed, 0.4);
        PhaseDF g = randomizedState(q, seed + 100, 0.7);
        CHECK(identityResidual(f, g) <= 1e-9);
        CHECK(identityResidual(g, f) <= 1e-9);
    }
    CHECK(identityResidual(q, q) <= 1e-12);
}

TEST_CASE("monotonicity chain: fixed point, perturbations, strict swap") {
    const SteadyStateSolution& sol = king();
    PhaseDF q = synthesizeQ(96, 96, 12);

    MonotonicityReport atQ = monotonicityReport(q);
    // gap1 + gap2 = hF - hFhat as stored
    CHECK(atQ.gap1 + atQ.gap2 == doctest::Approx(atQ.hF - atQ.hFhat).epsilon(1e-12));
    // gap1 equals the transport term to shell-machinery exactness
    CHECK(atQ.gap1 ==
          doctest::Approx(atQ.transportTerm).epsilon(1e-9).scale(std::fabs(atQ.hF)));
    CHECK(atQ.equality); // f = Q is the rearrangement fixed point
    CHECK(atQ.gap1 >= -atQ.tol);
    CHECK(atQ.gap2 >= -atQ.tol);

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        PhaseDF f = randomizedState(q, seed, 0.1);
        MonotonicityReport rep = monotonicityReport(f);
        CHECK(rep.gap1 >= -rep.tol);
        CHECK(rep.gap2 >= -rep.tol);
        CHECK(rep.gap1 ==
              doctest::Approx(rep.transportTerm).epsilon(1e-9).scale(std::fabs(rep.hF)));
    }

    // two-shell energy swap: strict gap
    PhaseDF swapped = q;
    for (auto& sl : swapped.slices) {
        double eMin = orbitEnergyFloor(sol.phiQ, sl.ell).eMin;
        double e0 = sol.model.e0;
        if (eMin >= e0) continue;
        double e1 = eMin + 0.25 * (e0 - eMin), e2 = eMin + 0.75 * (e0 - eMin);
        double band = 0.12 * (e0 - eMin);
        for (int ir = 0; ir < sl.nr(); ++ir)
            for (int iu = 0; iu < sl.nu(); ++iu) {
                std::size_t k = sl.index(ir, iu);
                if (sl.measure[k] <= 0.0) continue;
                double e = 0.5 * sq(sl.uCenter(iu)) + sol.phiQ.phi(sl.rCenter(ir));
                if (std::fabs(e - e1) < band) sl.f[k] = sol.F(e2, sl.ell);
                else if (std::fabs(e - e2) < band) sl.f[k] = sol.F(e1, sl.ell);
            }
    }
    MonotonicityReport swapRep = monotonicityReport(swapped);
    CHECK(swapRep.gap1 > 5.0 * swapRep.tol);
    CHECK_FALSE(swapRep.equality);
}

TEST_CASE("reduced functional: both smooth forms agree and J(phiQ) = H(Q)") {
    const SteadyStateSolution& sol = king();
    SmoothReducedFunctional J(sol);

    double jS = J.evalSIntegral(sol.phiQ);
    double jA = J.evalAssembled(sol.phiQ);
    CHECK(jS == doctest::Approx(jA).epsilon(1e-5));
    CHECK(jS == doctest::Approx(sol.hamiltonian).epsilon(1e-4));

    // scaled potential: J grows away from the minimizer
    {
        RadialGrid grid = sol.phiQ.grid();
        std::vector<double> v = sol.phiQ.nodeValues(), d = sol.phiQ.nodeDerivs();
        for (auto& x : v) x *= 1.01;
        for (auto& x : d) x *= 1.01;
        RadialPotential scaled(grid, v, d, sol.phiQ.mass() * 1.01);
        CHECK(J.evalSIntegral(scaled) > jS);
    }
    {
        RadialGrid grid = sol.phiQ.grid();
        std::vector<double> v = sol.phiQ.nodeValues(), d = sol.phiQ.nodeDerivs();
        for (auto& x : v) x *= 0.99;
        for (auto& x : d) x *= 0.99;
        RadialPotential scaled(grid, v, d, sol.phiQ.mass() * 0.99);
        CHECK(J.evalSIntegral(scaled) > jS);
    }

    // both forms track each other on perturbed potentials whose far field
    // is exactly Keplerian beyond the grid
    const RadialGrid& grid = sol.phiQ.grid();
    std::vector<double> bump(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double x = grid.r[i] / sol.supportRadius;
        bump[i] = std::exp(-8.0 * sq(x - 0.5));
    }
    RadialPotential bumpPot = solvePoisson(grid, bump);
    for (double lam : {0.01, 0.03}) {
        BlendedPotential blend(sol.phiQ, bumpPot, lam);
        double a = J.evalSIntegral(blend);
        double b = J.evalAssembled(blend);
        CHECK(a == doctest::Approx(b).epsilon(1e-5));
        CHECK(a > jS); // minimizer
    }
}

TEST_CASE("interpolation inequality with a frozen constant") {
    // |grad phi_f|^2 <= C ||v|^2 f|^{1/2} |f|_L1^{7/6} |f|_Linf^{1/3}
    // in the (1/4 pi) field normalization; C fitted once on the corpus
    const double kFittedC = 12.0;
    PhaseDF q = synthesizeQ(64, 64, 10);
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        PhaseDF f = randomizedState(q, seed, 0.8);
        ShellDistribution sh = ShellDistribution::fromCells(f);
        double lhs = 2.0 * sh.fieldEnergy();
        double rhs = kFittedC * std::sqrt(2.0 * f.kinetic()) * std::pow(f.mass(), 7.0 / 6.0) *
                     std::pow(f.linf(), 1.0 / 3.0);
        CHECK(lhs <= rhs);
    }
}

TEST_CASE("kinetic bound of the rearranged state with a frozen constant") {
    // ||v|^2 f^{*phi}|_L1 <= C |grad phi|^{4/3} |f|_L1^{7/9} |f|_Linf^{2/9}
    const double kFittedC = 9.0;
    const SteadyStateSolution& sol = king();
    PhaseDF q = synthesizeQ(64, 64, 10);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        PhaseDF f = randomizedState(q, seed, 0.5);
        PhaseDF hat = rearrangeWithPotential(schwarzProfile(f), sol.phiQ, f);
        double lhs = 2.0 * hat.kinetic();
        double grad = std::sqrt(gradNormSquared(sol.phiQ, sol.phiQ.grid().rMax()));
        double rhs = kFittedC * std::pow(grad, 4.0 / 3.0) * std::pow(f.mass(), 7.0 / 9.0) *
                     std::pow(f.linf(), 2.0 / 9.0);
        CHECK(lhs <= rhs);
    }
}

TEST_CASE("local variational lower bound on equimeasurable shuffles") {
    // H(f) - H(Q) >= C0 |grad phi_f - grad phi_Q|^2 for shuffled states
    const SteadyStateSolution& sol = king();
    PhaseDF q = synthesizeQ(96, 96, 12);
    ShellDistribution sq0 = ShellDistribution::fromCells(q);
    double h0 = q.kinetic() - sq0.fieldEnergy();
    Rng rng(1234);
    double worst = kInf;
    int used = 0;
    for (int trial = 0; trial < 12; ++trial) {
        PhaseDF f = q;
        // swap values between nearly measure-matched cells at the same ell
        for (auto& sl : f.slices) {
            for (int swap = 0; swap < 200; ++swap) {
                std::size_t a = std::size_t(rng.uniform() * sl.f.size());
                std::size_t b = std::size_t(rng.uniform() * sl.f.size());
                if (a >= sl.f.size() || b >= sl.f.size()) continue;
                if (sl.measure[a] <= 0.0 || sl.measure[b] <= 0.0) continue;
                if (std::fabs(sl.measure[a] - sl.measure[b]) >
                    0.02 * std::max(sl.measure[a], sl.measure[b]))
                    continue;
                std::swap(sl.f[a], sl.f[b]);
            }
        }
        ShellDistribution sf = ShellDistribution::fromCells(f);
        double hF = f.kinetic() - sf.fieldEnergy();
        double dist2 = ShellDistribution::gradDiffNorm2(sf, sq0);
        if (dist2 < 1e-18) continue;
        ++used;
        worst = std::min(worst, (hF - h0) / dist2);
    }
    CHECK(used >= 8);
    CHECK(worst > 0.0); // fitted C0 is positive
}
