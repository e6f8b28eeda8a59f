#include <doctest.h>

#include "oracles.hpp"
#include "vpstab/rearrange.hpp"
#include "vpstab/shells.hpp"
#include "vpstab/quadrature.hpp"
#include "vpstab/steady.hpp"

using namespace vpstab;

namespace {

// brute-force midpoint quadrature of the cell measure, independent of the
// closed-form path
double cellMeasureBrute(double ell, double r0, double r1, double u0, double u1, int n = 2000) {
    double hr = (r1 - r0) / n, hu = (u1 - u0) / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double r = r0 + (i + 0.5) * hr;
            double u = u0 + (j + 0.5) * hu;
            double t = r * r * u * u - ell;
            if (t > 0.0) sum += r * std::fabs(u) / std::sqrt(t);
        }
    return 4.0 * oracle::kPi * oracle::kPi * sum * hr * hu;
}

SteadyStateSolution solveKing() {
    SteadyStateModel king = SteadyStateModel::king(-0.5);
    return solveSteadyState(king, fitGrid(king, 241));
}

PhaseGridSpec specFor(const SteadyStateSolution& sol, int nr, int nu, int nEll) {
    PhaseGridSpec spec;
    spec.nr = nr;
    spec.nu = nu;
    spec.nEll = nEll;
    spec.rMax = sol.supportRadius * 1.02;
    spec.uMax = std::sqrt(2.0 * (sol.model.e0 - sol.phiQ.phiAtZero())) * 1.02;
    spec.ellMax = sol.ellMax;
    return spec;
}

PhaseDF synthesizeQ(const SteadyStateSolution& sol, int nr, int nu, int nEll) {
    PhaseDF df = makePhaseGrid(specFor(sol, nr, nu, nEll));
    fillPhaseDF(df, [&](double r, double u, double ell) { return sol.Q(r, u, ell); });
    return df;
}

} // namespace

TEST_CASE("cell measure closed form against brute-force quadrature") {
    std::uint64_t state = 5;
    auto urand = [&]() {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        return double(state >> 11) * 0x1.0p-53;
    };
    for (int i = 0; i < 12; ++i) {
        double ell = 0.02 + 0.5 * urand();
        double r0 = 0.1 + urand(), dr = 0.05 + 0.3 * urand();
        double u0 = -1.5 + urand(), du = 0.05 + 0.4 * urand();
        if (u0 < 0.0 && u0 + du > 0.0) u0 = 0.01; // grid cells never straddle 0
        double exact = cellMeasure(ell, r0, r0 + dr, u0, u0 + du);
        double brute = cellMeasureBrute(ell, r0, r0 + dr, u0, u0 + du);
        if (exact > 1e-12)
            CHECK(exact == doctest::Approx(brute).epsilon(2e-3));
        else
            CHECK(brute <= 1e-8);
    }
    // cells fully below the barrier carry no measure
    CHECK(cellMeasure(1.0, 0.1, 0.2, 0.0, 0.5) == 0.0);
}

TEST_CASE("layer-cake consistency and level measure steps") {
    SteadyStateSolution sol = solveKing();
    PhaseDF q = synthesizeQ(sol, 48, 48, 8);
    LayerProfile prof = schwarzProfile(q);
    for (std::size_t s = 0; s < q.slices.size(); ++s) {
        double cellMass = q.slices[s].sliceMass();
        double layerMass = prof.slices[s].massIntegral();
        if (cellMass > 1e-14)
            CHECK(layerMass == doctest::Approx(cellMass).epsilon(1e-10));
    }

    // two-level distribution: exact level measure plateaus
    PhaseSlice sl = q.slices[2];
    std::fill(sl.f.begin(), sl.f.end(), 0.0);
    double nuA = 0.0, nuB = 0.0;
    for (int ir = 0; ir < sl.nr() / 2; ++ir) {
        sl.f[sl.index(ir, 3)] = 1.0;
        nuA += sl.measure[sl.index(ir, 3)];
        sl.f[sl.index(ir, 5)] = 2.0;
        nuB += sl.measure[sl.index(ir, 5)];
    }
    CHECK(upperLevelMeasure(sl, 0.5) == doctest::Approx(nuA + nuB).epsilon(1e-12));
    CHECK(upperLevelMeasure(sl, 1.5) == doctest::Approx(nuB).epsilon(1e-12));
    CHECK(upperLevelMeasure(sl, 2.5) == 0.0);
    // s at or above the sup gives zero measure
    CHECK(upperLevelMeasure(sl, 2.0) == 0.0);
}

TEST_CASE("indicator distribution: level measure equals the phase area") {
    SteadyStateSolution sol = solveKing();
    PhaseDF df = makePhaseGrid(specFor(sol, 96, 96, 6));
    const JacobianEvaluator& jac = sol.jacobian();
    double eStar = 1.25 * sol.model.e0; // deeper than the cutoff: set fits the window
    fillPhaseDF(
        df,
        [&](double r, double u, double ell) {
            (void)ell;
            return 0.5 * u * u + sol.phiQ.phi(r) < eStar ? 1.0 : 0.0;
        },
        false);
    for (const auto& sl : df.slices) {
        double aExact = jac.value(eStar, sl.ell);
        double mu = upperLevelMeasure(sl, 0.5);
        if (aExact > 1e-8)
            CHECK(mu == doctest::Approx(aExact).epsilon(0.05));
    }

    // Schwarz profile of the indicator is the step 1_{t < a}
    LayerProfile prof = schwarzProfile(df);
    for (std::size_t s = 0; s < prof.slices.size(); ++s) {
        const auto& ps = prof.slices[s];
        if (ps.steps.empty()) continue;
        CHECK(ps.topValue() == 1.0);
        double aExact = jac.value(eStar, ps.ell);
        CHECK(ps.supportMeasure() == doctest::Approx(aExact).epsilon(0.05));
        CHECK(ps.eval(0.5 * ps.supportMeasure()) == 1.0);
        CHECK(ps.eval(1.01 * ps.supportMeasure()) == 0.0);
    }
}

TEST_CASE("Lp norms preserved exactly by the profile construction") {
    SteadyStateSolution sol = solveKing();
    PhaseDF q = synthesizeQ(sol, 64, 64, 10);
    LayerProfile prof = schwarzProfile(q);
    for (double p : {1.0, 2.0}) {
        KahanSum profNorm;
        for (const auto& ps : prof.slices) profNorm.add(ps.weight * ps.lpIntegral(p));
        CHECK(std::pow(profNorm.value(), 1.0 / p) ==
              doctest::Approx(q.lpNorm(p)).epsilon(1e-11));
    }
    double profSup = 0.0;
    for (const auto& ps : prof.slices) profSup = std::max(profSup, ps.topValue());
    CHECK(profSup == doctest::Approx(q.linf()).epsilon(1e-13));
}

TEST_CASE("rearrangement with the self potential is a fixed point of Q") {
    SteadyStateSolution sol = solveKing();
    PhaseDF q = synthesizeQ(sol, 128, 128, 12);
    LayerProfile prof = schwarzProfile(q);
    PhaseDF back = rearrangeWithPotential(prof, sol.phiQ, q);
    double rel = l1Distance(back, q) / q.mass();
    CHECK(rel <= 0.01);

    // refinement halves the error (first order)
    PhaseDF q2 = synthesizeQ(sol, 256, 256, 12);
    PhaseDF back2 = rearrangeWithPotential(schwarzProfile(q2), sol.phiQ, q2);
    double rel2 = l1Distance(back2, q2) / q2.mass();
    CHECK(rel2 <= 0.6 * rel);

    // Lp preservation through the full rearrangement within grid tolerance
    for (double p : {1.0, 2.0}) {
        CHECK(back.lpNorm(p) == doctest::Approx(q.lpNorm(p)).epsilon(0.01));
    }
    CHECK(back.linf() <= q.linf() * (1.0 + 1e-12));
    CHECK(back.linf() >= q.linf() * 0.98);

    // equimeasurability of f and f^{*phi}
    EquimeasurabilityResult eq = equimeasurabilityDistance(q, back);
    CHECK(eq.distance <= 0.01 * q.mass());
    CHECK(equimeasurabilityDistance(q, q).distance == 0.0);
}

TEST_CASE("energy-swapped state is restored by the rearrangement") {
    SteadyStateSolution sol = solveKing();
    PhaseDF q = synthesizeQ(sol, 96, 96, 10);
    PhaseDF swapped = q;
    // exchange values between a low and a high energy band per slice
    double e0 = sol.model.e0;
    for (auto& sl : swapped.slices) {
        double eMin = orbitEnergyFloor(sol.phiQ, sl.ell).eMin;
        if (eMin >= e0) continue;
        double e1 = eMin + 0.2 * (e0 - eMin), e2 = eMin + 0.7 * (e0 - eMin);
        double band = 0.1 * (e0 - eMin);
        double v1 = 0.0, v2 = 0.0;
        int n1 = 0, n2 = 0;
        for (int ir = 0; ir < sl.nr(); ++ir)
            for (int iu = 0; iu < sl.nu(); ++iu) {
                std::size_t k = sl.index(ir, iu);
                if (sl.measure[k] <= 0.0) continue;
                double e = 0.5 * sq(sl.uCenter(iu)) + sol.phiQ.phi(sl.rCenter(ir));
                if (std::fabs(e - e1) < band) {
                    v1 += sl.f[k];
                    ++n1;
                } else if (std::fabs(e - e2) < band) {
                    v2 += sl.f[k];
                    ++n2;
                }
            }
        if (n1 == 0 || n2 == 0) continue;
        v1 /= n1;
        v2 /= n2;
        for (int ir = 0; ir < sl.nr(); ++ir)
            for (int iu = 0; iu < sl.nu(); ++iu) {
                std::size_t k = sl.index(ir, iu);
                if (sl.measure[k] <= 0.0) continue;
                double e = 0.5 * sq(sl.uCenter(iu)) + sol.phiQ.phi(sl.rCenter(ir));
                if (std::fabs(e - e1) < band) sl.f[k] = v2;
                else if (std::fabs(e - e2) < band) sl.f[k] = v1;
            }
    }
    CHECK(l1Distance(swapped, q) > 0.02 * q.mass()); // genuinely perturbed
    PhaseDF restored = rearrangeWithPotential(schwarzProfile(swapped), sol.phiQ, swapped);
    // the swap is measure-preserving only approximately on the grid, so the
    // restored state is close to Q at grid tolerance
    CHECK(l1Distance(restored, q) < 0.6 * l1Distance(swapped, q));
}

TEST_CASE("contractivity of the symmetrization") {
    SteadyStateSolution sol = solveKing();
    PhaseDF f = synthesizeQ(sol, 64, 64, 8);
    std::uint64_t state = 77;
    auto urand = [&]() {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        return double(state >> 11) * 0x1.0p-53;
    };
    for (int trial = 0; trial < 5; ++trial) {
        PhaseDF g = f;
        for (auto& sl : g.slices)
            for (auto& v : sl.f) v *= 1.0 + 0.3 * (urand() - 0.5);
        double lhs = profileL1Distance(schwarzProfile(f), schwarzProfile(g));
        double rhs = l1Distance(f, g);
        // one-cell slack
        double slack = 1e-9 * f.mass();
        CHECK(lhs <= rhs + slack);
    }
}

TEST_CASE("pseudo inverse of the composed profile") {
    SteadyStateSolution sol = solveKing();
    const JacobianEvaluator& jac = sol.jacobian();
    PhaseDF q = synthesizeQ(sol, 128, 128, 10);
    LayerProfile prof = schwarzProfile(q);

    // monotone in s, and consistent with F on the King model
    const ProfileSlice& ps = prof.slices[3];
    double ell = ps.ell;
    double eMin = jac.floor(ell).eMin;
    double prev = -kInf;
    for (double frac : {0.9, 0.7, 0.5, 0.3, 0.1}) {
        // s descending, so the pseudo inverse must be nondecreasing
        double s = frac * ps.topValue();
        double e = profilePseudoInverse(prof, sol.phiQ, s, ell);
        CHECK(e >= prev - 1e-12);
        prev = e;
        CHECK(e >= eMin - 1e-12);
        // for Q the pseudo inverse returns the energy with F(e) = s
        double eExpect = sol.model.e0 - std::log1p(s); // King: F = exp(e0-e)-1
        CHECK(e == doctest::Approx(eExpect).epsilon(0.02));
    }
    CHECK_THROWS_AS(profilePseudoInverse(prof, sol.phiQ, -0.1, ell), std::domain_error);
    CHECK_THROWS_AS(profilePseudoInverse(prof, sol.phiQ, 2.0 * ps.topValue(), ell),
                    std::domain_error);

    // indicator profile: the pseudo inverse is e* for every s in (0,1)
    PhaseDF ind = makePhaseGrid(specFor(sol, 96, 96, 6));
    double eStar = 1.25 * sol.model.e0;
    fillPhaseDF(
        ind,
        [&](double r, double u, double ell2) {
            (void)ell2;
            return 0.5 * u * u + sol.phiQ.phi(r) < eStar ? 1.0 : 0.0;
        },
        false);
    LayerProfile indProf = schwarzProfile(ind);
    double ellMid = indProf.slices[2].ell;
    for (double s : {0.25, 0.5, 0.75}) {
        double e = profilePseudoInverse(indProf, sol.phiQ, s, ellMid);
        CHECK(e == doctest::Approx(eStar).epsilon(0.02));
    }
}

TEST_CASE("mass consistency between synthesis and the radial density") {
    SteadyStateSolution sol = solveKing();
    PhaseDF df = makePhaseGrid(specFor(sol, 128, 128, 16));
    auto wsplit = [&](double r) {
        double t = 2.0 * (sol.model.e0 - sol.phiQ.phi(r));
        return t > 0.0 ? std::sqrt(t) : 0.0;
    };
    fillPhaseDF(df, [&](double r, double u, double ell) { return sol.Q(r, u, ell); }, true, 12,
                wsplit);
    // 4 pi int rho_Q r^2 dr evaluated by high-order quadrature
    auto f = [&](double r) {
        return kFourPi * r * r * densityFromPotential(sol.model, sol.phiQ, r);
    };
    double mRef = gaussIntegrate(f, 0.0, sol.supportRadius, 1024);
    CHECK(df.mass() == doctest::Approx(mRef).epsilon(1e-6));
}
