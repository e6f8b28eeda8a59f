#include "vpstab/verify.hpp"

#include <chrono>
#include <ostream>
#include <sstream>

#include "vpstab/io.hpp"
#include "vpstab/linearized.hpp"
#include "vpstab/quadrature.hpp"
#include "vpstab/sim.hpp"

namespace vpstab {

namespace {

using Clock = std::chrono::steady_clock;

struct Harness {
    // King e0 = -1 has no self-consistent state under the fixed ansatz
    // normalization (the far-field ratio M/R peaks near 0.837); the suite
    // standardizes on e0 = -0.5 and says so in its banner.
    SteadyStateModel kingModel = SteadyStateModel::king(-0.5);
    SteadyStateModel polyModel = SteadyStateModel::polytrope(-1.0, 1.0, 0.0);
    SteadyStateSolution king;
    SteadyStateSolution poly;

    Harness()
        : king(solveSteadyState(kingModel, fitGrid(kingModel, 241))),
          poly(solveSteadyState(polyModel, fitGrid(polyModel, 241))) {}

    PhaseDF synthesize(const SteadyStateSolution& sol, int nr, int nu, int nEll) const {
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
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

// ---- criterion bodies ----------------------------------------------------

CriterionResult keplerJacobianIdentity() {
    CriterionResult res{1, "Kepler phase-area closed form", false, "", 0.0};
    auto t0 = Clock::now();
    PointMassPotential pot(1.0);
    JacobianEvaluator jac(pot);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        double ell = 0.2 + 2.8 * double(i) / 19.0;
        double eMin = -1.0 / (2.0 * ell);
        for (int j = 0; j < 20; ++j) {
            double e = eMin * (0.02 + 0.96 * double(j) / 19.0);
            double exact = 8.0 * kPi * kPi * kPi * (1.0 / std::sqrt(-2.0 * e) - std::sqrt(ell));
            double got = jac.value(e, ell);
            worst = std::max(worst, std::fabs(got - exact) / exact);
        }
    }
    double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    res.pass = worst <= 1e-8 && elapsed < 5.0;
    res.detail = fmt("max rel err %.3g (tol 1e-8), 20x20 grid, %.2f s (budget 5 s)", worst,
                     elapsed);
    return res;
}

CriterionResult derivativeConsistency(const Harness& h) {
    CriterionResult res{2, "phase-area derivative vs finite differences", false, "", 0.0};
    const JacobianEvaluator& jac = h.king.jacobian();
    Rng rng(101);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        double ell = (0.03 + 0.92 * rng.uniform()) * h.king.ellMax;
        double eMin = jac.floor(ell).eMin;
        double e = eMin + (0.05 + 0.9 * rng.uniform()) * (0.0 - eMin) * 0.98;
        double step = 1e-4 * std::min(e - eMin, -e);
        double fd = (jac.value(e + step, ell) - jac.value(e - step, ell)) / (2.0 * step);
        double an = jac.derivE(e, ell);
        worst = std::max(worst, std::fabs(fd - an) / an);
    }
    res.pass = worst <= 1e-5;
    res.detail = fmt("max rel err %.3g (tol 1e-5), 50 points", worst);
    return res;
}

CriterionResult inverseConsistency(const Harness& h) {
    CriterionResult res{3, "phase-area inverse round trip", false, "", 0.0};
    const JacobianEvaluator& jac = h.king.jacobian();
    Rng rng(77);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        double ell = (0.03 + 0.92 * rng.uniform()) * h.king.ellMax;
        double eMin = jac.floor(ell).eMin;
        double e = eMin + (0.02 + 0.96 * rng.uniform()) * (0.0 - eMin) * 0.98;
        double back = jac.inverse(jac.value(e, ell), ell);
        worst = std::max(worst, std::fabs(back - e) / std::fabs(e));
    }
    res.pass = worst <= 1e-9;
    res.detail = fmt("max rel err %.3g (tol 1e-9), 100 points", worst);
    return res;
}

CriterionResult boundsSuite(const Harness& h) {
    CriterionResult res{4, "orbit and phase-area bounds", false, "", 0.0};
    long violations = 0, samples = 0;
    auto runModel = [&](const BasePotential& pot, double ellMax, double mPhi, bool hasRho) {
        JacobianEvaluator jac(pot);
        Rng rng(55);
        double M = pot.mass();
        for (int k = 0; k < 1000; ++k) {
            double ell = (0.02 + 0.96 * rng.uniform()) * ellMax;
            OrbitFloor fl = jac.floor(ell);
            // floor bounds
            ++samples;
            if (!(fl.eMin >= std::max(pot.phiAtZero(), -M * M / (2.0 * ell)) - 1e-10) ||
                !(fl.eMin < 0.0))
                ++violations;
            double e = fl.eMin + (0.03 + 0.94 * rng.uniform()) * (0.0 - fl.eMin) * 0.98;
            EffectiveOrbit orb = orbitBounds(pot, e, ell);
            ++samples;
            if (!(orb.rPeri >= ell / (2.0 * M) - 1e-12 && orb.rPeri < orb.rApo &&
                  orb.rApo <= M / std::fabs(e) + 1e-12))
                ++violations;
            double a = jac.value(e, ell);
            ++samples;
            if (!(a <= 16.0 * kPi * kPi * M / std::sqrt(-e) + 1e-12)) ++violations;
            if (-e < mPhi * mPhi / (4.0 * (2.0 * mPhi + ell))) {
                ++samples;
                if (!(a >= 4.0 * kPi * kPi / 3.0 * mPhi / std::sqrt(-e) - 1e-12)) ++violations;
            }
            if (hasRho) {
                for (int m = 0; m < 3; ++m) {
                    double r = orb.rPeri + (orb.rApo - orb.rPeri) * rng.uniform();
                    ++samples;
                    if (!(concavityMinorant(orb, r) <= e - pot.psi(r, ell) + 1e-10))
                        ++violations;
                }
            }
        }
    };
    runModel(h.king.phiQ, h.king.ellMax, potentialFloor(h.king.phiQ), true);
    runModel(h.poly.phiQ, h.poly.ellMax, potentialFloor(h.poly.phiQ), true);
    PointMassPotential kep(1.0);
    runModel(kep, 2.0, 1.0, true); // minorant is an identity for the point mass
    res.pass = violations == 0;
    res.detail = fmt("%g violations over %g samples", double(violations), double(samples));
    return res;
}

CriterionResult rearrangementSuite(const Harness& h) {
    CriterionResult res{5, "rearrangement norms, contractivity, equimeasurability", false, "",
                        0.0};
    std::ostringstream detail;
    bool ok = true;
    double worstCoarse = 0.0, worstFine = 0.0;
    for (int level = 0; level < 2; ++level) {
        int n = level == 0 ? 128 : 256;
        PhaseDF q = h.synthesize(h.king, n, n, 16);
        PhaseDF hat = rearrangeWithPotential(schwarzProfile(q), h.king.phiQ, q);
        double& worst = level == 0 ? worstCoarse : worstFine;
        for (double p : {1.0, 2.0})
            worst = std::max(worst,
                             std::fabs(hat.lpNorm(p) / q.lpNorm(p) - 1.0));
        worst = std::max(worst, std::fabs(hat.linf() / q.linf() - 1.0));
        if (level == 0) {
            EquimeasurabilityResult eq = equimeasurabilityDistance(q, hat);
            double eqRel = eq.distance / q.mass();
            ok = ok && eqRel <= 0.01;
            detail << fmt("eq-dist %.3g of mass; ", eqRel);
        }
    }
    ok = ok && worstCoarse <= 0.01 && worstFine <= 0.0025;
    detail << fmt("Lp dev %.3g @128 (tol 1e-2), %.3g @256 (tol 2.5e-3)", worstCoarse, worstFine);

    // contractivity with one-cell slack
    PhaseDF base = h.synthesize(h.king, 96, 96, 12);
    Rng rng(4242);
    for (int t = 0; t < 5; ++t) {
        PhaseDF g = base;
        for (auto& sl : g.slices)
            for (auto& v : sl.f) v *= 1.0 + 0.4 * (2.0 * rng.uniform() - 1.0);
        double lhs = profileL1Distance(schwarzProfile(base), schwarzProfile(g));
        double rhs = l1Distance(base, g);
        if (lhs > rhs * (1.0 + 1e-12) + 1e-9 * base.mass()) ok = false;
    }
    res.pass = ok;
    res.detail = detail.str();
    return res;
}

CriterionResult fixedPointSuite(const Harness& h) {
    CriterionResult res{6, "rearrangement fixed point of the steady states", false, "", 0.0};
    std::ostringstream detail;
    bool ok = true;
    for (const SteadyStateSolution* sol : {&h.king, &h.poly}) {
        PhaseDF q1 = h.synthesize(*sol, 128, 128, 16);
        double r1 = l1Distance(rearrangeWithPotential(schwarzProfile(q1), sol->phiQ, q1), q1) /
                    q1.mass();
        PhaseDF q2 = h.synthesize(*sol, 256, 256, 16);
        double r2 = l1Distance(rearrangeWithPotential(schwarzProfile(q2), sol->phiQ, q2), q2) /
                    q2.mass();
        ok = ok && r1 <= 0.01 && r2 <= 0.6 * r1;
        detail << fmt("%.3g -> %.3g; ", r1, r2);
    }
    res.pass = ok;
    res.detail = detail.str() + "(tol 1e-2, halving under refinement)";
    return res;
}

CriterionResult monotonicitySuite(const Harness& h) {
    CriterionResult res{7, "monotonicity chain of the Hamiltonian", false, "", 0.0};
    auto t0 = Clock::now();
    PhaseDF q = h.synthesize(h.king, 96, 96, 12);
    MonotonicityReport atQ = monotonicityReport(q);
    bool ok = atQ.equality && atQ.gap1 >= -atQ.tol && atQ.gap2 >= -atQ.tol;
    int negatives = 0;
    Rng rng(808);
    for (int t = 0; t < 100; ++t) {
        PhaseDF f = q;
        for (auto& sl : f.slices)
            for (auto& v : sl.f) v *= 1.0 + 0.1 * (2.0 * rng.uniform() - 1.0);
        MonotonicityReport rep = monotonicityReport(f);
        if (rep.gap1 < -rep.tol || rep.gap2 < -rep.tol) ++negatives;
    }
    ok = ok && negatives == 0;

    // two-shell swap: strictly positive transport gap
    PhaseDF swapped = q;
    for (auto& sl : swapped.slices) {
        double eMin = orbitEnergyFloor(h.king.phiQ, sl.ell).eMin;
        double e0 = h.king.model.e0;
        if (eMin >= e0) continue;
        double e1 = eMin + 0.25 * (e0 - eMin), e2 = eMin + 0.75 * (e0 - eMin);
        double band = 0.12 * (e0 - eMin);
        for (int ir = 0; ir < sl.nr(); ++ir)
            for (int iu = 0; iu < sl.nu(); ++iu) {
                std::size_t k = sl.index(ir, iu);
                if (sl.measure[k] <= 0.0) continue;
                double e = 0.5 * sq(sl.uCenter(iu)) + h.king.phiQ.phi(sl.rCenter(ir));
                if (std::fabs(e - e1) < band) sl.f[k] = h.king.F(e2, sl.ell);
                else if (std::fabs(e - e2) < band) sl.f[k] = h.king.F(e1, sl.ell);
            }
    }
    MonotonicityReport swapRep = monotonicityReport(swapped);
    ok = ok && swapRep.gap1 > 5.0 * swapRep.tol;
    double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    ok = ok && elapsed < 120.0;
    res.pass = ok;
    res.detail = fmt("negatives %g/100, swap gap/tol %.3g, equality at Q: %g",
                     double(negatives), swapRep.gap1 / swapRep.tol, double(atQ.equality)) +
                 fmt(", %.0f s (budget 120 s)", elapsed);
    return res;
}

CriterionResult exactAlgebra(const Harness& h) {
    CriterionResult res{8, "energy decomposition identity", false, "", 0.0};
    PhaseDF q = h.synthesize(h.king, 64, 64, 10);
    Rng rng(99);
    double worst = 0.0;
    for (int t = 0; t < 5; ++t) {
        PhaseDF f = q, g = q;
        for (auto& sl : f.slices)
            for (auto& v : sl.f) v *= 1.0 + 0.5 * (2.0 * rng.uniform() - 1.0);
        for (auto& sl : g.slices)
            for (auto& v : sl.f) v *= 1.0 + 0.8 * rng.uniform();
        worst = std::max(worst, identityResidual(f, g));
    }
    res.pass = worst <= 1e-9;
    res.detail = fmt("max rel residual %.3g (tol 1e-9)", worst);
    return res;
}

CriterionResult coercivitySuite(const Harness& h) {
    CriterionResult res{9, "coercivity of the reduced functional", false, "", 0.0};
    LinearizedAnalysis lin(h.king);
    RadialBasis basis(1.6 * h.king.supportRadius, 20, 2.0 * h.king.supportRadius,
                      3.2 * h.king.supportRadius);
    CoercivityReport scan = lin.coercivityScan(basis);
    bool ok = scan.minEigenvalue > 0.0;

    SmoothReducedFunctional J(h.king);
    double j0 = J.evalSIntegral(h.king.phiQ);
    double worstFd = 0.0;
    for (int k = 0; k < 5; ++k) {
        auto hf = [&](double r) { return basis.value(k, r); };
        auto dhf = [&](double r) { return basis.deriv(k, r); };
        double quad = lin.hessianForm(hf, dhf);
        double eps = 2e-3;
        auto jAt = [&](double e) {
            DirectionPerturbedPotential pot(h.king.phiQ, hf, dhf, e);
            return J.evalSIntegral(pot);
        };
        double d1 = (jAt(eps) - 2.0 * j0 + jAt(-eps)) / (eps * eps);
        double d2 = (jAt(0.5 * eps) - 2.0 * j0 + jAt(-0.5 * eps)) / (0.25 * eps * eps);
        double fd = (4.0 * d2 - d1) / 3.0;
        worstFd = std::max(worstFd, std::fabs(quad - fd) / std::fabs(fd));
    }
    ok = ok && worstFd <= 0.05;

    // quadratic lower bound for small perturbations along the basis
    Rng rng(2024);
    double eps = 1e-2;
    double worstGap = kInf;
    for (int t = 0; t < 20; ++t) {
        std::vector<double> c(basis.size());
        double norm2 = 0.0;
        for (auto& x : c) x = 2.0 * rng.uniform() - 1.0;
        for (double x : c) norm2 += x * x; // orthonormal basis
        double scale = eps / std::sqrt(norm2);
        for (auto& x : c) x *= scale;
        auto hf = [&](double r) {
            std::vector<double> v(basis.size()), d(basis.size());
            basis.evalAll(r, v.data(), d.data());
            double acc = 0.0;
            for (int i = 0; i < basis.size(); ++i) acc += c[i] * v[i];
            return acc;
        };
        auto dhf = [&](double r) {
            std::vector<double> v(basis.size()), d(basis.size());
            basis.evalAll(r, v.data(), d.data());
            double acc = 0.0;
            for (int i = 0; i < basis.size(); ++i) acc += c[i] * d[i];
            return acc;
        };
        DirectionPerturbedPotential pot(h.king.phiQ, hf, dhf, 1.0);
        double jPlus = J.evalSIntegral(pot);
        double gradH2 = eps * eps; // orthonormality in the gradient metric
        double lhs = jPlus - j0;
        double rhs = 0.5 * scan.minEigenvalue * gradH2 - 0.10 * gradH2;
        worstGap = std::min(worstGap, lhs - rhs);
        if (lhs < rhs) ok = false;
    }
    res.pass = ok;
    res.detail = fmt("min eig %.4g, fd dev %.3g (tol 5e-2), worst margin %.3g",
                     scan.minEigenvalue, worstFd, worstGap);
    return res;
}

CriterionResult antonovSuite(const Harness& h) {
    CriterionResult res{10, "Antonov coercivity and transport", false, "", 0.0};
    LinearizedAnalysis lin(h.king);
    bool ok = true;
    Rng rng(31);
    double worstA = kInf;
    for (int t = 0; t < 20; ++t) {
        double a = 0.3 + rng.uniform(), w = 0.2 + 0.6 * rng.uniform();
        double c = 2.0 * rng.uniform() - 1.0;
        auto hf = [=](double r) { return a * std::exp(-sq(r / w)) + c * r; };
        double A = lin.antonovDirection(hf);
        double tol = 1e-4 * (lin.weightedNorm2(hf) + 1e-12);
        worstA = std::min(worstA, A);
        if (A < -tol) ok = false;
    }

    // odd slice-field margins
    auto makeOdd = [&](double rBar, double sigma, double uSigma) {
        const SteadyStateSolution& sol = h.king;
        SliceFieldStack stack;
        const int nEll = 6, nr = 129, nu = 129;
        const GaussRule& g = gaussLegendre(nEll);
        for (int i = 0; i < nEll; ++i) {
            double t = 0.5 * (1.0 + g.x[i]);
            double ell = sol.ellMax * 0.5 * (1.0 - std::cos(kPi * t));
            double wq = 0.5 * g.w[i] * sol.ellMax * 0.5 * kPi * std::sin(kPi * t);
            SliceField f = lin.makeSliceField(ell, wq, nr, nu);
            double psiP = 0.0;
            for (int aa = 0; aa < nr; ++aa)
                psiP = std::max(psiP, std::fabs(sol.phiQ.dpsi(f.r(aa), ell)));
            double eMargin = 4.0 * (f.uMax * f.du() + psiP * f.dr());
            for (int aa = 0; aa < nr; ++aa)
                for (int bb = 0; bb < nu; ++bb) {
                    double r = f.r(aa), u = f.u(bb);
                    double cut = lin.supportCutoff(r, u, ell, eMargin);
                    if (cut <= 0.0) continue;
                    f.v[f.idx(aa, bb)] =
                        u * std::exp(-sq((r - rBar) / sigma) - sq(u / uSigma)) * cut;
                }
            stack.slices.push_back(std::move(f));
        }
        return stack;
    };
    double worstMargin = kInf;
    for (int t = 0; t < 20; ++t) {
        double rBar = (0.2 + 0.45 * rng.uniform()) * h.king.supportRadius;
        double sigma = (0.15 + 0.35 * rng.uniform()) * h.king.supportRadius;
        double uSigma = 0.35 + 0.65 * rng.uniform();
        AntonovMargin m = lin.antonovInequalityCheck(makeOdd(rBar, sigma, uSigma));
        worstMargin = std::min(worstMargin, m.margin + m.tol);
        if (m.margin < -m.tol) ok = false;
    }

    // kernel annihilation at stencil order under joint refinement
    auto kernelDefect = [&](const SteadyStateSolution& state, LinearizedAnalysis& la, int n) {
        double ell = 0.4 * state.ellMax;
        SliceField f = la.makeSliceField(ell, 1.0, n, n);
        for (int a = 0; a < f.nr; ++a)
            for (int b = 0; b < f.nu; ++b) {
                double e = 0.5 * sq(f.u(b)) + state.phiQ.psi(f.r(a), ell);
                double de = state.model.e0 - e;
                f.v[f.idx(a, b)] = de > 0.0 ? de * de * de * de * de : 0.0;
            }
        SliceFieldStack st;
        st.slices.push_back(std::move(f));
        SliceFieldStack out = la.transportApply(st);
        double vm = 0.0, tm = 0.0;
        for (double v : st.slices[0].v) vm = std::max(vm, std::fabs(v));
        for (double v : out.slices[0].v) tm = std::max(tm, std::fabs(v));
        return tm / vm;
    };
    double coarse = kernelDefect(h.king, lin, 193);
    SteadyStateSolution fineSol = solveSteadyState(h.kingModel, fitGrid(h.kingModel, 961));
    LinearizedAnalysis fineLin(fineSol);
    double fine = kernelDefect(fineSol, fineLin, 385);
    ok = ok && fine <= coarse / 8.0 && fine <= 5e-4;

    res.pass = ok;
    res.detail = fmt("worst A %.3g, worst margin %.3g, ", worstA, worstMargin) +
                 fmt("kernel defect %.3g -> %.3g under joint refinement", coarse, fine);
    return res;
}

CriterionResult projectionSuite(const Harness& h) {
    CriterionResult res{11, "kernel projection identities", false, "", 0.0};
    LinearizedAnalysis lin(h.king);
    Rng rng(6);
    double worstOrtho = 0.0, worstBessel = 0.0;
    for (int i = 0; i < 10; ++i) {
        double a = 0.5 + rng.uniform(), w = 0.3 + 0.5 * rng.uniform();
        double c = rng.uniform();
        auto hf = [=](double r) { return a * std::exp(-sq(r / w)) + c * r * r; };
        double hNorm = std::sqrt(lin.weightedNorm2(hf));
        for (int j = 0; j < 10; ++j) {
            double p = 0.2 + 0.1 * j;
            auto theta = [=](double e, double ell) { return std::exp(p * e) + 0.05 * j * ell; };
            double tNorm = std::sqrt(lin.weightedKernelNorm2(theta));
            double pairing = std::fabs(lin.kernelPairing(hf, theta));
            worstOrtho = std::max(worstOrtho, pairing / (hNorm * tNorm + 1e-300));
        }
        double bessel = lin.projectedNorm2(hf) / lin.weightedNorm2(hf);
        worstBessel = std::max(worstBessel, bessel - 1.0);
    }
    res.pass = worstOrtho <= 1e-6 && worstBessel <= 1e-6;
    res.detail = fmt("orthogonality %.3g, Bessel excess %.3g (tol 1e-6)", worstOrtho,
                     worstBessel);
    return res;
}

CriterionResult steadySuite(const Harness& h) {
    CriterionResult res{12, "steady-state solver", false, "", 0.0};
    bool ok = h.king.virialRatio <= 1e-3 && h.poly.virialRatio <= 1e-3;
    // polytrope density against the one-dimensional reduction
    double cq = 16.0 * std::sqrt(2.0) * kPi / 15.0;
    double worstRho = 0.0;
    const RadialGrid& grid = h.poly.phiQ.grid();
    for (std::size_t i = 0; i < grid.size(); i += 7) {
        double wv = -1.0 - h.poly.phiQ.nodeValues()[i];
        double expect = wv > 0.0 ? cq * std::pow(wv, 2.5) : 0.0;
        if (expect > 1e-8)
            worstRho = std::max(worstRho, std::fabs(h.poly.rhoQ[i] / expect - 1.0));
    }
    ok = ok && worstRho <= 1e-6;

    // second-order grid convergence
    RadialGrid base = fitGrid(h.kingModel, 76);
    auto solveOn = [&](std::size_t n) {
        return solveSteadyState(h.kingModel, RadialGrid::sinhGraded(base.rMax(), n));
    };
    SteadyStateSolution a = solveOn(76), b = solveOn(151), c = solveOn(301);
    double d1 = 0.0, d2 = 0.0;
    for (double r = 0.0; r <= base.rMax() * 0.95; r += base.rMax() / 200.0) {
        d1 = std::max(d1, std::fabs(a.phiQ.phi(r) - b.phiQ.phi(r)));
        d2 = std::max(d2, std::fabs(b.phiQ.phi(r) - c.phiQ.phi(r)));
    }
    ok = ok && d1 / d2 >= 2.5;
    res.pass = ok;
    res.detail = fmt("virial %.2g / %.2g, poly rho dev %.3g", h.king.virialRatio,
                     h.poly.virialRatio, worstRho) +
                 fmt(", refinement ratio %.2f", d1 / d2);
    return res;
}

CriterionResult dynamicsSuite(const Harness& h, std::ostream& log) {
    CriterionResult res{13, "nonlinear stability experiment", false, "", 0.0};
    auto t0 = Clock::now();
    const SteadyStateSolution& sol = h.king;
    PhaseDF q = h.synthesize(sol, 128, 128, 16);
    double tDyn = dynamicalTime(sol);

    SimConfig cfg;
    cfg.dt = 1e-3 * tDyn;
    cfg.steps = 10000; // ten dynamical times
    cfg.diagEvery = 500;
    cfg.depositBins = 256;
    cfg.seed = 20260808;

    ParticleEnsemble ens = sampleParticles(q, 1000000, cfg.seed);
    std::vector<double> ellBefore = ens.ell;
    log << "  [13] steady run: N=1e6, " << cfg.steps << " steps" << std::endl;
    ExperimentResult steady = runExperiment(ens, sol, cfg);

    bool ok = true;
    for (std::size_t i = 0; i < ellBefore.size(); ++i)
        if (steady.finalState.ell[i] != ellBefore[i]) {
            ok = false;
            break;
        }
    const TimeSeriesRow& f0 = steady.rows.front();
    double massDrift = 0.0, l2Drift = 0.0, hDrift = 0.0, gradMax = 0.0;
    for (const auto& row : steady.rows) {
        massDrift = std::max(massDrift, std::fabs(row.mass - f0.mass) / f0.mass);
        l2Drift = std::max(l2Drift, std::fabs(row.casimirL2 - f0.casimirL2) / f0.casimirL2);
        hDrift = std::max(hDrift,
                          std::fabs(row.hamiltonian - f0.hamiltonian) / std::fabs(f0.hamiltonian));
        gradMax = std::max(gradMax, row.dGradPhi);
    }
    ok = ok && massDrift <= 1e-13 && l2Drift <= 1e-13;
    ok = ok && hDrift <= 1e-3;
    ok = ok && gradMax <= 2.0 * f0.dGradPhi;

    // radially squeezed initial state, one percent in L1
    ParticleEnsemble pert = sampleParticles(q, 1000000, cfg.seed + 1);
    for (auto& r : pert.r) r *= 0.98;
    log << "  [13] perturbed run" << std::endl;
    ExperimentResult kicked = runExperiment(pert, sol, cfg);
    const TimeSeriesRow& p0 = kicked.rows.front();
    double worstRatio = 0.0;
    for (const auto& row : kicked.rows) {
        worstRatio = std::max(worstRatio, row.dL1 / p0.dL1);
        worstRatio = std::max(worstRatio, row.dKin / p0.dKin);
        worstRatio = std::max(worstRatio, row.dGradPhi / p0.dGradPhi);
    }
    ok = ok && worstRatio <= 5.0;
    // the stated wall budget assumes eight cores; scale on smaller hosts
    double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    double budget = 600.0 * std::max(1.0, 8.0 / double(workerCount()));
    ok = ok && elapsed < budget;
    res.pass = ok;
    res.detail = fmt("H drift %.3g (tol 1e-3), grad ratio %.2f (tol 2), ", hDrift,
                     gradMax / f0.dGradPhi) +
                 fmt("perturbed ratio %.2f (tol 5), dL1(0)/mass %.3g, ", worstRatio,
                     p0.dL1 / p0.mass) +
                 fmt("%.0f s (budget %.0f s)", elapsed, budget);
    return res;
}

CriterionResult ioSuite(const Harness& h) {
    CriterionResult res{14, "snapshot round trip and deterministic reports", false, "", 0.0};
    PhaseDF q = h.synthesize(h.king, 48, 48, 8);
    Rng rng(3);
    for (auto& sl : q.slices)
        for (auto& v : sl.f) v *= 1.0 + 0.3 * rng.uniform();
    std::string path = "verify_roundtrip.vpdf";
    writeSnapshot(path, q);
    PhaseDF back = readSnapshot(path);
    bool ok = back.slices.size() == q.slices.size();
    for (std::size_t s = 0; ok && s < q.slices.size(); ++s) {
        ok = back.slices[s].ell == q.slices[s].ell &&
             back.slices[s].weight == q.slices[s].weight &&
             back.slices[s].rEdges == q.slices[s].rEdges &&
             back.slices[s].uEdges == q.slices[s].uEdges && back.slices[s].f == q.slices[s].f;
    }
    std::remove(path.c_str());

    // deterministic report bytes under a fixed seed
    auto makeReport = [&]() {
        ParticleEnsemble ens = sampleParticles(q, 5000, 17);
        EnergyReport er = hamiltonian(q);
        Json rep = Json::object();
        rep.set("mass", Json::number(er.mass));
        rep.set("kinetic", Json::number(er.kinetic));
        rep.set("field", Json::number(er.fieldEnergy));
        rep.set("hamiltonian", Json::number(er.hamiltonian));
        rep.set("sampleMass", Json::number(ens.mass()));
        return rep.dump(2);
    };
    ok = ok && makeReport() == makeReport();
    res.pass = ok;
    res.detail = ok ? "bit-exact round trip, identical bytes" : "mismatch";
    return res;
}

} // namespace

std::vector<CriterionResult> runAcceptanceSuite(std::ostream& out) {
    out << "primary acceptance suite (King cutoff at -0.5: the unit-amplitude ansatz has no\n"
           "self-consistent state at -1, the far-field ratio peaks near 0.837)\n";
    Harness h;
    std::vector<CriterionResult> results;
    auto run = [&](auto&& fn) {
        auto t0 = Clock::now();
        CriterionResult r = fn();
        r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        out << (r.pass ? "PASS" : "FAIL") << "  " << r.id << ". " << r.name << " -- "
            << r.detail << fmt(" [%.1f s]", r.seconds) << std::endl;
        results.push_back(std::move(r));
    };
    run([&] { return keplerJacobianIdentity(); });
    run([&] { return derivativeConsistency(h); });
    run([&] { return inverseConsistency(h); });
    run([&] { return boundsSuite(h); });
    run([&] { return rearrangementSuite(h); });
    run([&] { return fixedPointSuite(h); });
    run([&] { return monotonicitySuite(h); });
    run([&] { return exactAlgebra(h); });
    run([&] { return coercivitySuite(h); });
    run([&] { return antonovSuite(h); });
    run([&] { return projectionSuite(h); });
    run([&] { return steadySuite(h); });
    run([&] { return dynamicsSuite(h, out); });
    run([&] { return ioSuite(h); });
    return results;
}

} // namespace vpstab
