#include "vpstab/steady.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "vpstab/linalg.hpp"
#include "vpstab/quadrature.hpp"

namespace vpstab {

SteadyStateModel SteadyStateModel::king(double e0) {
    SteadyStateModel m;
    m.kind = ModelKind::King;
    m.e0 = e0;
    m.validate();
    return m;
}

SteadyStateModel SteadyStateModel::michieKing(double e0, double ra) {
    SteadyStateModel m;
    m.kind = ModelKind::MichieKing;
    m.e0 = e0;
    m.ra = ra;
    m.validate();
    return m;
}

SteadyStateModel SteadyStateModel::polytrope(double e0, double q, double kappa) {
    SteadyStateModel m;
    m.kind = ModelKind::Polytrope;
    m.e0 = e0;
    m.q = q;
    m.kappa = kappa;
    m.validate();
    return m;
}

SteadyStateModel SteadyStateModel::doublePower(double e0, std::vector<PowerTerm> terms) {
    SteadyStateModel m;
    m.kind = ModelKind::DoublePower;
    m.e0 = e0;
    m.terms = std::move(terms);
    m.validate();
    return m;
}

SteadyStateModel SteadyStateModel::osipkovMerritt(double e0, double ra, double p) {
    SteadyStateModel m;
    m.kind = ModelKind::OsipkovMerritt;
    m.e0 = e0;
    m.ra = ra;
    m.omExponent = p;
    m.validate();
    return m;
}

SteadyStateModel SteadyStateModel::tabulatedFromCsv(const std::string& path, double e0) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("tabulatedFromCsv: cannot open " + path);
    std::vector<double> es, ells, fs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'e') continue;
        std::istringstream ss(line);
        double e, ell, F;
        char comma;
        if (ss >> e >> comma >> ell >> comma >> F) {
            es.push_back(e);
            ells.push_back(ell);
            fs.push_back(F);
        }
    }
    SteadyStateModel m;
    m.kind = ModelKind::Tabulated;
    m.e0 = e0;
    // tensor grid: unique sorted axes, values row-major in e
    std::vector<double> eAxis = es, ellAxis = ells;
    std::sort(eAxis.begin(), eAxis.end());
    eAxis.erase(std::unique(eAxis.begin(), eAxis.end()), eAxis.end());
    std::sort(ellAxis.begin(), ellAxis.end());
    ellAxis.erase(std::unique(ellAxis.begin(), ellAxis.end()), ellAxis.end());
    m.tabE = eAxis;
    m.tabEll = ellAxis;
    m.tabF.assign(eAxis.size() * ellAxis.size(), -1.0);
    for (std::size_t k = 0; k < es.size(); ++k) {
        auto ie = std::lower_bound(eAxis.begin(), eAxis.end(), es[k]) - eAxis.begin();
        auto il = std::lower_bound(ellAxis.begin(), ellAxis.end(), ells[k]) - ellAxis.begin();
        m.tabF[ie * ellAxis.size() + il] = fs[k];
    }
    for (double v : m.tabF)
        if (v < 0.0) throw std::domain_error("tabulatedFromCsv: grid not a full tensor product");
    // monotonicity in e is validated, not repaired
    for (std::size_t il = 0; il < ellAxis.size(); ++il)
        for (std::size_t ie = 1; ie < eAxis.size(); ++ie)
            if (m.tabF[ie * ellAxis.size() + il] > m.tabF[(ie - 1) * ellAxis.size() + il] + 1e-14)
                throw std::domain_error("tabulatedFromCsv: F must be nonincreasing in e");
    m.validate();
    return m;
}

void SteadyStateModel::validate() const {
    if (!(e0 < 0.0)) throw std::domain_error("model: e0 must be negative");
    switch (kind) {
    case ModelKind::Polytrope:
        if (!(q > 0.0 && q < 3.5)) throw std::domain_error("polytrope: need 0 < q < 7/2");
        if (!(kappa >= 0.0)) throw std::domain_error("polytrope: need kappa >= 0");
        break;
    case ModelKind::DoublePower:
        if (terms.empty()) throw std::domain_error("double-power: no terms");
        for (const auto& t : terms) {
            if (!(t.alpha >= 0.0)) throw std::domain_error("double-power: negative coefficient");
            if (!(t.q > 0.0 && t.q < 3.5)) throw std::domain_error("double-power: bad exponent");
            if (!(t.kappa >= 0.0)) throw std::domain_error("double-power: bad ell exponent");
        }
        break;
    case ModelKind::MichieKing:
    case ModelKind::OsipkovMerritt:
        if (!(ra > 0.0)) throw std::domain_error("model: anisotropy radius must be positive");
        break;
    default:
        break;
    }
}

bool SteadyStateModel::boundedDerivative() const {
    switch (kind) {
    case ModelKind::King:
    case ModelKind::MichieKing:
        return true;
    case ModelKind::Polytrope:
        return q >= 1.0;
    case ModelKind::DoublePower:
        for (const auto& t : terms)
            if (t.q < 1.0) return false;
        return true;
    case ModelKind::OsipkovMerritt:
        return omExponent >= 1.0;
    case ModelKind::Tabulated:
        return true;
    }
    return false;
}

double ansatzEval(const SteadyStateModel& m, double e, double ell) {
    if (!std::isfinite(e)) return 0.0;
    double de = m.e0 - e; // positive inside the support
    switch (m.kind) {
    case ModelKind::King:
        return de > 0.0 ? std::expm1(de) : 0.0;
    case ModelKind::MichieKing:
        return de > 0.0 ? std::exp(-0.5 * ell / (m.ra * m.ra)) * std::expm1(de) : 0.0;
    case ModelKind::Polytrope:
        return de > 0.0 ? std::pow(de, m.q) * (m.kappa == 0.0 ? 1.0 : std::pow(ell, m.kappa))
                        : 0.0;
    case ModelKind::DoublePower: {
        if (de <= 0.0) return 0.0;
        double sum = 0.0;
        for (const auto& t : m.terms)
            sum += t.alpha * std::pow(de, t.q) * (t.kappa == 0.0 ? 1.0 : std::pow(ell, t.kappa));
        return sum;
    }
    case ModelKind::OsipkovMerritt: {
        double t = de - 0.5 * ell / (m.ra * m.ra);
        return t > 0.0 ? std::pow(t, m.omExponent) : 0.0;
    }
    case ModelKind::Tabulated: {
        if (de <= 0.0) return 0.0;
        const auto& E = m.tabE;
        const auto& L = m.tabEll;
        double ec = std::clamp(e, E.front(), E.back());
        double lc = std::clamp(ell, L.front(), L.back());
        auto ie = std::min<std::size_t>(
            std::upper_bound(E.begin(), E.end(), ec) - E.begin() - 1, E.size() - 2);
        auto il = std::min<std::size_t>(
            std::upper_bound(L.begin(), L.end(), lc) - L.begin() - 1, L.size() - 2);
        double te = (ec - E[ie]) / (E[ie + 1] - E[ie]);
        double tl = (lc - L[il]) / (L[il + 1] - L[il]);
        auto at = [&](std::size_t i, std::size_t j) { return m.tabF[i * L.size() + j]; };
        return (1 - te) * ((1 - tl) * at(ie, il) + tl * at(ie, il + 1)) +
               te * ((1 - tl) * at(ie + 1, il) + tl * at(ie + 1, il + 1));
    }
    }
    return 0.0;
}

double ansatzDerivE(const SteadyStateModel& m, double e, double ell, double interiorMargin) {
    double de = m.e0 - e;
    if (de <= 0.0) return 0.0;
    auto guardBoundary = [&](double qq) {
        if (qq >= 1.0) return;
        if (interiorMargin <= 0.0 || de < interiorMargin)
            throw std::domain_error(
                "ansatzDerivE: unbounded boundary derivative; supply an interior margin");
    };
    switch (m.kind) {
    case ModelKind::King:
        return -std::exp(de);
    case ModelKind::MichieKing:
        return -std::exp(-0.5 * ell / (m.ra * m.ra)) * std::exp(de);
    case ModelKind::Polytrope:
        guardBoundary(m.q);
        return -m.q * std::pow(de, m.q - 1.0) *
               (m.kappa == 0.0 ? 1.0 : std::pow(ell, m.kappa));
    case ModelKind::DoublePower: {
        double sum = 0.0;
        for (const auto& t : m.terms) {
            guardBoundary(t.q);
            sum += t.alpha * t.q * std::pow(de, t.q - 1.0) *
                   (t.kappa == 0.0 ? 1.0 : std::pow(ell, t.kappa));
        }
        return -sum;
    }
    case ModelKind::OsipkovMerritt: {
        double t = de - 0.5 * ell / (m.ra * m.ra);
        if (t <= 0.0) return 0.0;
        guardBoundary(m.omExponent);
        return -m.omExponent * std::pow(t, m.omExponent - 1.0);
    }
    case ModelKind::Tabulated: {
        // piecewise slope of the tabulated interpolant
        double h = 1e-6 * std::max(std::fabs(m.e0), 1.0);
        return (ansatzEval(m, e + h, ell) - ansatzEval(m, e - h, ell)) / (2.0 * h);
    }
    }
    return 0.0;
}

double momentAtPotentialValue(const std::function<double(double, double)>& F, double eCap,
                              double phiR, double r, int moment, const MomentSettings& s) {
    if (phiR >= eCap) return 0.0;

    auto evalWith = [&](int nl, int ne) {
        if (r <= 0.0) {
            // central value: only ell = 0 contributes,
            // rho(0) = 4 pi sqrt2 \int (e - phi0)^{1/2} F(e, 0) de
            auto g = [&](double e) {
                double w = std::max(e - phiR, 0.0);
                double base = 4.0 * kPi * std::sqrt(2.0) * std::sqrt(w) * F(e, 0.0);
                return moment == 0 ? base : base * w;
            };
            return endpointGauss(g, phiR, eCap, ne * 2);
        }
        double lMax = 2.0 * r * r * (eCap - phiR);
        auto outer = [&](double ell) {
            double psi = phiR + 0.5 * ell / (r * r);
            if (psi >= eCap) return 0.0;
            auto inner = [&](double e) {
                double w = e - psi;
                if (w <= 0.0) return 0.0;
                double v = F(e, ell) / std::sqrt(w);
                return moment == 0 ? v : v * (e - phiR);
            };
            return endpointGauss(inner, psi, eCap, ne);
        };
        double I = endpointGauss(outer, 0.0, lMax, nl);
        return kPi * std::sqrt(2.0) / (r * r) * I;
    };

    double prev = evalWith(s.ellNodes, s.eNodes);
    if (!s.adaptive) return prev;
    for (int k = 1; k <= s.maxDoublings; ++k) {
        double cur = evalWith(s.ellNodes << k, s.eNodes << k);
        double scale = std::max({std::fabs(cur), std::fabs(prev), 1e-300});
        if (std::fabs(cur - prev) <= s.relTol * scale) return cur;
        prev = cur;
    }
    throw PrecisionError("momentAtPotentialValue: adaptive quadrature did not converge", prev);
}

double momentFromPotential(const std::function<double(double, double)>& F, double eCap,
                           const BasePotential& pot, double r, int moment,
                           const MomentSettings& s) {
    if (pot.isZero()) throw std::domain_error("momentFromPotential: degenerate potential");
    double phiR = r > 0.0 ? pot.phi(r) : pot.phiAtZero();
    return momentAtPotentialValue(F, eCap, phiR, r, moment, s);
}

namespace {

bool isIsotropic(const SteadyStateModel& m) {
    switch (m.kind) {
    case ModelKind::King:
        return true;
    case ModelKind::Polytrope:
        return m.kappa == 0.0;
    case ModelKind::DoublePower:
        for (const auto& t : m.terms)
            if (t.kappa != 0.0) return false;
        return true;
    default:
        return false;
    }
}

// isotropic ansatz: the inner ell integral is exact and the density reduces
// to rho = 4 sqrt2 pi \int_phi^{e0} F(e) sqrt(e - phi) de
double isotropicDensity(const SteadyStateModel& m, double phiR, int moment, int nodes) {
    if (phiR >= m.e0) return 0.0;
    auto g = [&](double e) {
        double w = std::max(e - phiR, 0.0);
        double base = 4.0 * std::sqrt(2.0) * kPi * std::sqrt(w) * ansatzEval(m, e, 0.0);
        return moment == 0 ? base : base * w;
    };
    return endpointGauss(g, phiR, m.e0, nodes);
}

} // namespace

double densityAtPotentialValue(const SteadyStateModel& model, double phiR, double r,
                               const MomentSettings& s) {
    if (isIsotropic(model)) return isotropicDensity(model, phiR, 0, 4 * s.eNodes);
    return momentAtPotentialValue(
        [&](double e, double ell) { return ansatzEval(model, e, ell); }, model.e0, phiR, r, 0, s);
}

namespace {

double kineticDensityAt(const SteadyStateModel& model, double phiR, double r,
                        const MomentSettings& s) {
    if (isIsotropic(model)) return isotropicDensity(model, phiR, 1, 4 * s.eNodes);
    return momentAtPotentialValue(
        [&](double e, double ell) { return ansatzEval(model, e, ell); }, model.e0, phiR, r, 1, s);
}

} // namespace

double densityFromPotential(const SteadyStateModel& model, const BasePotential& pot, double r,
                            const MomentSettings& s) {
    double phiR = r > 0.0 ? pot.phi(r) : pot.phiAtZero();
    return densityAtPotentialValue(model, phiR, r, s);
}

double gradNormSquared(const BasePotential& pot, double rSplit, int nodes) {
    auto f = [&](double r) { return sq(pot.dphi(r) * r); };
    double inner = gaussIntegrate(f, 0.0, rSplit, nodes);
    return inner + sq(pot.mass()) / rSplit;
}

double gradDiffNormSquared(const BasePotential& a, const BasePotential& b, double rSplit,
                           int nodes) {
    auto f = [&](double r) { return sq((a.dphi(r) - b.dphi(r)) * r); };
    double inner = gaussIntegrate(f, 0.0, rSplit, nodes);
    return inner + sq(a.mass() - b.mass()) / rSplit;
}

double SteadyStateSolution::profile(double s, double ell) const {
    if (s <= 0.0) {
        double eMin = jac_->floor(ell).eMin;
        return F(eMin, ell);
    }
    if (ell >= ellMax || profileSupport(ell) <= s) return 0.0;
    return F(jac_->inverse(s, ell), ell);
}

double SteadyStateSolution::profileSupport(double ell) const {
    if (ell >= ellMax) return 0.0;
    double eMin = jac_->floor(ell).eMin;
    if (eMin >= model.e0) return 0.0;
    return jac_->value(model.e0, ell);
}

double SteadyStateSolution::linfBound() const {
    // sup of F over the populated region; scanned along the floor curve
    double best = F(phiQ.phiAtZero(), 0.0);
    for (int k = 1; k <= 64; ++k) {
        double ell = ellMax * double(k) / 65.0;
        best = std::max(best, F(jac_->floor(ell).eMin, ell));
    }
    return best;
}

void SteadyStateSolution::finalize() {
    const double e0 = model.e0;
    if (phiQ.isZero() || phiQ.phiAtZero() >= e0)
        throw ConvergenceError("solveSteadyState: converged to the vacuum branch");
    jac_ = std::make_unique<JacobianEvaluator>(phiQ);
    mass = phiQ.mass();
    // support radius: phi increasing, phi(R_Q) = e0
    double lo = 0.0, hi = phiQ.grid().rMax();
    if (phiQ.phi(hi) < e0) throw ConvergenceError("finalize: support exceeds the grid");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (phiQ.phi(mid) < e0 ? lo : hi) = mid;
    }
    supportRadius = 0.5 * (lo + hi);

    // ell cap: floor energy reaches e0
    double l1 = 1e-6, l2 = 1.0;
    while (orbitEnergyFloor(phiQ, l2).eMin < e0) l2 *= 2.0;
    while (orbitEnergyFloor(phiQ, l1).eMin >= e0) l1 *= 0.5;
    for (int it = 0; it < 200; ++it) {
        double mid = std::sqrt(l1 * l2);
        (orbitEnergyFloor(phiQ, mid).eMin < e0 ? l1 : l2) = mid;
    }
    ellMax = std::sqrt(l1 * l2);

    // energies
    auto kin = [&](double r) {
        return kFourPi * r * r * kineticDensityAt(model, phiQ.phi(r), r, MomentSettings{});
    };
    kineticEnergy = gaussIntegrate(kin, 0.0, supportRadius, 96);
    potentialEnergy = -0.5 * gradNormSquared(phiQ, phiQ.grid().rMax());
    hamiltonian = kineticEnergy + potentialEnergy;
    virialRatio = std::fabs(2.0 * kineticEnergy + potentialEnergy) / std::fabs(potentialEnergy);
}

namespace {

// Linear response of the discrete Poisson solve: column j is the node
// potential generated by a unit density at node j.
Matrix poissonMatrix(const RadialGrid& grid) {
    std::size_t n = grid.size();
    Matrix P(n, n, 0.0);
    std::vector<double> unit(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        unit[j] = 1.0;
        RadialPotential col = solvePoisson(grid, unit);
        for (std::size_t i = 0; i < n; ++i) P(i, j) = col.nodeValues()[i];
        unit[j] = 0.0;
    }
    return P;
}

} // namespace

namespace {

// Outward integration of the hydrostatic pair phi' = m / r^2,
// m' = 4 pi r^2 rho(phi, r) from a trial central depth. Returns the node
// potential and the far-field mismatch phi(rMax) + m(rMax) / rMax, which
// vanishes exactly when the trial depth hits the self-consistent branch.
double integrateOutward(const SteadyStateModel& model, const RadialGrid& grid, double phiC,
                        const MomentSettings& moments, std::vector<double>* phiOut) {
    const std::size_t n = grid.size();
    if (phiOut) phiOut->assign(n, 0.0);
    double phi = phiC, m = 0.0, r = grid.r.front();
    if (phiOut) (*phiOut)[0] = phi;
    auto rhs = [&](double rr, double ph, double mm, double& dphi, double& dm) {
        dphi = rr > 0.0 ? mm / (rr * rr) : 0.0;
        dm = kFourPi * rr * rr * densityAtPotentialValue(model, ph, rr, moments);
    };
    // internal step adapted to the core scale so concentrated wells stay
    // resolved whatever the node ladder looks like
    double rhoC = densityAtPotentialValue(model, phiC, 0.0, moments);
    double coreScale = 0.5 * std::sqrt(std::fabs(model.e0 - phiC) /
                                       (kFourPi * std::max(rhoC, 1e-30)));
    coreScale = std::min(coreScale, 0.05 * grid.rMax());
    for (std::size_t i = 1; i < n; ++i) {
        double target = grid.r[i];
        while (r < target) {
            double h = std::min(0.02 * (r + coreScale), target - r);
            double k1p, k1m, k2p, k2m, k3p, k3m, k4p, k4m;
            rhs(r, phi, m, k1p, k1m);
            rhs(r + 0.5 * h, phi + 0.5 * h * k1p, m + 0.5 * h * k1m, k2p, k2m);
            rhs(r + 0.5 * h, phi + 0.5 * h * k2p, m + 0.5 * h * k2m, k3p, k3m);
            rhs(r + h, phi + h * k3p, m + h * k3m, k4p, k4m);
            phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            m += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
            r += h;
            if (!std::isfinite(phi) || !std::isfinite(m)) return kInf;
        }
        if (phiOut) (*phiOut)[i] = std::min(phi, 0.0);
    }
    return phi + m / grid.rMax();
}

// Scalar shooting on the central depth: the far-field mismatch is negative
// at the vacuum end and positive once the well is deep enough.
std::vector<double> shootInitialState(const SteadyStateModel& model, const RadialGrid& grid,
                                      const MomentSettings& moments) {
    MomentSettings coarse = moments;
    coarse.ellNodes = std::min(coarse.ellNodes, 24);
    coarse.eNodes = std::min(coarse.eNodes, 24);
    // additive deepening finds the first (stable-branch) crossing
    double step = 0.25 * std::fabs(model.e0);
    double lo = model.e0;                    // vacuum side, mismatch < 0
    double hi = model.e0 - step;
    for (int it = 0;; ++it) {
        double g = integrateOutward(model, grid, hi, coarse, nullptr);
        if (std::isfinite(g) && g > 0.0) break;
        if (std::isfinite(g)) lo = hi;
        hi -= step;
        if (it > 16) step *= 2.0;
        if (it > 200)
            throw ConvergenceError("solveSteadyState: no shooting bracket for the central depth");
    }
    for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lo + hi);
        double g = integrateOutward(model, grid, mid, coarse, nullptr);
        ((std::isfinite(g) && g <= 0.0) ? lo : hi) = mid;
        if (std::fabs(hi - lo) <= 1e-12 * std::fabs(hi) + 1e-14) break;
    }
    std::vector<double> phi;
    integrateOutward(model, grid, 0.5 * (lo + hi), coarse, &phi);
    return phi;
}

} // namespace

// Builds the self-consistent pair (Q, phi_Q) on the grid. A scalar shooting
// pass on the central depth lands next to the solution branch; the discrete
// fixed-point equation phi = P(rho[phi]) is then polished by damped Newton.
// The relaxed sweep phi <- (1-w) phi + w P(rho[phi]) alone is a saddle for
// cutoff exponential models (the density response gain exceeds one), which
// is why the update is Newton rather than Picard; the reported residual is
// still the fixed-point sup-norm of the returned iterate.
SteadyStateSolution solveSteadyState(const SteadyStateModel& model, const RadialGrid& grid,
                                     const SolveSettings& s) {
    model.validate();
    const std::size_t n = grid.size();

    std::vector<double> phi;
    {
        // an initial well shallower than the cutoff has no bound support
        PlummerPotential guess(s.initialDepthFactor * std::fabs(model.e0), 1.0);
        if (guess.phi(0.0) >= model.e0)
            throw ConvergenceError("solveSteadyState: collapsed to vacuum");
        phi = shootInitialState(model, grid, s.moments);
    }

    Matrix P = poissonMatrix(grid);

    std::vector<double> rho(n), history;
    auto densitySweep = [&](const std::vector<double>& phiVec, std::vector<double>& out) {
        parallelFor(n, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i)
                out[i] = densityAtPotentialValue(model, phiVec[i], grid.r[i], s.moments);
        });
    };
    auto residualOf = [&](const std::vector<double>& phiVec, std::vector<double>& rhoOut,
                          std::vector<double>& gOut) {
        densitySweep(phiVec, rhoOut);
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double img = 0.0;
            for (std::size_t j = 0; j < n; ++j) img += P(i, j) * rhoOut[j];
            gOut[i] = phiVec[i] - img;
            res = std::max(res, std::fabs(gOut[i]));
        }
        return std::isfinite(res) ? res : kInf;
    };

    std::vector<double> g(n), gTrial(n), rhoTrial(n), drho(n);
    double res = residualOf(phi, rho, g);
    int iter = 0;
    for (; iter < s.maxIter && res > s.tol; ++iter) {
        double rhoMax = *std::max_element(rho.begin(), rho.end());
        if (rhoMax <= 0.0)
            throw ConvergenceError("solveSteadyState: collapsed to vacuum", history);

        // local density response d rho / d phi at each node
        parallelFor(n, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                double h = 1e-6 * std::max(std::fabs(model.e0 - phi[i]), 1e-3);
                double up = densityAtPotentialValue(model, phi[i] + h, grid.r[i], s.moments);
                double dn = densityAtPotentialValue(model, phi[i] - h, grid.r[i], s.moments);
                drho[i] = (up - dn) / (2.0 * h);
            }
        });

        Matrix A(n, n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) A(i, j) = -P(i, j) * drho[j];
            A(i, i) += 1.0;
        }
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = -g[i];
        std::vector<double> delta = luSolve(std::move(A), std::move(rhs));

        // backtracking line search on the fixed-point residual
        double lambda = 1.0, trialRes = kInf;
        std::vector<double> trial(n);
        bool accepted = false;
        for (int ls = 0; ls < 12; ++ls) {
            for (std::size_t i = 0; i < n; ++i)
                trial[i] = std::min(phi[i] + lambda * delta[i], 0.0);
            trialRes = residualOf(trial, rhoTrial, gTrial);
            if (trialRes < res * (1.0 - 0.25 * lambda) || trialRes < s.tol) {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted)
            throw ConvergenceError("solveSteadyState: line search stalled", history);
        phi.swap(trial);
        rho.swap(rhoTrial);
        g.swap(gTrial);
        res = trialRes;
        history.push_back(res);
    }
    if (res > s.tol)
        throw ConvergenceError("solveSteadyState: no convergence in " +
                                   std::to_string(s.maxIter) + " iterations",
                               history);

    SteadyStateSolution sol;
    sol.model = model;
    sol.phiQ = solvePoisson(grid, rho);
    sol.rhoQ = std::move(rho);
    sol.residual = res;
    sol.iterations = iter;
    sol.finalize();
    return sol;
}

RadialGrid fitGrid(const SteadyStateModel& model, std::size_t nodes, double padFactor) {
    MomentSettings coarse;
    coarse.ellNodes = 16;
    coarse.eNodes = 16;
    // probe shooting, refining the window around the support twice
    double rProbe = 8.0 * std::fabs(model.e0);
    double rSupport = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
        RadialGrid probe = RadialGrid::sinhGraded(rProbe, 257);
        std::vector<double> phi;
        try {
            phi = shootInitialState(model, probe, coarse);
        } catch (const ConvergenceError&) {
            rProbe *= 4.0;
            continue;
        }
        rSupport = rProbe;
        for (std::size_t i = 1; i < probe.size(); ++i)
            if (phi[i] >= model.e0) {
                // linear crossing between the straddling nodes
                double t = (model.e0 - phi[i - 1]) / (phi[i] - phi[i - 1]);
                rSupport = probe.r[i - 1] + t * (probe.r[i] - probe.r[i - 1]);
                break;
            }
        if (rSupport > 0.5 * rProbe) {
            rProbe *= 4.0;
            continue;
        }
        if (rProbe > 8.0 * rSupport) {
            // re-probe on a window matched to the structure
            rProbe = 4.0 * rSupport;
            continue;
        }
        return RadialGrid::sinhGraded(padFactor * rSupport, nodes);
    }
    throw ConvergenceError("fitGrid: could not bracket the support radius");
}

} // namespace vpstab
