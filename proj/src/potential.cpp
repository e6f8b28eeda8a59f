#include "vpstab/potential.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace vpstab {

namespace {

constexpr int kMaxBisect = 200;
constexpr double kRelTolR = 1e-12;
constexpr double kRelTolE = 1e-13;

// Fritsch-Carlson style slope limiting: keeps the Hermite segment monotone
// for nondecreasing data.
void limitSlopes(const std::vector<double>& x, const std::vector<double>& y,
                 std::vector<double>& d) {
    std::size_t n = x.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double h = x[i + 1] - x[i];
        double sec = (y[i + 1] - y[i]) / h;
        if (sec == 0.0) {
            d[i] = 0.0;
            d[i + 1] = 0.0;
            continue;
        }
        double a = d[i] / sec, b = d[i + 1] / sec;
        double s = a * a + b * b;
        if (s > 9.0) {
            double t = 3.0 / std::sqrt(s);
            d[i] = t * a * sec;
            d[i + 1] = t * b * sec;
        }
    }
}

} // namespace

RadialPotential::RadialPotential(RadialGrid grid, std::vector<double> values,
                                 std::vector<double> derivs, double totalMass)
    : grid_(std::move(grid)), values_(std::move(values)), derivs_(std::move(derivs)),
      mass_(totalMass) {
    if (values_.size() != grid_.size() || derivs_.size() != grid_.size())
        throw std::domain_error("RadialPotential: size mismatch");
    for (double v : values_)
        if (!std::isfinite(v) || v > 0.0)
            throw std::domain_error("RadialPotential: phi must be finite and <= 0");
    for (double d : derivs_)
        if (!std::isfinite(d) || d < 0.0)
            throw std::domain_error("RadialPotential: phi' must be finite and >= 0");
    interpDerivs_ = derivs_;
    limitSlopes(grid_.r, values_, interpDerivs_);
}

void RadialPotential::setCurvature(std::vector<double> d2) {
    if (d2.size() != grid_.size()) throw std::domain_error("setCurvature: size mismatch");
    curv_ = std::move(d2);
}

namespace {

// quintic Hermite with endpoint values, slopes and curvatures
double quintic(double t, double h, double y0, double d0, double c0, double y1, double d1,
               double c1) {
    double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    double H1 = t - 6 * t3 + 8 * t4 - 3 * t5;
    double H2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    double K0 = 10 * t3 - 15 * t4 + 6 * t5;
    double K1 = -4 * t3 + 7 * t4 - 3 * t5;
    double K2 = 0.5 * t3 - t4 + 0.5 * t5;
    return y0 * H0 + h * d0 * H1 + h * h * c0 * H2 + y1 * K0 + h * d1 * K1 + h * h * c1 * K2;
}

double quinticDeriv(double t, double h, double y0, double d0, double c0, double y1, double d1,
                    double c1) {
    double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    double H0 = -30 * t2 + 60 * t3 - 30 * t4;
    double H1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    double H2 = t - 4.5 * t2 + 6 * t3 - 2.5 * t4;
    double K0 = 30 * t2 - 60 * t3 + 30 * t4;
    double K1 = -12 * t2 + 28 * t3 - 15 * t4;
    double K2 = 1.5 * t2 - 4 * t3 + 2.5 * t4;
    return (y0 * H0 + h * d0 * H1 + h * h * c0 * H2 + y1 * K0 + h * d1 * K1 + h * h * c1 * K2) /
           h;
}

} // namespace

double RadialPotential::phi(double r) const {
    if (values_.empty()) return 0.0;
    const auto& x = grid_.r;
    if (r <= x.front()) return values_.front();
    if (r >= x.back()) return -mass_ / r;
    std::size_t i = grid_.segment(r);
    double h = x[i + 1] - x[i];
    double t = (r - x[i]) / h;
    if (!curv_.empty())
        return quintic(t, h, values_[i], derivs_[i], curv_[i], values_[i + 1], derivs_[i + 1],
                       curv_[i + 1]);
    double t2 = t * t, t3 = t2 * t;
    return values_[i] * (2 * t3 - 3 * t2 + 1) + values_[i + 1] * (-2 * t3 + 3 * t2) +
           h * (interpDerivs_[i] * (t3 - 2 * t2 + t) + interpDerivs_[i + 1] * (t3 - t2));
}

double RadialPotential::dphi(double r) const {
    if (values_.empty()) return 0.0;
    const auto& x = grid_.r;
    if (r <= x.front()) return 0.0;
    if (r >= x.back()) return mass_ / (r * r);
    std::size_t i = grid_.segment(r);
    double h = x[i + 1] - x[i];
    double t = (r - x[i]) / h;
    if (!curv_.empty())
        return quinticDeriv(t, h, values_[i], derivs_[i], curv_[i], values_[i + 1],
                            derivs_[i + 1], curv_[i + 1]);
    double t2 = t * t;
    return (values_[i] * (6 * t2 - 6 * t) + values_[i + 1] * (-6 * t2 + 6 * t)) / h +
           interpDerivs_[i] * (3 * t2 - 4 * t + 1) + interpDerivs_[i + 1] * (3 * t2 - 2 * t);
}

OrbitFloor orbitEnergyFloor(const BasePotential& pot, double ell) {
    if (!(ell > 0.0)) throw std::domain_error("orbitEnergyFloor: ell must be positive");
    if (pot.isZero()) throw std::domain_error("orbitEnergyFloor: degenerate potential");
    // g(r) = r^2 psi' = r^2 phi' - ell/r is strictly increasing
    auto g = [&](double r) { return r * r * pot.dphi(r) - ell / r; };
    double rHat = std::max(ell / pot.mass(), 1e-30);
    double lo = rHat, hi = rHat;
    for (int it = 0; g(lo) >= 0.0; ++it) {
        lo *= 0.5;
        if (it > 600) throw ConvergenceError("orbitEnergyFloor: no inner bracket");
    }
    for (int it = 0; g(hi) <= 0.0; ++it) {
        hi *= 2.0;
        if (it > 600) throw ConvergenceError("orbitEnergyFloor: no outer bracket");
    }
    for (int it = 0; it < kMaxBisect; ++it) {
        double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
        if (hi - lo <= kRelTolR * hi) break;
    }
    double r0 = 0.5 * (lo + hi);
    return {r0, pot.psi(r0, ell)};
}

namespace {

// Monotone root of psi = e on a bracket where psi is monotone; bisection with
// a Newton polish once the bracket is tight.
double turningPoint(const BasePotential& pot, double e, double ell, double lo, double hi,
                    bool decreasing) {
    for (int it = 0; it < kMaxBisect; ++it) {
        double mid = 0.5 * (lo + hi);
        double v = pot.psi(mid, ell) - e;
        bool goRight = decreasing ? (v > 0.0) : (v < 0.0);
        (goRight ? lo : hi) = mid;
        if (hi - lo <= 1e-6 * hi) break;
    }
    double r = 0.5 * (lo + hi);
    for (int it = 0; it < 60; ++it) {
        double f = pot.psi(r, ell) - e;
        double df = pot.dpsi(r, ell);
        if (df == 0.0) break;
        double step = f / df;
        double rn = r - step;
        if (rn <= lo || rn >= hi) {
            // fall back to bisection inside the bracket
            double v = pot.psi(0.5 * (lo + hi), ell) - e;
            bool goRight = decreasing ? (v > 0.0) : (v < 0.0);
            (goRight ? lo : hi) = 0.5 * (lo + hi);
            rn = 0.5 * (lo + hi);
        }
        if (std::fabs(rn - r) <= kRelTolR * r) {
            r = rn;
            break;
        }
        r = rn;
    }
    return r;
}

} // namespace

EffectiveOrbit orbitBounds(const BasePotential& pot, double e, double ell) {
    OrbitFloor floor = orbitEnergyFloor(pot, ell);
    EffectiveOrbit orb;
    orb.e = e;
    orb.ell = ell;
    orb.eMin = floor.eMin;
    orb.r0 = floor.r0;
    if (e >= 0.0) throw std::domain_error("orbitBounds: unbound orbit, e >= 0");
    if (e <= floor.eMin + kRelTolE * std::fabs(floor.eMin)) {
        orb.rPeri = orb.rApo = floor.r0;
        orb.empty = true;
        return orb;
    }
    // inner bracket: psi decreasing on (0, r0), psi -> +inf as r -> 0
    double a = floor.r0;
    for (int it = 0; pot.psi(a, ell) <= e; ++it) {
        a *= 0.5;
        if (it > 600) throw ConvergenceError("orbitBounds: no pericenter bracket");
    }
    orb.rPeri = turningPoint(pot, e, ell, a, floor.r0, true);
    // outer bracket: psi increasing on (r0, inf), psi -> 0 > e
    double b = floor.r0;
    for (int it = 0; pot.psi(b, ell) <= e; ++it) {
        b *= 2.0;
        if (it > 600) throw ConvergenceError("orbitBounds: no apocenter bracket");
    }
    orb.rApo = turningPoint(pot, e, ell, floor.r0, b, false);
    return orb;
}

double potentialFloor(const BasePotential& pot) {
    if (pot.isZero()) throw std::domain_error("potentialFloor: degenerate potential");
    // scan a wide logarithmic range plus the far-field limit M
    double best = pot.mass();
    for (int i = 0; i <= 4000; ++i) {
        double r = std::pow(10.0, -4.0 + 8.0 * i / 4000.0);
        double v = (r + 1.0) * std::fabs(pot.phi(r));
        best = std::min(best, v);
    }
    best = std::min(best, std::fabs(pot.phiAtZero()));
    return best;
}

double potentialFloor(const RadialPotential& pot) {
    if (pot.isZero()) throw std::domain_error("potentialFloor: degenerate potential");
    // nodes, segment midpoints and the far-field tail; the tail infimum of
    // (r+1) M / r is the limit M at r -> inf
    double best = pot.mass();
    const auto& r = pot.grid().r;
    auto probe = [&](double x) {
        double v = (x + 1.0) * std::fabs(pot.phi(x));
        best = std::min(best, v);
    };
    probe(0.0);
    for (std::size_t i = 0; i < r.size(); ++i) {
        probe(r[i]);
        if (i + 1 < r.size()) {
            probe(0.75 * r[i] + 0.25 * r[i + 1]);
            probe(0.5 * (r[i] + r[i + 1]));
            probe(0.25 * r[i] + 0.75 * r[i + 1]);
        }
    }
    if (best <= 0.0) throw std::domain_error("potentialFloor: vanishing floor");
    return best;
}

double concavityMinorant(const EffectiveOrbit& orbit, double r) {
    if (r < orbit.rPeri || r > orbit.rApo)
        throw std::domain_error("concavityMinorant: r outside [r1, r2]");
    if (orbit.empty) return 0.0;
    return orbit.ell / (2.0 * r * r * orbit.rPeri * orbit.rApo) * (r - orbit.rPeri) *
           (orbit.rApo - r);
}

RadialPotential solvePoisson(const RadialGrid& grid, const std::vector<double>& rho) {
    std::size_t n = grid.size();
    if (rho.size() != n) throw std::domain_error("solvePoisson: rho size mismatch");
    for (double v : rho)
        if (!std::isfinite(v) || v < 0.0)
            throw std::domain_error("solvePoisson: rho must be finite and nonnegative");
    const auto& r = grid.r;

    // cumulative interior mass m(r) = 4 pi int_0^r s^2 rho ds (trapezoid)
    std::vector<double> m(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        double h = r[i] - r[i - 1];
        m[i] = m[i - 1] +
               kFourPi * 0.5 * h * (r[i] * r[i] * rho[i] + r[i - 1] * r[i - 1] * rho[i - 1]);
    }
    double mass = m.back();

    // outer integral 4 pi int_r^R s rho ds (trapezoid, from the edge inward)
    std::vector<double> outer(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) {
        double h = r[i + 1] - r[i];
        outer[i] = outer[i + 1] + kFourPi * 0.5 * h * (r[i + 1] * rho[i + 1] + r[i] * rho[i]);
    }

    std::vector<double> phi(n), dphi(n);
    for (std::size_t i = 0; i < n; ++i) {
        phi[i] = (r[i] > 0.0 ? -m[i] / r[i] : 0.0) - outer[i];
        dphi[i] = r[i] > 0.0 ? m[i] / (r[i] * r[i]) : 0.0;
    }

    RadialPotential pot(grid, std::move(phi), std::move(dphi), mass);
    // curvature from the field equation itself: phi'' = 4 pi rho - 2 phi'/r
    std::vector<double> curv(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (r[i] > 0.0)
            curv[i] = kFourPi * rho[i] - 2.0 * pot.nodeDerivs()[i] / r[i];
        else
            curv[i] = kFourPi * rho[i] / 3.0;
    }
    pot.setCurvature(std::move(curv));
    if (mass > 0.0) {
        double edge = rho.back() * r.back() * r.back() * kFourPi;
        if (edge > 1e-10 * std::max(mass, 1e-300)) pot.setTruncationWarning(true);
    }
    return pot;
}

void writePotentialCsv(const std::string& path, const RadialPotential& pot,
                       const std::vector<double>& rho) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("writePotentialCsv: cannot open " + path);
    out << "r,phi,dphi,rho\n";
    const auto& r = pot.grid().r;
    char buf[160];
    for (std::size_t i = 0; i < r.size(); ++i) {
        double rh = i < rho.size() ? rho[i] : 0.0;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r[i], pot.nodeValues()[i],
                      pot.nodeDerivs()[i], rh);
        out << buf;
    }
}

} // namespace vpstab
