#include "vpstab/jacobian.hpp"

namespace vpstab {

namespace {
const double kAphiFront = 8.0 * kPi * kPi * std::sqrt(2.0);   // weight of the 1/2-power integral
const double kDaphiFront = 4.0 * kPi * kPi * std::sqrt(2.0);  // weight of the -1/2-power integral
} // namespace

JacobianEvaluator::JacobianEvaluator(const BasePotential& pot, JacobianSettings s)
    : pot_(pot), settings_(s) {
    if (pot_.isZero()) throw std::domain_error("JacobianEvaluator: degenerate potential");
}

OrbitFloor JacobianEvaluator::floor(double ell) const {
    {
        std::lock_guard<std::mutex> lock(cacheMutex_);
        auto it = floorCache_.find(ell);
        if (it != floorCache_.end()) return it->second;
    }
    OrbitFloor f = orbitEnergyFloor(pot_, ell);
    std::lock_guard<std::mutex> lock(cacheMutex_);
    floorCache_.emplace(ell, f);
    return f;
}

void JacobianEvaluator::warmFloor(const std::vector<double>& ells) const {
    for (double ell : ells) floor(ell);
}

double JacobianEvaluator::value(double e, double ell) const {
    OrbitFloor f = floor(ell);
    if (e >= 0.0) return kInf;
    if (e <= f.eMin) return 0.0;
    EffectiveOrbit orb = orbitBounds(pot_, e, ell);
    if (orb.empty) return 0.0;
    double span = orb.rApo - orb.rPeri;
    auto integrand = [&](double theta) {
        double st = std::sin(theta);
        double r = orb.rPeri + span * st * st;
        double val = e - pot_.psi(r, ell);
        if (val <= 0.0) return 0.0;
        return std::sqrt(val) * span * std::sin(2.0 * theta);
    };
    double I = adaptiveGauss(integrand, 0.0, 0.5 * kPi, settings_.relTol,
                             settings_.initialNodes, settings_.maxNodes);
    return kAphiFront * I;
}

double JacobianEvaluator::derivE(double e, double ell) const {
    OrbitFloor f = floor(ell);
    if (!(e > f.eMin && e < 0.0))
        throw std::domain_error("JacobianEvaluator::derivE: e outside (floor, 0)");
    EffectiveOrbit orb = orbitBounds(pot_, e, ell);
    double span = orb.rApo - orb.rPeri;
    if (span <= 0.0) {
        // harmonic limit: the integral tends to pi / sqrt(psi''(r0) / 2)
        double h = std::max(1e-6 * orb.r0, 1e-12);
        double ddpsi = (pot_.psi(orb.r0 + h, ell) - 2.0 * pot_.psi(orb.r0, ell) +
                        pot_.psi(orb.r0 - h, ell)) / (h * h);
        return kDaphiFront * kPi / std::sqrt(std::max(ddpsi, 1e-300) * 0.5) / 2.0;
    }
    auto integrand = [&](double theta) {
        double st = std::sin(theta), ct = std::cos(theta);
        double r = orb.rPeri + span * st * st;
        double val = e - pot_.psi(r, ell);
        // cancellation floor: the concavity minorant evaluated from the
        // substitution variables, (r - r1)(r2 - r) = span^2 sin^2 cos^2
        double minorant = ell / (2.0 * r * r * orb.rPeri * orb.rApo) * sq(span * st * ct);
        if (val < minorant) val = minorant;
        if (val <= 0.0) return 0.0;
        return span * std::sin(2.0 * theta) / std::sqrt(val);
    };
    double I = adaptiveGauss(integrand, 0.0, 0.5 * kPi, settings_.relTol,
                             settings_.initialNodes, settings_.maxNodes);
    return kDaphiFront * I;
}

double JacobianEvaluator::inverse(double s, double ell) const {
    if (!(s > 0.0)) throw std::domain_error("JacobianEvaluator::inverse: s must be positive");
    OrbitFloor f = floor(ell);
    double eLo = f.eMin;
    double eHi = 0.5 * f.eMin;
    for (int it = 0; value(eHi, ell) < s; ++it) {
        eHi *= 0.5;
        if (it > 200)
            throw ConvergenceError("JacobianEvaluator::inverse: no upper bracket");
    }
    // bisection to a coarse bracket, then Newton with the analytic derivative
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (eLo + eHi);
        (value(mid, ell) < s ? eLo : eHi) = mid;
        if (eHi - eLo <= 1e-5 * std::fabs(eHi) + 1e-300) break;
    }
    double e = 0.5 * (eLo + eHi);
    for (int it = 0; it < 100; ++it) {
        double fe = value(e, ell) - s;
        double dfe = derivE(e, ell);
        double step = fe / dfe;
        double en = e - step;
        if (en <= eLo || en >= eHi) {
            double mid = 0.5 * (eLo + eHi);
            (value(mid, ell) < s ? eLo : eHi) = mid;
            en = 0.5 * (eLo + eHi);
        } else {
            (fe < 0.0 ? eLo : eHi) = e;
        }
        if (std::fabs(en - e) <= settings_.inverseRelTol * std::fabs(en)) {
            e = en;
            break;
        }
        e = en;
    }
    return e;
}

} // namespace vpstab
