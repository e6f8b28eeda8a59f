#pragma once

// Test-side oracles, independent of the library code paths they check.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Kepler closed forms for phi = -M/r at squared angular momentum ell.
struct Kepler {
    double M;
    double eFloor(double ell) const { return -M * M / (2.0 * ell); }
    double r0(double ell) const { return ell / M; }
    // roots of e r^2 + M r - ell/2 = 0 for eFloor < e < 0
    double rPeri(double e, double ell) const {
        double d = std::sqrt(M * M + 2.0 * e * ell);
        return (M - d) / (-2.0 * e);
    }
    double rApo(double e, double ell) const {
        double d = std::sqrt(M * M + 2.0 * e * ell);
        return (M + d) / (-2.0 * e);
    }
    // radial-action closed form of the phase-area Jacobian
    double aphi(double e, double ell) const {
        return 8.0 * kPi * kPi * kPi * (M / std::sqrt(-2.0 * e) - std::sqrt(ell));
    }
    double daphi(double e, double ell) const {
        (void)ell;
        return 8.0 * kPi * kPi * kPi * M * std::pow(-2.0 * e, -1.5);
    }
    double aphiInverse(double s, double ell) const {
        double t = s / (8.0 * kPi * kPi * kPi) + std::sqrt(ell);
        return -0.5 * (M / t) * (M / t);
    }
};

// Brute-force midpoint quadrature of the phase-area integral; slow but
// entirely independent of the production sin^2-substitution path.
inline double aphiBruteForce(const std::function<double(double)>& phi, double e, double ell,
                             double r1, double r2, long panels) {
    double h = (r2 - r1) / double(panels);
    double sum = 0.0;
    for (long i = 0; i < panels; ++i) {
        double r = r1 + (i + 0.5) * h;
        double val = e - phi(r) - 0.5 * ell / (r * r);
        if (val > 0.0) sum += std::sqrt(val);
    }
    return 8.0 * kPi * kPi * std::sqrt(2.0) * sum * h;
}

// Trapezoid cumulative integral oracle on a node grid.
inline std::vector<double> cumulativeTrapezoid(const std::vector<double>& x,
                                               const std::vector<double>& y) {
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return out;
}

// Central finite difference with adaptive relative step.
inline double centralDiff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace oracle
