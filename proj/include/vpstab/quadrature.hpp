#pragma once

#include <functional>
#include <vector>

#include "vpstab/common.hpp"

namespace vpstab {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1,1].
struct GaussRule {
    std::vector<double> x, w;
};

/// Cached Gauss-Legendre rule (nodes by Newton iteration on P_n).
const GaussRule& gaussLegendre(int n);

/// \int_a^b f dx with a fixed n-point rule.
template <class F>
double gaussIntegrate(const F& f, double a, double b, int n) {
    const GaussRule& g = gaussLegendre(n);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    KahanSum s;
    for (int i = 0; i < n; ++i) s.add(g.w[i] * f(mid + half * g.x[i]));
    return half * s.value();
}

/// Doubles the node count until two successive estimates agree to relTol,
/// starting from n0 and capped at nMax. Throws PrecisionError on stall.
template <class F>
double adaptiveGauss(const F& f, double a, double b, double relTol,
                     int n0 = 64, int nMax = 4096) {
    double prev = gaussIntegrate(f, a, b, n0);
    for (int n = 2 * n0; n <= nMax; n *= 2) {
        double cur = gaussIntegrate(f, a, b, n);
        double scale = std::max({std::fabs(cur), std::fabs(prev), 1e-300});
        if (std::fabs(cur - prev) <= relTol * scale) return cur;
        prev = cur;
    }
    double cur = gaussIntegrate(f, a, b, nMax);
    double scale = std::max({std::fabs(cur), std::fabs(prev), 1e-300});
    double achieved = std::fabs(cur - prev) / scale;
    if (achieved <= relTol) return cur;
    throw PrecisionError("adaptive quadrature stalled at relative error " +
                             std::to_string(achieved),
                         achieved);
}

/// \int_a^b f dx where f may have integrable endpoint singularities up to
/// inverse-square-root strength: maps t in [0,1] through the cosine blend
/// x = a + (b-a)(1-cos(pi t))/2, which clusters nodes at both ends.
template <class F>
double endpointGauss(const F& f, double a, double b, int n) {
    if (b <= a) return 0.0;
    const GaussRule& g = gaussLegendre(n);
    double len = b - a;
    KahanSum s;
    for (int i = 0; i < n; ++i) {
        double t = 0.5 * (1.0 + g.x[i]); // in (0,1)
        double x = a + len * 0.5 * (1.0 - std::cos(kPi * t));
        double jac = len * 0.5 * kPi * std::sin(kPi * t);
        s.add(0.5 * g.w[i] * jac * f(x));
    }
    return s.value();
}

template <class F>
double adaptiveEndpointGauss(const F& f, double a, double b, double relTol,
                             int n0 = 64, int nMax = 4096) {
    double prev = endpointGauss(f, a, b, n0);
    for (int n = 2 * n0; n <= nMax; n *= 2) {
        double cur = endpointGauss(f, a, b, n);
        double scale = std::max({std::fabs(cur), std::fabs(prev), 1e-300});
        if (std::fabs(cur - prev) <= relTol * scale) return cur;
        prev = cur;
    }
    double cur = endpointGauss(f, a, b, nMax);
    double scale = std::max({std::fabs(cur), std::fabs(prev), 1e-300});
    double achieved = std::fabs(cur - prev) / scale;
    if (achieved <= relTol) return cur;
    throw PrecisionError("adaptive endpoint quadrature stalled at relative error " +
                             std::to_string(achieved),
                         achieved);
}

} // namespace vpstab
