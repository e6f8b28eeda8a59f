#pragma once

#include <map>
#include <mutex>

#include "vpstab/potential.hpp"
#include "vpstab/quadrature.hpp"

namespace vpstab {

struct JacobianSettings {
    int initialNodes = 64;
    int maxNodes = 4096;
    double relTol = 1e-10;
    double inverseRelTol = 1e-12;
};

/// Phase-area Jacobian a_phi(e, ell): the nu_ell measure of the sub-level
/// set {u^2/2 + phi < e}. Strictly increasing in e on (floor, 0), zero at
/// the floor, +inf sentinel for e >= 0. Endpoint square-root singularities
/// are removed by the substitution r = r1 + (r2 - r1) sin^2(theta).
class JacobianEvaluator {
public:
    explicit JacobianEvaluator(const BasePotential& pot, JacobianSettings s = {});

    /// a_phi(e, ell); 0 below the floor, +inf for e >= 0
    double value(double e, double ell) const;

    /// d a_phi / d e on the open interval (floor, 0); strictly positive
    double derivE(double e, double ell) const;

    /// e with a_phi(e, ell) = s, for s > 0
    double inverse(double s, double ell) const;

    /// memoized minimum of the effective potential at ell
    OrbitFloor floor(double ell) const;

    const BasePotential& potential() const { return pot_; }

    /// pre-populates the floor cache so later evaluation is lock-free reads
    void warmFloor(const std::vector<double>& ells) const;

private:
    const BasePotential& pot_;
    JacobianSettings settings_;
    mutable std::map<double, OrbitFloor> floorCache_;
    mutable std::mutex cacheMutex_;
};

} // namespace vpstab
