#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vpstab/grid.hpp"

namespace vpstab {

/// Radially symmetric gravitational potential. Conventions: G = 1 and
/// Laplacian(phi) = 4 pi rho, so r^2 phi'(r) = 4 pi \int_0^r s^2 rho ds and
/// r phi(r) -> -M with M the total mass (= |f|_L1).
class BasePotential {
public:
    virtual ~BasePotential() = default;

    virtual double phi(double r) const = 0;
    virtual double dphi(double r) const = 0;
    virtual double mass() const = 0;

    /// central value phi(0); finite for the admissible class
    virtual double phiAtZero() const { return phi(0.0); }

    /// effective radial potential at squared angular momentum ell
    double psi(double r, double ell) const {
        if (r <= 0.0) return ell > 0.0 ? kInf : phiAtZero();
        return phi(r) + 0.5 * ell / (r * r);
    }
    double dpsi(double r, double ell) const { return dphi(r) - ell / (r * r * r); }

    bool isZero() const { return mass() <= 0.0; }
};

/// Gridded potential with monotone cubic Hermite interpolation between nodes,
/// flat extension below the first node and -M/r beyond the last.
class RadialPotential final : public BasePotential {
public:
    RadialPotential() = default;

    /// values and derivatives at the grid nodes; derivatives are limited
    /// against the secants so phi stays nondecreasing segment-wise
    RadialPotential(RadialGrid grid, std::vector<double> values,
                    std::vector<double> derivs, double totalMass);

    double phi(double r) const override;
    double dphi(double r) const override;
    double mass() const override { return mass_; }
    double phiAtZero() const override { return values_.empty() ? 0.0 : values_.front(); }

    const RadialGrid& grid() const { return grid_; }
    const std::vector<double>& nodeValues() const { return values_; }
    /// raw node derivatives (r^2 phi' = 4 pi \int s^2 rho); interpolation uses
    /// slope-limited copies so phi stays monotone between nodes
    const std::vector<double>& nodeDerivs() const { return derivs_; }

    /// set when the source density had not decayed at the grid edge
    bool truncationWarning() const { return truncationWarning_; }
    void setTruncationWarning(bool w) { truncationWarning_ = w; }

    /// node curvature phi'' (known exactly from the field equation for a
    /// solved state); switches interpolation to C2 quintic Hermite
    void setCurvature(std::vector<double> d2);
    bool hasCurvature() const { return !curv_.empty(); }

private:
    RadialGrid grid_;
    std::vector<double> values_, derivs_, interpDerivs_, curv_;
    double mass_ = 0.0;
    bool truncationWarning_ = false;
};

/// Point-mass (Kepler) potential; test-harness only, no generating f exists.
class PointMassPotential final : public BasePotential {
public:
    explicit PointMassPotential(double m) : mass_(m) {}
    double phi(double r) const override { return r > 0.0 ? -mass_ / r : -kInf; }
    double dphi(double r) const override { return r > 0.0 ? mass_ / (r * r) : kInf; }
    double mass() const override { return mass_; }
    double phiAtZero() const override { return -kInf; }
private:
    double mass_;
};

/// Plummer sphere -M/sqrt(r^2+a^2); used for initial guesses and test fields.
class PlummerPotential final : public BasePotential {
public:
    PlummerPotential(double m, double a) : mass_(m), a2_(a * a) {}
    double phi(double r) const override { return -mass_ / std::sqrt(r * r + a2_); }
    double dphi(double r) const override {
        double d2 = r * r + a2_;
        return mass_ * r / (d2 * std::sqrt(d2));
    }
    double mass() const override { return mass_; }
private:
    double mass_, a2_;
};

/// phi + lambda * h for a radial direction h; supports the directional
/// differentiability checks of the Jacobian in the potential argument.
class BlendedPotential final : public BasePotential {
public:
    BlendedPotential(const BasePotential& base, const BasePotential& other, double lambda)
        : base_(base), other_(other), lambda_(lambda) {}
    double phi(double r) const override {
        return (1.0 - lambda_) * base_.phi(r) + lambda_ * other_.phi(r);
    }
    double dphi(double r) const override {
        return (1.0 - lambda_) * base_.dphi(r) + lambda_ * other_.dphi(r);
    }
    double mass() const override {
        return (1.0 - lambda_) * base_.mass() + lambda_ * other_.mass();
    }
    double phiAtZero() const override {
        return (1.0 - lambda_) * base_.phiAtZero() + lambda_ * other_.phiAtZero();
    }
private:
    const BasePotential& base_;
    const BasePotential& other_;
    double lambda_;
};

/// Bound radial orbit at (e, ell): energy floor, its location and the two
/// turning points. empty is set when e <= floor (orbit degenerates to r0).
struct EffectiveOrbit {
    double e = 0.0;
    double ell = 0.0;
    double eMin = 0.0;
    double r0 = 0.0;
    double rPeri = 0.0;
    double rApo = 0.0;
    bool empty = false;
};

/// Location and value of the minimum of psi(., ell). Bisection on the sign
/// change of r^2 psi', which is strictly increasing for admissible phi.
struct OrbitFloor {
    double r0;
    double eMin;
};
OrbitFloor orbitEnergyFloor(const BasePotential& pot, double ell);

/// Turning points of psi = e. Throws std::domain_error for e >= 0; returns
/// the degenerate circular orbit when e is at or below the floor.
EffectiveOrbit orbitBounds(const BasePotential& pot, double e, double ell);

/// inf over r >= 0 of (r+1)|phi(r)|; strictly positive for nonzero phi.
double potentialFloor(const BasePotential& pot);
double potentialFloor(const RadialPotential& pot);

/// Uniform concavity minorant (ell / (2 r^2 r1 r2)) (r - r1)(r2 - r);
/// a guaranteed lower bound on e - psi(r) inside [r1, r2].
double concavityMinorant(const EffectiveOrbit& orbit, double r);

/// Solves the radial Poisson equation for node density rho >= 0 on the grid.
RadialPotential solvePoisson(const RadialGrid& grid, const std::vector<double>& rho);

/// CSV emitter for (r, phi, phi', rho) tables; 17 significant digits.
void writePotentialCsv(const std::string& path, const RadialPotential& pot,
                       const std::vector<double>& rho);

} // namespace vpstab
