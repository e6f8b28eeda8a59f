#pragma once

#include "vpstab/functionals.hpp"
#include "vpstab/linalg.hpp"

namespace vpstab {

/// Orthonormal family of radial directions: a ladder of scaled bumps
/// across [0, scale] under a far cutoff, Gram-Schmidt orthonormalized in
/// the (1/4 pi) gradient inner product.
class RadialBasis {
public:
    RadialBasis(double scale, int n, double cutoffStart, double cutoffEnd);

    int size() const { return n_; }
    /// values and derivatives of every member at r
    void evalAll(double r, double* values, double* derivs) const;
    double value(int k, double r) const;
    double deriv(int k, double r) const;

    /// (1/4 pi) int grad a . grad b of two raw coefficient vectors
    double gradInnerRaw(const std::vector<double>& a, const std::vector<double>& b) const;

private:
    double scale_, cutA_, cutB_, rEnd_;
    int n_;
    Matrix coeff_; // row k: orthonormal combination of raw members
    void rawEval(double r, double* values, double* derivs) const;
    friend class LinearizedAnalysis;
};

struct CoercivityReport {
    int n = 0;
    Matrix hessian;
    std::vector<double> eigenvalues; // ascending
    double minEigenvalue = 0.0;
};

struct AntonovMargin {
    double lhs = 0.0;    // A(T xi, T xi)
    double rhs = 0.0;    // weighted orbit term
    double margin = 0.0; // lhs - rhs
    double tol = 0.0;
};

/// Rectangular (r, u_r) field at fixed ell for the transport operator;
/// the phase measure is flat, 4 pi^2 dr du dell, in this chart.
struct SliceField {
    double ell = 0.0;
    double weight = 0.0;
    int nr = 0, nu = 0;
    double rLo = 0.0, rHi = 0.0, uMax = 0.0;
    std::vector<double> v; // nr * nu node values, row-major in r

    double r(int i) const { return rLo + (rHi - rLo) * double(i) / (nr - 1); }
    double u(int j) const { return -uMax + 2.0 * uMax * double(j) / (nu - 1); }
    double dr() const { return (rHi - rLo) / (nr - 1); }
    double du() const { return 2.0 * uMax / (nu - 1); }
    std::size_t idx(int i, int j) const { return std::size_t(i) * nu + j; }
};

struct SliceFieldStack {
    std::vector<SliceField> slices;
};

/// phi + eps * h for a radial direction given by callables; the direction
/// must vanish identically beyond its cutoff so the far field stays exact.
class DirectionPerturbedPotential final : public BasePotential {
public:
    DirectionPerturbedPotential(const BasePotential& base, std::function<double(double)> h,
                                std::function<double(double)> dh, double eps)
        : base_(base), h_(std::move(h)), dh_(std::move(dh)), eps_(eps) {}
    double phi(double r) const override { return base_.phi(r) + eps_ * h_(r); }
    double dphi(double r) const override { return base_.dphi(r) + eps_ * dh_(r); }
    double mass() const override { return base_.mass(); }
    double phiAtZero() const override { return base_.phiAtZero() + eps_ * h_(0.0); }
private:
    const BasePotential& base_;
    std::function<double(double)> h_, dh_;
    double eps_;
};

/// Linearized machinery around a solved state with bounded dF/de.
class LinearizedAnalysis {
public:
    explicit LinearizedAnalysis(const SteadyStateSolution& sol);

    const SteadyStateSolution& solution() const { return sol_; }

    /// time average of h over the orbit (e, ell): the kernel projection
    double orbitAverage(const std::function<double(double)>& h, double e, double ell,
                        int nodes = 48) const;

    /// D^2 J_0 contribution int h1 (h2 - P h2) F'_e dxdv, symmetric
    double hessianKernelTerm(const std::function<double(double)>& h1,
                             const std::function<double(double)>& h2) const;

    /// full Hessian D^2 J(phi_Q)(h, h) for a direction with derivative
    double hessianForm(const std::function<double(double)>& h,
                       const std::function<double(double)>& dh) const;

    /// Hessian matrix on the orthonormal basis and its spectrum
    CoercivityReport coercivityScan(const RadialBasis& basis) const;

    /// weighted norms over the populated region
    double weightedNorm2(const std::function<double(double)>& h) const;   // int h^2 |F'_e|
    double projectedNorm2(const std::function<double(double)>& h) const;  // int (P h)^2 |F'_e|
    double weightedKernelNorm2(const std::function<double(double, double)>& theta) const;

    /// unweighted pairing int (h - P h) theta(e, ell) dxdv with independent
    /// quadrature (orthogonality diagnostics)
    double kernelPairing(const std::function<double(double)>& h,
                         const std::function<double(double, double)>& theta) const;

    /// Antonov form for the direction field g = (h - P h) F'_e
    double antonovDirection(const std::function<double(double)>& h) const;

    /// Antonov form for a discrete field on the cells of a PhaseDF layout
    double antonovCellField(const PhaseDF& layout,
                            const std::vector<std::vector<double>>& values) const;

    /// Antonov form for a slice-field stack (flat chart)
    double antonovSliceField(const SliceFieldStack& g) const;

    /// transport operator u d_r - psi' d_u by 4th-order central stencils
    SliceFieldStack transportApply(const SliceFieldStack& xi) const;

    AntonovMargin antonovInequalityCheck(const SliceFieldStack& xi) const;

    /// window of the populated region at ell, padded for stencils
    SliceField makeSliceField(double ell, double weight, int nr, int nu, double pad = 1.15) const;

    /// smooth compact cutoff vanishing outside {Q > threshold}; eMargin
    /// additionally clears an energy band below the support boundary
    double supportCutoff(double r, double uRad, double ell, double eMargin = 0.0) const;

    int ellNodeCount = 40;
    int eNodeCount = 40;
    int orbitNodeCount = 48;

private:
    const SteadyStateSolution& sol_;
    std::vector<double> ellNodes_, ellWeights_, eFloor_;
    double cutoffThreshold_ = 0.0;

    struct OrbitQuadrature {
        std::vector<double> r, w; // weights of the inverse-sqrt integral
        double total = 0.0;       // I0
    };
    OrbitQuadrature orbitNodes(double e, double ell, int nodes) const;

    // P h tables per ell node for the direction field machinery
    std::vector<MonotoneCubic> projectionTables(const std::function<double(double)>& h) const;
};

} // namespace vpstab
