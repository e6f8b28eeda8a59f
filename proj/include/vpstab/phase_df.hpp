#pragma once

#include <functional>

#include "vpstab/potential.hpp"

namespace vpstab {

/// One angular-momentum slice of a distribution function: cell-averaged
/// values on an (r, u) grid, u the signed speed of the (r, u, ell) chart,
/// with precomputed nu_ell cell measures. Cells below the centrifugal
/// barrier r^2 u^2 <= ell carry zero measure.
struct PhaseSlice {
    double ell = 0.0;
    double weight = 0.0; // quadrature weight of the ell integral
    std::vector<double> rEdges, uEdges;
    std::vector<double> f;       // nr * nu, row-major in r
    std::vector<double> measure; // nu_ell(cell), same layout

    int nr() const { return int(rEdges.size()) - 1; }
    int nu() const { return int(uEdges.size()) - 1; }
    std::size_t cells() const { return f.size(); }
    std::size_t index(int ir, int iu) const { return std::size_t(ir) * nu() + iu; }
    double rCenter(int ir) const { return 0.5 * (rEdges[ir] + rEdges[ir + 1]); }
    double uCenter(int iu) const { return 0.5 * (uEdges[iu] + uEdges[iu + 1]); }

    double sliceMass() const;
};

/// Distribution function as a stack of ell slices; the phase-space integral
/// of X is sum_slices weight * sum_cells X * measure.
struct PhaseDF {
    std::vector<PhaseSlice> slices;
    double linfBound = 0.0;

    double mass() const;
    double lpNorm(double p) const; // |f|_Lp over the six-dimensional space
    double linf() const;
    double kinetic() const; // (1/2) \int |v|^2 f, |v| = u in this chart

    bool sameLayout(const PhaseDF& other) const;
};

/// Exact nu_ell measure of the rectangle [r0,r1] x [u0,u1] (signed u).
double cellMeasure(double ell, double r0, double r1, double u0, double u1);

struct PhaseGridSpec {
    int nr = 128;
    int nu = 128;
    int nEll = 16;
    double rMax = 1.0;
    double uMax = 1.0;
    double ellMax = 1.0;
};

/// Grid skeleton with zero values: uniform (r, u) edges; ell nodes are
/// Gauss points under a cosine map clustering at both ends of (0, ellMax),
/// where the slice mass has square-root behavior.
PhaseDF makePhaseGrid(const PhaseGridSpec& spec);

/// Fills values from a callable f(r, u, ell). With cellAverage the value is
/// the measure-weighted cell mean via Gauss quadrature in the flat (r, w)
/// chart (w the radial speed), with the barrier onset absorbed by a square
/// substitution; wSplit(r), when given, marks a kink of f in w (such as a
/// support edge) where the inner integral is split.
void fillPhaseDF(PhaseDF& df, const std::function<double(double, double, double)>& fval,
                 bool cellAverage = true, int gaussPoints = 6,
                 const std::function<double(double)>& wSplit = nullptr);

/// |f - g|_L1 over identical layouts.
double l1Distance(const PhaseDF& f, const PhaseDF& g);

} // namespace vpstab
