#pragma once

#include "vpstab/jacobian.hpp"
#include "vpstab/phase_df.hpp"

namespace vpstab {

/// Nonincreasing rearranged profile per ell slice: value steps[k].value on
/// the measure interval [steps[k-1].cum, steps[k].cum).
struct ProfileSlice {
    double ell = 0.0;
    double weight = 0.0;
    struct Step {
        double value; // descending
        double cum;   // cumulative measure up to and including this level
    };
    std::vector<Step> steps;

    double eval(double t) const;    // f*(t, ell)
    double topValue() const { return steps.empty() ? 0.0 : steps.front().value; }
    double supportMeasure() const { return steps.empty() ? 0.0 : steps.back().cum; }
    double massIntegral() const;    // \int_0^inf f*(t) dt
    double lpIntegral(double p) const;
};

struct LayerProfile {
    std::vector<ProfileSlice> slices;
};

/// nu_ell{f > s} on one slice: sum of cell measures above the level.
double upperLevelMeasure(const PhaseSlice& slice, double s);

/// Schwarz symmetrization at fixed ell: exact sort-and-accumulate pseudo
/// inverse of the level measure; no root finding involved.
LayerProfile schwarzProfile(const PhaseDF& df);

/// f^{*phi}: profile composed with the phase-area Jacobian of phi, laid
/// onto the template grid. Output is nonincreasing along the cell energy
/// within every slice by construction.
PhaseDF rearrangeWithPotential(const LayerProfile& profile, const BasePotential& pot,
                               const PhaseDF& layout);

/// sup{e in [floor, 0) : f*(a_phi(e, ell), ell) > s}; s in (0, f*(0, ell)).
double profilePseudoInverse(const LayerProfile& profile, const BasePotential& pot, double s,
                            double ell);

struct EquimeasurabilityResult {
    double distance = 0.0;       // \int\int |mu_f - mu_g| ds dell
    double resampleError = 0.0;  // recorded ell mismatch when slices differ
};

EquimeasurabilityResult equimeasurabilityDistance(const PhaseDF& f, const PhaseDF& g);

/// contractivity metric |f* - g*|_L1 over (s, ell)
double profileL1Distance(const LayerProfile& a, const LayerProfile& b);

} // namespace vpstab
