#pragma once

#include "vpstab/phase_df.hpp"

namespace vpstab {

/// Mass distribution as concentric shells (radius, weight), the exact
/// gravity of the discretized state. All field quantities are elementary
/// piecewise integrals of the cumulative mass, so Green-type identities of
/// the discrete functionals hold to roundoff. Weights may be signed
/// (perturbation fields).
class ShellDistribution {
public:
    ShellDistribution() = default;
    ShellDistribution(std::vector<double> radii, std::vector<double> weights);

    /// cell masses f * measure * weight placed at the cell centroid radius
    static ShellDistribution fromCells(const PhaseDF& df);
    /// signed field: values * measure * weight
    static ShellDistribution fromCellValues(const PhaseDF& layout,
                                            const std::vector<std::vector<double>>& values);

    double totalMass() const { return total_; }
    bool empty() const { return radius_.empty() || total_ == 0.0; }

    /// enclosed mass m(<= r)
    double enclosedMass(double r) const;
    /// phi(r) = -(m(<= r)/r + sum_{r_k > r} w_k / r_k)
    double potentialAt(double r) const;
    double potentialAtZero() const;

    /// (1/8 pi) \int |grad phi|^2 dx = (1/2) \int m(r)^2 / r^2 dr, exact
    double fieldEnergy() const;

    /// (1/4 pi) \int grad phi_a . grad phi_b dx, exact merged sweep
    static double gradInner(const ShellDistribution& a, const ShellDistribution& b);
    /// (1/4 pi) \int |grad phi_a - grad phi_b|^2 dx without cancellation
    static double gradDiffNorm2(const ShellDistribution& a, const ShellDistribution& b);

    const std::vector<double>& radii() const { return radius_; }
    const std::vector<double>& weights() const { return weight_; }

private:
    std::vector<double> radius_, weight_, prefix_, suffixOverR_;
    double total_ = 0.0;
    void buildPrefix();
};

/// BasePotential view of a shell distribution (requires positive mass).
class ShellPotential final : public BasePotential {
public:
    explicit ShellPotential(const ShellDistribution& shells) : shells_(shells) {
        if (!(shells_.totalMass() > 0.0))
            throw std::domain_error("ShellPotential: nonpositive total mass");
    }
    double phi(double r) const override { return shells_.potentialAt(r); }
    double dphi(double r) const override {
        return r > 0.0 ? shells_.enclosedMass(r) / (r * r) : 0.0;
    }
    double mass() const override { return shells_.totalMass(); }
    double phiAtZero() const override { return shells_.potentialAtZero(); }
private:
    const ShellDistribution& shells_;
};

} // namespace vpstab
