#pragma once

#include "vpstab/interp.hpp"
#include "vpstab/rearrange.hpp"
#include "vpstab/shells.hpp"
#include "vpstab/steady.hpp"

namespace vpstab {

struct EnergyReport {
    double mass = 0.0;
    double kinetic = 0.0;
    double fieldEnergy = 0.0; // (1/8 pi) \int |grad phi_f|^2
    double hamiltonian = 0.0; // kinetic - fieldEnergy
    std::vector<std::pair<std::string, double>> casimirs;
};

EnergyReport hamiltonian(const PhaseDF& df);

/// \int\int G(f, ell) dnu dell; G must vanish at zero value.
double casimir(const PhaseDF& df, const std::function<double(double, double)>& G);

/// Energy identity residual H(f) - H(g) - (1/2)|grad phi_f - grad phi_g|^2
/// - \int (u^2/2 + phi_f)(f - g), relative to the magnitude of its terms.
/// Zero for the exact discrete functionals up to roundoff.
double identityResidual(const PhaseDF& f, const PhaseDF& g);

/// J_{f*}(phi) through the discrete cells: the rearranged state, its exact
/// shell field, and the two assembled terms.
struct CellReducedFunctional {
    double value = 0.0;
    PhaseDF rearranged;
};
CellReducedFunctional reducedFunctional(const LayerProfile& profile,
                                        const ShellDistribution& fieldSource,
                                        const PhaseDF& layout);

struct MonotonicityReport {
    double hF = 0.0;
    double jF = 0.0;
    double hFhat = 0.0;
    double gap1 = 0.0;          // H(f) - J_{f*}(phi_f)
    double gap2 = 0.0;          // J_{f*}(phi_f) - H(fhat)
    double transportTerm = 0.0; // \int (u^2/2 + phi_f)(f - fhat)
    double tol = 0.0;           // discretization slack
    bool equality = false;      // both gaps within tol: f ~ fhat
};

MonotonicityReport monotonicityReport(const PhaseDF& f);

/// J(phi) for the profile of a solved steady state, evaluated by smooth
/// quadratures: either term-by-term assembly of H(Q^{*phi}) plus the field
/// mismatch, or the equivalent s-integral of the inverse phase area.
class SmoothReducedFunctional {
public:
    explicit SmoothReducedFunctional(const SteadyStateSolution& sol);

    struct AssembledParts {
        double kinetic = 0.0, fieldEnergy = 0.0, mismatch = 0.0, mass = 0.0;
    };

    double evalSIntegral(const BasePotential& phi) const;
    double evalAssembled(const BasePotential& phi, AssembledParts* parts = nullptr) const;

    /// profile support measure at the ell quadrature nodes
    const std::vector<double>& ellNodes() const { return ellNodes_; }

    int sNodes = 48;     // per ell node in the s form
    int orbitNodes = 48; // turning-point integrals
    int radialNodes = 2001;
    /// the far field is analytic beyond this radius for every potential
    /// passed in (defaults to the solution grid edge)
    double fieldSplitRadius = 0.0;

private:
    const SteadyStateSolution& sol_;
    std::vector<double> ellNodes_, ellWeights_;
    std::vector<double> s0_;                  // profile support per node
    std::vector<MonotoneCubic> profileTable_; // Q*(s, ell_i) as pchip in s

    struct AreaTables {
        std::vector<MonotoneCubic> inverse; // e(a) per ell node
        std::vector<MonotoneCubic> forward; // a(e) per ell node
        std::vector<double> eFloor, eTop;
    };
    AreaTables buildTables(const BasePotential& phi) const;
};

} // namespace vpstab
