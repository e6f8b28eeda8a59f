#pragma once

#include "vpstab/functionals.hpp"

namespace vpstab {

/// Weighted characteristics (r, u, ell, w, fval); u is the signed radial
/// velocity, ell = |x x v|^2 is never written after sampling, and w, fval
/// are transported constants, so every Casimir is conserved identically in
/// this representation.
struct ParticleEnsemble {
    std::vector<double> r, u, ell, w, fval;
    std::size_t size() const { return r.size(); }
    double mass() const;        // sum w fval
    double kinetic() const;     // (1/2) sum w fval (u^2 + ell / r^2)
    double casimirL2() const;   // sum w fval^2
};

struct SimConfig {
    double dt = 1e-3;
    long steps = 1000;
    int diagEvery = 100;
    bool selfConsistent = true;
    int depositBins = 256;
    double binRadius = 0.0;  // deposit window; 0 picks 4x the half-mass radius
    std::uint64_t seed = 1;
    double rSafeFraction = 1e-4; // of the support radius, triggers substeps
    int maxSubdivisions = 8;
};

/// Stratified sampling over the cells proportional to f nu dell; weights
/// are exact phase-volume shares, so the sampled mass matches the cell sum
/// to roundoff.
ParticleEnsemble sampleParticles(const PhaseDF& df, std::size_t count, std::uint64_t seed);

/// One kick-drift-kick step against a frozen radial field; per-particle
/// time-step subdivision near the centrifugal barrier.
void leapfrogStep(ParticleEnsemble& ensemble, const BasePotential& field, double dt,
                  double rSafe, int maxSubdivisions);

/// Mass-conserving radial histogram; node densities on a uniform grid.
struct DepositResult {
    RadialGrid grid;
    std::vector<double> rho;
    std::vector<double> binMass;
};
DepositResult depositDensity(const ParticleEnsemble& ensemble, int bins, double rMax,
                             bool smooth = true);

struct TimeSeriesRow {
    double t = 0.0;
    double mass = 0.0;
    double kinetic = 0.0;
    double fieldEnergy = 0.0;
    double hamiltonian = 0.0;
    double casimirL2 = 0.0;
    double dL1 = 0.0;      // |f - Q|_L1 along the carried values
    double dKin = 0.0;     // ||v|^2 (f - Q)|_L1
    double dGradPhi = 0.0; // |grad phi_f - grad phi_Q|_L2 / sqrt(4 pi)
};

struct ExperimentResult {
    std::vector<TimeSeriesRow> rows;
    ParticleEnsemble finalState;
    double dynamicalTime = 0.0;
};

/// Evolves the sampled state, alternating the leapfrog step with the
/// Poisson solve of the deposited density; diagnostics at the configured
/// cadence track the distances of the stability statement.
ExperimentResult runExperiment(const ParticleEnsemble& initial, const SteadyStateSolution& sol,
                               const SimConfig& config);

/// 2 pi r_half / sqrt(M / r_half) from the solved state
double dynamicalTime(const SteadyStateSolution& sol);

} // namespace vpstab
