#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "vpstab/jacobian.hpp"
#include "vpstab/potential.hpp"

namespace vpstab {

enum class ModelKind { King, MichieKing, Polytrope, DoublePower, OsipkovMerritt, Tabulated };

/// Ansatz F(e, ell): continuous, nonnegative, vanishing for e >= e0 and
/// strictly decreasing in e on its support.
struct SteadyStateModel {
    ModelKind kind = ModelKind::King;
    double e0 = -1.0;      // cutoff energy, < 0
    double q = 1.0;        // polytrope exponent, 0 < q < 7/2
    double kappa = 0.0;    // angular exponent, >= 0
    double ra = 1.0;       // anisotropy radius, > 0
    double omExponent = 2.0; // exponent of the Osipkov-Merritt profile t_+^p

    // double-power coefficient table: terms alpha * (e0-e)^q * ell^kappa
    struct PowerTerm {
        double alpha, q, kappa;
    };
    std::vector<PowerTerm> terms;

    // tabulated (e, ell, F) on a tensor grid, monotone nonincreasing in e
    std::vector<double> tabE, tabEll;
    std::vector<double> tabF; // row-major in e

    static SteadyStateModel king(double e0);
    static SteadyStateModel michieKing(double e0, double ra);
    static SteadyStateModel polytrope(double e0, double q, double kappa);
    static SteadyStateModel doublePower(double e0, std::vector<PowerTerm> terms);
    static SteadyStateModel osipkovMerritt(double e0, double ra, double p = 2.0);
    static SteadyStateModel tabulatedFromCsv(const std::string& path, double e0);

    void validate() const;
    /// true when dF/de stays bounded on the closed support (King class,
    /// polytropes with q >= 1); required by the linearized module
    bool boundedDerivative() const;
};

double ansatzEval(const SteadyStateModel& model, double e, double ell);

/// dF/de; zero outside the support. Models with an unbounded boundary
/// derivative require a positive interior margin e0 - e >= margin.
double ansatzDerivE(const SteadyStateModel& model, double e, double ell,
                    double interiorMargin = 0.0);

struct MomentSettings {
    int ellNodes = 64;
    int eNodes = 64;
    double relTol = 1e-9;
    int maxDoublings = 4;
    bool adaptive = false; // doubling check against relTol when set
};

/// rho(r) = (pi sqrt2 / r^2) \int\int (e - psi)^{-1/2} F de dell over the
/// populated wedge; moment = 1 inserts the kinetic weight e - phi(r).
/// The moment depends on the potential only through the local value phi(r).
double momentAtPotentialValue(const std::function<double(double, double)>& F, double eCap,
                              double phiR, double r, int moment,
                              const MomentSettings& s = {});

double momentFromPotential(const std::function<double(double, double)>& F, double eCap,
                           const BasePotential& pot, double r, int moment,
                           const MomentSettings& s = {});

double densityFromPotential(const SteadyStateModel& model, const BasePotential& pot, double r,
                            const MomentSettings& s = {});

/// density as a function of the local potential value; isotropic models use
/// the exact inner ell reduction, anisotropic ones the 2-D quadrature
double densityAtPotentialValue(const SteadyStateModel& model, double phiR, double r,
                               const MomentSettings& s = {});

/// (1/4 pi) \int |grad u|^2 dx = \int u'(r)^2 r^2 dr, far field analytic.
double gradNormSquared(const BasePotential& pot, double rSplit, int nodes = 512);
double gradDiffNormSquared(const BasePotential& a, const BasePotential& b, double rSplit,
                           int nodes = 512);

/// Self-consistent steady state: ansatz + Poisson fixed point.
class SteadyStateSolution {
public:
    SteadyStateModel model;
    RadialPotential phiQ;
    std::vector<double> rhoQ;       // at the grid nodes
    double supportRadius = 0.0;     // R_Q: phi(R_Q) = e0
    double ellMax = 0.0;            // floor energy reaches e0 at this ell
    double mass = 0.0;
    double kineticEnergy = 0.0;
    double potentialEnergy = 0.0;   // -(1/8 pi) \int |grad phi|^2
    double hamiltonian = 0.0;
    double virialRatio = 0.0;       // |2K + U| / |U|
    double residual = 0.0;          // fixed-point sup-norm at convergence
    int iterations = 0;

    const JacobianEvaluator& jacobian() const { return *jac_; }

    double F(double e, double ell) const { return ansatzEval(model, e, ell); }
    double dFde(double e, double ell) const { return ansatzDerivE(model, e, ell); }

    /// Q value in phase space, F(u^2/2 + phi_Q(r), ell)
    double Q(double r, double u, double ell) const {
        return F(0.5 * u * u + phiQ.phi(r), ell);
    }

    /// profile of Q at fixed ell: Q*(s, ell) = F(a^{-1}(s, ell), ell)
    double profile(double s, double ell) const;
    /// support bound s0(ell) = a(e0, ell); zero outside (0, ellMax)
    double profileSupport(double ell) const;

    double linfBound() const;

    void finalize(); // fills the derived quantities after phiQ/rhoQ are set

private:
    std::unique_ptr<JacobianEvaluator> jac_;
};

struct SolveSettings {
    double relaxation = 0.5;
    double tol = 1e-10;
    int maxIter = 500;
    MomentSettings moments;
    /// initial well depth as a multiple of |e0| (a Plummer guess; the well
    /// must be strictly deeper than the cutoff or the iteration starts in
    /// vacuum)
    double initialDepthFactor = 2.0;
};

SteadyStateSolution solveSteadyState(const SteadyStateModel& model, const RadialGrid& grid,
                                     const SolveSettings& s = {});

/// Uniform grid sized to the model: a coarse shooting probe locates the
/// support radius and the grid extends padFactor times beyond it.
RadialGrid fitGrid(const SteadyStateModel& model, std::size_t nodes, double padFactor = 4.0);

} // namespace vpstab
