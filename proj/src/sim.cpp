#include "vpstab/sim.hpp"

#include <algorithm>

namespace vpstab {

double ParticleEnsemble::mass() const {
    return parallelSum(size(), [&](std::size_t i) { return w[i] * fval[i]; });
}

double ParticleEnsemble::kinetic() const {
    return parallelSum(size(), [&](std::size_t i) {
        return 0.5 * w[i] * fval[i] * (u[i] * u[i] + ell[i] / (r[i] * r[i]));
    });
}

double ParticleEnsemble::casimirL2() const {
    return parallelSum(size(), [&](std::size_t i) { return w[i] * fval[i] * fval[i]; });
}

ParticleEnsemble sampleParticles(const PhaseDF& df, std::size_t count, std::uint64_t seed) {
    if (count < 1000) throw std::domain_error("sampleParticles: need at least 1000 particles");
    struct CellRef {
        std::size_t slice;
        int ir, iu;
        double mass;
    };
    std::vector<CellRef> cells;
    double total = 0.0;
    for (std::size_t s = 0; s < df.slices.size(); ++s) {
        const PhaseSlice& sl = df.slices[s];
        for (int ir = 0; ir < sl.nr(); ++ir)
            for (int iu = 0; iu < sl.nu(); ++iu) {
                std::size_t k = sl.index(ir, iu);
                double m = sl.f[k] * sl.measure[k] * sl.weight;
                if (m > 0.0) {
                    cells.push_back({s, ir, iu, m});
                    total += m;
                }
            }
    }
    if (cells.empty() || !(total > 0.0))
        throw std::domain_error("sampleParticles: empty state");

    // proportional allocation with largest remainders
    std::vector<std::size_t> alloc(cells.size(), 0);
    std::vector<std::pair<double, std::size_t>> rema(cells.size());
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        double share = double(count) * cells[c].mass / total;
        alloc[c] = std::size_t(share);
        assigned += alloc[c];
        rema[c] = {share - double(alloc[c]), c};
    }
    std::sort(rema.begin(), rema.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < count && k < rema.size(); ++k, ++assigned)
        ++alloc[rema[k].second];

    ParticleEnsemble ens;
    ens.r.reserve(count);
    Rng rng(seed);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (alloc[c] == 0) continue;
        const PhaseSlice& sl = df.slices[cells[c].slice];
        double ell = sl.ell;
        int ir = cells[c].ir, iu = cells[c].iu;
        double r0 = sl.rEdges[ir], r1 = sl.rEdges[ir + 1];
        double ua = sl.uEdges[iu], ub = sl.uEdges[iu + 1];
        double sign = 1.0;
        if (ub <= 0.0) {
            sign = -1.0;
            double a2 = -ub, b2 = -ua;
            ua = a2;
            ub = b2;
        }
        // the cell region is flat in (r, w): reject on the radial marginal
        // (the w-column width), then draw w exactly. The width rises while
        // the lower edge sits under the barrier and falls beyond it, so the
        // maximum is at an endpoint or at the barrier crossing.
        auto wLoAt = [&](double rr) {
            double t = ua * ua - ell / (rr * rr);
            return t > 0.0 ? std::sqrt(t) : 0.0;
        };
        auto wHiAt = [&](double rr) {
            double t = ub * ub - ell / (rr * rr);
            return t > 0.0 ? std::sqrt(t) : 0.0;
        };
        double widthTop = std::max(wHiAt(r0) - wLoAt(r0), wHiAt(r1) - wLoAt(r1));
        if (ua > 0.0) {
            double rCross = std::sqrt(ell) / ua;
            if (rCross > r0 && rCross < r1)
                widthTop = std::max(widthTop, wHiAt(rCross));
        }
        double cellVolume = sl.measure[sl.index(ir, iu)] * sl.weight;
        double volumeShare = cellVolume / double(alloc[c]);
        double fv = sl.f[sl.index(ir, iu)];
        for (std::size_t p = 0; p < alloc[c]; ++p) {
            double r, wRad;
            int guard = 0;
            for (;;) {
                r = rng.uniform(r0, r1);
                double lo = wLoAt(r), hi = wHiAt(r);
                if (hi - lo >= rng.uniform() * widthTop) {
                    wRad = rng.uniform(lo, hi);
                    break;
                }
                if (++guard > 100000)
                    throw ConvergenceError("sampleParticles: rejection stalled");
            }
            ens.r.push_back(r);
            ens.u.push_back(sign * wRad);
            ens.ell.push_back(ell);
            // last share telescopes so the cell volume is carried exactly
            ens.w.push_back(p + 1 == alloc[c]
                                ? cellVolume - volumeShare * double(alloc[c] - 1)
                                : volumeShare);
            ens.fval.push_back(fv);
        }
    }
    return ens;
}

namespace {

// recursive kick-drift-kick with halving near the barrier
void advanceParticle(double& r, double& u, double ell, const BasePotential& field, double dt,
                     double rSafe, int depth) {
    double accel = -field.dphi(r) + ell / (r * r * r);
    double uh = u + 0.5 * dt * accel;
    double rNew = r + dt * uh;
    bool tooFast = std::fabs(dt * uh) > 0.25 * r || rNew <= rSafe;
    if (tooFast && depth > 0) {
        advanceParticle(r, u, ell, field, 0.5 * dt, rSafe, depth - 1);
        advanceParticle(r, u, ell, field, 0.5 * dt, rSafe, depth - 1);
        return;
    }
    if (rNew <= 0.0) rNew = rSafe; // barrier should prevent this for ell > 0
    double accelNew = -field.dphi(rNew) + ell / (rNew * rNew * rNew);
    r = rNew;
    u = uh + 0.5 * dt * accelNew;
}

// piecewise-linear enclosed mass of the deposited, filtered histogram
class BinnedField final : public BasePotential {
public:
    BinnedField(std::vector<double> edgeMass, double rMax)
        : edgeMass_(std::move(edgeMass)), rMax_(rMax), h_(rMax / double(edgeMass_.size() - 1)) {}
    double dphi(double r) const override {
        if (r <= 0.0) return 0.0;
        return enclosed(r) / (r * r);
    }
    double phi(double r) const override {
        // only the derivative drives the dynamics; the value is integrated
        // on demand for diagnostics
        double rr = std::max(r, 1e-12);
        double val = -edgeMass_.back() / rMax_;
        const int steps = 64;
        if (rr < rMax_) {
            double hh = (rMax_ - rr) / steps;
            double acc = 0.0;
            for (int i = 0; i < steps; ++i) {
                double x = rr + (i + 0.5) * hh;
                acc += enclosed(x) / (x * x) * hh;
            }
            val -= acc;
        } else {
            val = -edgeMass_.back() / rr;
        }
        return val;
    }
    double mass() const override { return edgeMass_.back(); }
private:
    std::vector<double> edgeMass_;
    double rMax_, h_;
    double enclosed(double r) const {
        if (r >= rMax_) return edgeMass_.back();
        double x = r / h_;
        std::size_t i = std::min(std::size_t(x), edgeMass_.size() - 2);
        double t = x - double(i);
        return edgeMass_[i] * (1.0 - t) + edgeMass_[i + 1] * t;
    }
};

} // namespace

void leapfrogStep(ParticleEnsemble& ens, const BasePotential& field, double dt, double rSafe,
                  int maxSubdivisions) {
    parallelFor(ens.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            advanceParticle(ens.r[i], ens.u[i], ens.ell[i], field, dt, rSafe, maxSubdivisions);
            if (!std::isfinite(ens.r[i]) || !std::isfinite(ens.u[i]))
                throw std::runtime_error("leapfrogStep: non-finite state at particle " +
                                         std::to_string(i));
        }
    });
}

DepositResult depositDensity(const ParticleEnsemble& ens, int bins, double rMax, bool smooth) {
    if (bins < 32) throw std::domain_error("depositDensity: need at least 32 bins");
    std::vector<double> mass(bins, 0.0);
    double h = rMax / bins;
    // block-deterministic accumulation
    constexpr std::size_t kBlock = 8192;
    std::size_t nblocks = (ens.size() + kBlock - 1) / kBlock;
    std::vector<std::vector<double>> partial(nblocks);
    parallelFor(nblocks, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            partial[b].assign(bins, 0.0);
            std::size_t lo = b * kBlock, hi = std::min(ens.size(), lo + kBlock);
            for (std::size_t i = lo; i < hi; ++i) {
                int j = int(ens.r[i] / h);
                j = std::clamp(j, 0, bins - 1); // outer strays stay in the last bin
                partial[b][j] += ens.w[i] * ens.fval[i];
            }
        }
    });
    for (std::size_t b = 0; b < nblocks; ++b)
        for (int j = 0; j < bins; ++j) mass[j] += partial[b][j];

    if (smooth) {
        // mass-conserving triangular filter, reflecting at the center
        std::vector<double> out(bins, 0.0);
        for (int j = 0; j < bins; ++j) {
            double m = mass[j];
            out[j] += 0.5 * m;
            if (j > 0) out[j - 1] += 0.25 * m;
            else out[0] += 0.25 * m;
            if (j + 1 < bins) out[j + 1] += 0.25 * m;
            else out[bins - 1] += 0.25 * m;
        }
        mass.swap(out);
    }

    DepositResult res;
    res.binMass = mass;
    res.grid = RadialGrid::uniform(rMax, std::size_t(bins) + 1);
    res.rho.assign(bins + 1, 0.0);
    for (int j = 0; j <= bins; ++j) {
        // node density from the shells touching the node
        double m = 0.0, vol = 0.0;
        if (j > 0) {
            m += 0.5 * mass[j - 1];
            vol += 0.5 * kFourPi / 3.0 * (std::pow(h * j, 3) - std::pow(h * (j - 1), 3));
        }
        if (j < bins) {
            m += 0.5 * mass[j];
            vol += 0.5 * kFourPi / 3.0 * (std::pow(h * (j + 1), 3) - std::pow(h * j, 3));
        }
        res.rho[j] = vol > 0.0 ? m / vol : 0.0;
    }
    return res;
}

double dynamicalTime(const SteadyStateSolution& sol) {
    // half-mass radius from the cumulative of rho_Q
    const RadialGrid& grid = sol.phiQ.grid();
    std::vector<double> m(grid.size(), 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double h = grid.r[i] - grid.r[i - 1];
        m[i] = m[i - 1] + 0.5 * kFourPi * h *
                              (sq(grid.r[i]) * sol.rhoQ[i] + sq(grid.r[i - 1]) * sol.rhoQ[i - 1]);
    }
    double half = 0.5 * m.back();
    double rHalf = grid.rMax();
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (m[i] >= half) {
            double t = (half - m[i - 1]) / (m[i] - m[i - 1]);
            rHalf = grid.r[i - 1] + t * (grid.r[i] - grid.r[i - 1]);
            break;
        }
    return kTwoPi * rHalf / std::sqrt(sol.mass / rHalf);
}

ExperimentResult runExperiment(const ParticleEnsemble& initial, const SteadyStateSolution& sol,
                               const SimConfig& config) {
    ExperimentResult out;
    out.finalState = initial;
    out.dynamicalTime = dynamicalTime(sol);
    ParticleEnsemble& ens = out.finalState;

    double rMax = config.binRadius > 0.0 ? config.binRadius : 4.0 * sol.supportRadius;
    double rSafe = config.rSafeFraction * sol.supportRadius;

    // reference field of the steady state as a dense shell ladder
    std::vector<double> qr, qw;
    {
        const RadialGrid& grid = sol.phiQ.grid();
        for (std::size_t i = 1; i < grid.size(); ++i) {
            double h = grid.r[i] - grid.r[i - 1];
            double m = 0.5 * kFourPi * h *
                       (sq(grid.r[i]) * sol.rhoQ[i] + sq(grid.r[i - 1]) * sol.rhoQ[i - 1]);
            if (m > 0.0) {
                qr.push_back(0.5 * (grid.r[i] + grid.r[i - 1]));
                qw.push_back(m);
            }
        }
    }
    ShellDistribution qShells(std::move(qr), std::move(qw));

    auto fieldOf = [&](const ParticleEnsemble& e) -> BinnedField {
        DepositResult dep = depositDensity(e, config.depositBins, rMax);
        std::vector<double> edges(config.depositBins + 1, 0.0);
        for (int j = 0; j < config.depositBins; ++j) edges[j + 1] = edges[j] + dep.binMass[j];
        return BinnedField(std::move(edges), rMax);
    };

    auto diagnose = [&](double t) {
        TimeSeriesRow row;
        row.t = t;
        row.mass = ens.mass();
        row.kinetic = ens.kinetic();
        // exact shell field of the particle system
        std::vector<double> pr(ens.size()), pw(ens.size());
        for (std::size_t i = 0; i < ens.size(); ++i) {
            pr[i] = ens.r[i];
            pw[i] = ens.w[i] * ens.fval[i];
        }
        ShellDistribution shells(std::move(pr), std::move(pw));
        row.fieldEnergy = shells.fieldEnergy();
        row.hamiltonian = row.kinetic - row.fieldEnergy;
        row.casimirL2 = ens.casimirL2();
        row.dGradPhi = std::sqrt(ShellDistribution::gradDiffNorm2(shells, qShells));
        row.dL1 = parallelSum(ens.size(), [&](std::size_t i) {
            double qv = sol.Q(ens.r[i], std::sqrt(sq(ens.u[i]) + ens.ell[i] / sq(ens.r[i])),
                              ens.ell[i]);
            return ens.w[i] * std::fabs(ens.fval[i] - qv);
        });
        row.dKin = parallelSum(ens.size(), [&](std::size_t i) {
            double v2 = sq(ens.u[i]) + ens.ell[i] / sq(ens.r[i]);
            double qv = sol.Q(ens.r[i], std::sqrt(v2), ens.ell[i]);
            return ens.w[i] * v2 * std::fabs(ens.fval[i] - qv);
        });
        out.rows.push_back(row);
    };

    diagnose(0.0);
    if (config.selfConsistent) {
        for (long s = 0; s < config.steps; ++s) {
            BinnedField field = fieldOf(ens);
            leapfrogStep(ens, field, config.dt, rSafe, config.maxSubdivisions);
            if ((s + 1) % config.diagEvery == 0) diagnose((s + 1) * config.dt);
        }
    } else {
        for (long s = 0; s < config.steps; ++s) {
            leapfrogStep(ens, sol.phiQ, config.dt, rSafe, config.maxSubdivisions);
            if ((s + 1) % config.diagEvery == 0) diagnose((s + 1) * config.dt);
        }
    }
    return out;
}

} // namespace vpstab
