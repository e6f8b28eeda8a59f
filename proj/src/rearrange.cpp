#include "vpstab/rearrange.hpp"

#include <algorithm>
#include <numeric>

#include "vpstab/interp.hpp"

namespace vpstab {

double ProfileSlice::eval(double t) const {
    if (steps.empty() || t < 0.0) return 0.0;
    if (t >= steps.back().cum) return 0.0;
    // first step whose cumulative exceeds t
    auto it = std::upper_bound(steps.begin(), steps.end(), t,
                               [](double x, const Step& s) { return x < s.cum; });
    return it == steps.end() ? 0.0 : it->value;
}

double ProfileSlice::massIntegral() const {
    KahanSum s;
    double prev = 0.0;
    for (const Step& st : steps) {
        s.add(st.value * (st.cum - prev));
        prev = st.cum;
    }
    return s.value();
}

double ProfileSlice::lpIntegral(double p) const {
    KahanSum s;
    double prev = 0.0;
    for (const Step& st : steps) {
        s.add(std::pow(st.value, p) * (st.cum - prev));
        prev = st.cum;
    }
    return s.value();
}

double upperLevelMeasure(const PhaseSlice& slice, double s) {
    KahanSum sum;
    for (std::size_t k = 0; k < slice.f.size(); ++k)
        if (slice.f[k] > s) sum.add(slice.measure[k]);
    return sum.value();
}

LayerProfile schwarzProfile(const PhaseDF& df) {
    LayerProfile prof;
    prof.slices.resize(df.slices.size());
    parallelFor(df.slices.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            const PhaseSlice& sl = df.slices[s];
            ProfileSlice& ps = prof.slices[s];
            ps.ell = sl.ell;
            ps.weight = sl.weight;
            // cells with positive value and measure, sorted by value
            // descending, ties by radius ascending
            struct Cell {
                double v, nu;
                int ir;
            };
            std::vector<Cell> cells;
            cells.reserve(sl.f.size());
            for (int ir = 0; ir < sl.nr(); ++ir)
                for (int iu = 0; iu < sl.nu(); ++iu) {
                    std::size_t k = sl.index(ir, iu);
                    if (sl.f[k] > 0.0 && sl.measure[k] > 0.0)
                        cells.push_back({sl.f[k], sl.measure[k], ir});
                }
            std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
                if (a.v != b.v) return a.v > b.v;
                return a.ir < b.ir;
            });
            ps.steps.clear();
            ps.steps.reserve(cells.size());
            double cum = 0.0;
            for (const Cell& c : cells) {
                cum += c.nu;
                if (!ps.steps.empty() && ps.steps.back().value == c.v)
                    ps.steps.back().cum = cum; // merge equal levels
                else
                    ps.steps.push_back({c.v, cum});
            }
        }
    });
    return prof;
}

namespace {

// Monotone table of the phase area on (floor, eCap]: exact evaluations at
// graded energies, pchip in between. Queries above eCap never matter since
// the profile vanishes beyond its support measure.
class SliceAreaTable {
public:
    SliceAreaTable(const JacobianEvaluator& jac, double ell, double eCap, int nodes = 160) {
        OrbitFloor f = jac.floor(ell);
        eFloor_ = f.eMin;
        eCap_ = eCap;
        if (!(eCap_ > eFloor_)) {
            degenerate_ = true;
            return;
        }
        std::vector<double> e(nodes), a(nodes);
        for (int i = 0; i < nodes; ++i) {
            // cluster toward the floor where the area bends fastest
            double t = double(i) / (nodes - 1);
            double tt = t * t * (3.0 - 2.0 * t) * 0.85 + t * 0.15;
            e[i] = eFloor_ + (eCap_ - eFloor_) * tt;
            a[i] = i == 0 ? 0.0 : jac.value(e[i], ell);
        }
        table_ = MonotoneCubic(std::move(e), std::move(a));
    }

    bool degenerate() const { return degenerate_; }
    double eFloor() const { return eFloor_; }
    double eCap() const { return eCap_; }

    double area(double e) const {
        if (degenerate_ || e <= eFloor_) return 0.0;
        if (e >= eCap_) return kInf; // beyond the tabulated support
        return std::max(table_.eval(e), 0.0);
    }

private:
    MonotoneCubic table_;
    double eFloor_ = 0.0, eCap_ = 0.0;
    bool degenerate_ = false;
};

} // namespace

PhaseDF rearrangeWithPotential(const LayerProfile& profile, const BasePotential& pot,
                               const PhaseDF& layout) {
    if (pot.isZero()) throw std::domain_error("rearrangeWithPotential: degenerate potential");
    if (profile.slices.size() != layout.slices.size())
        throw std::domain_error("rearrangeWithPotential: slice count mismatch");
    PhaseDF out = layout;
    JacobianEvaluator jac(pot);
    parallelFor(layout.slices.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            PhaseSlice& sl = out.slices[s];
            const ProfileSlice& ps = profile.slices[s];
            if (ps.steps.empty()) {
                std::fill(sl.f.begin(), sl.f.end(), 0.0);
                continue;
            }
            double ell = sl.ell;
            // the profile is flat zero beyond its support measure, so the
            // area is only needed up to the inverse of that measure
            double sMax = ps.supportMeasure();
            OrbitFloor fl = jac.floor(ell);
            double eCap;
            if (fl.eMin >= 0.0) {
                std::fill(sl.f.begin(), sl.f.end(), 0.0);
                continue;
            }
            eCap = jac.inverse(sMax, ell);
            eCap = std::min(eCap * (1.0 - 1e-12), -1e-300);
            SliceAreaTable table(jac, ell, eCap);
            for (int ir = 0; ir < sl.nr(); ++ir) {
                double r = sl.rCenter(ir);
                double phiR = pot.phi(r);
                for (int iu = 0; iu < sl.nu(); ++iu) {
                    std::size_t k = sl.index(ir, iu);
                    if (sl.measure[k] <= 0.0) {
                        sl.f[k] = 0.0;
                        continue;
                    }
                    double u = sl.uCenter(iu);
                    double e = 0.5 * u * u + phiR;
                    if (e >= 0.0) {
                        sl.f[k] = 0.0;
                        continue;
                    }
                    double a = table.area(e);
                    sl.f[k] = std::isfinite(a) ? ps.eval(a) : 0.0;
                }
            }
        }
    });
    out.linfBound = out.linf();
    return out;
}

double profilePseudoInverse(const LayerProfile& profile, const BasePotential& pot, double s,
                            double ell) {
    const ProfileSlice* ps = nullptr;
    for (const auto& cand : profile.slices)
        if (cand.ell == ell) {
            ps = &cand;
            break;
        }
    if (!ps) throw std::domain_error("profilePseudoInverse: no slice at this ell");
    if (!(s > 0.0) || s >= ps->topValue())
        throw std::domain_error("profilePseudoInverse: s outside (0, f*(0, ell))");
    // measure extent of the region where the profile exceeds s
    double t = 0.0;
    for (const auto& st : ps->steps) {
        if (st.value > s) t = st.cum;
        else break;
    }
    JacobianEvaluator jac(pot);
    return jac.inverse(t, ell);
}

namespace {

// \int_0^inf |mu_a - mu_b| ds for two slice profiles. Both level measures
// are right-continuous nonincreasing steps of s; the integrand is constant
// between merged level breakpoints, swept with two descending pointers.
double levelMeasureL1(const ProfileSlice& a, const ProfileSlice& b) {
    std::vector<double> levels;
    levels.reserve(a.steps.size() + b.steps.size() + 1);
    for (const auto& st : a.steps) levels.push_back(st.value);
    for (const auto& st : b.steps) levels.push_back(st.value);
    levels.push_back(0.0);
    std::sort(levels.begin(), levels.end(), std::greater<double>());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    // mu(s) at s just below levels[j]: cumulative of all steps with value
    // strictly above s; advance pointers as s descends
    std::size_t ia = 0, ib = 0;
    double muA = 0.0, muB = 0.0;
    KahanSum sum;
    for (std::size_t j = 0; j + 1 < levels.size(); ++j) {
        double sHi = levels[j], sLo = levels[j + 1];
        while (ia < a.steps.size() && a.steps[ia].value >= sHi) muA = a.steps[ia++].cum;
        while (ib < b.steps.size() && b.steps[ib].value >= sHi) muB = b.steps[ib++].cum;
        // on (sLo, sHi) the level measures are muA, muB
        sum.add(std::fabs(muA - muB) * (sHi - sLo));
    }
    return sum.value();
}

} // namespace

EquimeasurabilityResult equimeasurabilityDistance(const PhaseDF& f, const PhaseDF& g) {
    if (f.slices.size() != g.slices.size())
        throw std::domain_error("equimeasurabilityDistance: mismatched ell grids");
    LayerProfile pf = schwarzProfile(f), pg = schwarzProfile(g);
    EquimeasurabilityResult out;
    KahanSum sum;
    for (std::size_t s = 0; s < pf.slices.size(); ++s) {
        out.resampleError =
            std::max(out.resampleError, std::fabs(pf.slices[s].ell - pg.slices[s].ell));
        sum.add(f.slices[s].weight * levelMeasureL1(pf.slices[s], pg.slices[s]));
    }
    out.distance = sum.value();
    return out;
}

double profileL1Distance(const LayerProfile& a, const LayerProfile& b) {
    if (a.slices.size() != b.slices.size())
        throw std::domain_error("profileL1Distance: slice count mismatch");
    KahanSum sum;
    for (std::size_t s = 0; s < a.slices.size(); ++s) {
        // |f* - g*|_L1(ds) via the merged cumulative breakpoints
        const auto& pa = a.slices[s];
        const auto& pb = b.slices[s];
        std::vector<double> cuts;
        cuts.push_back(0.0);
        for (const auto& st : pa.steps) cuts.push_back(st.cum);
        for (const auto& st : pb.steps) cuts.push_back(st.cum);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        KahanSum inner;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            double mid = 0.5 * (cuts[i] + cuts[i + 1]);
            inner.add(std::fabs(pa.eval(mid) - pb.eval(mid)) * (cuts[i + 1] - cuts[i]));
        }
        sum.add(a.slices[s].weight * inner.value());
    }
    return sum.value();
}

} // namespace vpstab
