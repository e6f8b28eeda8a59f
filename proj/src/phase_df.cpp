#include "vpstab/phase_df.hpp"

#include <algorithm>

#include "vpstab/quadrature.hpp"

namespace vpstab {

namespace {

// antiderivative of sqrt(c^2 r^2 - ell)/r in r, zero at the barrier
double barrierPrimitive(double ell, double r, double c) {
    double t = c * c * r * r - ell;
    if (t <= 0.0) return 0.0;
    double s = std::sqrt(t);
    if (ell <= 0.0) return s;
    double sl = std::sqrt(ell);
    return s - sl * std::atan(s / sl);
}

// measure of [r0,r1] x [a,b] for 0 <= a < b (u positive side)
double measurePositive(double ell, double r0, double r1, double a, double b) {
    double hi = barrierPrimitive(ell, r1, b) - barrierPrimitive(ell, r0, b);
    double lo = barrierPrimitive(ell, r1, a) - barrierPrimitive(ell, r0, a);
    return 4.0 * kPi * kPi * std::max(hi - lo, 0.0);
}

} // namespace

double cellMeasure(double ell, double r0, double r1, double u0, double u1) {
    if (u1 <= u0 || r1 <= r0) return 0.0;
    if (u0 >= 0.0) return measurePositive(ell, r0, r1, u0, u1);
    if (u1 <= 0.0) return measurePositive(ell, r0, r1, -u1, -u0);
    return measurePositive(ell, r0, r1, 0.0, -u0) + measurePositive(ell, r0, r1, 0.0, u1);
}

double PhaseSlice::sliceMass() const {
    KahanSum s;
    for (std::size_t k = 0; k < f.size(); ++k) s.add(f[k] * measure[k]);
    return s.value();
}

double PhaseDF::mass() const {
    KahanSum s;
    for (const auto& sl : slices) s.add(sl.weight * sl.sliceMass());
    return s.value();
}

double PhaseDF::lpNorm(double p) const {
    KahanSum s;
    for (const auto& sl : slices) {
        KahanSum inner;
        for (std::size_t k = 0; k < sl.f.size(); ++k)
            if (sl.f[k] > 0.0) inner.add(std::pow(sl.f[k], p) * sl.measure[k]);
        s.add(sl.weight * inner.value());
    }
    return std::pow(s.value(), 1.0 / p);
}

double PhaseDF::linf() const {
    double m = 0.0;
    for (const auto& sl : slices)
        for (std::size_t k = 0; k < sl.f.size(); ++k)
            if (sl.measure[k] > 0.0) m = std::max(m, sl.f[k]);
    return m;
}

double PhaseDF::kinetic() const {
    KahanSum s;
    for (const auto& sl : slices) {
        KahanSum inner;
        for (int ir = 0; ir < sl.nr(); ++ir)
            for (int iu = 0; iu < sl.nu(); ++iu) {
                std::size_t k = sl.index(ir, iu);
                if (sl.measure[k] <= 0.0) continue;
                double u = sl.uCenter(iu);
                inner.add(0.5 * u * u * sl.f[k] * sl.measure[k]);
            }
        s.add(sl.weight * inner.value());
    }
    return s.value();
}

bool PhaseDF::sameLayout(const PhaseDF& other) const {
    if (slices.size() != other.slices.size()) return false;
    for (std::size_t i = 0; i < slices.size(); ++i) {
        if (slices[i].ell != other.slices[i].ell) return false;
        if (slices[i].rEdges != other.slices[i].rEdges) return false;
        if (slices[i].uEdges != other.slices[i].uEdges) return false;
    }
    return true;
}

PhaseDF makePhaseGrid(const PhaseGridSpec& spec) {
    if (spec.nr < 2 || spec.nu < 2 || spec.nEll < 1)
        throw std::domain_error("makePhaseGrid: grid too small");
    PhaseDF df;
    const GaussRule& g = gaussLegendre(spec.nEll);
    df.slices.resize(spec.nEll);
    for (int s = 0; s < spec.nEll; ++s) {
        PhaseSlice& sl = df.slices[s];
        double t = 0.5 * (1.0 + g.x[s]); // in (0,1)
        sl.ell = spec.ellMax * 0.5 * (1.0 - std::cos(kPi * t));
        sl.weight = 0.5 * g.w[s] * spec.ellMax * 0.5 * kPi * std::sin(kPi * t);
        sl.rEdges.resize(spec.nr + 1);
        sl.uEdges.resize(spec.nu + 1);
        for (int i = 0; i <= spec.nr; ++i) sl.rEdges[i] = spec.rMax * double(i) / spec.nr;
        for (int j = 0; j <= spec.nu; ++j)
            sl.uEdges[j] = spec.uMax * (2.0 * double(j) / spec.nu - 1.0);
        sl.f.assign(std::size_t(spec.nr) * spec.nu, 0.0);
        sl.measure.resize(sl.f.size());
        for (int i = 0; i < spec.nr; ++i)
            for (int j = 0; j < spec.nu; ++j)
                sl.measure[sl.index(i, j)] = cellMeasure(sl.ell, sl.rEdges[i], sl.rEdges[i + 1],
                                                         sl.uEdges[j], sl.uEdges[j + 1]);
    }
    return df;
}

void fillPhaseDF(PhaseDF& df, const std::function<double(double, double, double)>& fval,
                 bool cellAverage, int gaussPoints, const std::function<double(double)>& wSplit) {
    const GaussRule& g = gaussLegendre(gaussPoints);
    parallelFor(df.slices.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            PhaseSlice& sl = df.slices[s];
            double ell = sl.ell;
            for (int ir = 0; ir < sl.nr(); ++ir)
                for (int iu = 0; iu < sl.nu(); ++iu) {
                    std::size_t k = sl.index(ir, iu);
                    if (sl.measure[k] <= 0.0) {
                        sl.f[k] = 0.0;
                        continue;
                    }
                    if (!cellAverage) {
                        sl.f[k] = fval(sl.rCenter(ir), sl.uCenter(iu), ell);
                        continue;
                    }
                    // mean over the cell in the flat (r, w) chart,
                    // w = sqrt(u^2 - ell / r^2) the radial speed
                    double r0 = sl.rEdges[ir], r1 = sl.rEdges[ir + 1];
                    double ua = sl.uEdges[iu], ub = sl.uEdges[iu + 1];
                    double sign = 1.0;
                    if (ub <= 0.0) {
                        sign = -1.0;
                        double a2 = -ub, b2 = -ua;
                        ua = a2;
                        ub = b2;
                    } else if (ua < 0.0) {
                        throw std::domain_error("fillPhaseDF: cell straddles u = 0");
                    }
                    // radius where the cell first gains measure; below it
                    // the whole u range sits under the barrier
                    double rOn = ub > 0.0 ? std::sqrt(ell) / ub : kInf;
                    double ra = std::max(r0, rOn);
                    if (ra >= r1) {
                        sl.f[k] = 0.0;
                        continue;
                    }
                    bool onset = ra > r0;
                    // the lower edge crosses the barrier here, kinking the
                    // column width
                    double rOn2 = ua > 0.0 ? std::sqrt(ell) / ua : kInf;
                    double wsum = 0.0, isum = 0.0;
                    auto wColumn = [&](double r, double wLo, double wHi, double rjac) {
                        if (wHi <= wLo) return;
                        double bar = ell / (r * r);
                        for (int b = 0; b < gaussPoints; ++b) {
                            double w = 0.5 * (wLo + wHi) + 0.5 * (wHi - wLo) * g.x[b];
                            double u = sign * std::sqrt(w * w + bar);
                            double jac = 0.5 * (wHi - wLo) * g.w[b] * rjac;
                            wsum += jac;
                            isum += jac * fval(r, u, ell);
                        }
                    };
                    auto rColumn = [&](double r, double rjac) {
                        double bar = ell / (r * r);
                        double wLo2 = ua * ua - bar, wHi2 = ub * ub - bar;
                        if (wHi2 <= 0.0) return;
                        double wLo = wLo2 > 0.0 ? std::sqrt(wLo2) : 0.0;
                        double wHi = std::sqrt(wHi2);
                        double wk = wSplit ? wSplit(r) : 0.0;
                        if (wSplit && wk > wLo && wk < wHi) {
                            wColumn(r, wLo, wk, rjac);
                            wColumn(r, wk, wHi, rjac);
                        } else {
                            wColumn(r, wLo, wHi, rjac);
                        }
                    };
                    // integrate an r segment, square-clustered at the left
                    // end when it starts at a barrier kink
                    auto rSegment = [&](double a0, double a1, bool kinkLeft) {
                        if (a1 <= a0) return;
                        for (int a = 0; a < gaussPoints; ++a) {
                            if (kinkLeft) {
                                double t = 0.5 * (1.0 + g.x[a]);
                                double r = a0 + (a1 - a0) * t * t;
                                rColumn(r, 0.5 * g.w[a] * 2.0 * (a1 - a0) * t);
                            } else {
                                double r = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * g.x[a];
                                rColumn(r, 0.5 * (a1 - a0) * g.w[a]);
                            }
                        }
                    };
                    if (rOn2 > ra && rOn2 < r1) {
                        rSegment(ra, rOn2, onset);
                        rSegment(rOn2, r1, true);
                    } else {
                        rSegment(ra, r1, onset);
                    }
                    sl.f[k] = wsum > 0.0 ? isum / wsum : 0.0;
                }
        }
    });
    df.linfBound = df.linf();
}

double l1Distance(const PhaseDF& f, const PhaseDF& g) {
    if (!f.sameLayout(g)) throw std::domain_error("l1Distance: layout mismatch");
    KahanSum s;
    for (std::size_t i = 0; i < f.slices.size(); ++i) {
        const auto& a = f.slices[i];
        const auto& b = g.slices[i];
        KahanSum inner;
        for (std::size_t k = 0; k < a.f.size(); ++k)
            inner.add(std::fabs(a.f[k] - b.f[k]) * a.measure[k]);
        s.add(a.weight * inner.value());
    }
    return s.value();
}

} // namespace vpstab
