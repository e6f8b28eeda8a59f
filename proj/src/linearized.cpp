#include "vpstab/linearized.hpp"

#include <algorithm>
#include <mutex>

#include "vpstab/quadrature.hpp"

namespace vpstab {

namespace {

// C2 smoothstep on [a, b], equal to 1 below a and 0 above b
double fadeOut(double r, double a, double b) {
    if (r <= a) return 1.0;
    if (r >= b) return 0.0;
    double t = (r - a) / (b - a);
    double s = t * t * t * (t * (6.0 * t - 15.0) + 10.0);
    return 1.0 - s;
}

double fadeOutDeriv(double r, double a, double b) {
    if (r <= a || r >= b) return 0.0;
    double t = (r - a) / (b - a);
    return -30.0 * t * t * (t - 1.0) * (t - 1.0) / (b - a);
}

} // namespace

RadialBasis::RadialBasis(double scale, int n, double cutoffStart, double cutoffEnd)
    : scale_(scale), cutA_(cutoffStart), cutB_(cutoffEnd), rEnd_(cutoffEnd), n_(n) {
    if (n < 1 || n > 64) throw std::domain_error("RadialBasis: size out of range");
    // Gram matrix of the raw members in the gradient inner product
    const int quadNodes = 4001;
    double h = rEnd_ / (quadNodes - 1);
    std::vector<double> L(n), dL(n);
    Matrix gram(n, n, 0.0);
    for (int a = 0; a < quadNodes; ++a) {
        double r = a * h;
        rawEval(r, L.data(), dL.data());
        double w = (a == 0 || a == quadNodes - 1) ? 0.5 : (a % 2 ? 2.0 : 1.0) * (a % 2 ? 1.0 : 1.0);
        // composite Simpson weights
        w = (a == 0 || a == quadNodes - 1) ? 1.0 : (a % 2 ? 4.0 : 2.0);
        double ww = w * h / 3.0 * r * r;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) gram(i, j) += ww * dL[i] * dL[j];
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) gram(i, j) = gram(j, i);

    // sequential Gram-Schmidt in the raw-coefficient space
    coeff_ = Matrix(n, n, 0.0);
    for (int k = 0; k < n; ++k) {
        std::vector<double> c(n, 0.0);
        c[k] = 1.0;
        for (int m = 0; m < k; ++m) {
            // projection onto previous member m
            double proj = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) proj += coeff_(m, i) * gram(i, j) * c[j];
            for (int i = 0; i < n; ++i) c[i] -= proj * coeff_(m, i);
        }
        double norm2 = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) norm2 += c[i] * gram(i, j) * c[j];
        if (!(norm2 > 1e-24)) throw std::domain_error("RadialBasis: degenerate family");
        double inv = 1.0 / std::sqrt(norm2);
        for (int i = 0; i < n; ++i) coeff_(k, i) = c[i] * inv;
    }
}

void RadialBasis::rawEval(double r, double* values, double* derivs) const {
    // bump ladder across [0, scale]: well conditioned in the gradient
    // metric, cut off smoothly in the far field
    double step = scale_ / n_;
    double w = 1.1 * step;
    double fade = fadeOut(r, cutA_, cutB_);
    double dfade = fadeOutDeriv(r, cutA_, cutB_);
    for (int k = 0; k < n_; ++k) {
        double c = (k + 0.5) * step;
        double x = (r - c) / w;
        double bump = std::exp(-x * x);
        double dbump = -2.0 * x / w * bump;
        values[k] = bump * fade;
        derivs[k] = dbump * fade + bump * dfade;
    }
}

void RadialBasis::evalAll(double r, double* values, double* derivs) const {
    std::vector<double> rv(n_), rd(n_);
    rawEval(r, rv.data(), rd.data());
    for (int k = 0; k < n_; ++k) {
        double v = 0.0, d = 0.0;
        for (int i = 0; i < n_; ++i) {
            v += coeff_(k, i) * rv[i];
            d += coeff_(k, i) * rd[i];
        }
        values[k] = v;
        derivs[k] = d;
    }
}

double RadialBasis::value(int k, double r) const {
    std::vector<double> v(n_), d(n_);
    evalAll(r, v.data(), d.data());
    return v[k];
}

double RadialBasis::deriv(int k, double r) const {
    std::vector<double> v(n_), d(n_);
    evalAll(r, v.data(), d.data());
    return d[k];
}

double RadialBasis::gradInnerRaw(const std::vector<double>& a, const std::vector<double>& b) const {
    const int quadNodes = 4001;
    double h = rEnd_ / (quadNodes - 1);
    std::vector<double> L(n_), dL(n_);
    KahanSum s;
    for (int q = 0; q < quadNodes; ++q) {
        double r = q * h;
        rawEval(r, L.data(), dL.data());
        double da = 0.0, db = 0.0;
        for (int i = 0; i < n_; ++i) {
            da += a[i] * dL[i];
            db += b[i] * dL[i];
        }
        double w = (q == 0 || q == quadNodes - 1) ? 1.0 : (q % 2 ? 4.0 : 2.0);
        s.add(w * h / 3.0 * r * r * da * db);
    }
    return s.value();
}

LinearizedAnalysis::LinearizedAnalysis(const SteadyStateSolution& sol) : sol_(sol) {
    if (!sol_.model.boundedDerivative())
        throw std::domain_error(
            "LinearizedAnalysis: the ansatz derivative is unbounded at the support boundary");
    const GaussRule& g = gaussLegendre(ellNodeCount);
    ellNodes_.resize(ellNodeCount);
    ellWeights_.resize(ellNodeCount);
    eFloor_.resize(ellNodeCount);
    for (int i = 0; i < ellNodeCount; ++i) {
        double t = 0.5 * (1.0 + g.x[i]);
        ellNodes_[i] = sol_.ellMax * 0.5 * (1.0 - std::cos(kPi * t));
        ellWeights_[i] = 0.5 * g.w[i] * sol_.ellMax * 0.5 * kPi * std::sin(kPi * t);
        eFloor_[i] = sol_.jacobian().floor(ellNodes_[i]).eMin;
    }
    cutoffThreshold_ = 1e-3 * sol_.linfBound();
}

LinearizedAnalysis::OrbitQuadrature
LinearizedAnalysis::orbitNodes(double e, double ell, int nodes) const {
    EffectiveOrbit orb = orbitBounds(sol_.phiQ, e, ell);
    OrbitQuadrature q;
    double span = orb.rApo - orb.rPeri;
    if (span <= 0.0) {
        q.r = {orb.r0};
        q.w = {1.0};
        q.total = 1.0; // degenerate orbit: averages collapse to the point
        return q;
    }
    const GaussRule& g = gaussLegendre(nodes);
    q.r.resize(nodes);
    q.w.resize(nodes);
    for (int m = 0; m < nodes; ++m) {
        double th = 0.25 * kPi * (1.0 + g.x[m]);
        double st = std::sin(th), ct = std::cos(th);
        double r = orb.rPeri + span * st * st;
        double val = e - sol_.phiQ.psi(r, ell);
        double minorant = ell / (2.0 * r * r * orb.rPeri * orb.rApo) * sq(span * st * ct);
        val = std::max(val, minorant);
        q.r[m] = r;
        q.w[m] = val > 0.0 ? 0.25 * kPi * g.w[m] * span * std::sin(2.0 * th) / std::sqrt(val)
                           : 0.0;
        q.total += q.w[m];
    }
    return q;
}

double LinearizedAnalysis::orbitAverage(const std::function<double(double)>& h, double e,
                                        double ell, int nodes) const {
    if (!(ell > 0.0)) throw std::domain_error("orbitAverage: ell must be positive");
    OrbitFloor fl = sol_.jacobian().floor(ell);
    if (!(e > fl.eMin && e < 0.0)) return 0.0; // outside D by convention
    OrbitQuadrature q = orbitNodes(e, ell, nodes);
    double num = 0.0;
    for (std::size_t m = 0; m < q.r.size(); ++m) num += q.w[m] * h(q.r[m]);
    return num / q.total;
}

double LinearizedAnalysis::hessianKernelTerm(const std::function<double(double)>& h1,
                                             const std::function<double(double)>& h2) const {
    const GaussRule& ge = gaussLegendre(eNodeCount);
    KahanSum sum;
    for (int i = 0; i < ellNodeCount; ++i) {
        double ell = ellNodes_[i];
        double eLo = eFloor_[i], eHi = sol_.model.e0;
        if (!(eHi > eLo)) continue;
        KahanSum inner;
        for (int k = 0; k < eNodeCount; ++k) {
            double e = 0.5 * (eLo + eHi) + 0.5 * (eHi - eLo) * ge.x[k];
            double w = 0.5 * (eHi - eLo) * ge.w[k];
            double dF = sol_.dFde(e, ell);
            if (dF == 0.0) continue;
            OrbitQuadrature q = orbitNodes(e, ell, orbitNodeCount);
            double i0 = q.total, i1 = 0.0, i2 = 0.0, cross = 0.0;
            for (std::size_t m = 0; m < q.r.size(); ++m) {
                double a = h1(q.r[m]), b = h2(q.r[m]);
                i1 += q.w[m] * a;
                i2 += q.w[m] * b;
                cross += q.w[m] * a * b;
            }
            inner.add(w * dF * (cross - i1 * i2 / i0));
        }
        sum.add(ellWeights_[i] * inner.value());
    }
    return 4.0 * kPi * kPi * std::sqrt(2.0) * sum.value();
}

double LinearizedAnalysis::hessianForm(const std::function<double(double)>& h,
                                       const std::function<double(double)>& dh) const {
    double rB = sol_.phiQ.grid().rMax();
    auto grad = [&](double r) { return sq(dh(r) * r); };
    double g2 = gaussIntegrate(grad, 0.0, rB, 512);
    return g2 + hessianKernelTerm(h, h);
}

CoercivityReport LinearizedAnalysis::coercivityScan(const RadialBasis& basis) const {
    int n = basis.size();
    CoercivityReport rep;
    rep.n = n;
    Matrix kernelTerm(n, n, 0.0);
    const GaussRule& ge = gaussLegendre(eNodeCount);
    std::mutex merge;
    parallelFor(ellNodeCount, [&](std::size_t lo, std::size_t hi) {
        Matrix local(n, n, 0.0);
        std::vector<double> hv(n), hd(n);
        std::vector<double> i1(n);
        for (std::size_t i = lo; i < hi; ++i) {
            double ell = ellNodes_[i];
            double eLo = eFloor_[i], eHi = sol_.model.e0;
            if (!(eHi > eLo)) continue;
            for (int k = 0; k < eNodeCount; ++k) {
                double e = 0.5 * (eLo + eHi) + 0.5 * (eHi - eLo) * ge.x[k];
                double w = 0.5 * (eHi - eLo) * ge.w[k] * ellWeights_[i];
                double dF = sol_.dFde(e, ell);
                if (dF == 0.0) continue;
                OrbitQuadrature q = orbitNodes(e, ell, orbitNodeCount);
                std::fill(i1.begin(), i1.end(), 0.0);
                Matrix crossM(n, n, 0.0);
                for (std::size_t m = 0; m < q.r.size(); ++m) {
                    basis.evalAll(q.r[m], hv.data(), hd.data());
                    for (int a = 0; a < n; ++a) {
                        double wa = q.w[m] * hv[a];
                        i1[a] += wa;
                        for (int b = a; b < n; ++b) crossM(a, b) += wa * hv[b];
                    }
                }
                for (int a = 0; a < n; ++a)
                    for (int b = a; b < n; ++b)
                        local(a, b) += w * dF * (crossM(a, b) - i1[a] * i1[b] / q.total);
            }
        }
        std::lock_guard<std::mutex> g(merge);
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) kernelTerm(a, b) += local(a, b);
    });
    rep.hessian = Matrix(n, n, 0.0);
    double front = 4.0 * kPi * kPi * std::sqrt(2.0);
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            double v = front * kernelTerm(a, b) + (a == b ? 1.0 : 0.0);
            rep.hessian(a, b) = v;
            rep.hessian(b, a) = v;
        }
    rep.eigenvalues = symmetricEigenvalues(rep.hessian);
    rep.minEigenvalue = rep.eigenvalues.front();
    return rep;
}

double LinearizedAnalysis::weightedNorm2(const std::function<double(double)>& h) const {
    const GaussRule& ge = gaussLegendre(eNodeCount);
    KahanSum sum;
    for (int i = 0; i < ellNodeCount; ++i) {
        double ell = ellNodes_[i];
        double eLo = eFloor_[i], eHi = sol_.model.e0;
        if (!(eHi > eLo)) continue;
        KahanSum inner;
        for (int k = 0; k < eNodeCount; ++k) {
            double e = 0.5 * (eLo + eHi) + 0.5 * (eHi - eLo) * ge.x[k];
            double w = 0.5 * (eHi - eLo) * ge.w[k];
            double aF = std::fabs(sol_.dFde(e, ell));
            if (aF == 0.0) continue;
            OrbitQuadrature q = orbitNodes(e, ell, orbitNodeCount);
            double acc = 0.0;
            for (std::size_t m = 0; m < q.r.size(); ++m) acc += q.w[m] * sq(h(q.r[m]));
            inner.add(w * aF * acc);
        }
        sum.add(ellWeights_[i] * inner.value());
    }
    return 4.0 * kPi * kPi * std::sqrt(2.0) * sum.value();
}

double LinearizedAnalysis::projectedNorm2(const std::function<double(double)>& h) const {
    const GaussRule& ge = gaussLegendre(eNodeCount);
    KahanSum sum;
    for (int i = 0; i < ellNodeCount; ++i) {
        double ell = ellNodes_[i];
        double eLo = eFloor_[i], eHi = sol_.model.e0;
        if (!(eHi > eLo)) continue;
        KahanSum inner;
        for (int k = 0; k < eNodeCount; ++k) {
            double e = 0.5 * (eLo + eHi) + 0.5 * (eHi - eLo) * ge.x[k];
            double w = 0.5 * (eHi - eLo) * ge.w[k];
            double aF = std::fabs(sol_.dFde(e, ell));
            if (aF == 0.0) continue;
            OrbitQuadrature q = orbitNodes(e, ell, orbitNodeCount);
            double i1 = 0.0;
            for (std::size_t m = 0; m < q.r.size(); ++m) i1 += q.w[m] * h(q.r[m]);
            inner.add(w * aF * sq(i1 / q.total) * q.total);
        }
        sum.add(ellWeights_[i] * inner.value());
    }
    return 4.0 * kPi * kPi * std::sqrt(2.0) * sum.value();
}

double LinearizedAnalysis::weightedKernelNorm2(
    const std::function<double(double, double)>& theta) const {
    const GaussRule& ge = gaussLegendre(eNodeCount);
    KahanSum sum;
    for (int i = 0; i < ellNodeCount; ++i) {
        double ell = ellNodes_[i];
        double eLo = eFloor_[i], eHi = sol_.model.e0;
        if (!(eHi > eLo)) continue;
        KahanSum inner;
        for (int k = 0; k < eNodeCount; ++k) {
            double e = 0.5 * (eLo + eHi) + 0.5 * (eHi - eLo) * ge.x[k];
            double w = 0.5 * (eHi - eLo) * ge.w[k];
            double aF = std::fabs(sol_.dFde(e, ell));
            if (aF == 0.0) continue;
            OrbitQuadrature q = orbitNodes(e, ell, orbitNodeCount);
            inner.add(w * aF * sq(theta(e, ell)) * q.total);
        }
        sum.add(ellWeights_[i] * inner.value());
    }
    return 4.0 * kPi * kPi * std::sqrt(2.0) * sum.value();
}

double LinearizedAnalysis::kernelPairing(const std::function<double(double)>& h,
                                         const std::function<double(double, double)>& theta) const {
    // independent plain Gauss ladder in ell and e, denser orbit rule
    const int nl = 56, ne = 56, no = 64;
    const GaussRule& gl = gaussLegendre(nl);
    const GaussRule& ge = gaussLegendre(ne);
    KahanSum sum;
    for (int i = 0; i < nl; ++i) {
        double ell = 0.5 * sol_.ellMax * (1.0 + gl.x[i]);
        double wl = 0.5 * sol_.ellMax * gl.w[i];
        double eLo = sol_.jacobian().floor(ell).eMin;
        double eHi = sol_.model.e0;
        if (!(eHi > eLo)) continue;
        KahanSum inner;
        for (int k = 0; k < ne; ++k) {
            double e = 0.5 * (eLo + eHi) + 0.5 * (eHi - eLo) * ge.x[k];
            double w = 0.5 * (eHi - eLo) * ge.w[k];
            OrbitQuadrature q = orbitNodes(e, ell, no);
            double i1 = 0.0;
            for (std::size_t m = 0; m < q.r.size(); ++m) i1 += q.w[m] * h(q.r[m]);
            double ph = i1 / q.total;
            double resid = 0.0;
            for (std::size_t m = 0; m < q.r.size(); ++m)
                resid += q.w[m] * (h(q.r[m]) - ph);
            inner.add(w * theta(e, ell) * resid);
        }
        sum.add(wl * inner.value());
    }
    return 4.0 * kPi * kPi * std::sqrt(2.0) * sum.value();
}

std::vector<MonotoneCubic>
LinearizedAnalysis::projectionTables(const std::function<double(double)>& h) const {
    std::vector<MonotoneCubic> tables(ellNodeCount);
    parallelFor(ellNodeCount, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double ell = ellNodes_[i];
            double eLo = eFloor_[i], eHi = sol_.model.e0;
            if (!(eHi > eLo)) continue;
            const int nTab = 80;
            std::vector<double> ev(nTab), pv(nTab);
            for (int k = 0; k < nTab; ++k) {
                double t = double(k) / (nTab - 1);
                double e = eLo + (eHi - eLo) * (0.5 * (1.0 - std::cos(kPi * t)));
                ev[k] = k == 0 ? eLo : (k == nTab - 1 ? eHi : e);
                OrbitQuadrature q = orbitNodes(std::max(e, eLo * (1.0 - 1e-12)), ell, 48);
                double i1 = 0.0;
                for (std::size_t m = 0; m < q.r.size(); ++m) i1 += q.w[m] * h(q.r[m]);
                pv[k] = i1 / q.total;
            }
            for (int k = 1; k < nTab; ++k)
                if (ev[k] <= ev[k - 1]) ev[k] = ev[k - 1] + 1e-15 * std::fabs(eHi - eLo);
            tables[i] = MonotoneCubic(std::move(ev), std::move(pv));
        }
    });
    return tables;
}

double LinearizedAnalysis::antonovDirection(const std::function<double(double)>& h) const {
    // int g^2 / |F'_e| with g = (h - P h) F'_e equals minus the kernel term
    double quad = -hessianKernelTerm(h, h);
    // field of g: rho_g on a radial ladder via the projection tables
    std::vector<MonotoneCubic> tables = projectionTables(h);
    double rB = sol_.phiQ.grid().rMax();
    const int nR = 1201;
    double hr = rB / (nR - 1);
    std::vector<double> rhog(nR, 0.0);
    const GaussRule& ge = gaussLegendre(48);
    parallelFor(nR, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t a = lo; a < hi; ++a) {
            double r = a * hr;
            if (r <= 0.0) continue;
            double phiR = sol_.phiQ.phi(r);
            double hR = h(r);
            KahanSum dens;
            for (int i = 0; i < ellNodeCount; ++i) {
                if (!tables[i].valid()) continue;
                double ell = ellNodes_[i];
                double psi = phiR + 0.5 * ell / (r * r);
                double eHi = sol_.model.e0;
                if (psi >= eHi) continue;
                KahanSum ei;
                for (int k = 0; k < 48; ++k) {
                    double t = 0.5 * (1.0 + ge.x[k]);
                    double e = psi + (eHi - psi) * t * t;
                    double w = 0.5 * ge.w[k] * 2.0 * (eHi - psi) * t;
                    double dF = sol_.dFde(e, ell);
                    if (dF == 0.0) continue;
                    double val = std::max(e - psi, 1e-300);
                    ei.add(w * (hR - tables[i].eval(e)) * dF / std::sqrt(val));
                }
                dens.add(ellWeights_[i] * ei.value());
            }
            rhog[a] = kPi * std::sqrt(2.0) / (r * r) * dens.value();
        }
    });
    // Simpson cumulative mass and the gradient norm of the field
    std::vector<double> mg(nR, 0.0);
    auto s2 = [&](int a) { return kFourPi * sq(a * hr) * rhog[a]; };
    for (int a = 2; a < nR; a += 2) {
        mg[a] = mg[a - 2] + hr / 3.0 * (s2(a - 2) + 4.0 * s2(a - 1) + s2(a));
        mg[a - 1] = mg[a - 2] + hr / 12.0 * (5.0 * s2(a - 2) + 8.0 * s2(a - 1) - s2(a));
    }
    KahanSum gnorm;
    for (int a = 2; a < nR; a += 2) {
        auto term = [&](int b) { return b > 0 ? sq(mg[b] / (b * hr)) : 0.0; };
        gnorm.add(hr / 3.0 * (term(a - 2) + 4.0 * term(a - 1) + term(a)));
    }
    double tail = sq(mg[nR - 1]) / rB;
    return quad - (gnorm.value() + tail);
}

double LinearizedAnalysis::antonovCellField(
    const PhaseDF& layout, const std::vector<std::vector<double>>& values) const {
    if (values.size() != layout.slices.size())
        throw std::domain_error("antonovCellField: slice count mismatch");
    KahanSum quad;
    for (std::size_t s = 0; s < layout.slices.size(); ++s) {
        const PhaseSlice& sl = layout.slices[s];
        KahanSum inner;
        for (int ir = 0; ir < sl.nr(); ++ir) {
            double phiR = sol_.phiQ.phi(sl.rCenter(ir));
            for (int iu = 0; iu < sl.nu(); ++iu) {
                std::size_t k = sl.index(ir, iu);
                double g = values[s][k];
                if (g == 0.0 || sl.measure[k] <= 0.0) continue;
                double e = 0.5 * sq(sl.uCenter(iu)) + phiR;
                double dF = sol_.dFde(e, sl.ell);
                if (dF == 0.0)
                    throw std::domain_error("antonovCellField: support leaks outside the state");
                inner.add(g * g / std::fabs(dF) * sl.measure[k]);
            }
        }
        quad.add(sl.weight * inner.value());
    }
    ShellDistribution field = ShellDistribution::fromCellValues(layout, values);
    return quad.value() - ShellDistribution::gradDiffNorm2(field, ShellDistribution{});
}

SliceField LinearizedAnalysis::makeSliceField(double ell, double weight, int nr, int nu,
                                              double pad) const {
    if (!(ell > 0.0 && ell < sol_.ellMax))
        throw std::domain_error("makeSliceField: ell outside the populated band");
    EffectiveOrbit orb = orbitBounds(sol_.phiQ, sol_.model.e0, ell);
    SliceField f;
    f.ell = ell;
    f.weight = weight;
    f.nr = nr;
    f.nu = nu;
    double mid = 0.5 * (orb.rPeri + orb.rApo);
    double half = 0.5 * (orb.rApo - orb.rPeri) * pad;
    f.rLo = std::max(mid - half, 1e-6 * orb.rPeri);
    f.rHi = mid + half;
    double eMin = orb.eMin;
    f.uMax = std::sqrt(2.0 * std::max(sol_.model.e0 - eMin, 0.0)) * pad;
    f.v.assign(std::size_t(nr) * nu, 0.0);
    return f;
}

double LinearizedAnalysis::supportCutoff(double r, double uRad, double ell,
                                          double eMargin) const {
    // kernel cutoff: a function of (e, ell) through the state value alone,
    // so the transport annihilates it. The fade spans a resolved band above
    // the threshold value; eMargin keeps the support clear of the boundary
    // by whole grid cells so stencils cannot leak across.
    double e = 0.5 * uRad * uRad + sol_.phiQ.psi(r, ell);
    if (e >= sol_.model.e0 - eMargin) return 0.0;
    double qv = sol_.F(e, ell);
    double hiBand = 0.25 * sol_.linfBound();
    double lo = std::max(cutoffThreshold_, sol_.F(sol_.model.e0 - 3.0 * eMargin, ell));
    if (qv <= lo) return 0.0;
    if (qv >= hiBand) return 1.0;
    double t = (qv - lo) / (hiBand - lo);
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

SliceFieldStack LinearizedAnalysis::transportApply(const SliceFieldStack& xi) const {
    SliceFieldStack out = xi;
    for (std::size_t s = 0; s < xi.slices.size(); ++s) {
        const SliceField& f = xi.slices[s];
        SliceField& g = out.slices[s];
        // support must stay clear of the stencil margin
        double vmax = 0.0, edge = 0.0;
        for (int i = 0; i < f.nr; ++i)
            for (int j = 0; j < f.nu; ++j) {
                double av = std::fabs(f.v[f.idx(i, j)]);
                vmax = std::max(vmax, av);
                if (i < 2 || i >= f.nr - 2 || j < 2 || j >= f.nu - 2) edge = std::max(edge, av);
            }
        if (vmax > 0.0 && edge > 1e-10 * vmax)
            throw std::domain_error("transportApply: support touches the grid boundary");
        double dr = f.dr(), du = f.du();
        std::fill(g.v.begin(), g.v.end(), 0.0);
        for (int i = 2; i < f.nr - 2; ++i) {
            double r = f.r(i);
            double psiPrime = sol_.phiQ.dpsi(r, f.ell);
            for (int j = 2; j < f.nu - 2; ++j) {
                double dxr = (-f.v[f.idx(i + 2, j)] + 8.0 * f.v[f.idx(i + 1, j)] -
                              8.0 * f.v[f.idx(i - 1, j)] + f.v[f.idx(i - 2, j)]) /
                             (12.0 * dr);
                double dxu = (-f.v[f.idx(i, j + 2)] + 8.0 * f.v[f.idx(i, j + 1)] -
                              8.0 * f.v[f.idx(i, j - 1)] + f.v[f.idx(i, j - 2)]) /
                             (12.0 * du);
                g.v[g.idx(i, j)] = f.u(j) * dxr - psiPrime * dxu;
            }
        }
    }
    return out;
}

namespace {
double vMax(const SliceField& f) {
    double m = 0.0;
    for (double v : f.v) m = std::max(m, std::fabs(v));
    return m;
}
} // namespace

double LinearizedAnalysis::antonovSliceField(const SliceFieldStack& g) const {
    KahanSum quad;
    std::vector<double> shellR, shellW;
    for (const SliceField& f : g.slices) {
        double dr = f.dr(), du = f.du();
        double cell = 4.0 * kPi * kPi * dr * du * f.weight;
        KahanSum inner;
        for (int i = 0; i < f.nr; ++i) {
            double r = f.r(i);
            double psi = sol_.phiQ.psi(r, f.ell);
            double colMass = 0.0;
            for (int j = 0; j < f.nu; ++j) {
                double val = f.v[f.idx(i, j)];
                if (val == 0.0) continue;
                double e = 0.5 * sq(f.u(j)) + psi;
                double dF = sol_.dFde(e, f.ell);
                if (dF == 0.0) {
                    // stencil-order leakage past the support is dropped;
                    // anything larger is a genuine domain violation
                    if (std::fabs(val) > 1e-8 * vMax(f))
                        throw std::domain_error(
                            "antonovSliceField: support leaks outside the state");
                    continue;
                }
                inner.add(val * val / std::fabs(dF));
                colMass += val;
            }
            if (colMass != 0.0 && r > 0.0) {
                shellR.push_back(r);
                shellW.push_back(colMass * cell);
            }
        }
        quad.add(cell * inner.value());
    }
    ShellDistribution field(std::move(shellR), std::move(shellW));
    return quad.value() - ShellDistribution::gradDiffNorm2(field, ShellDistribution{});
}

AntonovMargin LinearizedAnalysis::antonovInequalityCheck(const SliceFieldStack& xi) const {
    SliceFieldStack txi = transportApply(xi);
    AntonovMargin out;
    out.lhs = antonovSliceField(txi);
    KahanSum rhs;
    double scale = 0.0;
    for (const SliceField& f : xi.slices) {
        double cell = 4.0 * kPi * kPi * f.dr() * f.du() * f.weight;
        KahanSum inner;
        for (int i = 0; i < f.nr; ++i) {
            double r = f.r(i);
            if (r <= 0.0) continue;
            double psi = sol_.phiQ.psi(r, f.ell);
            double w = sol_.phiQ.dphi(r) / r;
            for (int j = 0; j < f.nu; ++j) {
                double val = f.v[f.idx(i, j)];
                if (val == 0.0) continue;
                double e = 0.5 * sq(f.u(j)) + psi;
                double dF = sol_.dFde(e, f.ell);
                if (dF == 0.0) continue;
                inner.add(val * val / std::fabs(dF) * w);
                scale = std::max(scale, std::fabs(val));
            }
        }
        rhs.add(cell * inner.value());
    }
    out.rhs = rhs.value();
    out.margin = out.lhs - out.rhs;
    // stencil truncation plus quadrature slack, relative to the lhs scale
    out.tol = 1e-3 * (std::fabs(out.lhs) + std::fabs(out.rhs)) + 1e-12;
    return out;
}

} // namespace vpstab
