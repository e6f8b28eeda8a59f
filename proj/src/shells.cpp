#include "vpstab/shells.hpp"

#include <algorithm>
#include <numeric>

namespace vpstab {

ShellDistribution::ShellDistribution(std::vector<double> radii, std::vector<double> weights)
    : radius_(std::move(radii)), weight_(std::move(weights)) {
    if (radius_.size() != weight_.size())
        throw std::domain_error("ShellDistribution: size mismatch");
    buildPrefix();
}

void ShellDistribution::buildPrefix() {
    std::vector<std::size_t> order(radius_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return radius_[a] < radius_[b]; });
    std::vector<double> r(radius_.size()), w(radius_.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        r[i] = radius_[order[i]];
        w[i] = weight_[order[i]];
        if (!(r[i] > 0.0)) throw std::domain_error("ShellDistribution: shells need r > 0");
    }
    radius_.swap(r);
    weight_.swap(w);
    prefix_.resize(radius_.size());
    suffixOverR_.resize(radius_.size() + 1);
    KahanSum acc;
    for (std::size_t i = 0; i < radius_.size(); ++i) {
        acc.add(weight_[i]);
        prefix_[i] = acc.value();
    }
    total_ = radius_.empty() ? 0.0 : prefix_.back();
    suffixOverR_[radius_.size()] = 0.0;
    KahanSum tail;
    for (std::size_t i = radius_.size(); i-- > 0;) {
        tail.add(weight_[i] / radius_[i]);
        suffixOverR_[i] = tail.value();
    }
}

ShellDistribution ShellDistribution::fromCells(const PhaseDF& df) {
    std::vector<double> r, w;
    for (const auto& sl : df.slices)
        for (int ir = 0; ir < sl.nr(); ++ir)
            for (int iu = 0; iu < sl.nu(); ++iu) {
                std::size_t k = sl.index(ir, iu);
                double m = sl.f[k] * sl.measure[k] * sl.weight;
                if (m != 0.0) {
                    r.push_back(sl.rCenter(ir));
                    w.push_back(m);
                }
            }
    return ShellDistribution(std::move(r), std::move(w));
}

ShellDistribution ShellDistribution::fromCellValues(
    const PhaseDF& layout, const std::vector<std::vector<double>>& values) {
    if (values.size() != layout.slices.size())
        throw std::domain_error("fromCellValues: slice count mismatch");
    std::vector<double> r, w;
    for (std::size_t s = 0; s < layout.slices.size(); ++s) {
        const auto& sl = layout.slices[s];
        if (values[s].size() != sl.cells())
            throw std::domain_error("fromCellValues: cell count mismatch");
        for (int ir = 0; ir < sl.nr(); ++ir)
            for (int iu = 0; iu < sl.nu(); ++iu) {
                std::size_t k = sl.index(ir, iu);
                double m = values[s][k] * sl.measure[k] * sl.weight;
                if (m != 0.0) {
                    r.push_back(sl.rCenter(ir));
                    w.push_back(m);
                }
            }
    }
    return ShellDistribution(std::move(r), std::move(w));
}

double ShellDistribution::enclosedMass(double r) const {
    auto it = std::upper_bound(radius_.begin(), radius_.end(), r);
    std::size_t k = std::size_t(it - radius_.begin());
    return k == 0 ? 0.0 : prefix_[k - 1];
}

double ShellDistribution::potentialAt(double r) const {
    if (radius_.empty()) return 0.0;
    auto it = std::upper_bound(radius_.begin(), radius_.end(), r);
    std::size_t k = std::size_t(it - radius_.begin());
    double inner = k == 0 ? 0.0 : prefix_[k - 1];
    double tail = suffixOverR_[k];
    return -(r > 0.0 ? inner / r : 0.0) - tail;
}

double ShellDistribution::potentialAtZero() const {
    return radius_.empty() ? 0.0 : -suffixOverR_[0];
}

double ShellDistribution::fieldEnergy() const {
    if (radius_.empty()) return 0.0;
    KahanSum s;
    for (std::size_t i = 0; i + 1 < radius_.size(); ++i) {
        if (radius_[i + 1] > radius_[i])
            s.add(sq(prefix_[i]) * (1.0 / radius_[i] - 1.0 / radius_[i + 1]));
    }
    s.add(sq(total_) / radius_.back());
    return 0.5 * s.value();
}

double ShellDistribution::gradInner(const ShellDistribution& a, const ShellDistribution& b) {
    if (a.radius_.empty() || b.radius_.empty()) return 0.0;
    // merged sweep over both radius ladders; m_a m_b constant between events
    std::size_t ia = 0, ib = 0;
    double prev = std::min(a.radius_.front(), b.radius_.front());
    double ma = 0.0, mb = 0.0;
    KahanSum s;
    while (ia < a.radius_.size() || ib < b.radius_.size()) {
        double ra = ia < a.radius_.size() ? a.radius_[ia] : kInf;
        double rb = ib < b.radius_.size() ? b.radius_[ib] : kInf;
        double r = std::min(ra, rb);
        if (r > prev && ma != 0.0 && mb != 0.0) s.add(ma * mb * (1.0 / prev - 1.0 / r));
        while (ia < a.radius_.size() && a.radius_[ia] == r) ma = a.prefix_[ia++];
        while (ib < b.radius_.size() && b.radius_[ib] == r) mb = b.prefix_[ib++];
        prev = r;
    }
    s.add(a.total_ * b.total_ / prev);
    return s.value();
}

double ShellDistribution::gradDiffNorm2(const ShellDistribution& a, const ShellDistribution& b) {
    if (a.radius_.empty() && b.radius_.empty()) return 0.0;
    std::size_t ia = 0, ib = 0;
    double first = kInf;
    if (!a.radius_.empty()) first = std::min(first, a.radius_.front());
    if (!b.radius_.empty()) first = std::min(first, b.radius_.front());
    double prev = first, ma = 0.0, mb = 0.0;
    KahanSum s;
    while (ia < a.radius_.size() || ib < b.radius_.size()) {
        double ra = ia < a.radius_.size() ? a.radius_[ia] : kInf;
        double rb = ib < b.radius_.size() ? b.radius_[ib] : kInf;
        double r = std::min(ra, rb);
        double diff = ma - mb;
        if (r > prev && diff != 0.0) s.add(diff * diff * (1.0 / prev - 1.0 / r));
        while (ia < a.radius_.size() && a.radius_[ia] == r) ma = a.prefix_[ia++];
        while (ib < b.radius_.size() && b.radius_[ib] == r) mb = b.prefix_[ib++];
        prev = r;
    }
    s.add(sq(a.total_ - b.total_) / prev);
    return s.value();
}

} // namespace vpstab
