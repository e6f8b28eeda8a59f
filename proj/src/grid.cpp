#include "vpstab/grid.hpp"

#include <algorithm>

namespace vpstab {

RadialGrid::RadialGrid(std::vector<double> nodes) : r(std::move(nodes)) {
    if (r.size() < 16) throw std::domain_error("RadialGrid: need at least 16 nodes");
    if (r.front() < 0.0) throw std::domain_error("RadialGrid: negative first node");
    for (std::size_t i = 1; i < r.size(); ++i) {
        if (!(r[i] > r[i - 1]) || !std::isfinite(r[i]))
            throw std::domain_error("RadialGrid: nodes must be finite and strictly increasing");
    }
}

std::size_t RadialGrid::segment(double x) const {
    if (x <= r.front()) return 0;
    if (x >= r.back()) return r.size() - 2;
    auto it = std::upper_bound(r.begin(), r.end(), x);
    return static_cast<std::size_t>(it - r.begin()) - 1;
}

RadialGrid RadialGrid::uniform(double rMax, std::size_t n) {
    std::vector<double> nodes(n);
    for (std::size_t i = 0; i < n; ++i) nodes[i] = rMax * double(i) / double(n - 1);
    return RadialGrid(std::move(nodes));
}

RadialGrid RadialGrid::sinhGraded(double rMax, std::size_t n, double strength) {
    std::vector<double> nodes(n);
    double denom = std::sinh(strength);
    for (std::size_t i = 0; i < n; ++i) {
        double t = double(i) / double(n - 1);
        nodes[i] = rMax * std::sinh(strength * t) / denom;
    }
    nodes.back() = rMax;
    return RadialGrid(std::move(nodes));
}

} // namespace vpstab
