#pragma once

#include <vector>

#include "vpstab/common.hpp"

namespace vpstab {

/// Strictly increasing radial node set, first node at or above zero.
struct RadialGrid {
    std::vector<double> r;

    RadialGrid() = default;
    explicit RadialGrid(std::vector<double> nodes);

    std::size_t size() const { return r.size(); }
    double rMax() const { return r.back(); }

    /// index i with r[i] <= x < r[i+1]; clamped to [0, size-2]
    std::size_t segment(double x) const;

    static RadialGrid uniform(double rMax, std::size_t n);

    /// sinh-graded nodes clustering at the center; strength ~5 gives a
    /// hundredfold finer spacing at r = 0 than at the edge
    static RadialGrid sinhGraded(double rMax, std::size_t n, double strength = 5.0);
};

} // namespace vpstab
