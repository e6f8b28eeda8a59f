#pragma once

#include <vector>

#include "vpstab/common.hpp"

namespace vpstab {

/// Monotone piecewise-cubic interpolant (Fritsch-Carlson slopes): never
/// overshoots monotone data, C1 across nodes.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y);

    double eval(double t) const;
    double deriv(double t) const;
    bool valid() const { return x_.size() >= 2; }
    const std::vector<double>& nodes() const { return x_; }

private:
    std::vector<double> x_, y_, d_;
    std::size_t segment(double t) const;
};

} // namespace vpstab
