#include "vpstab/interp.hpp"

#include <algorithm>
#include <cmath>

namespace vpstab {

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::domain_error("MonotoneCubic: need >= 2 nodes");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) throw std::domain_error("MonotoneCubic: x not increasing");
    d_.assign(n, 0.0);
    std::vector<double> h(n - 1), sec(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        sec[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_[0] = sec[0];
    d_[n - 1] = sec[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (sec[i - 1] * sec[i] <= 0.0) {
            d_[i] = 0.0;
        } else {
            double w1 = 2.0 * h[i] + h[i - 1];
            double w2 = h[i] + 2.0 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / sec[i - 1] + w2 / sec[i]);
        }
    }
}

std::size_t MonotoneCubic::segment(double t) const {
    if (t <= x_.front()) return 0;
    if (t >= x_.back()) return x_.size() - 2;
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    return std::size_t(it - x_.begin()) - 1;
}

double MonotoneCubic::eval(double t) const {
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    std::size_t i = segment(t);
    double h = x_[i + 1] - x_[i];
    double s = (t - x_[i]) / h;
    double s2 = s * s, s3 = s2 * s;
    return y_[i] * (2 * s3 - 3 * s2 + 1) + y_[i + 1] * (-2 * s3 + 3 * s2) +
           h * (d_[i] * (s3 - 2 * s2 + s) + d_[i + 1] * (s3 - s2));
}

double MonotoneCubic::deriv(double t) const {
    if (t <= x_.front() || t >= x_.back()) {
        std::size_t i = t <= x_.front() ? 0 : x_.size() - 1;
        return d_[i];
    }
    std::size_t i = segment(t);
    double h = x_[i + 1] - x_[i];
    double s = (t - x_[i]) / h;
    double s2 = s * s;
    return (y_[i] * (6 * s2 - 6 * s) + y_[i + 1] * (-6 * s2 + 6 * s)) / h +
           d_[i] * (3 * s2 - 4 * s + 1) + d_[i + 1] * (3 * s2 - 2 * s);
}

} // namespace vpstab
