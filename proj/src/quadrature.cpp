#include "vpstab/quadrature.hpp"

#include <map>
#include <mutex>

namespace vpstab {

namespace {

GaussRule computeRule(int n) {
    GaussRule g;
    g.x.resize(n);
    g.w.resize(n);
    // Newton iteration from the Chebyshev initial guess; symmetric pairs.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double p1 = 0, dp = 0;
        for (int it = 0; it < 100; ++it) {
            p1 = 1.0;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * x * p2 - j * p3) / (j + 1.0);
            }
            dp = n * (x * p1 - p2) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        g.x[i] = -x;
        g.x[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        g.w[i] = w;
        g.w[n - 1 - i] = w;
    }
    return g;
}

} // namespace

const GaussRule& gaussLegendre(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, computeRule(n)).first;
    return it->second;
}

} // namespace vpstab
