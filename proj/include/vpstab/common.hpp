#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace vpstab {

inline constexpr double kPi     = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi  = 2.0 * kPi;
inline constexpr double kFourPi = 4.0 * kPi;
inline constexpr double kInf    = std::numeric_limits<double>::infinity();

/// Thrown when an iterative solve fails to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history = {})
        : std::runtime_error(what), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

/// Thrown when adaptive quadrature stalls before the requested precision.
class PrecisionError : public std::runtime_error {
public:
    PrecisionError(const std::string& what, double achieved_)
        : std::runtime_error(what), achieved(achieved_) {}
    double achieved;
};

inline double sq(double x) { return x * x; }

/// Compensated (Kahan) accumulator for long reductions.
class KahanSum {
public:
    void add(double x) {
        double y = x - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }
private:
    double s_ = 0.0, c_ = 0.0;
};

/// Deterministic 64-bit generator (splitmix64); uniform helpers avoid the
/// implementation-defined std distributions so seeded runs are portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    /// uniform in [0,1)
    double uniform() { return (next() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal() {
        // Box-Muller; second value discarded for simplicity
        double u1 = uniform() + 1e-300, u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }
private:
    std::uint64_t state_;
};

/// Worker count honoring the VPSTAB_THREADS cap.
unsigned workerCount();

/// Parallel loop over [0,n) in contiguous chunks; falls back to serial for
/// small n. The chunk partition is independent of the worker count only in
/// the sense that per-index work is pure; reductions must be assembled by
/// the caller in index order for determinism.
void parallelFor(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunkFn);

/// Deterministic parallel reduction: partial sums per fixed-size block,
/// combined in block order.
double parallelSum(std::size_t n, const std::function<double(std::size_t)>& term);

} // namespace vpstab
