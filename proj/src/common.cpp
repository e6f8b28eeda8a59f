#include "vpstab/common.hpp"

#include <algorithm>
#include <cstdlib>
#include <mutex>

namespace vpstab {

unsigned workerCount() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("VPSTAB_THREADS")) {
        long cap = std::strtol(env, nullptr, 10);
        if (cap > 0 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
    }
    return hw;
}

void parallelFor(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunkFn) {
    unsigned nw = workerCount();
    if (n == 0) return;
    if (nw <= 1 || n < 64) {
        chunkFn(0, n);
        return;
    }
    std::size_t nchunks = std::min<std::size_t>(nw, n);
    std::size_t per = (n + nchunks - 1) / nchunks;
    std::vector<std::thread> pool;
    pool.reserve(nchunks);
    std::exception_ptr err;
    std::mutex* errMutex = new std::mutex;
    for (std::size_t c = 0; c < nchunks; ++c) {
        std::size_t lo = c * per, hi = std::min(n, lo + per);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi]() {
            try {
                chunkFn(lo, hi);
            } catch (...) {
                std::lock_guard<std::mutex> g(*errMutex);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    delete errMutex;
    if (err) std::rethrow_exception(err);
}

double parallelSum(std::size_t n, const std::function<double(std::size_t)>& term) {
    if (n == 0) return 0.0;
    constexpr std::size_t kBlock = 1024;
    std::size_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks, 0.0);
    parallelFor(nblocks, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            KahanSum s;
            std::size_t lo = b * kBlock, hi = std::min(n, lo + kBlock);
            for (std::size_t i = lo; i < hi; ++i) s.add(term(i));
            partial[b] = s.value();
        }
    });
    KahanSum total;
    for (double p : partial) total.add(p);
    return total.value();
}

} // namespace vpstab
