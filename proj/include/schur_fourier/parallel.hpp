#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace sf {

/// Worker cap from SCHUR_FOURIER_THREADS (0 or unset = hardware default).
inline unsigned worker_count() {
    unsigned n = 0;
    if (const char* env = std::getenv("SCHUR_FOURIER_THREADS")) {
        const long v = std::atol(env);
        if (v > 0) n = static_cast<unsigned>(v);
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

/// Runs fn(chunk_index) for chunk_index in [0, n_chunks). Results must be
/// written to per-chunk slots by the caller; the chunk decomposition is part
/// of the contract, so output is identical for any worker count.
template <class Fn>
void parallel_for_chunks(std::size_t n_chunks, Fn&& fn) {
    const unsigned workers = std::min<std::size_t>(worker_count(), n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t c = w; c < n_chunks; c += workers) fn(c);
        });
    }
    for (auto& t : pool) t.join();
}

/// Pairwise summation; fixed association independent of thread count.
inline double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& x) {
    return pairwise_sum(x.data(), x.size());
}

}  // namespace sf
