#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tentlab {

// Base error type; subclasses distinguish the failure modes the library
// promises to signal.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DegenerateInputError : public Error {
public:
    explicit DegenerateInputError(const std::string& what) : Error(what) {}
};

class GridMismatchError : public Error {
public:
    explicit GridMismatchError(const std::string& what) : Error(what) {}
};

// Thrown when code tries to read noise increments from the future.
class AdaptednessError : public Error {
public:
    explicit AdaptednessError(const std::string& what) : Error(what) {}
};

class NonContractionError : public Error {
public:
    NonContractionError(const std::string& what, double ratio)
        : Error(what), measured_ratio(ratio) {}
    double measured_ratio;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// Fixed-order pairwise sum. Deterministic for a given input order and much
// better conditioned than a running sum on long accumulations.
inline double pairwise_sum(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

// Runs fn(0..count) on up to `workers` threads. Work items are identified by
// index, so callers that write results into index-addressed slots get the
// same bytes for any worker count.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<std::size_t>(workers, count);
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(drain);
    for (auto& th : pool) th.join();
}

} // namespace tentlab
