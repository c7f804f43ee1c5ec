#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "tentlab/rng.hpp"

using namespace tentlab;

TEST_CASE("philox blocks are reproducible and key-sensitive") {
    const auto a = philox::block(42, 1, 2, 3, 4);
    const auto b = philox::block(42, 1, 2, 3, 4);
    const auto c = philox::block(43, 1, 2, 3, 4);
    REQUIRE(a == b);
    REQUIRE(a != c);
}

TEST_CASE("uniform01 stays inside (0,1]") {
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const double u = uniform01(7, i, 0);
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
    }
}

TEST_CASE("gaussian draws have standard-normal moments") {
    const std::size_t n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = gaussian(123, i, 0);
        sum += z;
        sum_sq += z * z;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    // 4 sigma bands for the empirical mean and variance of N(0,1).
    REQUIRE(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    REQUIRE(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("distinct counter slots are uncorrelated") {
    const std::size_t n = 100000;
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        dot += gaussian(9, i, 0) * gaussian(9, i, 1);
    REQUIRE(std::abs(dot / n) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("substream keys differ for adjacent indices") {
    REQUIRE(substream(1, 0) != substream(1, 1));
    REQUIRE(substream(1, 0) != substream(2, 0));
    REQUIRE(substream(5, 3) == substream(5, 3));
}
