#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "tentlab/lab.hpp"

namespace tentlab {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr const char* kCsvHeader =
    "p,beta,alpha,N,M,trials,ratio,stderr,family,seed";

// Fixed decimal formatting keeps output bytes identical across runs and
// worker counts.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

inline std::string hash_hex(std::uint64_t hash) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash));
    return buf;
}

// One line of the pinned summary table.
struct CsvRow {
    double p = 0.0;
    double beta = 0.0;
    double alpha = 1.0;
    int N = 0;
    std::size_t M = 0;
    std::size_t trials = 0;
    double ratio = 0.0;
    double stderr_value = 0.0;
    std::string family;
    std::uint64_t seed = 0;
};

inline std::string to_csv_line(const CsvRow& row) {
    std::string line;
    line += format_double(row.p);
    line += ',';
    line += format_double(row.beta);
    line += ',';
    line += format_double(row.alpha);
    line += ',';
    line += std::to_string(row.N);
    line += ',';
    line += std::to_string(row.M);
    line += ',';
    line += std::to_string(row.trials);
    line += ',';
    line += format_double(row.ratio);
    line += ',';
    line += format_double(row.stderr_value);
    line += ',';
    line += row.family;
    line += ',';
    line += std::to_string(row.seed);
    return line;
}

inline nlohmann::json to_json(const GridDescriptor& g) {
    return {{"n", g.n},           {"N", g.N},
            {"L", g.L},           {"t_min", g.t_min},
            {"t_max", g.t_max},   {"M", g.M},
            {"dt", g.dt},         {"steps", g.steps},
            {"d_H", g.d_H},       {"coefficients", g.coefficients}};
}

inline nlohmann::json to_json(const RegularityReport& r) {
    return {{"p", r.p},
            {"beta", r.beta},
            {"alpha", r.alpha},
            {"trials", r.trials},
            {"lhs_moment", r.lhs_moment},
            {"rhs_moment", r.rhs_moment},
            {"ratio", r.ratio},
            {"stderr", r.stderr_value},
            {"family", r.family},
            {"seed", r.seed},
            {"grid", to_json(r.grid)}};
}

inline nlohmann::json to_json(const WeightedL2Report& r) {
    return {{"beta", r.beta},
            {"trials", r.trials},
            {"ratio", r.ratio},
            {"stderr", r.stderr_value},
            {"lhs_mean_sq", r.lhs_mean_sq},
            {"rhs_mean_sq", r.rhs_mean_sq},
            {"grad_ratio", r.grad_ratio},
            {"family", r.family},
            {"seed", r.seed},
            {"grid", to_json(r.grid)}};
}

inline nlohmann::json to_json(const ComparisonReport& r) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries)
        entries.push_back({{"level", e.level},
                           {"support", e.support},
                           {"classical_ratio", e.classical_ratio},
                           {"classical_stderr", e.classical_stderr},
                           {"conical_ratio", e.conical_ratio},
                           {"conical_stderr", e.conical_stderr}});
    return {{"p", r.p},
            {"beta", r.beta},
            {"trials", r.trials},
            {"seed", r.seed},
            {"entries", entries},
            {"grid", to_json(r.grid)}};
}

inline nlohmann::json to_json(const OffDiagReport& r) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.points)
        points.push_back(
            {{"t", p.t}, {"distance", p.distance}, {"ratio", p.ratio}});
    return {{"q", r.q},
            {"slope", r.slope},
            {"intercept", r.intercept},
            {"r_squared", r.r_squared},
            {"slope_stderr", r.slope_stderr},
            {"uniform_sup", r.uniform_sup},
            {"points", points},
            {"grid", to_json(r.grid)}};
}

inline nlohmann::json to_json(const DeterministicReport& r) {
    return {{"p", r.p},          {"beta", r.beta}, {"alpha", r.alpha},
            {"lhs", r.lhs},      {"rhs", r.rhs},   {"ratio", r.ratio},
            {"family", r.family}, {"grid", to_json(r.grid)}};
}

} // namespace tentlab
