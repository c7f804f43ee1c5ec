#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tentlab/util.hpp"

namespace tentlab {

enum class ExperimentKind {
    conical_ratio,
    weighted_l2,
    classical_vs_conical,
    offdiag,
    deterministic_ratio,
    picard,
    atom_suite,
    aperture_suite,
};

inline ExperimentKind experiment_kind_from(const std::string& name) {
    if (name == "conical_ratio") return ExperimentKind::conical_ratio;
    if (name == "weighted_l2") return ExperimentKind::weighted_l2;
    if (name == "classical_vs_conical")
        return ExperimentKind::classical_vs_conical;
    if (name == "offdiag") return ExperimentKind::offdiag;
    if (name == "deterministic_ratio") return ExperimentKind::deterministic_ratio;
    if (name == "picard") return ExperimentKind::picard;
    if (name == "atom_suite") return ExperimentKind::atom_suite;
    if (name == "aperture_suite") return ExperimentKind::aperture_suite;
    throw ConfigError("experiment.kind: unknown kind '" + name + "'");
}

inline std::string experiment_kind_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::conical_ratio: return "conical_ratio";
        case ExperimentKind::weighted_l2: return "weighted_l2";
        case ExperimentKind::classical_vs_conical: return "classical_vs_conical";
        case ExperimentKind::offdiag: return "offdiag";
        case ExperimentKind::deterministic_ratio: return "deterministic_ratio";
        case ExperimentKind::picard: return "picard";
        case ExperimentKind::atom_suite: return "atom_suite";
        case ExperimentKind::aperture_suite: return "aperture_suite";
    }
    return "unknown";
}

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::conical_ratio;
    std::string out_dir = "out";

    // [grid]
    int n = 1;
    std::vector<int> axis_points{16};
    double side = 1.0;
    double t_min = 0.0; // 0 means auto: (L/N)^2
    double t_max = 1.0;
    std::size_t quad_nodes = 64;

    // [operator]
    std::string coefficients = "identity"; // identity | checkerboard | csv:<path>
    std::uint64_t coeff_seed = 7;
    double lambda_min = 1.0;
    double lambda_max = 1.0;

    // [tent]
    std::vector<double> ps{2.0};
    std::vector<double> betas{1.0};
    std::vector<double> alphas{1.0};

    // [noise]
    int h_dim = 1;
    double dt = 0.0; // 0 means auto: t_max / steps
    std::size_t steps = 128;
    std::uint64_t seed = 1;

    // [run]
    std::size_t trials = 100;
    std::string family = "eigenmode"; // eigenmode | adapted | singular | atom
    int workers = 1;
    int localization_levels = 5;

    // [picard]
    double picard_lambda = 0.25;
    double picard_tol = 1e-6;
    std::size_t picard_max_iter = 50;
    std::string picard_u0 = "eigenmode:2"; // eigenmode:<k> | zero | csv:<path>
    double beta0 = 1.0;

    // [offdiag]
    std::vector<int> qs{1, 2};

    // canonical text for hashing
    std::string canonical;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

struct ConfigEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

class ConfigMap {
public:
    void insert(const std::string& section, const std::string& key,
                const std::string& value, int line) {
        entries_[section + "." + key] = ConfigEntry{value, line, false};
    }

    bool has(const std::string& path) const { return entries_.count(path) > 0; }

    std::string get(const std::string& path, const std::string& fallback) {
        auto it = entries_.find(path);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        return it->second.value;
    }

    double get_double(const std::string& path, double fallback) {
        auto it = entries_.find(path);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        return parse_double(path, it->second.value, it->second.line);
    }

    std::uint64_t get_uint(const std::string& path, std::uint64_t fallback) {
        auto it = entries_.find(path);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        try {
            return std::stoull(trim(it->second.value));
        } catch (...) {
            throw ConfigError("line " + std::to_string(it->second.line) + ": " +
                              path + ": expected an unsigned integer, got '" +
                              it->second.value + "'");
        }
    }

    std::vector<double> get_double_list(const std::string& path,
                                        std::vector<double> fallback) {
        auto it = entries_.find(path);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        std::vector<double> values;
        for (const auto& item : split_list(it->second.value))
            values.push_back(parse_double(path, item, it->second.line));
        if (values.empty())
            throw ConfigError("line " + std::to_string(it->second.line) + ": " +
                              path + ": list must not be empty");
        return values;
    }

    std::vector<int> get_int_list(const std::string& path,
                                  std::vector<int> fallback) {
        const auto doubles = get_double_list(
            path, std::vector<double>(fallback.begin(), fallback.end()));
        std::vector<int> values;
        for (double v : doubles) values.push_back(static_cast<int>(v));
        return values;
    }

    void check_all_used() const {
        for (const auto& [path, entry] : entries_)
            if (!entry.used)
                throw ConfigError("line " + std::to_string(entry.line) + ": " +
                                  path + ": unknown configuration key");
    }

private:
    static double parse_double(const std::string& path, const std::string& raw,
                               int line) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(trim(raw), &pos);
            if (pos != trim(raw).size()) throw std::invalid_argument(raw);
            return v;
        } catch (...) {
            throw ConfigError("line " + std::to_string(line) + ": " + path +
                              ": expected a number, got '" + raw + "'");
        }
    }

    std::map<std::string, ConfigEntry> entries_;
};

} // namespace detail

// Parses the sectioned key = value format. '#' starts a comment; keys are
// addressed as section.key in diagnostics.
inline ExperimentConfig parse_config_text(const std::string& text) {
    detail::ConfigMap map;
    std::stringstream stream(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": malformed section header '" + line + "'");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected key = value, got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (section.empty() || key.empty())
            throw ConfigError("line " + std::to_string(line_no) +
                              ": key outside a section or empty key");
        map.insert(section, key, value, line_no);
    }

    ExperimentConfig cfg;
    cfg.kind = experiment_kind_from(map.get("experiment.kind", "conical_ratio"));
    cfg.out_dir = map.get("experiment.out", cfg.out_dir);

    cfg.n = static_cast<int>(map.get_uint("grid.n", 1));
    cfg.axis_points = map.get_int_list("grid.N", cfg.axis_points);
    cfg.side = map.get_double("grid.L", cfg.side);
    const std::string t_min_raw = map.get("grid.t_min", "auto");
    cfg.t_min = t_min_raw == "auto" ? 0.0 : std::stod(t_min_raw);
    cfg.t_max = map.get_double("grid.t_max", cfg.t_max);
    cfg.quad_nodes = map.get_uint("grid.M", cfg.quad_nodes);

    cfg.coefficients = map.get("operator.coefficients", cfg.coefficients);
    cfg.coeff_seed = map.get_uint("operator.seed", cfg.coeff_seed);
    cfg.lambda_min = map.get_double("operator.lambda_min", cfg.lambda_min);
    cfg.lambda_max = map.get_double("operator.lambda_max", cfg.lambda_max);

    cfg.ps = map.get_double_list("tent.p", cfg.ps);
    cfg.betas = map.get_double_list("tent.beta", cfg.betas);
    cfg.alphas = map.get_double_list("tent.alpha", cfg.alphas);

    cfg.h_dim = static_cast<int>(map.get_uint("noise.d_H", 1));
    const std::string dt_raw = map.get("noise.dt", "auto");
    cfg.dt = dt_raw == "auto" ? 0.0 : std::stod(dt_raw);
    cfg.steps = map.get_uint("noise.steps", cfg.steps);
    cfg.seed = map.get_uint("noise.seed", cfg.seed);

    cfg.trials = map.get_uint("run.trials", cfg.trials);
    cfg.family = map.get("run.family", cfg.family);
    cfg.workers = static_cast<int>(map.get_uint("run.workers", 1));
    cfg.localization_levels =
        static_cast<int>(map.get_uint("run.localization_levels", 5));

    cfg.picard_lambda = map.get_double("picard.lambda", cfg.picard_lambda);
    cfg.picard_tol = map.get_double("picard.tol", cfg.picard_tol);
    cfg.picard_max_iter = map.get_uint("picard.max_iter", cfg.picard_max_iter);
    cfg.picard_u0 = map.get("picard.u0", cfg.picard_u0);
    cfg.beta0 = map.get_double("picard.beta0", cfg.beta0);

    cfg.qs = map.get_int_list("offdiag.q", cfg.qs);

    map.check_all_used();
    return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

// Canonical serialization: the effective values, one per line, sorted by key.
// Hashing this captures CLI overrides as well as file contents.
inline std::string canonical_text(const ExperimentConfig& cfg) {
    std::ostringstream out;
    auto list_d = [](const std::vector<double>& v) {
        std::ostringstream s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s << (i ? "," : "") << v[i];
        return s.str();
    };
    auto list_i = [](const std::vector<int>& v) {
        std::ostringstream s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s << (i ? "," : "") << v[i];
        return s.str();
    };
    out << "experiment.kind=" << experiment_kind_name(cfg.kind) << '\n'
        << "grid.L=" << cfg.side << '\n'
        << "grid.M=" << cfg.quad_nodes << '\n'
        << "grid.N=" << list_i(cfg.axis_points) << '\n'
        << "grid.n=" << cfg.n << '\n'
        << "grid.t_max=" << cfg.t_max << '\n'
        << "grid.t_min=" << cfg.t_min << '\n'
        << "noise.dt=" << cfg.dt << '\n'
        << "noise.d_H=" << cfg.h_dim << '\n'
        << "noise.seed=" << cfg.seed << '\n'
        << "noise.steps=" << cfg.steps << '\n'
        << "offdiag.q=" << list_i(cfg.qs) << '\n'
        << "operator.coefficients=" << cfg.coefficients << '\n'
        << "operator.lambda_max=" << cfg.lambda_max << '\n'
        << "operator.lambda_min=" << cfg.lambda_min << '\n'
        << "operator.seed=" << cfg.coeff_seed << '\n'
        << "picard.beta0=" << cfg.beta0 << '\n'
        << "picard.lambda=" << cfg.picard_lambda << '\n'
        << "picard.max_iter=" << cfg.picard_max_iter << '\n'
        << "picard.tol=" << cfg.picard_tol << '\n'
        << "picard.u0=" << cfg.picard_u0 << '\n'
        << "run.family=" << cfg.family << '\n'
        << "run.localization_levels=" << cfg.localization_levels << '\n'
        << "run.trials=" << cfg.trials << '\n'
        << "tent.alpha=" << list_d(cfg.alphas) << '\n'
        << "tent.beta=" << list_d(cfg.betas) << '\n'
        << "tent.p=" << list_d(cfg.ps) << '\n';
    return out.str();
}

// Full validation before any computation; every failure names the field.
inline void validate_config(const ExperimentConfig& cfg, bool sweep_mode) {
    if (cfg.n != 1 && cfg.n != 2)
        throw ConfigError("grid.n: must be 1 or 2");
    if (cfg.axis_points.empty()) throw ConfigError("grid.N: list must not be empty");
    for (int N : cfg.axis_points)
        if (N < 2) throw ConfigError("grid.N: every entry must be >= 2");
    if (!(cfg.side > 0.0)) throw ConfigError("grid.L: must be positive");
    if (!(cfg.t_max > 0.0)) throw ConfigError("grid.t_max: must be positive");
    if (cfg.t_min != 0.0 && !(cfg.t_min > 0.0 && cfg.t_min < cfg.t_max))
        throw ConfigError("grid.t_min: must satisfy 0 < t_min < t_max (or "
                          "'auto')");
    if (cfg.quad_nodes < 2) throw ConfigError("grid.M: need at least 2 nodes");

    if (cfg.coefficients != "identity" && cfg.coefficients != "checkerboard" &&
        cfg.coefficients.rfind("csv:", 0) != 0)
        throw ConfigError("operator.coefficients: expected identity, "
                          "checkerboard or csv:<path>");
    if (!(cfg.lambda_min > 0.0) || !(cfg.lambda_max >= cfg.lambda_min))
        throw ConfigError("operator.lambda_min/lambda_max: need 0 < min <= max");

    if (cfg.ps.empty()) throw ConfigError("tent.p: list must not be empty");
    if (cfg.betas.empty()) throw ConfigError("tent.beta: list must not be empty");
    if (cfg.alphas.empty())
        throw ConfigError("tent.alpha: list must not be empty");
    for (double p : cfg.ps)
        if (!(p >= 1.0)) throw ConfigError("tent.p: every entry must be >= 1");
    for (double b : cfg.betas)
        if (!(b >= 0.0)) throw ConfigError("tent.beta: entries must be >= 0");
    for (double a : cfg.alphas)
        if (!(a >= 1.0)) throw ConfigError("tent.alpha: entries must be >= 1");

    if (cfg.h_dim < 1) throw ConfigError("noise.d_H: must be >= 1");
    if (cfg.steps == 0) throw ConfigError("noise.steps: must be >= 1");
    if (cfg.dt != 0.0 && !(cfg.dt > 0.0))
        throw ConfigError("noise.dt: must be positive (or 'auto')");

    if (cfg.trials == 0) throw ConfigError("run.trials: must be >= 1");
    if (cfg.workers < 1) throw ConfigError("run.workers: must be >= 1");
    if (cfg.family != "eigenmode" && cfg.family != "adapted" &&
        cfg.family != "singular" && cfg.family != "atom")
        throw ConfigError("run.family: expected eigenmode, adapted, singular "
                          "or atom");
    if (cfg.localization_levels < 1 || cfg.localization_levels > 8)
        throw ConfigError("run.localization_levels: must be in [1, 8]");

    for (int q : cfg.qs)
        if (q != 1 && q != 2) throw ConfigError("offdiag.q: entries must be 1 or 2");
    if (cfg.qs.empty()) throw ConfigError("offdiag.q: list must not be empty");

    std::size_t cells = cfg.ps.size() * cfg.betas.size() * cfg.alphas.size() *
                        cfg.axis_points.size();
    if (cfg.kind == ExperimentKind::offdiag) cells *= cfg.qs.size();
    if (!sweep_mode && cells != 1)
        throw ConfigError("run: the parameter lists span " +
                          std::to_string(cells) +
                          " cells; use the sweep command for lists");
    if (sweep_mode && cells > 512)
        throw ConfigError("sweep: " + std::to_string(cells) +
                          " cells exceed the limit of 512");

    if (cfg.kind == ExperimentKind::picard) {
        if (!(cfg.picard_tol > 0.0)) throw ConfigError("picard.tol: must be > 0");
        if (cfg.picard_max_iter == 0)
            throw ConfigError("picard.max_iter: must be >= 1");
        if (!(cfg.beta0 > 0.0 && cfg.beta0 <= 1.0))
            throw ConfigError("picard.beta0: must lie in (0, 1]");
        for (double b : cfg.betas)
            if (!(b > 0.0 && b < 1.0))
                throw ConfigError("tent.beta: picard requires beta in (0,1)");
        if (cfg.h_dim != 1)
            throw ConfigError("noise.d_H: the nonlinear problem uses scalar "
                              "noise (d_H = 1)");
    }
    if (cfg.kind == ExperimentKind::conical_ratio ||
        cfg.kind == ExperimentKind::classical_vs_conical ||
        cfg.kind == ExperimentKind::weighted_l2) {
        // beta = 0 is allowed only for the weighted_l2 base case
        if (cfg.kind != ExperimentKind::weighted_l2)
            for (double b : cfg.betas)
                if (!(b > 0.0))
                    throw ConfigError("tent.beta: must be positive for "
                                      "stochastic tent experiments");
    }
    if (cfg.kind == ExperimentKind::classical_vs_conical)
        for (double p : cfg.ps)
            if (!(p < 2.0))
                throw ConfigError("tent.p: classical_vs_conical requires p in "
                                  "[1, 2)");
}

// Effective grid values for one sweep cell.
inline double effective_t_min(const ExperimentConfig& cfg, int N) {
    if (cfg.t_min > 0.0) return cfg.t_min;
    const double h = cfg.side / N;
    return h * h;
}

inline double effective_dt(const ExperimentConfig& cfg) {
    return cfg.dt > 0.0 ? cfg.dt : cfg.t_max / static_cast<double>(cfg.steps);
}

} // namespace tentlab
