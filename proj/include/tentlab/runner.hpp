#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tentlab/config.hpp"
#include "tentlab/report.hpp"
#include "tentlab/spde.hpp"

namespace tentlab {

struct RunOutcome {
    std::vector<CsvRow> rows;
    std::vector<nlohmann::json> records;
    std::vector<std::string> drift_lines; // body of drift.csv, if any
    std::uint64_t config_hash = 0;
};

namespace detail {

struct Cell {
    double p = 2.0;
    double beta = 1.0;
    double alpha = 1.0;
    int N = 16;
    int q = 2; // offdiag only
};

inline std::vector<Cell> expand_cells(const ExperimentConfig& cfg) {
    std::vector<Cell> cells;
    const bool uses_alpha = cfg.kind == ExperimentKind::conical_ratio ||
                            cfg.kind == ExperimentKind::deterministic_ratio ||
                            cfg.kind == ExperimentKind::aperture_suite;
    const bool uses_p = cfg.kind != ExperimentKind::weighted_l2 &&
                        cfg.kind != ExperimentKind::offdiag;
    const std::vector<double> ps = uses_p ? cfg.ps : std::vector<double>{cfg.ps[0]};
    const std::vector<double> alphas =
        uses_alpha ? cfg.alphas : std::vector<double>{cfg.alphas[0]};
    const std::vector<int> qs =
        cfg.kind == ExperimentKind::offdiag ? cfg.qs : std::vector<int>{2};

    for (double p : ps)
        for (double beta : cfg.betas)
            for (double alpha : alphas)
                for (int N : cfg.axis_points)
                    for (int q : qs) {
                        Cell cell;
                        cell.p = p;
                        cell.beta = beta;
                        cell.alpha = alpha;
                        cell.N = N;
                        cell.q = q;
                        cells.push_back(cell);
                    }
    return cells;
}

class OperatorCache {
public:
    explicit OperatorCache(const ExperimentConfig& cfg) : cfg_(&cfg) {}

    const DiscreteOperator& get(int N) {
        auto it = cache_.find(N);
        if (it != cache_.end()) return *it->second;
        const Torus torus(cfg_->n, N, cfg_->side);
        CoefficientField coeffs;
        if (cfg_->coefficients == "identity") {
            coeffs = CoefficientField::identity(torus);
        } else if (cfg_->coefficients == "checkerboard") {
            coeffs = CoefficientField::checkerboard(
                torus, cfg_->coeff_seed, cfg_->lambda_min, cfg_->lambda_max);
        } else {
            coeffs = CoefficientField::from_csv(
                torus, cfg_->coefficients.substr(4), cfg_->lambda_min,
                cfg_->lambda_max);
        }
        auto op = std::make_unique<DiscreteOperator>(
            DiscreteOperator::assemble(torus, coeffs));
        const auto* ptr = op.get();
        cache_.emplace(N, std::move(op));
        return *ptr;
    }

private:
    const ExperimentConfig* cfg_;
    std::map<int, std::unique_ptr<DiscreteOperator>> cache_;
};

inline GFamily family_from_config(const ExperimentConfig& cfg) {
    if (cfg.family == "eigenmode") return families::eigenmode_pulse();
    if (cfg.family == "adapted") return families::adapted_random();
    if (cfg.family == "singular")
        return families::singular_mixture(cfg.localization_levels);
    if (cfg.family == "atom") return families::atoms(cfg.coeff_seed);
    throw ConfigError("run.family: unknown family '" + cfg.family + "'");
}

inline TimeGrid eval_grid_for(const ExperimentConfig& cfg, int N, double beta) {
    return make_time_grid(effective_t_min(cfg, N), cfg.t_max, cfg.quad_nodes,
                          beta);
}

inline NoiseConfig noise_for(const ExperimentConfig& cfg) {
    NoiseConfig noise;
    noise.h_dim = cfg.h_dim;
    noise.dt = effective_dt(cfg);
    noise.steps = cfg.steps;
    noise.seed = cfg.seed;
    return noise;
}

inline std::vector<double> load_vector_csv(const std::string& path,
                                           std::size_t expected) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open vector csv '" + path + "'");
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        values.push_back(std::stod(line));
    }
    if (values.size() != expected)
        throw ConfigError("vector csv '" + path + "' has " +
                          std::to_string(values.size()) + " rows, expected " +
                          std::to_string(expected));
    return values;
}

inline std::vector<double> initial_data_from(const ExperimentConfig& cfg,
                                             const DiscreteOperator& op) {
    const std::string& spec = cfg.picard_u0;
    if (spec == "zero")
        return std::vector<double>(op.torus().sites(), 0.0);
    if (spec.rfind("eigenmode:", 0) == 0) {
        const std::size_t index = std::stoul(spec.substr(10));
        if (index >= op.size())
            throw ConfigError("picard.u0: eigenmode index out of range");
        return op.eigenvector(index);
    }
    if (spec.rfind("csv:", 0) == 0)
        return load_vector_csv(spec.substr(4), op.torus().sites());
    throw ConfigError("picard.u0: expected zero, eigenmode:<k> or csv:<path>");
}

} // namespace detail

// Executes all cells of a validated configuration. Cells run sequentially;
// Monte-Carlo trials inside a cell are the parallel axis, so the output bytes
// never depend on the worker count.
inline RunOutcome execute_config(const ExperimentConfig& cfg, bool sweep_mode) {
    validate_config(cfg, sweep_mode);
    if (cfg.coefficients.rfind("csv:", 0) == 0 && cfg.axis_points.size() != 1)
        throw ConfigError("operator.coefficients: csv coefficients fix the "
                          "lattice, so grid.N must be a single value");

    RunOutcome outcome;
    outcome.config_hash = fnv1a(canonical_text(cfg));
    detail::OperatorCache operators(cfg);
    const auto cells = detail::expand_cells(cfg);

    auto base_record = [&](const char* kind_name) {
        nlohmann::json record;
        record["experiment"] = kind_name;
        record["config_hash"] = hash_hex(outcome.config_hash);
        record["artifact_version"] = kArtifactVersion;
        return record;
    };

    for (const auto& cell : cells) {
        const auto started = std::chrono::steady_clock::now();
        const auto& op = operators.get(cell.N);
        const auto noise = detail::noise_for(cfg);
        const auto eval = detail::eval_grid_for(cfg, cell.N, cell.beta);

        auto finish_record = [&](nlohmann::json& record) {
            const auto elapsed =
                std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - started);
            record["wall_ms"] = elapsed.count();
            outcome.records.push_back(std::move(record));
        };

        switch (cfg.kind) {
            case ExperimentKind::conical_ratio: {
                const auto report = conical_ratio(
                    op, TentParams(cell.p, cell.beta, cell.alpha),
                    detail::family_from_config(cfg), noise, eval, cfg.trials,
                    cfg.seed, cfg.workers);
                CsvRow row{report.p,     report.beta,        report.alpha,
                           cell.N,       eval.count(),       report.trials,
                           report.ratio, report.stderr_value, report.family,
                           report.seed};
                outcome.rows.push_back(row);
                auto record = base_record("conical_ratio");
                record["report"] = to_json(report);
                finish_record(record);
                break;
            }
            case ExperimentKind::weighted_l2: {
                const auto report = weighted_l2_check(
                    op, detail::family_from_config(cfg), cell.beta, noise, eval,
                    cfg.trials, cfg.seed, cfg.workers);
                CsvRow row{2.0,          cell.beta,          1.0,
                           cell.N,       eval.count(),       report.trials,
                           report.ratio, report.stderr_value, report.family,
                           report.seed};
                outcome.rows.push_back(row);
                auto record = base_record("weighted_l2");
                record["report"] = to_json(report);
                finish_record(record);
                break;
            }
            case ExperimentKind::classical_vs_conical: {
                const auto report = classical_vs_conical(
                    op, cell.p, cell.beta, noise, eval, cfg.trials, cfg.seed,
                    cfg.localization_levels, cfg.workers);
                for (const auto& entry : report.entries) {
                    CsvRow classical{cell.p,
                                     cell.beta,
                                     1.0,
                                     cell.N,
                                     eval.count(),
                                     cfg.trials,
                                     entry.classical_ratio,
                                     entry.classical_stderr,
                                     "singular-k" + std::to_string(entry.level) +
                                         "/classical",
                                     cfg.seed};
                    CsvRow conical{cell.p,
                                   cell.beta,
                                   1.0,
                                   cell.N,
                                   eval.count(),
                                   cfg.trials,
                                   entry.conical_ratio,
                                   entry.conical_stderr,
                                   "singular-k" + std::to_string(entry.level) +
                                       "/conical",
                                   cfg.seed};
                    outcome.rows.push_back(classical);
                    outcome.rows.push_back(conical);
                }
                auto record = base_record("classical_vs_conical");
                record["report"] = to_json(report);
                finish_record(record);
                break;
            }
            case ExperimentKind::offdiag: {
                std::vector<double> profile(op.torus().sites());
                for (std::size_t s = 0; s < profile.size(); ++s)
                    profile[s] = 1.0 + 0.5 * gaussian(cfg.seed, s, 101);
                const auto cases = default_offdiag_sweep(op.torus());
                auto report = offdiag_probe(op, cell.q, profile, cases);
                std::vector<double> sup_times;
                for (const auto& c : cases) sup_times.push_back(c.t);
                report.uniform_sup = offdiag_uniform_sup(op, profile, sup_times);
                report.grid = describe(op, eval, noise);

                // for offdiag rows the p column carries q
                CsvRow row{static_cast<double>(cell.q),
                           cell.beta,
                           1.0,
                           cell.N,
                           eval.count(),
                           cases.size(),
                           report.slope,
                           report.slope_stderr,
                           "offdiag",
                           cfg.seed};
                outcome.rows.push_back(row);
                auto record = base_record("offdiag");
                record["report"] = to_json(report);
                finish_record(record);
                break;
            }
            case ExperimentKind::deterministic_ratio: {
                if (cfg.h_dim != 1)
                    throw ConfigError("noise.d_H: deterministic_ratio needs "
                                      "d_H = 1");
                NoiseConfig dummy = noise;
                dummy.seed = cfg.seed;
                const auto w = sample_noise(dummy);
                const auto g = families::eigenmode_pulse().make(op, dummy, w, 0);
                const auto report = deterministic_ratio(
                    op, TentParams(cell.p, cell.beta, cell.alpha), g, eval,
                    "eigenmode");
                CsvRow row{report.p,     report.beta,  report.alpha,
                           cell.N,       eval.count(), 1,
                           report.ratio, 0.0,          report.family,
                           cfg.seed};
                outcome.rows.push_back(row);
                auto record = base_record("deterministic_ratio");
                record["report"] = to_json(report);
                finish_record(record);
                break;
            }
            case ExperimentKind::picard: {
                // operator-norm estimate from the same grid, then the solve
                const auto k_report = conical_ratio(
                    op, TentParams(cell.p, cell.beta, 1.0),
                    families::adapted_random(), noise, eval, cfg.trials,
                    cfg.seed, cfg.workers);
                PicardOptions opts;
                opts.tol = cfg.picard_tol;
                opts.max_iter = cfg.picard_max_iter;
                opts.k_estimate = k_report.ratio;
                opts.beta0 = cfg.beta0;
                opts.strict_polytope = cfg.coefficients == "identity";
                const auto u0 = detail::initial_data_from(cfg, op);
                const auto spec = NemytskiiSpec::linear(cfg.n, cfg.picard_lambda);
                const auto result =
                    picard_solve(op, spec, u0, TentParams(cell.p, cell.beta, 1.0),
                                 noise, eval, opts);

                const double rate = result.increment_ratios.empty()
                                        ? 0.0
                                        : result.increment_ratios.back();
                CsvRow row{cell.p,      cell.beta,    1.0,
                           cell.N,      eval.count(), result.iterations,
                           rate,        0.0,          "picard",
                           cfg.seed};
                outcome.rows.push_back(row);

                auto record = base_record("picard");
                record["report"] = {
                    {"p", cell.p},
                    {"beta", cell.beta},
                    {"lambda", cfg.picard_lambda},
                    {"lipschitz", spec.lipschitz()},
                    {"k_estimate", k_report.ratio},
                    {"gate_product", result.gate_product},
                    {"polytope_ok", result.polytope_ok},
                    {"iterations", result.iterations},
                    {"initial_norm", result.initial_norm},
                    {"increment_norms", result.increment_norms},
                    {"increment_ratios", result.increment_ratios},
                    {"residual_rel", result.residual_rel},
                    {"warnings", result.warnings},
                    {"grid", to_json(describe(op, eval, noise))}};
                finish_record(record);
                break;
            }
            case ExperimentKind::atom_suite: {
                const double h = op.torus().spacing();
                nlohmann::json radii_json = nlohmann::json::array();
                std::vector<double> means;
                for (int factor : {4, 8, 16}) {
                    const double radius = factor * h;
                    std::vector<double> values(cfg.trials);
                    parallel_for(cfg.trials, cfg.workers, [&](std::size_t i) {
                        const auto atom = make_atom(
                            op.torus(), eval, cell.beta, radius,
                            op.torus().sites() / 2, substream(cfg.seed, i));
                        const double bound =
                            std::pow(radius,
                                     op.torus().dim * (1.0 / cell.p - 0.5)) *
                            std::pow(radius, -0.5 * op.torus().dim);
                        values[i] = tent_norm(atom.field,
                                              TentParams(cell.p, cell.beta, 1.0)) /
                                    bound;
                    });
                    const double mean = pairwise_sum(values) / cfg.trials;
                    double var = 0.0;
                    for (double v : values) var += (v - mean) * (v - mean);
                    const double se =
                        cfg.trials > 1
                            ? std::sqrt(var / (cfg.trials * (cfg.trials - 1.0)))
                            : 0.0;
                    means.push_back(mean);
                    radii_json.push_back({{"radius_over_h", factor},
                                          {"mean", mean},
                                          {"stderr", se}});
                    CsvRow row{cell.p, cell.beta, 1.0,
                               cell.N, eval.count(), cfg.trials,
                               mean,   se,           "atom-r" +
                                                        std::to_string(factor) +
                                                        "h",
                               cfg.seed};
                    outcome.rows.push_back(row);
                }
                const double spread =
                    *std::max_element(means.begin(), means.end()) /
                    *std::min_element(means.begin(), means.end());
                auto record = base_record("atom_suite");
                record["report"] = {{"p", cell.p},
                                    {"beta", cell.beta},
                                    {"radii", radii_json},
                                    {"spread", spread},
                                    {"grid", to_json(describe(op, eval, noise))}};
                finish_record(record);
                break;
            }
            case ExperimentKind::aperture_suite: {
                std::vector<double> ratios(cfg.trials);
                parallel_for(cfg.trials, cfg.workers, [&](std::size_t i) {
                    auto field = SpaceTimeField::zeros(
                        op.torus(), eval,
                        cfg.h_dim == 1 ? FieldKind::scalar : FieldKind::hilbert,
                        cfg.h_dim);
                    const std::uint64_t s = substream(cfg.seed, i);
                    for (std::size_t j = 0; j < field.data.size(); ++j)
                        field.data[j] = gaussian(s, j, 5);
                    ratios[i] =
                        aperture_ratio(field, cell.p, cell.beta, cell.alpha);
                });
                const double worst =
                    *std::max_element(ratios.begin(), ratios.end());
                CsvRow row{cell.p, cell.beta,    cell.alpha,
                           cell.N, eval.count(), cfg.trials,
                           worst,  0.0,          "aperture",
                           cfg.seed};
                outcome.rows.push_back(row);
                auto record = base_record("aperture_suite");
                record["report"] = {{"p", cell.p},
                                    {"beta", cell.beta},
                                    {"alpha", cell.alpha},
                                    {"max_ratio", worst},
                                    {"trials", cfg.trials},
                                    {"grid", to_json(describe(op, eval, noise))}};
                finish_record(record);
                break;
            }
        }
    }

    // refinement drift: max/min of the ratio across the N sweep at fixed
    // remaining parameters
    if (cfg.axis_points.size() > 1) {
        std::vector<std::string> seen;
        for (const auto& row : outcome.rows) {
            const std::string key = format_double(row.p) + "|" +
                                    format_double(row.beta) + "|" +
                                    format_double(row.alpha) + "|" + row.family;
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
            seen.push_back(key);
            double lo = 0.0, hi = 0.0;
            bool first = true;
            for (const auto& other : outcome.rows) {
                if (other.p != row.p || other.beta != row.beta ||
                    other.alpha != row.alpha || other.family != row.family)
                    continue;
                if (first) {
                    lo = hi = other.ratio;
                    first = false;
                } else {
                    lo = std::min(lo, other.ratio);
                    hi = std::max(hi, other.ratio);
                }
            }
            if (first || lo <= 0.0) continue;
            const double drift = hi / lo;
            outcome.drift_lines.push_back(
                format_double(row.p) + "," + format_double(row.beta) + "," +
                format_double(row.alpha) + "," + row.family + "," +
                format_double(drift));
            nlohmann::json record;
            record["experiment"] = "refinement_drift";
            record["config_hash"] = hash_hex(outcome.config_hash);
            record["artifact_version"] = kArtifactVersion;
            record["p"] = row.p;
            record["beta"] = row.beta;
            record["alpha"] = row.alpha;
            record["family"] = row.family;
            record["drift"] = drift;
            outcome.records.push_back(record);
        }
    }
    return outcome;
}

inline void write_outputs(const ExperimentConfig& cfg, const RunOutcome& out) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    {
        std::ofstream csv(fs::path(cfg.out_dir) / "summary.csv",
                          std::ios::trunc);
        csv << kCsvHeader << '\n';
        for (const auto& row : out.rows) csv << to_csv_line(row) << '\n';
    }
    {
        std::ofstream jsonl(fs::path(cfg.out_dir) / "records.jsonl",
                            std::ios::trunc);
        for (const auto& record : out.records) jsonl << record.dump() << '\n';
    }
    if (!out.drift_lines.empty()) {
        std::ofstream drift(fs::path(cfg.out_dir) / "drift.csv", std::ios::trunc);
        drift << "p,beta,alpha,family,drift\n";
        for (const auto& line : out.drift_lines) drift << line << '\n';
    }
}

// Entry point shared by the CLI binary and the tests. Returns the process
// exit code: 0 success, 1 configuration error, 2 compute error.
inline int run_experiment_file(const std::string& path, bool sweep_mode,
                               const std::string& out_override = "",
                               std::int64_t seed_override = -1,
                               int workers_override = 0) {
    try {
        auto cfg = parse_config_file(path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (seed_override >= 0)
            cfg.seed = static_cast<std::uint64_t>(seed_override);
        if (workers_override > 0) cfg.workers = workers_override;
        const auto outcome = execute_config(cfg, sweep_mode);
        write_outputs(cfg, outcome);
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

} // namespace tentlab
