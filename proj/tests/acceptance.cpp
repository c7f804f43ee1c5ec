// Acceptance suite: one check per shipped claim, each printed as a PASS/FAIL
// line with the measured numbers. Exits nonzero if any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tentlab/runner.hpp"

using namespace tentlab;

namespace {

int failures = 0;

void report(int index, const std::string& name, bool pass,
            const std::string& detail) {
    std::printf("[%s] %2d %-28s %s\n", pass ? "PASS" : "FAIL", index,
                name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

SpaceTimeField random_field(const Torus& torus, const TimeGrid& times,
                            int comps, std::uint64_t seed) {
    auto f = SpaceTimeField::zeros(
        torus, times, comps == 1 ? FieldKind::scalar : FieldKind::hilbert,
        comps);
    for (std::size_t i = 0; i < f.data.size(); ++i)
        f.data[i] = gaussian(seed, i, 3);
    return f;
}

// Naive triple-loop tent norm with its own periodic metric.
double tent_norm_oracle(const SpaceTimeField& g, double p, double beta,
                        double alpha) {
    const Torus& torus = g.torus;
    const auto w = g.times.weights_for(beta);
    double outer = 0.0;
    for (std::size_t x = 0; x < torus.sites(); ++x) {
        double cone = 0.0;
        for (std::size_t k = 0; k < g.times.count(); ++k) {
            const double r = alpha * std::sqrt(g.times.nodes[k]);
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t y = 0; y < torus.sites(); ++y) {
                const auto cx = torus.coords(x);
                const auto cy = torus.coords(y);
                double sq = 0.0;
                for (int d = 0; d < torus.dim; ++d) {
                    int delta = std::abs(cx[d] - cy[d]);
                    delta = std::min(delta, torus.axis_points - delta);
                    sq += std::pow(delta * torus.spacing(), 2);
                }
                if (std::sqrt(sq) < r) {
                    sum += g.squared_length(k, y);
                    ++count;
                }
            }
            cone += w[k] * sum / static_cast<double>(count);
        }
        outer += torus.cell_volume() * std::pow(cone, p / 2.0);
    }
    return std::pow(outer, 1.0 / p);
}

void criterion_1_tent_identity() {
    const Torus torus(1, 16, 1.0);
    const auto times = make_time_grid(1.0 / 256.0, 1.0, 32, 1.0);
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        const int comps = i < 50 ? 1 : 4;
        const auto g = random_field(torus, times, comps, substream(101, i));
        const double tent = tent_norm(g, TentParams(2.0, 1.0, 1.0));
        const double direct = weighted_l2_norm(g, 1.0);
        worst = std::max(worst, std::abs(tent - direct) / direct);
    }
    report(1, "tent = weighted L2 at p=2", worst < 1e-8,
           "max rel err " + fmt(worst) + " over 100 fields (tol 1e-8)");
}

void criterion_2_brute_force() {
    const Torus torus(1, 8, 1.0);
    const auto times = make_time_grid(1.0 / 64.0, 1.0, 16, 0.5);
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 5; ++i) {
        const auto g = random_field(torus, times, 1, substream(202, i));
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            const double lib = tent_norm(g, TentParams(p, 0.5, 1.0));
            const double oracle = tent_norm_oracle(g, p, 0.5, 1.0);
            worst = std::max(worst, std::abs(lib - oracle) / oracle);
        }
    }
    report(2, "triple-loop oracle", worst < 1e-10,
           "max rel err " + fmt(worst) + " for p in {1,1.5,2,3} (tol 1e-10)");
}

void criterion_3_aperture() {
    const Torus torus(1, 16, 1.0);
    const auto times = make_time_grid(1.0 / 256.0, 0.5, 24, 0.5);
    bool pass = true;
    std::string detail;
    for (double p : {1.0, 2.0}) {
        for (int d_h : {1, 4}) {
            double c2 = 0.0, c4 = 0.0, c8 = 0.0;
            for (std::uint64_t i = 0; i < 100; ++i) {
                const auto g =
                    random_field(torus, times, d_h, substream(303 + d_h, i));
                c2 = std::max(c2, aperture_ratio(g, p, 0.5, 2.0));
                c4 = std::max(c4, aperture_ratio(g, p, 0.5, 4.0));
                c8 = std::max(c8, aperture_ratio(g, p, 0.5, 8.0));
            }
            const bool ok = c4 <= 1.5 * c2 && c8 <= 1.5 * c2;
            pass = pass && ok;
            if (p == 1.0 && d_h == 1)
                detail = "C(alpha=2) " + fmt(c2) + ", alpha=8 " + fmt(c8);
        }
    }
    report(3, "change of aperture", pass,
           detail + "; both p in {1,2}, d_H in {1,4} (slack 1.5)");
}

void criterion_4_atoms() {
    const Torus torus(1, 64, 1.0);
    const double h = torus.spacing();
    const auto times = make_time_grid(h * h, 1.0, 48, 0.5);
    std::vector<double> means;
    for (double r : {4.0 * h, 8.0 * h, 16.0 * h}) {
        double mean = 0.0;
        for (int seed = 0; seed < 50; ++seed) {
            const auto atom =
                make_atom(torus, times, 0.5, r, 32, substream(404, seed));
            mean += tent_norm(atom.field, TentParams(1.0, 0.5, 1.0));
        }
        means.push_back(mean / 50.0);
    }
    const double spread = *std::max_element(means.begin(), means.end()) /
                          *std::min_element(means.begin(), means.end());
    report(4, "atom norms r-independent", spread <= 1.5,
           "mean tent norms " + fmt(means[0]) + "/" + fmt(means[1]) + "/" +
               fmt(means[2]) + ", spread " + fmt(spread) + " (tol 1.5)");
}

void criterion_5_ito_isometry() {
    const Torus torus(1, 8, 1.0);
    const auto op =
        DiscreteOperator::assemble(torus, CoefficientField::checkerboard(
                                              torus, 9, 0.2, 5.0));
    const NoiseConfig base{2, 1.0 / 32.0, 32, 0};
    const double t = base.horizon();
    const std::size_t trials = 2000;

    // deterministic family
    auto deterministic = families::eigenmode_pulse();
    double sum = 0.0, sum_sq = 0.0, rhs_det = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
        NoiseConfig cfg = base;
        cfg.seed = substream(505, i);
        const auto w = sample_noise(cfg);
        const auto g = deterministic.make(op, cfg, w, i);
        if (i == 0) rhs_det = ito_isometry_rhs(op, g, t);
        const auto coeffs = stochastic_convolution_spectral(op, g, w, {&t, 1});
        double sq = 0.0;
        for (double c : coeffs) sq += c * c;
        sq *= torus.cell_volume();
        sum += sq;
        sum_sq += sq * sq;
    }
    const double mean = sum / trials;
    const double se =
        std::sqrt((sum_sq / trials - mean * mean) / (trials - 1.0));
    const bool det_ok = std::abs(mean - rhs_det) <= 3.0 * se;

    // adapted family: pathwise-conditional right side
    auto adapted = families::adapted_random();
    double dsum = 0.0, dsq = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
        NoiseConfig cfg = base;
        cfg.seed = substream(606, i);
        const auto w = sample_noise(cfg);
        const auto g = adapted.make(op, cfg, w, i);
        const auto coeffs = stochastic_convolution_spectral(op, g, w, {&t, 1});
        double sq = 0.0;
        for (double c : coeffs) sq += c * c;
        sq *= torus.cell_volume();
        const double diff = sq - ito_isometry_rhs(op, g, t);
        dsum += diff;
        dsq += diff * diff;
    }
    const double dmean = dsum / trials;
    const double dse = std::sqrt((dsq / trials - dmean * dmean) / (trials - 1.0));
    const bool adapted_ok = std::abs(dmean) <= 3.0 * dse;

    report(5, "Ito isometry (2000 seeds)", det_ok && adapted_ok,
           "deterministic |mean-rhs|/se " + fmt(std::abs(mean - rhs_det) / se) +
               ", adapted |mean diff|/se " + fmt(std::abs(dmean) / dse) +
               " (tol 3)");
}

void criterion_6_kato() {
    const double lo = 0.2, hi = 5.0;
    const Torus torus(1, 32, 1.0);
    const auto op = DiscreteOperator::assemble(
        torus, CoefficientField::checkerboard(torus, 21, lo, hi));
    double worst_lo = 1e300, worst_hi = 0.0;
    for (std::uint64_t i = 0; i < 200; ++i) {
        std::vector<double> f(torus.sites());
        double mean = 0.0;
        for (std::size_t s = 0; s < f.size(); ++s) {
            f[s] = gaussian(substream(707, i), s, 0);
            mean += f[s];
        }
        mean /= f.size();
        for (double& v : f) v -= mean;
        const auto root = op.frac_power_apply(0.5, f);
        const auto grad = gradient(torus, f);
        double num = 0.0, den = 0.0;
        for (double v : root) num += v * v;
        for (double v : grad) den += v * v;
        const double ratio = std::sqrt(num / den);
        worst_lo = std::min(worst_lo, ratio);
        worst_hi = std::max(worst_hi, ratio);
    }
    const bool pass = worst_lo >= std::sqrt(lo) * (1.0 - 1e-6) &&
                      worst_hi <= std::sqrt(hi) * (1.0 + 1e-6);
    report(6, "discrete Kato bracket", pass,
           "ratios in [" + fmt(worst_lo) + ", " + fmt(worst_hi) +
               "], bracket [" + fmt(std::sqrt(lo)) + ", " + fmt(std::sqrt(hi)) +
               "] over 200 fields");
}

void criterion_7_offdiag() {
    const Torus torus(1, 64, 1.0);
    std::vector<double> profile(torus.sites());
    for (std::size_t s = 0; s < profile.size(); ++s)
        profile[s] = 1.0 + 0.5 * gaussian(808, s, 0);
    const auto cases = default_offdiag_sweep(torus);

    const auto id_op =
        DiscreteOperator::assemble(torus, CoefficientField::identity(torus));
    const auto rough_op = DiscreteOperator::assemble(
        torus, CoefficientField::checkerboard(torus, 13, 0.2, 5.0));

    bool pass = true;
    std::string detail;
    for (int q : {1, 2}) {
        const auto id_report = offdiag_probe(id_op, q, profile, cases);
        pass = pass && id_report.slope < 0.0 && id_report.r_squared >= 0.9;
        const auto rough_report = offdiag_probe(rough_op, q, profile, cases);
        pass = pass && rough_report.slope < 0.0;
        if (q == 1)
            detail = "identity slope " + fmt(id_report.slope) + " (R2 " +
                     fmt(id_report.r_squared) + "), rough slope " +
                     fmt(rough_report.slope);
    }
    report(7, "off-diagonal decay", pass, detail + "; q in {1,2}");
}

void criterion_8_weighted_l2() {
    const auto family = families::eigenmode_pulse();
    bool pass = true;
    std::string detail;

    for (double beta : {0.25, 0.5, 1.0}) {
        std::vector<double> ratios;
        for (int N : {16, 32, 64}) {
            const Torus torus(1, N, 1.0);
            const auto op = DiscreteOperator::assemble(
                torus, CoefficientField::checkerboard(torus, 7, 0.2, 5.0));
            const double h = torus.spacing();
            const auto eval = make_time_grid(h * h, 1.0, 64, beta);
            const NoiseConfig cfg{1, 1.0 / 128.0, 128, 0};
            const auto report_w =
                weighted_l2_check(op, family, beta, cfg, eval, 200, 42, 2);
            ratios.push_back(report_w.ratio);
        }
        const double drift = *std::max_element(ratios.begin(), ratios.end()) /
                             *std::min_element(ratios.begin(), ratios.end());
        pass = pass && drift < 2.0;
        if (beta == 0.5) detail = "drift(beta=0.5) " + fmt(drift);
    }

    // beta = 0 base case against the exact spectral oracle
    const Torus torus(1, 16, 1.0);
    const auto op = DiscreteOperator::assemble(
        torus, CoefficientField::checkerboard(torus, 5, 0.2, 5.0));
    const double h = torus.spacing();
    const auto eval = make_time_grid(h * h, 1.0, 64, 0.0);
    const NoiseConfig base{1, 1.0 / 64.0, 64, 0};
    const auto mc = weighted_l2_check(op, family, 0.0, base, eval, 400, 31, 2);
    NoiseConfig cfg = base;
    cfg.seed = substream(31, 0);
    const auto w = sample_noise(cfg);
    const auto g = family.make(op, cfg, w, 0);
    const double exact = weighted_l2_exact_lhs(op, g, 0.0, eval);
    const double rhs =
        std::pow(weighted_l2_norm(sample_process(g, eval), 0.0), 2);
    const double exact_ratio = exact / rhs;
    const bool base_ok =
        std::abs(mc.ratio - exact_ratio) <= 3.0 * mc.stderr_value + 1e-12;
    pass = pass && base_ok;

    report(8, "weighted L2 estimate", pass,
           detail + ", beta=0 |mc-exact|/se " +
               fmt(std::abs(mc.ratio - exact_ratio) /
                   std::max(mc.stderr_value, 1e-300)) +
               " (tol 3)");
}

void criterion_9_main_theorem() {
    const auto started = std::chrono::steady_clock::now();
    bool pass = true;
    double worst_drift = 0.0;
    std::string worst_tag;

    struct FamilySetup {
        GFamily family;
        std::size_t steps;
    };
    std::vector<FamilySetup> setups;
    setups.push_back({families::eigenmode_pulse(), 128});
    setups.push_back({families::adapted_random(), 128});
    setups.push_back({families::singular_mixture(5), 4096});
    setups.push_back({families::atoms(17), 128});

    for (const auto& setup : setups) {
        for (bool rough : {false, true}) {
            std::map<std::pair<double, double>, std::vector<double>> ratios;
            for (int N : {16, 32, 64}) {
                const Torus torus(1, N, 1.0);
                const auto op = DiscreteOperator::assemble(
                    torus,
                    rough ? CoefficientField::checkerboard(torus, 7, 0.2, 5.0)
                          : CoefficientField::identity(torus));
                const NoiseConfig cfg{
                    1, 1.0 / static_cast<double>(setup.steps), setup.steps, 0};
                for (double beta : {0.5, 1.0}) {
                    const auto eval = make_time_grid(2e-4, 1.0, 64, beta);
                    for (double p : {1.0, 1.5, 2.0, 4.0}) {
                        const auto rep = conical_ratio(
                            op, TentParams(p, beta, 1.0), setup.family, cfg,
                            eval, 96, 42, 2);
                        ratios[{p, beta}].push_back(rep.ratio);
                    }
                }
            }
            for (const auto& [key, values] : ratios) {
                const double drift =
                    *std::max_element(values.begin(), values.end()) /
                    *std::min_element(values.begin(), values.end());
                if (drift > worst_drift) {
                    worst_drift = drift;
                    worst_tag = setup.family.name + (rough ? "/rough" : "/id") +
                                " p=" + fmt(key.first) +
                                " beta=" + fmt(key.second);
                }
                pass = pass && drift < 2.0;
            }
        }
    }
    const double seconds =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started)
            .count() /
        1000.0;
    pass = pass && seconds <= 1200.0;
    report(9, "conical regularity sweep", pass,
           "worst drift " + fmt(worst_drift) + " (" + worst_tag + "), " +
               fmt(seconds) + " s (caps 2.0 / 1200 s)");
}

void criterion_10_classical_failure() {
    const Torus torus(1, 32, 1.0);
    const auto op =
        DiscreteOperator::assemble(torus, CoefficientField::identity(torus));
    const auto eval = make_time_grid(2e-4, 1.0, 48, 0.5);
    const NoiseConfig cfg{1, 1.0 / 4096.0, 4096, 0};
    const auto rep = classical_vs_conical(op, 1.0, 0.5, cfg, eval, 64, 13, 5, 2);

    bool monotone = true;
    for (std::size_t k = 1; k < rep.entries.size(); ++k)
        monotone = monotone && rep.entries[k].classical_ratio >
                                   rep.entries[k - 1].classical_ratio;
    double lo = rep.entries[0].conical_ratio, hi = lo;
    for (const auto& e : rep.entries) {
        lo = std::min(lo, e.conical_ratio);
        hi = std::max(hi, e.conical_ratio);
    }
    const bool conical_ok = hi / lo < 2.0;
    report(10, "classical failure direction", monotone && conical_ok,
           "classical " + fmt(rep.entries.front().classical_ratio) + " -> " +
               fmt(rep.entries.back().classical_ratio) +
               " monotone, conical spread " + fmt(hi / lo) + " (tol 2)");
}

void criterion_11_deterministic() {
    // closed form on an eigenmode
    const Torus torus(1, 16, 1.0);
    const auto op = DiscreteOperator::assemble(
        torus, CoefficientField::checkerboard(torus, 15, 0.2, 5.0));
    const double h = torus.spacing();
    const auto eval = make_time_grid(h * h, 1.0, 32, 0.5);
    const NoiseConfig cfg{1, 1.0 / 128.0, 128, 0};

    const std::size_t mode = 3;
    const auto v = op.eigenvector(mode);
    const double lam = op.eigenvalues()[mode];
    SimpleProcess::Piece piece;
    piece.first_step = 0;
    piece.last_step = cfg.steps;
    piece.field = v;
    const SimpleProcess g(torus, cfg, {piece}, "eigenmode");
    const auto rep =
        deterministic_ratio(op, TentParams(1.2, 0.5, 1.0), g, eval, "eigenmode");

    auto closed = SpaceTimeField::zeros(torus, eval, FieldKind::scalar, 1);
    for (std::size_t k = 0; k < eval.count(); ++k) {
        const double t = eval.nodes[k];
        const std::size_t upto =
            static_cast<std::size_t>(std::floor(t / cfg.dt + 1e-9));
        const double q = std::exp(lam * cfg.dt);
        const double series = std::exp(-lam * t) *
                              (std::pow(q, static_cast<double>(upto)) - 1.0) /
                              (q - 1.0);
        for (std::size_t s = 0; s < torus.sites(); ++s)
            closed.at(k, s) = lam * cfg.dt * series * v[s];
    }
    const double lhs_closed = tent_norm(closed, TentParams(1.2, 0.5, 1.0));
    const double rhs =
        tent_norm(sample_process(g, eval), TentParams(1.2, 0.5, 1.0));
    const double rel = std::abs(rep.ratio - lhs_closed / rhs) / (lhs_closed / rhs);
    bool pass = rel < 1e-8;

    // refinement drift at (1.2, 0.5) for identity and rough coefficients
    double worst_drift = 0.0;
    for (bool rough : {false, true}) {
        std::vector<double> ratios;
        for (int N : {16, 32, 64}) {
            const Torus t2(1, N, 1.0);
            const auto op2 = DiscreteOperator::assemble(
                t2, rough ? CoefficientField::checkerboard(t2, 7, 0.2, 5.0)
                          : CoefficientField::identity(t2));
            const NoiseConfig cfg2{1, 1.0 / 256.0, 256, 0};
            const auto eval2 = make_time_grid(2e-4, 1.0, 64, 0.5);
            const auto w2 = sample_noise(cfg2);
            const auto g2 = families::eigenmode_pulse().make(op2, cfg2, w2, 0);
            ratios.push_back(deterministic_ratio(op2, TentParams(1.2, 0.5, 1.0),
                                                 g2, eval2, "eigenmode")
                                 .ratio);
        }
        const double drift = *std::max_element(ratios.begin(), ratios.end()) /
                             *std::min_element(ratios.begin(), ratios.end());
        worst_drift = std::max(worst_drift, drift);
        pass = pass && drift < 2.0;
    }
    report(11, "deterministic conical", pass,
           "closed-form rel err " + fmt(rel) + " (tol 1e-8), drift " +
               fmt(worst_drift) + " (tol 2)");
}

void criterion_12_picard() {
    const Torus torus(1, 32, 1.0);
    const auto op =
        DiscreteOperator::assemble(torus, CoefficientField::identity(torus));
    const double h = torus.spacing();
    const auto eval = make_time_grid(h * h, 1.0, 48, 0.5);
    const NoiseConfig cfg{1, 1.0 / 128.0, 128, 2024};
    const TentParams params(2.0, 0.5, 1.0);
    const auto u0 = op.eigenvector(2);

    // measured decay rate: geometric, over the increments after iteration 3
    // (individual ratios oscillate around it because the fixed-point map is
    // not symmetric)
    auto geometric_rate = [](const std::vector<double>& incr) {
        const std::size_t from = 3;
        if (incr.size() <= from + 1) return 0.0;
        return std::pow(incr.back() / incr[from],
                        1.0 / static_cast<double>(incr.size() - 1 - from));
    };

    // pilot: measure the per-iteration gain of the affine fixed-point map
    PicardOptions pilot_opts;
    pilot_opts.tol = 1e-10;
    const auto pilot = picard_solve(op, NemytskiiSpec::linear(1, 0.1), u0,
                                    params, cfg, eval, pilot_opts);
    const double gain = geometric_rate(pilot.increment_norms) / 0.1;

    // calibrated contraction: measured K * L_b about 0.5
    PicardOptions opts;
    opts.tol = 1e-8;
    opts.k_estimate = gain;
    const double lambda = 0.5 / gain;
    const auto run = picard_solve(op, NemytskiiSpec::linear(1, lambda), u0,
                                  params, cfg, eval, opts);
    const double rate = geometric_rate(run.increment_norms);
    const bool rates_ok = rate > 0.0 && rate <= 0.6;
    const bool residual_ok = run.residual_rel < 1e-6;

    // b = 0 converges to the initial term in one iteration, exactly
    const auto zero_run =
        picard_solve(op, NemytskiiSpec::zero(1), u0, params, cfg, eval);
    const auto z = initial_term(op, u0, params, eval);
    double z_err = 0.0;
    for (std::size_t i = 0; i < z.field.data.size(); ++i)
        z_err = std::max(z_err,
                         std::abs(zero_run.v.data[i] - z.field.data[i]));
    const bool zero_ok = zero_run.iterations == 1 && z_err == 0.0;

    // engineered non-contraction: measured K * L_b about 2
    bool threw = false;
    double measured = 0.0;
    try {
        picard_solve(op, NemytskiiSpec::linear(1, 2.0 / gain), u0, params, cfg,
                     eval);
    } catch (const NonContractionError& e) {
        threw = true;
        measured = e.measured_ratio;
    } catch (const std::exception&) {
        threw = false;
    }

    report(12, "picard fixed point", rates_ok && residual_ok && zero_ok && threw,
           "K*L_b 0.5: measured rate " + fmt(rate) + " (tol 0.6), residual " +
               fmt(run.residual_rel) + ", b=0 exact, blow-up ratio " +
               fmt(measured));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_13_determinism() {
    namespace fs = std::filesystem;
    const std::string root = "acceptance_out";
    fs::remove_all(root);

    const std::map<std::string, std::string> configs = {
        {"conical_ratio", "[experiment]\nkind = conical_ratio\n"
                          "[grid]\nn = 1\nN = 16\nM = 24\n"
                          "[operator]\ncoefficients = checkerboard\n"
                          "lambda_min = 0.2\nlambda_max = 5\n"
                          "[tent]\np = 1.5\nbeta = 0.5\n"
                          "[noise]\nsteps = 64\nseed = 42\n"
                          "[run]\ntrials = 16\nfamily = adapted\n"},
        {"weighted_l2", "[experiment]\nkind = weighted_l2\n"
                        "[grid]\nn = 1\nN = 16\nM = 24\n"
                        "[operator]\ncoefficients = identity\n"
                        "[tent]\nbeta = 0.5\n"
                        "[noise]\nsteps = 64\nseed = 42\n"
                        "[run]\ntrials = 16\nfamily = eigenmode\n"},
        {"classical_vs_conical",
         "[experiment]\nkind = classical_vs_conical\n"
         "[grid]\nn = 1\nN = 16\nM = 24\nt_min = 0.001\n"
         "[operator]\ncoefficients = identity\n"
         "[tent]\np = 1\nbeta = 0.5\n"
         "[noise]\nsteps = 512\nseed = 42\n"
         "[run]\ntrials = 8\nfamily = singular\nlocalization_levels = 3\n"},
        {"offdiag", "[experiment]\nkind = offdiag\n"
                    "[grid]\nn = 1\nN = 32\nM = 24\n"
                    "[operator]\ncoefficients = identity\n"
                    "[offdiag]\nq = 2\n"
                    "[noise]\nseed = 42\n[run]\ntrials = 1\n"},
        {"deterministic_ratio", "[experiment]\nkind = deterministic_ratio\n"
                                "[grid]\nn = 1\nN = 16\nM = 24\n"
                                "[operator]\ncoefficients = identity\n"
                                "[tent]\np = 1.2\nbeta = 0.5\n"
                                "[noise]\nsteps = 64\nseed = 42\n"
                                "[run]\ntrials = 1\n"},
        {"picard", "[experiment]\nkind = picard\n"
                   "[grid]\nn = 1\nN = 16\nM = 24\n"
                   "[operator]\ncoefficients = identity\n"
                   "[tent]\np = 2\nbeta = 0.5\n"
                   "[noise]\nsteps = 64\nseed = 42\n"
                   "[run]\ntrials = 8\nfamily = adapted\n"
                   "[picard]\nlambda = 0.1\nu0 = eigenmode:2\n"},
        {"atom_suite", "[experiment]\nkind = atom_suite\n"
                       "[grid]\nn = 1\nN = 32\nM = 24\n"
                       "[operator]\ncoefficients = identity\n"
                       "[tent]\np = 1\nbeta = 0.5\n"
                       "[noise]\nseed = 42\n[run]\ntrials = 10\n"},
        {"aperture_suite", "[experiment]\nkind = aperture_suite\n"
                           "[grid]\nn = 1\nN = 16\nM = 16\nt_max = 0.5\n"
                           "[operator]\ncoefficients = identity\n"
                           "[tent]\np = 1\nbeta = 0.5\nalpha = 4\n"
                           "[noise]\nseed = 42\n[run]\ntrials = 10\n"},
    };

    bool pass = true;
    std::string failing;
    for (const auto& [name, text] : configs) {
        auto cfg = parse_config_text(text);
        cfg.out_dir = root + "/" + name + "_a";
        cfg.workers = 1;
        write_outputs(cfg, execute_config(cfg, false));
        cfg.out_dir = root + "/" + name + "_b";
        write_outputs(cfg, execute_config(cfg, false));
        cfg.out_dir = root + "/" + name + "_w4";
        cfg.workers = 4;
        write_outputs(cfg, execute_config(cfg, false));

        const auto a = read_file(root + "/" + name + "_a/summary.csv");
        const auto b = read_file(root + "/" + name + "_b/summary.csv");
        const auto w4 = read_file(root + "/" + name + "_w4/summary.csv");
        if (a.empty() || a != b || a != w4) {
            pass = false;
            failing += name + " ";
        }
    }
    fs::remove_all(root);
    report(13, "byte-identical reruns", pass,
           pass ? "8 experiment kinds x {rerun, 4 workers}"
                : "mismatch in: " + failing);
}

} // namespace

int main() {
    std::printf("acceptance suite (desk scale, n = 1)\n");
    criterion_1_tent_identity();
    criterion_2_brute_force();
    criterion_3_aperture();
    criterion_4_atoms();
    criterion_5_ito_isometry();
    criterion_6_kato();
    criterion_7_offdiag();
    criterion_8_weighted_l2();
    criterion_9_main_theorem();
    criterion_10_classical_failure();
    criterion_11_deterministic();
    criterion_12_picard();
    criterion_13_determinism();
    if (failures == 0) {
        std::printf("all 13 criteria passed\n");
        return 0;
    }
    std::printf("%d criteria FAILED\n", failures);
    return 1;
}
