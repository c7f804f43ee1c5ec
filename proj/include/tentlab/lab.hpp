#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "tentlab/elliptic.hpp"
#include "tentlab/lattice.hpp"
#include "tentlab/rng.hpp"
#include "tentlab/stochastic.hpp"
#include "tentlab/tent.hpp"
#include "tentlab/util.hpp"

namespace tentlab {

// Everything needed to re-run a measurement, flattened for reports.
struct GridDescriptor {
    int n = 1;
    int N = 0;
    double L = 1.0;
    double t_min = 0.0;
    double t_max = 0.0;
    std::size_t M = 0;
    double dt = 0.0;
    std::size_t steps = 0;
    int d_H = 1;
    std::string coefficients;
};

inline GridDescriptor describe(const DiscreteOperator& op, const TimeGrid& eval,
                               const NoiseConfig& cfg) {
    GridDescriptor g;
    g.n = op.torus().dim;
    g.N = op.torus().axis_points;
    g.L = op.torus().side;
    g.t_min = eval.t_min;
    g.t_max = eval.t_max;
    g.M = eval.count();
    g.dt = cfg.dt;
    g.steps = cfg.steps;
    g.d_H = cfg.h_dim;
    g.coefficients = op.coefficients().tag;
    return g;
}

// Monte-Carlo estimate of a ratio of p-th moments with a delta-method
// standard error (covariance included since both sides share the path).
struct RegularityReport {
    double p = 0.0, beta = 0.0, alpha = 1.0;
    std::size_t trials = 0;
    double lhs_moment = 0.0;
    double rhs_moment = 0.0;
    double ratio = 0.0;
    double stderr_value = 0.0;
    std::string family;
    std::uint64_t seed = 0;
    GridDescriptor grid;
};

// A family of integrands: one adapted simple process per trial. The trial
// index and the trial's own noise path are the only sources of variation.
struct GFamily {
    std::string name;
    std::function<SimpleProcess(const DiscreteOperator&, const NoiseConfig&,
                                const NoisePath&, std::uint64_t)>
        make;
};

namespace families {

inline std::vector<double> fourier_profile(const Torus& torus, int mode) {
    std::vector<double> v(torus.sites());
    for (std::size_t s = 0; s < v.size(); ++s) {
        const auto c = torus.coords(s);
        double phase = 2.0 * M_PI * mode * static_cast<double>(c[0]) /
                       torus.axis_points;
        if (torus.dim == 2)
            phase += 2.0 * M_PI * static_cast<double>(c[1]) / torus.axis_points;
        v[s] = std::cos(phase);
    }
    return v;
}

// (i) deterministic pulses: mode m carries the (m+1)-th Fourier profile over
// the leading fraction of the stepping grid.
inline GFamily eigenmode_pulse(double pulse_fraction = 1.0) {
    GFamily family;
    family.name = "eigenmode";
    family.make = [pulse_fraction](const DiscreteOperator& op,
                                   const NoiseConfig& cfg, const NoisePath&,
                                   std::uint64_t) {
        const Torus& torus = op.torus();
        SimpleProcess::Piece piece;
        piece.first_step = 0;
        piece.last_step = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(pulse_fraction * cfg.steps)));
        piece.field.assign(torus.sites() * cfg.h_dim, 0.0);
        for (int m = 0; m < cfg.h_dim; ++m) {
            const auto profile = fourier_profile(torus, m + 1);
            for (std::size_t s = 0; s < torus.sites(); ++s)
                piece.field[s * cfg.h_dim + m] = profile[s];
        }
        return SimpleProcess(torus, cfg, {piece}, "eigenmode");
    };
    return family;
}

// (ii) random adapted processes: piecewise fields modulated by the Brownian
// value at each piece start, exercised through the adaptedness builder.
inline GFamily adapted_random(std::size_t piece_count = 8) {
    GFamily family;
    family.name = "adapted";
    family.make = [piece_count](const DiscreteOperator& op,
                                const NoiseConfig& cfg, const NoisePath& w,
                                std::uint64_t) {
        const Torus& torus = op.torus();
        const std::size_t len = std::max<std::size_t>(1, cfg.steps / piece_count);
        AdaptedProcessBuilder builder(torus, w);
        for (std::size_t first = 0; first < cfg.steps; first += len) {
            const std::size_t last = std::min(first + len, cfg.steps);
            builder.add_piece(first, last, [&](const PastNoise& past) {
                std::vector<double> field(torus.sites() * cfg.h_dim);
                for (int m = 0; m < cfg.h_dim; ++m) {
                    const double drive = past.path_value(m);
                    const double amp = 1.0 + 0.5 * std::tanh(drive);
                    const auto profile = fourier_profile(torus, m + 1);
                    for (std::size_t s = 0; s < torus.sites(); ++s)
                        field[s * cfg.h_dim + m] = amp * profile[s];
                }
                return field;
            });
        }
        return builder.build();
    };
    return family;
}

// (iii) parabolically time-localized pulses; level k lives on
// (0, horizon 4^{-(k+1)}].
inline GFamily singular(int level) {
    GFamily family;
    family.name = "singular-k" + std::to_string(level);
    const std::string tag = family.name;
    family.make = [level, tag](const DiscreteOperator& op,
                               const NoiseConfig& cfg, const NoisePath&,
                               std::uint64_t) {
        const Torus& torus = op.torus();
        const double tau = cfg.horizon() * std::pow(4.0, -(level + 1));
        SimpleProcess::Piece piece;
        piece.first_step = 0;
        piece.last_step = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(tau / cfg.dt)));
        piece.field.assign(torus.sites() * cfg.h_dim, 0.0);
        for (int m = 0; m < cfg.h_dim; ++m) {
            const auto profile = fourier_profile(torus, m + 1);
            for (std::size_t s = 0; s < torus.sites(); ++s)
                piece.field[s * cfg.h_dim + m] = profile[s];
        }
        return SimpleProcess(torus, cfg, {piece}, tag);
    };
    return family;
}

// Mixture over localization levels, cycled by trial index.
inline GFamily singular_mixture(int levels = 5) {
    GFamily family;
    family.name = "singular";
    family.make = [levels](const DiscreteOperator& op, const NoiseConfig& cfg,
                           const NoisePath& w, std::uint64_t trial) {
        const int level = static_cast<int>(trial % levels);
        return singular(level).make(op, cfg, w, trial);
    };
    return family;
}

// (iv) atoms as data: band-limited random fields on a parabolic box
// (0, r^2] x B(x0, r), normalized in L2(dt x dy) to r^{-n/2}. The spatial
// frequency content is capped at a fixed mode count, so one trial is the same
// continuum object on every lattice refinement. Radius and center cycle with
// the trial.
inline GFamily atoms(std::uint64_t shape_seed = 17) {
    GFamily family;
    family.name = "atom";
    family.make = [shape_seed](const DiscreteOperator& op, const NoiseConfig& cfg,
                               const NoisePath&, std::uint64_t trial) {
        const Torus& torus = op.torus();
        const std::size_t support_steps = std::size_t{8}
                                          << (trial % 3); // 8, 16, 32 steps
        const std::size_t last =
            std::min<std::size_t>(support_steps, cfg.steps);
        const double radius =
            std::max(torus.spacing(),
                     std::sqrt(static_cast<double>(last) * cfg.dt));
        const double center_frac = uniform01(shape_seed, trial, 1);
        const std::size_t center = torus.site_of(static_cast<int>(
            center_frac * torus.axis_points));

        constexpr int kModes = 6;
        std::vector<SimpleProcess::Piece> pieces(last);
        double mass = 0.0;
        const std::uint64_t field_seed = substream(shape_seed, trial);
        for (std::size_t k = 0; k < last; ++k) {
            pieces[k].first_step = k;
            pieces[k].last_step = k + 1;
            pieces[k].field.assign(torus.sites() * cfg.h_dim, 0.0);
            for (int m = 0; m < cfg.h_dim; ++m) {
                for (std::size_t s = 0; s < torus.sites(); ++s) {
                    if (!(torus.distance(center, s) < radius)) continue;
                    const auto c = torus.coords(s);
                    double phase0 = 2.0 * M_PI * static_cast<double>(c[0]) /
                                    torus.axis_points;
                    if (torus.dim == 2)
                        phase0 += 2.0 * M_PI * static_cast<double>(c[1]) /
                                  torus.axis_points;
                    double v = 0.0;
                    for (int j = 1; j <= kModes; ++j)
                        v += gaussian(field_seed, k, 2 * j, m) *
                                 std::cos(j * phase0) +
                             gaussian(field_seed, k, 2 * j + 1, m) *
                                 std::sin(j * phase0);
                    pieces[k].field[s * cfg.h_dim + m] = v;
                    mass += v * v;
                }
            }
        }
        mass *= cfg.dt * torus.cell_volume();
        const double target = std::pow(radius, -0.5 * torus.dim);
        const double scale = mass > 0.0 ? target / std::sqrt(mass) : 0.0;
        for (auto& piece : pieces)
            for (double& v : piece.field) v *= scale;
        return SimpleProcess(torus, cfg, std::move(pieces), "atom");
    };
    return family;
}

} // namespace families

namespace detail {

struct MomentPair {
    double lhs_moment, rhs_moment, ratio, stderr_value;
};

// Ratio of p-th moments with a delta-method standard error on the log scale.
inline MomentPair moment_ratio(std::span<const double> lhs,
                               std::span<const double> rhs, double p) {
    const std::size_t n = lhs.size();
    std::vector<double> lp(n), rp(n);
    for (std::size_t i = 0; i < n; ++i) {
        lp[i] = std::pow(lhs[i], p);
        rp[i] = std::pow(rhs[i], p);
    }
    const double a = pairwise_sum(lp) / n;
    const double b = pairwise_sum(rp) / n;
    if (!(b > 0.0))
        throw DegenerateInputError("moment_ratio: zero right-hand moment "
                                   "(degenerate family)");
    MomentPair out;
    out.lhs_moment = std::pow(a, 1.0 / p);
    out.rhs_moment = std::pow(b, 1.0 / p);
    out.ratio = out.lhs_moment / out.rhs_moment;

    if (n < 2) {
        out.stderr_value = 0.0;
        return out;
    }
    double var_a = 0.0, var_b = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        var_a += (lp[i] - a) * (lp[i] - a);
        var_b += (rp[i] - b) * (rp[i] - b);
        cov += (lp[i] - a) * (rp[i] - b);
    }
    const double nn = static_cast<double>(n) * (n - 1.0);
    var_a /= nn;
    var_b /= nn;
    cov /= nn;
    double var_log = (var_a / (a * a) + var_b / (b * b) - 2.0 * cov / (a * b)) /
                     (p * p);
    var_log = std::max(var_log, 0.0);
    out.stderr_value = out.ratio * std::sqrt(var_log);
    return out;
}

inline double l2_norm(const Torus& torus, std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s * torus.cell_volume());
}

} // namespace detail

// Monte-Carlo estimate of the conical regularity constant: the ratio of p-th
// moments of tent norms of grad S<>g and of g.
inline RegularityReport conical_ratio(const DiscreteOperator& op,
                                      const TentParams& params,
                                      const GFamily& family,
                                      const NoiseConfig& noise_cfg,
                                      const TimeGrid& eval_times,
                                      std::size_t trials, std::uint64_t seed,
                                      int workers = 1) {
    if (!(params.beta > 0.0))
        throw Error("conical_ratio: beta must be positive");
    if (trials == 0) throw Error("conical_ratio: need at least one trial");

    std::vector<double> lhs(trials), rhs(trials);
    parallel_for(trials, workers, [&](std::size_t trial) {
        NoiseConfig cfg = noise_cfg;
        cfg.seed = substream(seed, trial);
        const auto w = sample_noise(cfg);
        const auto g = family.make(op, cfg, w, trial);
        lhs[trial] = tent_norm(grad_stochastic_convolution(op, g, w, eval_times),
                               params);
        rhs[trial] = tent_norm(sample_process(g, eval_times), params);
    });

    const auto stats = detail::moment_ratio(lhs, rhs, params.p);
    RegularityReport report;
    report.p = params.p;
    report.beta = params.beta;
    report.alpha = params.alpha;
    report.trials = trials;
    report.lhs_moment = stats.lhs_moment;
    report.rhs_moment = stats.rhs_moment;
    report.ratio = stats.ratio;
    report.stderr_value = stats.stderr_value;
    report.family = family.name;
    report.seed = seed;
    report.grid = describe(op, eval_times, noise_cfg);
    return report;
}

// Weighted L2 estimate: E ||A^{1/2} S<>g||^2_{L2(t^-beta dt; L2)} over
// E ||g||^2_{L2(t^-beta dt; L2(H))}, plus the aperture-1 p=2 tent view of the
// same data for the cross-check.
struct WeightedL2Report {
    double beta = 0.0;
    std::size_t trials = 0;
    double ratio = 0.0;         // ratio of mean squares, A^{1/2} flavor
    double stderr_value = 0.0;
    double lhs_mean_sq = 0.0;
    double rhs_mean_sq = 0.0;
    double grad_ratio = 0.0;    // same with the gradient on the left side
    std::string family;
    std::uint64_t seed = 0;
    GridDescriptor grid;
};

inline WeightedL2Report weighted_l2_check(const DiscreteOperator& op,
                                          const GFamily& family, double beta,
                                          const NoiseConfig& noise_cfg,
                                          const TimeGrid& eval_times,
                                          std::size_t trials, std::uint64_t seed,
                                          int workers = 1) {
    if (!(beta >= 0.0)) throw Error("weighted_l2_check: beta must be >= 0");
    if (trials == 0) throw Error("weighted_l2_check: need at least one trial");

    const auto weights = eval_times.weights_for(beta);
    const auto lambda = op.eigenvalues();
    const std::size_t modes = op.size();

    std::vector<double> lhs_sq(trials), rhs_sq(trials), grad_sq(trials);
    parallel_for(trials, workers, [&](std::size_t trial) {
        NoiseConfig cfg = noise_cfg;
        cfg.seed = substream(seed, trial);
        const auto w = sample_noise(cfg);
        const auto g = family.make(op, cfg, w, trial);
        const auto coeffs =
            stochastic_convolution_spectral(op, g, w, eval_times.nodes);

        double acc_root = 0.0;
        double acc_grad = 0.0;
        for (std::size_t k = 0; k < eval_times.count(); ++k) {
            double slice = 0.0;
            for (std::size_t j = 0; j < modes; ++j) {
                const double c = coeffs[k * modes + j];
                slice += lambda[j] * c * c;
            }
            acc_root += weights[k] * slice;
            // gradient flavor via the quadratic form <a G u, G u> = <A u, u>
            // would coincide; measure the plain gradient instead
            const auto u = op.from_spectral(std::span<const double>(
                coeffs.data() + k * modes, modes));
            const auto grad_u = gradient(op.torus(), u);
            double gs = 0.0;
            for (double v : grad_u) gs += v * v;
            acc_grad += weights[k] * gs;
        }
        lhs_sq[trial] = acc_root * op.torus().cell_volume();
        grad_sq[trial] = acc_grad * op.torus().cell_volume();
        const double rhs = weighted_l2_norm(sample_process(g, eval_times), beta);
        rhs_sq[trial] = rhs * rhs;
    });

    const auto stats = detail::moment_ratio(lhs_sq, rhs_sq, 1.0);
    WeightedL2Report report;
    report.beta = beta;
    report.trials = trials;
    report.ratio = stats.ratio;
    report.stderr_value = stats.stderr_value;
    report.lhs_mean_sq = stats.lhs_moment;
    report.rhs_mean_sq = stats.rhs_moment;
    report.grad_ratio =
        detail::moment_ratio(grad_sq, rhs_sq, 1.0).ratio;
    report.family = family.name;
    report.seed = seed;
    report.grid = describe(op, eval_times, noise_cfg);
    return report;
}

// Exact E ||A^{1/2} S<>g||^2_{L2(t^-beta dt; L2)} for a deterministic g, by
// spectral calculus and the Ito isometry; the oracle for the beta = 0 base
// case and for any deterministic family.
inline double weighted_l2_exact_lhs(const DiscreteOperator& op,
                                    const SimpleProcess& g, double beta,
                                    const TimeGrid& eval_times) {
    const auto weights = eval_times.weights_for(beta);
    const auto spectra = detail::piece_spectra(op, g);
    const auto lambda = op.eigenvalues();
    const int d_h = g.h_dim();
    const double dt = g.grid().dt;

    double total = 0.0;
    for (std::size_t k = 0; k < eval_times.count(); ++k) {
        const double t = eval_times.nodes[k];
        const std::size_t upto =
            detail::completed_steps(t, dt, g.grid().steps);
        double slice = 0.0;
        const auto& pieces = g.pieces();
        for (std::size_t pi = 0; pi < pieces.size(); ++pi) {
            const std::size_t last = std::min(pieces[pi].last_step, upto);
            for (std::size_t s = pieces[pi].first_step; s < last; ++s) {
                const double tau = t - static_cast<double>(s) * dt;
                for (int m = 0; m < d_h; ++m) {
                    const auto& phat = spectra[pi * d_h + m];
                    for (std::size_t j = 0; j < phat.size(); ++j)
                        slice += lambda[j] * std::exp(-2.0 * tau * lambda[j]) *
                                 phat[j] * phat[j] * dt;
                }
            }
        }
        total += weights[k] * slice;
    }
    return total * op.torus().cell_volume();
}

// Classical L^p(dt; L2) ratio next to the conical one on the same localized
// family; the paper's counterexample direction for p < 2.
struct ComparisonEntry {
    int level = 0;
    double support = 0.0; // time-support length of the level
    double classical_ratio = 0.0;
    double classical_stderr = 0.0;
    double conical_ratio = 0.0;
    double conical_stderr = 0.0;
};

struct ComparisonReport {
    double p = 0.0, beta = 0.0;
    std::size_t trials = 0;
    std::vector<ComparisonEntry> entries;
    std::uint64_t seed = 0;
    GridDescriptor grid;
};

inline ComparisonReport classical_vs_conical(const DiscreteOperator& op,
                                             double p, double beta,
                                             const NoiseConfig& noise_cfg,
                                             const TimeGrid& eval_times,
                                             std::size_t trials,
                                             std::uint64_t seed, int levels = 5,
                                             int workers = 1) {
    if (!(p >= 1.0 && p < 2.0))
        throw Error("classical_vs_conical: p must lie in [1, 2)");
    if (!(beta > 0.0)) throw Error("classical_vs_conical: beta must be positive");
    if (trials == 0) throw Error("classical_vs_conical: need trials");

    const auto flat_weights = eval_times.weights_for(0.0);
    const TentParams params(p, beta, 1.0);

    ComparisonReport report;
    report.p = p;
    report.beta = beta;
    report.trials = trials;
    report.seed = seed;
    report.grid = describe(op, eval_times, noise_cfg);

    for (int level = 0; level < levels; ++level) {
        const auto family = families::singular(level);
        std::vector<double> cls_lhs(trials), cls_rhs(trials);
        std::vector<double> con_lhs(trials), con_rhs(trials);

        parallel_for(trials, workers, [&](std::size_t trial) {
            NoiseConfig cfg = noise_cfg;
            cfg.seed = substream(substream(seed, level), trial);
            const auto w = sample_noise(cfg);
            const auto g = family.make(op, cfg, w, trial);
            const auto grad_u = grad_stochastic_convolution(op, g, w, eval_times);
            const auto g_field = sample_process(g, eval_times);

            con_lhs[trial] = tent_norm(grad_u, params);
            con_rhs[trial] = tent_norm(g_field, params);

            double lhs_acc = 0.0, rhs_acc = 0.0;
            for (std::size_t k = 0; k < eval_times.count(); ++k) {
                double lhs_slice = 0.0, rhs_slice = 0.0;
                for (std::size_t s = 0; s < op.torus().sites(); ++s) {
                    lhs_slice += grad_u.squared_length(k, s);
                    rhs_slice += g_field.squared_length(k, s);
                }
                const double cell = op.torus().cell_volume();
                lhs_acc += flat_weights[k] * std::pow(cell * lhs_slice, p / 2.0);
                rhs_acc += flat_weights[k] * std::pow(cell * rhs_slice, p / 2.0);
            }
            cls_lhs[trial] = std::pow(lhs_acc, 1.0 / p);
            cls_rhs[trial] = std::pow(rhs_acc, 1.0 / p);
        });

        const auto cls = detail::moment_ratio(cls_lhs, cls_rhs, p);
        const auto con = detail::moment_ratio(con_lhs, con_rhs, p);
        ComparisonEntry entry;
        entry.level = level;
        entry.support = noise_cfg.horizon() * std::pow(4.0, -(level + 1));
        entry.classical_ratio = cls.ratio;
        entry.classical_stderr = cls.stderr_value;
        entry.conical_ratio = con.ratio;
        entry.conical_stderr = con.stderr_value;
        report.entries.push_back(entry);
    }
    return report;
}

// Off-diagonal probe for t^{1/2} grad S(t): measured L^q -> L^2 ratios
// between separated boxes and the fitted exponential decay in d^2/t.
struct OffDiagCase {
    std::size_t e_lo = 0, e_hi = 0; // site interval [lo, hi) along axis 0
    std::size_t f_lo = 0, f_hi = 0;
    double t = 0.0;
};

struct OffDiagPoint {
    double t = 0.0;
    double distance = 0.0;
    double ratio = 0.0;
};

struct OffDiagReport {
    int q = 2;
    std::vector<OffDiagPoint> points;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
    double uniform_sup = 0.0; // E = F = whole torus special case
    GridDescriptor grid;
};

namespace detail {

inline bool in_strip(const Torus& torus, std::size_t site, std::size_t lo,
                     std::size_t hi) {
    const auto c = torus.coords(site);
    return static_cast<std::size_t>(c[0]) >= lo &&
           static_cast<std::size_t>(c[0]) < hi;
}

inline double strip_distance(const Torus& torus, const OffDiagCase& box) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < torus.sites(); ++a) {
        if (!in_strip(torus, a, box.e_lo, box.e_hi)) continue;
        for (std::size_t b = 0; b < torus.sites(); ++b) {
            if (!in_strip(torus, b, box.f_lo, box.f_hi)) continue;
            best = std::min(best, torus.distance(a, b));
        }
    }
    return best;
}

} // namespace detail

inline double offdiag_uniform_sup(const DiscreteOperator& op,
                                  std::span<const double> f,
                                  std::span<const double> times) {
    const double base = detail::l2_norm(op.torus(), f);
    if (!(base > 0.0)) throw DegenerateInputError("offdiag: zero test field");
    double sup = 0.0;
    for (double t : times) {
        const auto moved = op.semigroup_apply(t, f);
        const auto grad_moved = gradient(op.torus(), moved);
        const double num =
            std::sqrt(t) * detail::l2_norm(op.torus(), grad_moved);
        sup = std::max(sup, num / base);
    }
    return sup;
}

inline OffDiagReport offdiag_probe(const DiscreteOperator& op, int q,
                                   std::span<const double> profile,
                                   std::span<const OffDiagCase> cases) {
    if (q != 1 && q != 2) throw Error("offdiag_probe: q must be 1 or 2");
    const Torus& torus = op.torus();
    const int n = torus.dim;

    OffDiagReport report;
    report.q = q;

    for (const auto& box : cases) {
        // disjointness along the strip axis, periodic
        for (std::size_t s = 0; s < torus.sites(); ++s)
            if (detail::in_strip(torus, s, box.e_lo, box.e_hi) &&
                detail::in_strip(torus, s, box.f_lo, box.f_hi))
                throw Error("offdiag_probe: overlapping E and F are not "
                            "allowed in the decay fit");

        std::vector<double> masked(torus.sites(), 0.0);
        double lq = 0.0;
        for (std::size_t s = 0; s < torus.sites(); ++s) {
            if (!detail::in_strip(torus, s, box.f_lo, box.f_hi)) continue;
            masked[s] = profile[s];
            lq += std::pow(std::abs(profile[s]), q);
        }
        lq = std::pow(lq * torus.cell_volume(), 1.0 / q);
        if (!(lq > 0.0))
            throw DegenerateInputError("offdiag_probe: profile vanishes on F");

        const auto moved = op.semigroup_apply(box.t, masked);
        const auto grad_moved = gradient(torus, moved);
        double masked_norm_sq = 0.0;
        for (std::size_t s = 0; s < torus.sites(); ++s) {
            if (!detail::in_strip(torus, s, box.e_lo, box.e_hi)) continue;
            for (int d = 0; d < n; ++d)
                masked_norm_sq += grad_moved[s * n + d] * grad_moved[s * n + d];
        }
        const double num =
            std::sqrt(box.t) *
            std::sqrt(masked_norm_sq * torus.cell_volume());
        const double prefactor =
            std::pow(box.t, -0.5 * n * (1.0 / q - 0.5));
        const double ratio = num / (prefactor * lq);
        if (!(std::isfinite(ratio) && ratio > 0.0))
            throw DegenerateInputError("offdiag_probe: degenerate ratio");

        OffDiagPoint point;
        point.t = box.t;
        point.distance = detail::strip_distance(torus, box);
        point.ratio = ratio;
        report.points.push_back(point);
    }

    if (report.points.size() < 8)
        throw Error("offdiag_probe: the decay fit needs at least 8 (t, d) "
                    "pairs");

    // least squares of log ratio on u = d^2 / t
    const std::size_t m = report.points.size();
    double su = 0.0, sy = 0.0;
    std::vector<double> u(m), y(m);
    for (std::size_t i = 0; i < m; ++i) {
        u[i] = report.points[i].distance * report.points[i].distance /
               report.points[i].t;
        y[i] = std::log(report.points[i].ratio);
        su += u[i];
        sy += y[i];
    }
    const double mu = su / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (u[i] - mu) * (u[i] - mu);
        sxy += (u[i] - mu) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    report.slope = sxy / sxx;
    report.intercept = my - report.slope * mu;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double fit = report.intercept + report.slope * u[i];
        ss_res += (y[i] - fit) * (y[i] - fit);
    }
    report.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    report.slope_stderr =
        std::sqrt(ss_res / (static_cast<double>(m) - 2.0) / sxx);
    return report;
}

// Geometry sweep used by the default probes: a fixed source strip and
// receiver strips at growing separations, several diffusion times each.
inline std::vector<OffDiagCase> default_offdiag_sweep(const Torus& torus) {
    std::vector<OffDiagCase> cases;
    const std::size_t N = torus.axis_points;
    const double h = torus.spacing();
    const std::size_t f_lo = 0, f_hi = std::max<std::size_t>(2, N / 16);
    for (std::size_t gap : {N / 8, N / 8 + N / 16, N / 4}) {
        const std::size_t e_lo = f_hi + gap;
        const std::size_t e_hi = std::min(e_lo + std::max<std::size_t>(2, N / 16),
                                          N / 2 + N / 4);
        const double d = static_cast<double>(gap) * h;
        for (double scale : {2.0, 4.0, 8.0, 16.0}) {
            OffDiagCase box;
            box.e_lo = e_lo;
            box.e_hi = e_hi;
            box.f_lo = f_lo;
            box.f_hi = f_hi;
            box.t = d * d / scale;
            cases.push_back(box);
        }
    }
    return cases;
}

// Deterministic conical regularity: tent-norm ratio of A S*g against g for a
// noise-free integrand.
struct DeterministicReport {
    double p = 0.0, beta = 0.0, alpha = 1.0;
    double lhs = 0.0, rhs = 0.0, ratio = 0.0;
    std::string family;
    GridDescriptor grid;
};

inline DeterministicReport deterministic_ratio(const DiscreteOperator& op,
                                               const TentParams& params,
                                               const SimpleProcess& g,
                                               const TimeGrid& eval_times,
                                               const std::string& family_tag) {
    const int n = op.torus().dim;
    const double p_floor =
        std::max(2.0 * n / (n + 2.0 * (1.0 + params.beta)), 1.0);
    if (!(params.p > p_floor))
        throw Error("deterministic_ratio: p must exceed the admissible "
                    "threshold sup(2n/(n+2(1+beta)), 1)");

    const auto as_conv = deterministic_convolution(op, g, eval_times, true);
    const double lhs = tent_norm(as_conv, params);
    const auto g_field = sample_process(g, eval_times);
    const double rhs = tent_norm(g_field, params);
    if (!(rhs > 0.0))
        throw DegenerateInputError("deterministic_ratio: degenerate family");

    DeterministicReport report;
    report.p = params.p;
    report.beta = params.beta;
    report.alpha = params.alpha;
    report.lhs = lhs;
    report.rhs = rhs;
    report.ratio = lhs / rhs;
    report.family = family_tag;
    NoiseConfig cfg;
    cfg.h_dim = 1;
    cfg.dt = g.grid().dt;
    cfg.steps = g.grid().steps;
    report.grid = describe(op, eval_times, cfg);
    return report;
}

} // namespace tentlab
