#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tentlab/elliptic.hpp"
#include "tentlab/lattice.hpp"
#include "tentlab/rng.hpp"
#include "tentlab/util.hpp"

namespace tentlab {

// Uniform Ito stepping grid and truncated noise dimension. Distinct from the
// geometric TimeGrid used for norm quadrature.
struct NoiseConfig {
    int h_dim = 1;
    double dt = 0.0;
    std::size_t steps = 0;
    std::uint64_t seed = 0;

    void validate() const {
        if (h_dim < 1) throw Error("NoiseConfig: h_dim must be >= 1");
        if (!(dt > 0.0)) throw Error("NoiseConfig: dt must be positive");
        if (steps == 0) throw Error("NoiseConfig: need at least one step");
    }
    double horizon() const { return dt * static_cast<double>(steps); }
    bool same_grid(const NoiseConfig& o) const {
        return h_dim == o.h_dim && dt == o.dt && steps == o.steps;
    }
};

// Brownian increments per step and per truncated H-mode. Increment k spans
// (k dt, (k+1) dt]; values are a pure function of (seed, step, mode).
class NoisePath {
public:
    explicit NoisePath(const NoiseConfig& config) : config_(config) {
        config_.validate();
        increments_.resize(config_.steps * config_.h_dim);
        const double sd = std::sqrt(config_.dt);
        for (std::size_t k = 0; k < config_.steps; ++k)
            for (int m = 0; m < config_.h_dim; ++m)
                increments_[k * config_.h_dim + m] =
                    sd * gaussian(config_.seed, k, static_cast<std::uint64_t>(m));
    }

    const NoiseConfig& config() const { return config_; }
    double increment(std::size_t step, int mode) const {
        return increments_[step * config_.h_dim + mode];
    }

private:
    NoiseConfig config_;
    std::vector<double> increments_;
};

inline NoisePath sample_noise(const NoiseConfig& config) {
    return NoisePath(config);
}

// Read-only window onto the increments strictly before a piece starts; any
// attempt to look ahead throws, which is what makes builder-constructed
// processes adapted by construction.
class PastNoise {
public:
    PastNoise(const NoisePath& path, std::size_t limit)
        : path_(&path), limit_(limit) {}

    std::size_t limit() const { return limit_; }
    const NoiseConfig& config() const { return path_->config(); }

    double increment(std::size_t step, int mode) const {
        if (step >= limit_)
            throw AdaptednessError(
                "PastNoise: increment " + std::to_string(step) +
                " is not measurable at step " + std::to_string(limit_));
        return path_->increment(step, mode);
    }

    // Brownian value W(limit * dt) for one mode.
    double path_value(int mode) const {
        double sum = 0.0;
        for (std::size_t k = 0; k < limit_; ++k)
            sum += path_->increment(k, mode);
        return sum;
    }

private:
    const NoisePath* path_;
    std::size_t limit_;
};

// H-valued simple process, piecewise constant on step intervals. Piece fields
// are site-major [site][mode]; a step not covered by any piece carries the
// zero field.
class SimpleProcess {
public:
    struct Piece {
        std::size_t first_step = 0; // value on steps [first_step, last_step)
        std::size_t last_step = 0;
        std::vector<double> field;
    };

    SimpleProcess(const Torus& torus, const NoiseConfig& grid,
                  std::vector<Piece> pieces, std::string label)
        : torus_(torus), grid_(grid), pieces_(std::move(pieces)),
          label_(std::move(label)) {
        grid_.validate();
        std::size_t cursor = 0;
        for (const auto& piece : pieces_) {
            if (piece.first_step < cursor || piece.last_step <= piece.first_step ||
                piece.last_step > grid_.steps)
                throw Error("SimpleProcess: pieces must be disjoint, increasing "
                            "and inside the stepping grid");
            if (piece.field.size() !=
                torus_.sites() * static_cast<std::size_t>(grid_.h_dim))
                throw GridMismatchError("SimpleProcess: piece field size "
                                        "mismatch");
            cursor = piece.last_step;
        }
    }

    const Torus& torus() const { return torus_; }
    const NoiseConfig& grid() const { return grid_; }
    int h_dim() const { return grid_.h_dim; }
    const std::vector<Piece>& pieces() const { return pieces_; }
    const std::string& label() const { return label_; }

    // Field governing step k, or nullptr for the zero field.
    const double* field_at_step(std::size_t step) const {
        for (const auto& piece : pieces_)
            if (step >= piece.first_step && step < piece.last_step)
                return piece.field.data();
        return nullptr;
    }

    bool is_zero() const {
        for (const auto& piece : pieces_)
            for (double v : piece.field)
                if (v != 0.0) return false;
        return true;
    }

private:
    Torus torus_;
    NoiseConfig grid_;
    std::vector<Piece> pieces_;
    std::string label_;
};

// Builds adapted simple processes: each piece generator only ever sees the
// increments before the piece starts.
class AdaptedProcessBuilder {
public:
    using Generator = std::function<std::vector<double>(const PastNoise&)>;

    AdaptedProcessBuilder(const Torus& torus, const NoisePath& path)
        : torus_(torus), path_(&path) {}

    AdaptedProcessBuilder& add_piece(std::size_t first_step,
                                     std::size_t last_step,
                                     const Generator& gen) {
        if (first_step < cursor_)
            throw Error("AdaptedProcessBuilder: pieces must be added in "
                        "increasing disjoint order");
        PastNoise past(*path_, first_step);
        SimpleProcess::Piece piece;
        piece.first_step = first_step;
        piece.last_step = last_step;
        piece.field = gen(past);
        pieces_.push_back(std::move(piece));
        cursor_ = last_step;
        return *this;
    }

    SimpleProcess build() const {
        return SimpleProcess(torus_, path_->config(), pieces_, "adapted-builder");
    }

private:
    Torus torus_;
    const NoisePath* path_;
    std::size_t cursor_ = 0;
    std::vector<SimpleProcess::Piece> pieces_;
};

namespace detail {

// Number of completed increments by time t: #{k : (k+1) dt <= t}.
inline std::size_t completed_steps(double t, double dt, std::size_t steps) {
    if (t <= 0.0) return 0;
    const std::size_t k =
        static_cast<std::size_t>(std::floor(t / dt + 1e-9));
    return std::min(k, steps);
}

// Step whose interval (k dt, (k+1) dt] contains t.
inline std::size_t covering_step(double t, double dt, std::size_t steps) {
    const double raw = std::ceil(t / dt - 1e-9) - 1.0;
    if (raw <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(raw), steps - 1);
}

// Spectral coefficients of left-point convolution sums
//   sum_{k : (k+1) dt <= t} e^{-(t - k dt) A} q_k
// at each requested time, where q_k is supplied in spectral coordinates by
// `term`. One forward recursion over steps serves every time at once:
// u((i+1) dt) = e^{-dt A}(u(i dt) + q_i).
inline std::vector<double> convolution_sums(
    const DiscreteOperator& op, double dt, std::size_t steps,
    const std::function<void(std::size_t, std::vector<double>&)>& term,
    std::span<const double> times) {
    const std::size_t modes = op.size();
    const auto lambda = op.eigenvalues();

    for (double t : times)
        if (!(t >= 0.0) || t > steps * dt * (1.0 + 1e-9))
            throw GridMismatchError("convolution: eval time outside the "
                                    "stepping grid");

    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return times[a] < times[b];
    });

    std::vector<double> out(times.size() * modes, 0.0);
    std::vector<double> state(modes, 0.0);
    std::vector<double> increment(modes, 0.0);
    std::vector<double> decay(modes);
    for (std::size_t j = 0; j < modes; ++j) decay[j] = std::exp(-dt * lambda[j]);

    std::size_t emit = 0;
    for (std::size_t i = 0; i <= steps; ++i) {
        // state == spectral coefficients at time i*dt
        while (emit < order.size() &&
               completed_steps(times[order[emit]], dt, steps) == i) {
            const double t = times[order[emit]];
            double* row = out.data() + order[emit] * modes;
            const double tail = t - static_cast<double>(i) * dt;
            if (tail <= 0.0) {
                std::copy(state.begin(), state.end(), row);
            } else {
                for (std::size_t j = 0; j < modes; ++j)
                    row[j] = std::exp(-tail * lambda[j]) * state[j];
            }
            ++emit;
        }
        if (i == steps) break;
        std::fill(increment.begin(), increment.end(), 0.0);
        term(i, increment);
        for (std::size_t j = 0; j < modes; ++j)
            state[j] = decay[j] * (state[j] + increment[j]);
    }
    return out;
}

// Spectral transforms of each piece field, one vector per (piece, mode).
inline std::vector<std::vector<double>> piece_spectra(
    const DiscreteOperator& op, const SimpleProcess& g) {
    const int d_h = g.h_dim();
    const std::size_t sites = op.torus().sites();
    std::vector<std::vector<double>> spectra;
    spectra.reserve(g.pieces().size() * d_h);
    std::vector<double> mode_field(sites);
    for (const auto& piece : g.pieces()) {
        for (int m = 0; m < d_h; ++m) {
            for (std::size_t s = 0; s < sites; ++s)
                mode_field[s] = piece.field[s * d_h + m];
            spectra.push_back(op.to_spectral(mode_field));
        }
    }
    return spectra;
}

inline void check_compatible(const DiscreteOperator& op, const SimpleProcess& g,
                             const NoisePath& w) {
    if (!(op.torus() == g.torus()))
        throw GridMismatchError("convolution: process lives on a different "
                                "torus");
    if (!g.grid().same_grid(w.config()))
        throw GridMismatchError("convolution: process and noise use different "
                                "stepping grids");
}

} // namespace detail

// Spectral coefficients of the stochastic convolution S <> g at each
// requested time (row-major [time][mode]). The Ito sum is left-point: the
// integrand at step k multiplies the increment over (k dt, (k+1) dt].
inline std::vector<double> stochastic_convolution_spectral(
    const DiscreteOperator& op, const SimpleProcess& g, const NoisePath& w,
    std::span<const double> times) {
    detail::check_compatible(op, g, w);
    const auto spectra = detail::piece_spectra(op, g);
    const int d_h = g.h_dim();
    const auto& pieces = g.pieces();

    auto term = [&](std::size_t step, std::vector<double>& zeta) {
        for (std::size_t pi = 0; pi < pieces.size(); ++pi) {
            if (step < pieces[pi].first_step || step >= pieces[pi].last_step)
                continue;
            for (int m = 0; m < d_h; ++m) {
                const double dw = w.increment(step, m);
                const auto& phat = spectra[pi * d_h + m];
                for (std::size_t j = 0; j < zeta.size(); ++j)
                    zeta[j] += phat[j] * dw;
            }
            return;
        }
    };
    return detail::convolution_sums(op, g.grid().dt, g.grid().steps, term, times);
}

inline SpaceTimeField stochastic_convolution(const DiscreteOperator& op,
                                             const SimpleProcess& g,
                                             const NoisePath& w,
                                             const TimeGrid& eval_times) {
    const auto coeffs =
        stochastic_convolution_spectral(op, g, w, eval_times.nodes);
    auto field = SpaceTimeField::zeros(op.torus(), eval_times,
                                       FieldKind::scalar, 1);
    const std::size_t modes = op.size();
    for (std::size_t k = 0; k < eval_times.count(); ++k) {
        const auto slice = op.from_spectral(
            std::span<const double>(coeffs.data() + k * modes, modes));
        for (std::size_t s = 0; s < slice.size(); ++s) field.at(k, s) = slice[s];
    }
    return field;
}

// grad(S <> g): the gradient applied snapshot-wise; linearity makes this
// identical to moving the gradient inside the Ito sum.
inline SpaceTimeField grad_stochastic_convolution(const DiscreteOperator& op,
                                                  const SimpleProcess& g,
                                                  const NoisePath& w,
                                                  const TimeGrid& eval_times) {
    const auto u = stochastic_convolution(op, g, w, eval_times);
    auto out = SpaceTimeField::zeros(op.torus(), eval_times, FieldKind::vector,
                                     op.torus().dim);
    std::vector<double> slice(op.torus().sites());
    for (std::size_t k = 0; k < eval_times.count(); ++k) {
        for (std::size_t s = 0; s < slice.size(); ++s) slice[s] = u.at(k, s);
        const auto grad = gradient(op.torus(), slice);
        for (std::size_t s = 0; s < slice.size(); ++s)
            for (int d = 0; d < op.torus().dim; ++d)
                out.at(k, s, d) = grad[s * op.torus().dim + d];
    }
    return out;
}

// Deterministic left-point Riemann sum for S * g on the same stepping grid;
// g is a noise-free scalar simple process (h_dim == 1). With
// `apply_operator_factor` the companion A S * g is produced instead.
inline SpaceTimeField deterministic_convolution(const DiscreteOperator& op,
                                                const SimpleProcess& g,
                                                const TimeGrid& eval_times,
                                                bool apply_operator_factor = false) {
    if (g.h_dim() != 1)
        throw Error("deterministic_convolution: integrand must be scalar "
                    "(h_dim == 1)");
    if (!(op.torus() == g.torus()))
        throw GridMismatchError("deterministic_convolution: torus mismatch");

    const auto spectra = detail::piece_spectra(op, g);
    const auto& pieces = g.pieces();
    const double dt = g.grid().dt;

    auto term = [&](std::size_t step, std::vector<double>& zeta) {
        for (std::size_t pi = 0; pi < pieces.size(); ++pi) {
            if (step < pieces[pi].first_step || step >= pieces[pi].last_step)
                continue;
            const auto& phat = spectra[pi];
            for (std::size_t j = 0; j < zeta.size(); ++j)
                zeta[j] += phat[j] * dt;
            return;
        }
    };
    auto coeffs = detail::convolution_sums(op, dt, g.grid().steps, term,
                                           eval_times.nodes);

    const std::size_t modes = op.size();
    if (apply_operator_factor) {
        const auto lambda = op.eigenvalues();
        for (std::size_t k = 0; k < eval_times.count(); ++k)
            for (std::size_t j = 0; j < modes; ++j)
                coeffs[k * modes + j] *= lambda[j];
    }

    auto field = SpaceTimeField::zeros(op.torus(), eval_times,
                                       FieldKind::scalar, 1);
    for (std::size_t k = 0; k < eval_times.count(); ++k) {
        const auto slice = op.from_spectral(
            std::span<const double>(coeffs.data() + k * modes, modes));
        for (std::size_t s = 0; s < slice.size(); ++s) field.at(k, s) = slice[s];
    }
    return field;
}

// Exact second moment of the discrete Ito sum at time t,
//   E || S<>g(t) ||_{L2(dy)}^2 = sum_{k,m} || S(t - k dt) g_m(k dt) ||^2 dt,
// evaluated by spectral calculus. For adapted g this is the pathwise
// conditional right-hand side of the isometry.
inline double ito_isometry_rhs(const DiscreteOperator& op,
                               const SimpleProcess& g, double t) {
    const auto spectra = detail::piece_spectra(op, g);
    const auto lambda = op.eigenvalues();
    const int d_h = g.h_dim();
    const double dt = g.grid().dt;
    const std::size_t upto = detail::completed_steps(t, dt, g.grid().steps);
    const auto& pieces = g.pieces();

    double total = 0.0;
    for (std::size_t pi = 0; pi < pieces.size(); ++pi) {
        const std::size_t first = pieces[pi].first_step;
        const std::size_t last = std::min(pieces[pi].last_step, upto);
        for (std::size_t k = first; k < last; ++k) {
            const double tau = t - static_cast<double>(k) * dt;
            for (int m = 0; m < d_h; ++m) {
                const auto& phat = spectra[pi * d_h + m];
                double slice = 0.0;
                for (std::size_t j = 0; j < phat.size(); ++j)
                    slice += std::exp(-2.0 * tau * lambda[j]) * phat[j] * phat[j];
                total += slice * dt;
            }
        }
    }
    return total * op.torus().cell_volume();
}

// Plain squared-increment mass sum_{k,m} ||g_m(k dt)||^2 dt in L2(dy) units;
// dominates the isometry right-hand side because S is a contraction.
inline double integrand_mass(const SimpleProcess& g, double t) {
    const double dt = g.grid().dt;
    const std::size_t upto = detail::completed_steps(t, dt, g.grid().steps);
    double total = 0.0;
    for (const auto& piece : g.pieces()) {
        const std::size_t last = std::min(piece.last_step, upto);
        if (last <= piece.first_step) continue;
        double field_sq = 0.0;
        for (double v : piece.field) field_sq += v * v;
        total += field_sq * dt * static_cast<double>(last - piece.first_step);
    }
    return total * g.torus().cell_volume();
}

// Samples a simple process on a quadrature grid as an H-valued field; node t
// takes the value of the piece covering (k dt, (k+1) dt] with t inside.
inline SpaceTimeField sample_process(const SimpleProcess& g,
                                     const TimeGrid& eval_times) {
    const auto& cfg = g.grid();
    auto field = SpaceTimeField::zeros(g.torus(), eval_times, FieldKind::hilbert,
                                       cfg.h_dim);
    const std::size_t sites = g.torus().sites();
    for (std::size_t k = 0; k < eval_times.count(); ++k) {
        const double t = eval_times.nodes[k];
        if (t > cfg.horizon() * (1.0 + 1e-9))
            throw GridMismatchError("sample_process: node beyond the stepping "
                                    "horizon");
        const std::size_t step = detail::covering_step(t, cfg.dt, cfg.steps);
        const double* piece = g.field_at_step(step);
        if (!piece) continue;
        for (std::size_t s = 0; s < sites; ++s)
            for (int m = 0; m < cfg.h_dim; ++m)
                field.at(k, s, m) = piece[s * cfg.h_dim + m];
    }
    return field;
}

} // namespace tentlab
