#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tentlab/elliptic.hpp"
#include "tentlab/lattice.hpp"
#include "tentlab/rng.hpp"
#include "tentlab/stochastic.hpp"
#include "tentlab/tent.hpp"
#include "tentlab/util.hpp"

namespace tentlab {

// Pointwise nonlinearity b : R^n -> R with declared Lipschitz and linear
// growth constants; the declarations are spot-checked on random pairs at
// construction time.
class NemytskiiSpec {
public:
    using Map = std::function<double(std::span<const double>)>;

    static NemytskiiSpec zero(int dim) {
        NemytskiiSpec s;
        s.dim_ = dim;
        s.name_ = "zero";
        s.lipschitz_ = 0.0;
        s.growth_ = 0.0;
        s.map_ = [](std::span<const double>) { return 0.0; };
        return s;
    }

    // b(x) = lambda (x . v) for a unit vector v.
    static NemytskiiSpec linear(int dim, double lambda,
                                std::array<double, 2> direction = {1.0, 0.0}) {
        double norm = 0.0;
        for (int d = 0; d < dim; ++d) norm += direction[d] * direction[d];
        norm = std::sqrt(norm);
        if (!(norm > 0.0)) throw Error("NemytskiiSpec: zero direction");
        std::array<double, 2> v{direction[0] / norm, direction[1] / norm};

        NemytskiiSpec s;
        s.dim_ = dim;
        s.name_ = "linear";
        s.lipschitz_ = std::abs(lambda);
        s.growth_ = std::abs(lambda);
        s.map_ = [v, lambda, dim](std::span<const double> x) {
            double dot = 0.0;
            for (int d = 0; d < dim; ++d) dot += x[d] * v[d];
            return lambda * dot;
        };
        s.sampled_check(41);
        return s;
    }

    static NemytskiiSpec custom(int dim, std::string name, Map map,
                                double lipschitz, double growth,
                                std::uint64_t check_seed = 2718) {
        NemytskiiSpec s;
        s.dim_ = dim;
        s.name_ = std::move(name);
        s.map_ = std::move(map);
        s.lipschitz_ = lipschitz;
        s.growth_ = growth;
        s.sampled_check(check_seed);
        return s;
    }

    double operator()(std::span<const double> x) const { return map_(x); }
    double lipschitz() const { return lipschitz_; }
    double growth() const { return growth_; }
    int dim() const { return dim_; }
    const std::string& name() const { return name_; }

private:
    NemytskiiSpec() = default;

    void sampled_check(std::uint64_t seed) const {
        const double slack = 1e-9;
        const double box = 8.0;
        std::array<double, 2> x{}, y{};
        for (std::uint64_t i = 0; i < 10000; ++i) {
            for (int d = 0; d < dim_; ++d) {
                x[d] = box * (2.0 * uniform01(seed, i, d, 0) - 1.0);
                y[d] = box * (2.0 * uniform01(seed, i, d, 1) - 1.0);
            }
            const double bx = map_(std::span<const double>(x.data(), dim_));
            const double by = map_(std::span<const double>(y.data(), dim_));
            double dist = 0.0, len = 0.0;
            for (int d = 0; d < dim_; ++d) {
                dist += (x[d] - y[d]) * (x[d] - y[d]);
                len += x[d] * x[d];
            }
            dist = std::sqrt(dist);
            len = std::sqrt(len);
            if (std::abs(bx - by) > lipschitz_ * dist * (1.0 + slack) + 1e-12)
                throw Error("NemytskiiSpec '" + name_ +
                            "': sampled Lipschitz check failed");
            if (std::abs(bx) > growth_ * len * (1.0 + slack) + 1e-12)
                throw Error("NemytskiiSpec '" + name_ +
                            "': sampled growth check failed");
        }
    }

    int dim_ = 1;
    std::string name_;
    double lipschitz_ = 0.0;
    double growth_ = 0.0;
    Map map_;
};

// (B(V))(t,x) = b(V(t,x)) applied to a vector-valued field.
inline SpaceTimeField nemytskii_apply(const NemytskiiSpec& spec,
                                      const SpaceTimeField& v) {
    if (v.kind != FieldKind::vector || v.components != spec.dim())
        throw GridMismatchError("nemytskii_apply: expected a vector field with "
                                "matching dimension");
    auto out = SpaceTimeField::zeros(v.torus, v.times, FieldKind::scalar, 1);
    const std::size_t sites = v.torus.sites();
    for (std::size_t k = 0; k < v.times.count(); ++k)
        for (std::size_t s = 0; s < sites; ++s) {
            const double* x = v.data.data() + (k * sites + s) * v.components;
            out.at(k, s) = spec(std::span<const double>(x, v.components));
        }
    return out;
}

// Interior of the admissible (1/p, beta) polytope with vertices
// (0,0), (0, beta0), (1/2, 1), (1, 1), (1, 0).
inline bool polytope_contains(double p, double beta, double beta0) {
    if (!(p > 1.0)) return false;
    const double x = 1.0 / p;
    if (!(beta > 0.0 && beta < 1.0)) return false;
    if (x < 0.5 && !(beta < beta0 + 2.0 * (1.0 - beta0) * x)) return false;
    return true;
}

// The deterministic part of the fixed-point equation: the field
// (t, x) -> grad S(t) u0 on the quadrature grid, with its tent norm.
struct InitialData {
    std::vector<double> u0;
    double beta = 0.0;
    SpaceTimeField field;
    double tent_norm_value = 0.0;
};

namespace detail {

// grad S(t) u0 for an arbitrary list of times, from one spectral transform.
inline std::vector<std::vector<double>> grad_flow_at(
    const DiscreteOperator& op, std::span<const double> u0,
    std::span<const double> times) {
    const auto u0_hat = op.to_spectral(u0);
    const auto lambda = op.eigenvalues();
    std::vector<std::vector<double>> out;
    out.reserve(times.size());
    std::vector<double> decayed(u0_hat.size());
    for (double t : times) {
        for (std::size_t j = 0; j < u0_hat.size(); ++j)
            decayed[j] = std::exp(-t * lambda[j]) * u0_hat[j];
        out.push_back(gradient(op.torus(), op.from_spectral(decayed)));
    }
    return out;
}

} // namespace detail

inline InitialData initial_term(const DiscreteOperator& op,
                                std::span<const double> u0,
                                const TentParams& params,
                                const TimeGrid& eval_times) {
    if (!(params.beta > 0.0 && params.beta < 1.0))
        throw Error("initial_term: beta must lie in (0,1)");
    if (u0.size() != op.torus().sites())
        throw GridMismatchError("initial_term: u0 size mismatch");

    const auto slices = detail::grad_flow_at(op, u0, eval_times.nodes);
    auto field = SpaceTimeField::zeros(op.torus(), eval_times, FieldKind::vector,
                                       op.torus().dim);
    for (std::size_t k = 0; k < eval_times.count(); ++k)
        for (std::size_t s = 0; s < op.torus().sites(); ++s)
            for (int d = 0; d < op.torus().dim; ++d)
                field.at(k, s, d) = slices[k][s * op.torus().dim + d];

    InitialData data;
    data.u0.assign(u0.begin(), u0.end());
    data.beta = params.beta;
    data.tent_norm_value = tent_norm(field, params);
    data.field = std::move(field);
    return data;
}

struct PicardOptions {
    double tol = 1e-6;
    std::size_t max_iter = 50;
    // Estimated operator norm K_{p,beta} from a prior conical-ratio report on
    // the same grid; used only for the contraction gate warning.
    double k_estimate = std::numeric_limits<double>::quiet_NaN();
    bool strict_polytope = false;
    double beta0 = 1.0;
};

struct PicardResult {
    SpaceTimeField v; // fixed point (vector field) on the quadrature grid
    double initial_norm = 0.0;
    std::vector<double> increment_norms;
    std::vector<double> increment_ratios;
    double residual_rel = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    bool polytope_ok = false;
    double gate_product = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> warnings;
};

// Pathwise Picard iteration for V = grad S(.) u0 + grad S <> B(V) at a fixed
// noise seed. V at step time k dt is built from increments before k dt, so
// the left-point integrand B(V) is adapted by construction.
inline PicardResult picard_solve(const DiscreteOperator& op,
                                 const NemytskiiSpec& spec,
                                 std::span<const double> u0,
                                 const TentParams& params,
                                 const NoiseConfig& noise_cfg,
                                 const TimeGrid& eval_times,
                                 const PicardOptions& opts = {}) {
    if (noise_cfg.h_dim != 1)
        throw Error("picard_solve: the nonlinear problem uses scalar noise "
                    "(h_dim == 1)");
    if (spec.dim() != op.torus().dim)
        throw GridMismatchError("picard_solve: nonlinearity dimension "
                                "mismatch");

    PicardResult result;
    result.polytope_ok = polytope_contains(params.p, params.beta, opts.beta0);
    if (!result.polytope_ok) {
        const std::string msg =
            "(1/p, beta) outside the admissible polytope with beta0 = " +
            std::to_string(opts.beta0);
        if (opts.strict_polytope) throw Error("picard_solve: " + msg);
        result.warnings.push_back(msg);
    }
    if (!std::isnan(opts.k_estimate)) {
        result.gate_product = opts.k_estimate * spec.lipschitz();
        if (result.gate_product >= 1.0)
            result.warnings.push_back(
                "estimated K * L_b = " + std::to_string(result.gate_product) +
                " is not a contraction gate");
    }

    const Torus& torus = op.torus();
    const std::size_t sites = torus.sites();
    const int dim = torus.dim;
    const std::size_t steps = noise_cfg.steps;
    const double dt = noise_cfg.dt;
    const auto w = sample_noise(noise_cfg);

    // Combined time list: step left endpoints first, then quadrature nodes.
    std::vector<double> all_times(steps + eval_times.count());
    for (std::size_t i = 0; i < steps; ++i)
        all_times[i] = static_cast<double>(i) * dt;
    for (std::size_t k = 0; k < eval_times.count(); ++k)
        all_times[steps + k] = eval_times.nodes[k];

    const auto init_slices = detail::grad_flow_at(op, u0, all_times);

    auto eval_field_from = [&](const std::vector<std::vector<double>>& slices)
        -> SpaceTimeField {
        auto f = SpaceTimeField::zeros(torus, eval_times, FieldKind::vector, dim);
        for (std::size_t k = 0; k < eval_times.count(); ++k)
            for (std::size_t s = 0; s < sites; ++s)
                for (int d = 0; d < dim; ++d)
                    f.at(k, s, d) = slices[steps + k][s * dim + d];
        return f;
    };

    // V_1 = F(0) = initial term (b(0) = 0 under the growth bound).
    std::vector<std::vector<double>> v_slices = init_slices;
    SpaceTimeField v_eval = eval_field_from(v_slices);
    result.initial_norm = tent_norm(v_eval, params);
    const double scale = result.initial_norm;

    const std::size_t modes = op.size();
    std::vector<double> b_field(sites);

    auto apply_fixed_point = [&](const std::vector<std::vector<double>>& cur)
        -> std::vector<std::vector<double>> {
        // left-point integrand: B(V)(k dt) from the slice at step k
        std::vector<SimpleProcess::Piece> pieces(steps);
        for (std::size_t i = 0; i < steps; ++i) {
            for (std::size_t s = 0; s < sites; ++s)
                b_field[s] = spec(std::span<const double>(
                    cur[i].data() + s * dim, static_cast<std::size_t>(dim)));
            pieces[i].first_step = i;
            pieces[i].last_step = i + 1;
            pieces[i].field = b_field;
        }
        const SimpleProcess g(torus, noise_cfg, std::move(pieces),
                              "picard-left-point");
        const auto coeffs = stochastic_convolution_spectral(op, g, w, all_times);

        std::vector<std::vector<double>> next(all_times.size());
        for (std::size_t k = 0; k < all_times.size(); ++k) {
            const auto slice = op.from_spectral(
                std::span<const double>(coeffs.data() + k * modes, modes));
            auto grad_slice = gradient(torus, slice);
            for (std::size_t i = 0; i < grad_slice.size(); ++i)
                grad_slice[i] += init_slices[k][i];
            next[k] = std::move(grad_slice);
        }
        return next;
    };

    std::size_t consecutive_expanding = 0;
    for (std::size_t iter = 1; iter <= opts.max_iter; ++iter) {
        auto next_slices = apply_fixed_point(v_slices);
        auto next_eval = eval_field_from(next_slices);
        const double incr = tent_norm(field_difference(next_eval, v_eval), params);
        result.iterations = iter;
        if (!std::isfinite(incr))
            throw NonContractionError("picard_solve: iteration diverged to a "
                                      "non-finite increment",
                                      std::numeric_limits<double>::infinity());
        if (!result.increment_norms.empty() && result.increment_norms.back() > 0.0) {
            const double ratio = incr / result.increment_norms.back();
            result.increment_ratios.push_back(ratio);
            consecutive_expanding = ratio >= 1.0 ? consecutive_expanding + 1 : 0;
            if (consecutive_expanding >= 3)
                throw NonContractionError(
                    "picard_solve: increment ratio >= 1 for three consecutive "
                    "iterations (measured " + std::to_string(ratio) + ")",
                    ratio);
        }
        result.increment_norms.push_back(incr);

        v_slices = std::move(next_slices);
        v_eval = std::move(next_eval);

        if (incr < opts.tol * scale || incr == 0.0) {
            result.converged = true;
            break;
        }
    }
    if (!result.converged)
        throw Error("picard_solve: max_iter = " + std::to_string(opts.max_iter) +
                    " exceeded (last increment " +
                    std::to_string(result.increment_norms.back()) + ")");

    // one extra application for the literal fixed-point residual
    const auto check = eval_field_from(apply_fixed_point(v_slices));
    const double resid = tent_norm(field_difference(v_eval, check), params);
    result.residual_rel = scale > 0.0 ? resid / scale : resid;
    result.v = std::move(v_eval);
    return result;
}

} // namespace tentlab
