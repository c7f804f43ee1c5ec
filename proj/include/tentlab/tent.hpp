#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tentlab/lattice.hpp"
#include "tentlab/rng.hpp"
#include "tentlab/util.hpp"

namespace tentlab {

// Exponent, weight and aperture of one tent-norm instance.
struct TentParams {
    double p = 2.0;
    double beta = 1.0;
    double alpha = 1.0;

    TentParams() = default;
    TentParams(double p_, double beta_, double alpha_)
        : p(p_), beta(beta_), alpha(alpha_) {
        if (!(p >= 1.0)) throw Error("TentParams: p must be >= 1");
        if (!(beta >= 0.0)) throw Error("TentParams: beta must be >= 0");
        if (!(alpha >= 1.0)) throw Error("TentParams: alpha must be >= 1");
    }
};

namespace detail {

inline void check_field(const SpaceTimeField& g) {
    if (g.data.size() != g.times.count() * g.torus.sites() *
                             static_cast<std::size_t>(g.components))
        throw GridMismatchError("field data does not match its grids");
    if (!g.finite()) throw Error("field contains non-finite entries");
}

} // namespace detail

// Weighted space-time L2 norm || . ||_{L2(t^-beta dt x dy)} on the grid; for
// p = 2, aperture 1, this equals the tent norm exactly (site averages over
// balls telescope on a torus).
inline double weighted_l2_norm(const SpaceTimeField& g, double beta) {
    detail::check_field(g);
    const auto w = g.times.weights_for(beta);
    const double cell = g.torus.cell_volume();
    std::vector<double> slices(g.times.count());
    for (std::size_t k = 0; k < g.times.count(); ++k) {
        double mass = 0.0;
        for (std::size_t s = 0; s < g.torus.sites(); ++s)
            mass += g.squared_length(k, s);
        slices[k] = w[k] * cell * mass;
    }
    return std::sqrt(pairwise_sum(slices));
}

// Tent norm with aperture: L^p over cone vertices of the square integral of
// ball averages of |g|^2 against dy dt/t^beta, all sums on the declared
// quadrature grids.
inline double tent_norm(const SpaceTimeField& g, const TentParams& params) {
    detail::check_field(g);
    const Torus& torus = g.torus;
    const std::size_t sites = torus.sites();
    const auto w = g.times.weights_for(params.beta);

    std::vector<double> cone(sites, 0.0);
    std::vector<double> sq(sites);
    for (std::size_t k = 0; k < g.times.count(); ++k) {
        for (std::size_t s = 0; s < sites; ++s) sq[s] = g.squared_length(k, s);
        const double r = params.alpha * std::sqrt(g.times.nodes[k]);
        const auto offsets = ball_offsets(torus, r);
        const double inv_count = 1.0 / static_cast<double>(offsets.size());
        for (std::size_t x = 0; x < sites; ++x) {
            double acc = 0.0;
            for (std::size_t o : offsets) acc += sq[shift_site(torus, x, o)];
            cone[x] += w[k] * acc * inv_count;
        }
    }

    const double half_p = params.p / 2.0;
    std::vector<double> terms(sites);
    for (std::size_t x = 0; x < sites; ++x)
        terms[x] = torus.cell_volume() * std::pow(cone[x], half_p);
    return std::pow(pairwise_sum(terms), 1.0 / params.p);
}

// The quantity bounded by the change-of-aperture constant:
// tent_norm(alpha) / (alpha^{n/(p ^ 2)} tent_norm(1)).
inline double aperture_ratio(const SpaceTimeField& g, double p, double beta,
                             double alpha) {
    if (!(alpha >= 1.0)) throw Error("aperture_ratio: alpha must be >= 1");
    const double base = tent_norm(g, TentParams(p, beta, 1.0));
    if (base == 0.0)
        throw DegenerateInputError("aperture_ratio: zero base tent norm");
    const double wide = tent_norm(g, TentParams(p, beta, alpha));
    const double scaling = std::pow(alpha, g.torus.dim / std::min(p, 2.0));
    return wide / (scaling * base);
}

// Random tent-space atom: supported in (0, r^2) x B(center, r) and scaled so
// the weighted L2 norm is exactly r^{-n/2}.
struct Atom {
    SpaceTimeField field;
    double radius = 0.0;
    std::size_t center = 0;
    double beta = 0.0;
};

inline Atom make_atom(const Torus& torus, const TimeGrid& times, double beta,
                      double radius, std::size_t center, std::uint64_t seed) {
    if (radius < torus.spacing())
        throw Error("make_atom: radius below the lattice spacing");

    auto field = SpaceTimeField::zeros(torus, times, FieldKind::scalar, 1);
    bool any_time = false;
    for (std::size_t k = 0; k < times.count(); ++k) {
        if (!(times.nodes[k] < radius * radius)) continue;
        any_time = true;
        for (std::size_t s = 0; s < torus.sites(); ++s)
            if (torus.distance(center, s) < radius)
                field.at(k, s) = gaussian(seed, k, s);
    }
    if (!any_time)
        throw Error("make_atom: no time node below r^2; radius is not "
                    "resolvable on this grid");

    const double norm = weighted_l2_norm(field, beta);
    if (norm == 0.0) throw Error("make_atom: degenerate zero sample");
    const double target = std::pow(radius, -0.5 * torus.dim);
    const double scale = target / norm;
    for (double& v : field.data) v *= scale;

    Atom atom;
    atom.field = std::move(field);
    atom.radius = radius;
    atom.center = center;
    atom.beta = beta;
    return atom;
}

// Pointwise field arithmetic used by the solvers and the reports.
inline SpaceTimeField field_difference(const SpaceTimeField& a,
                                       const SpaceTimeField& b) {
    if (!(a.torus == b.torus) || !a.times.same_nodes(b.times) ||
        a.components != b.components)
        throw GridMismatchError("field_difference: mismatched grids");
    SpaceTimeField out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

inline SpaceTimeField field_scaled(const SpaceTimeField& a, double c) {
    SpaceTimeField out = a;
    for (double& v : out.data) v *= c;
    return out;
}

} // namespace tentlab
