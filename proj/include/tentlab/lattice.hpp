#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tentlab/util.hpp"

namespace tentlab {

// Periodic spatial lattice: `axis_points` sites per axis on a torus of side
// `side`, in one or two dimensions. Site indices are row-major.
struct Torus {
    int dim = 1;
    int axis_points = 2;
    double side = 1.0;

    Torus() = default;
    Torus(int dim_, int axis_points_, double side_)
        : dim(dim_), axis_points(axis_points_), side(side_) {
        if (dim != 1 && dim != 2)
            throw Error("Torus: dim must be 1 or 2");
        if (axis_points < 2)
            throw Error("Torus: need at least 2 points per axis");
        if (!(side > 0.0))
            throw Error("Torus: side length must be positive");
    }

    std::size_t sites() const {
        std::size_t s = static_cast<std::size_t>(axis_points);
        return dim == 1 ? s : s * s;
    }
    double spacing() const { return side / axis_points; }
    double cell_volume() const { return std::pow(spacing(), dim); }

    std::array<int, 2> coords(std::size_t site) const {
        if (dim == 1) return {static_cast<int>(site), 0};
        return {static_cast<int>(site) / axis_points,
                static_cast<int>(site) % axis_points};
    }
    std::size_t site_of(int i, int j = 0) const {
        const int N = axis_points;
        i = ((i % N) + N) % N;
        j = ((j % N) + N) % N;
        return dim == 1 ? static_cast<std::size_t>(i)
                        : static_cast<std::size_t>(i) * N + j;
    }
    // Site shifted by +1 along `axis`.
    std::size_t neighbor(std::size_t site, int axis) const {
        const auto c = coords(site);
        return axis == 0 ? site_of(c[0] + 1, c[1]) : site_of(c[0], c[1] + 1);
    }
    std::size_t neighbor_back(std::size_t site, int axis) const {
        const auto c = coords(site);
        return axis == 0 ? site_of(c[0] - 1, c[1]) : site_of(c[0], c[1] - 1);
    }

    // Periodic Euclidean distance between two sites.
    double distance(std::size_t a, std::size_t b) const {
        const auto ca = coords(a);
        const auto cb = coords(b);
        double sq = 0.0;
        for (int d = 0; d < dim; ++d) {
            int delta = std::abs(ca[d] - cb[d]);
            delta = std::min(delta, axis_points - delta);
            const double phys = delta * spacing();
            sq += phys * phys;
        }
        return std::sqrt(sq);
    }

    bool operator==(const Torus& o) const {
        return dim == o.dim && axis_points == o.axis_points && side == o.side;
    }
};

// Site-index offsets of the open ball of radius r around any center; the
// periodic lattice makes the set translation invariant, so one list serves
// every center. The center itself is always a member (d = 0 < r).
inline std::vector<std::size_t> ball_offsets(const Torus& torus, double r) {
    std::vector<std::size_t> offsets;
    const std::size_t origin = 0;
    for (std::size_t s = 0; s < torus.sites(); ++s)
        if (torus.distance(origin, s) < r) offsets.push_back(s);
    return offsets;
}

// Adds a coordinate offset (given as a site index relative to the origin) to
// a center site, modulo the torus.
inline std::size_t shift_site(const Torus& torus, std::size_t center,
                              std::size_t offset) {
    const auto c = torus.coords(center);
    const auto o = torus.coords(offset);
    return torus.site_of(c[0] + o[0], c[1] + o[1]);
}

// Average of a spatial snapshot over the periodic ball B(x, r); the discrete
// measure in numerator and denominator is the same site set, so cell volumes
// cancel.
inline double ball_average(const Torus& torus, std::span<const double> snapshot,
                           std::size_t center, double r) {
    if (!(r > 0.0)) throw Error("ball_average: radius must be positive");
    const auto offsets = ball_offsets(torus, r);
    double sum = 0.0;
    for (std::size_t o : offsets) sum += snapshot[shift_site(torus, center, o)];
    return sum / static_cast<double>(offsets.size());
}

// Geometric grid on [t_min, t_max] with exact per-cell weights for the
// singular measure dt / t^beta. Node k owns the cell between the logarithmic
// midpoints of its neighbors, clamped to the interval, so a constant
// integrand is integrated exactly.
struct TimeGrid {
    double t_min = 0.0;
    double t_max = 0.0;
    double beta = 0.0;
    std::vector<double> nodes;
    std::vector<double> cell_edges; // nodes.size() + 1 entries
    std::vector<double> weights;    // weights for dt / t^beta at `beta`

    std::size_t count() const { return nodes.size(); }

    // Weights for dt / t^b on the same cells, any exponent b.
    std::vector<double> weights_for(double b) const {
        std::vector<double> w(nodes.size());
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const double lo = cell_edges[k];
            const double hi = cell_edges[k + 1];
            if (b == 1.0) {
                w[k] = std::log(hi / lo);
            } else {
                w[k] = (std::pow(hi, 1.0 - b) - std::pow(lo, 1.0 - b)) /
                       (1.0 - b);
            }
        }
        return w;
    }

    bool same_nodes(const TimeGrid& o) const {
        return t_min == o.t_min && t_max == o.t_max &&
               nodes.size() == o.nodes.size();
    }
};

inline TimeGrid make_time_grid(double t_min, double t_max, std::size_t count,
                               double beta) {
    if (!(t_min > 0.0))
        throw Error("make_time_grid: t_min must be positive (the weight "
                    "t^-beta is singular at 0)");
    if (!(t_max > t_min)) throw Error("make_time_grid: need t_min < t_max");
    if (count < 2) throw Error("make_time_grid: need at least 2 nodes");

    TimeGrid grid;
    grid.t_min = t_min;
    grid.t_max = t_max;
    grid.beta = beta;
    grid.nodes.resize(count);
    const double ratio = std::pow(t_max / t_min, 1.0 / (count - 1));
    for (std::size_t k = 0; k < count; ++k)
        grid.nodes[k] = t_min * std::pow(ratio, static_cast<double>(k));
    grid.nodes.front() = t_min;
    grid.nodes.back() = t_max;

    grid.cell_edges.resize(count + 1);
    grid.cell_edges.front() = t_min;
    grid.cell_edges.back() = t_max;
    for (std::size_t k = 1; k < count; ++k)
        grid.cell_edges[k] = std::sqrt(grid.nodes[k - 1] * grid.nodes[k]);

    grid.weights = grid.weights_for(beta);
    return grid;
}

enum class FieldKind { scalar, vector, hilbert };

// Samples of a function on the time x space lattice; values may be scalar,
// spatial vectors (dim components) or truncated Hilbert-space valued.
struct SpaceTimeField {
    Torus torus;
    TimeGrid times;
    FieldKind kind = FieldKind::scalar;
    int components = 1;
    std::vector<double> data; // [time][site][component]

    static SpaceTimeField zeros(const Torus& torus, const TimeGrid& times,
                                FieldKind kind, int components) {
        SpaceTimeField f;
        f.torus = torus;
        f.times = times;
        f.kind = kind;
        f.components = components;
        f.data.assign(times.count() * torus.sites() * components, 0.0);
        return f;
    }

    double& at(std::size_t t, std::size_t site, int comp = 0) {
        return data[(t * torus.sites() + site) * components + comp];
    }
    double at(std::size_t t, std::size_t site, int comp = 0) const {
        return data[(t * torus.sites() + site) * components + comp];
    }
    // |value|^2 at one space-time cell, components summed.
    double squared_length(std::size_t t, std::size_t site) const {
        double sq = 0.0;
        const std::size_t base = (t * torus.sites() + site) * components;
        for (int c = 0; c < components; ++c) sq += data[base + c] * data[base + c];
        return sq;
    }

    bool finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

} // namespace tentlab
