#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tentlab/lattice.hpp"
#include "tentlab/rng.hpp"
#include "tentlab/util.hpp"

namespace tentlab {

// Bounded measurable coefficient matrix a(x), stored per site as a dim x dim
// row-major block, together with its declared ellipticity constants.
struct CoefficientField {
    Torus torus;
    double lambda_min = 1.0;
    double lambda_max = 1.0;
    std::string tag = "identity";
    bool constant = true;
    std::vector<double> entries; // sites * dim * dim

    const double* matrix_at(std::size_t site) const {
        return entries.data() + site * torus.dim * torus.dim;
    }

    // a(x) * v
    void apply_at(std::size_t site, const double* v, double* out) const {
        const int d = torus.dim;
        const double* m = matrix_at(site);
        for (int i = 0; i < d; ++i) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j) acc += m[i * d + j] * v[j];
            out[i] = acc;
        }
    }

    static CoefficientField identity(const Torus& torus, double scale = 1.0) {
        CoefficientField c;
        c.torus = torus;
        c.lambda_min = scale;
        c.lambda_max = scale;
        c.tag = "identity";
        c.constant = true;
        c.entries.assign(torus.sites() * torus.dim * torus.dim, 0.0);
        for (std::size_t s = 0; s < torus.sites(); ++s)
            for (int i = 0; i < torus.dim; ++i)
                c.entries[(s * torus.dim + i) * torus.dim + i] = scale;
        c.validate();
        return c;
    }

    // Rough test field: per-site scalar coefficient drawn from the two-point
    // set {lo, hi}, so the declared ellipticity constants are attained.
    static CoefficientField checkerboard(const Torus& torus, std::uint64_t seed,
                                         double lo, double hi) {
        CoefficientField c;
        c.torus = torus;
        c.lambda_min = lo;
        c.lambda_max = hi;
        c.tag = "checkerboard";
        c.constant = false;
        c.entries.assign(torus.sites() * torus.dim * torus.dim, 0.0);
        for (std::size_t s = 0; s < torus.sites(); ++s) {
            const double a = uniform01(seed, s, 0, 17) < 0.5 ? lo : hi;
            for (int i = 0; i < torus.dim; ++i)
                c.entries[(s * torus.dim + i) * torus.dim + i] = a;
        }
        c.validate();
        return c;
    }

    // CSV input: one row per site, dim*dim matrix entries in row-major order.
    static CoefficientField from_csv(const Torus& torus, const std::string& path,
                                     double lambda_min, double lambda_max) {
        std::ifstream in(path);
        if (!in) throw Error("coefficient csv: cannot open " + path);
        CoefficientField c;
        c.torus = torus;
        c.lambda_min = lambda_min;
        c.lambda_max = lambda_max;
        c.tag = "csv";
        c.constant = false;
        c.entries.reserve(torus.sites() * torus.dim * torus.dim);
        std::string line;
        std::size_t row = 0;
        const std::size_t per_row =
            static_cast<std::size_t>(torus.dim) * torus.dim;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::stringstream ss(line);
            std::string cell;
            std::size_t got = 0;
            while (std::getline(ss, cell, ',')) {
                c.entries.push_back(std::stod(cell));
                ++got;
            }
            if (got != per_row)
                throw Error("coefficient csv: row " + std::to_string(row) +
                            " has " + std::to_string(got) + " entries, expected " +
                            std::to_string(per_row));
            ++row;
        }
        if (row != torus.sites())
            throw Error("coefficient csv: " + std::to_string(row) +
                        " rows for " + std::to_string(torus.sites()) + " sites");
        c.validate();
        return c;
    }

    // Sampled ellipticity check against the declared constants: directions on
    // a sphere grid, every site.
    void validate() const {
        if (entries.size() != torus.sites() * torus.dim * torus.dim)
            throw Error("coefficient field: entry count mismatch");
        const double slack = 1e-9;
        const int n_dirs = torus.dim == 1 ? 2 : 32;
        std::vector<std::array<double, 2>> dirs;
        for (int k = 0; k < n_dirs; ++k) {
            if (torus.dim == 1) {
                dirs.push_back({k == 0 ? 1.0 : -1.0, 0.0});
            } else {
                const double phi = 2.0 * M_PI * k / n_dirs;
                dirs.push_back({std::cos(phi), std::sin(phi)});
            }
        }
        double av[2];
        for (std::size_t s = 0; s < torus.sites(); ++s) {
            for (const auto& xi : dirs) {
                apply_at(s, xi.data(), av);
                double quad = 0.0;
                for (int i = 0; i < torus.dim; ++i) quad += av[i] * xi[i];
                if (quad < lambda_min * (1.0 - slack) - slack)
                    throw Error("coefficient field fails the lower ellipticity "
                                "bound at site " + std::to_string(s));
                for (const auto& eta : dirs) {
                    double bil = 0.0;
                    for (int i = 0; i < torus.dim; ++i) bil += av[i] * eta[i];
                    if (std::abs(bil) > lambda_max * (1.0 + slack) + slack)
                        throw Error("coefficient field exceeds the upper "
                                    "ellipticity bound at site " +
                                    std::to_string(s));
                }
            }
        }
    }
};

// Forward-difference periodic gradient; component d of the result at site x
// is (f(x + h e_d) - f(x)) / h. Stored site-major: [site][component].
inline std::vector<double> gradient(const Torus& torus,
                                    std::span<const double> f) {
    const double inv_h = 1.0 / torus.spacing();
    std::vector<double> g(torus.sites() * torus.dim);
    for (std::size_t s = 0; s < torus.sites(); ++s)
        for (int d = 0; d < torus.dim; ++d)
            g[s * torus.dim + d] = (f[torus.neighbor(s, d)] - f[s]) * inv_h;
    return g;
}

// Adjoint of `gradient` under the plain site inner product (the negative
// backward divergence).
inline std::vector<double> gradient_adjoint(const Torus& torus,
                                            std::span<const double> w) {
    const double inv_h = 1.0 / torus.spacing();
    std::vector<double> out(torus.sites(), 0.0);
    for (std::size_t s = 0; s < torus.sites(); ++s)
        for (int d = 0; d < torus.dim; ++d)
            out[s] += (w[torus.neighbor_back(s, d) * torus.dim + d] -
                       w[s * torus.dim + d]) *
                      inv_h;
    return out;
}

// A f = G^T a G f, applied by stencil. This is the definition of the
// discrete operator; the assembled dense matrix agrees with it column by
// column.
inline std::vector<double> apply_operator(const CoefficientField& coeffs,
                                          std::span<const double> f) {
    const Torus& torus = coeffs.torus;
    auto g = gradient(torus, f);
    std::vector<double> w(g.size());
    for (std::size_t s = 0; s < torus.sites(); ++s)
        coeffs.apply_at(s, g.data() + s * torus.dim, w.data() + s * torus.dim);
    return gradient_adjoint(torus, w);
}

// Assembled discrete divergence-form operator with its full spectral
// decomposition. All semigroup and fractional-power actions are exact
// spectral calculus, so time-integration error never enters the
// measurements.
class DiscreteOperator {
public:
    static DiscreteOperator assemble(const Torus& torus,
                                     const CoefficientField& coeffs) {
        if (!(coeffs.torus == torus))
            throw GridMismatchError("assemble: coefficients live on a "
                                    "different torus");
        coeffs.validate();

        const std::size_t n = torus.sites();
        Eigen::MatrixXd mat(n, n);
        std::vector<double> unit(n, 0.0);
        for (std::size_t col = 0; col < n; ++col) {
            unit[col] = 1.0;
            const auto column = apply_operator(coeffs, unit);
            for (std::size_t row = 0; row < n; ++row) mat(row, col) = column[row];
            unit[col] = 0.0;
        }

        const double scale = mat.cwiseAbs().maxCoeff();
        const double asym = (mat - mat.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12 * scale)
            throw Error("assemble: operator is not symmetric");

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(mat);
        if (solver.info() != Eigen::Success)
            throw Error("assemble: eigendecomposition failed");

        DiscreteOperator op;
        op.torus_ = torus;
        op.coeffs_ = coeffs;
        op.eigenvalues_ = solver.eigenvalues();
        op.eigenvectors_ = solver.eigenvectors();
        const double top = op.eigenvalues_.maxCoeff();
        if (op.eigenvalues_.minCoeff() < -1e-8 * std::max(top, 1.0))
            throw Error("assemble: operator has a significantly negative "
                        "eigenvalue");
        for (Eigen::Index j = 0; j < op.eigenvalues_.size(); ++j)
            if (op.eigenvalues_[j] < 0.0) op.eigenvalues_[j] = 0.0;
        op.zero_tol_ = 1e-9 * std::max(top, 1.0);
        return op;
    }

    const Torus& torus() const { return torus_; }
    const CoefficientField& coefficients() const { return coeffs_; }
    std::size_t size() const { return static_cast<std::size_t>(eigenvalues_.size()); }
    std::span<const double> eigenvalues() const {
        return {eigenvalues_.data(), static_cast<std::size_t>(eigenvalues_.size())};
    }
    double zero_tolerance() const { return zero_tol_; }

    std::vector<double> eigenvector(std::size_t j) const {
        std::vector<double> v(size());
        for (std::size_t i = 0; i < size(); ++i) v[i] = eigenvectors_(i, j);
        return v;
    }

    std::vector<double> apply(std::span<const double> f) const {
        return apply_operator(coeffs_, f);
    }

    std::vector<double> to_spectral(std::span<const double> f) const {
        Eigen::Map<const Eigen::VectorXd> fv(f.data(), f.size());
        Eigen::VectorXd c = eigenvectors_.transpose() * fv;
        return {c.data(), c.data() + c.size()};
    }

    std::vector<double> from_spectral(std::span<const double> coeffs) const {
        Eigen::Map<const Eigen::VectorXd> cv(coeffs.data(), coeffs.size());
        Eigen::VectorXd f = eigenvectors_ * cv;
        return {f.data(), f.data() + f.size()};
    }

    // e^{-tA} f by spectral calculus; contraction for every t >= 0 and the
    // identity at t = 0.
    std::vector<double> semigroup_apply(double t, std::span<const double> f) const {
        if (t < 0.0) throw Error("semigroup_apply: negative time");
        if (t == 0.0) return {f.begin(), f.end()};
        auto c = to_spectral(f);
        for (std::size_t j = 0; j < c.size(); ++j)
            c[j] *= std::exp(-t * eigenvalues_[j]);
        return from_spectral(c);
    }

    // A^theta f. The kernel (the constant mode on the torus) maps to zero for
    // any theta != 0 and is preserved at theta = 0; negative exponents are
    // legitimate on mean-zero inputs.
    std::vector<double> frac_power_apply(double theta,
                                         std::span<const double> f) const {
        if (theta == 0.0) return {f.begin(), f.end()};
        auto c = to_spectral(f);
        for (std::size_t j = 0; j < c.size(); ++j) {
            if (eigenvalues_[j] <= zero_tol_)
                c[j] = 0.0;
            else
                c[j] *= std::pow(eigenvalues_[j], theta);
        }
        return from_spectral(c);
    }

private:
    Torus torus_;
    CoefficientField coeffs_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
    double zero_tol_ = 0.0;
};

} // namespace tentlab
