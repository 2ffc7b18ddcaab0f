#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ssmax/error.hpp"
#include "ssmax/sym_matrix.hpp"

namespace ssmax {

/// Leading eigenpair plus its cost in leading-eigenvector equivalents.
struct EigPair {
    double value = 0.0;
    Vector vector;
    double cost_eigvecs = 0.0;
    long matvecs = 0;  // raw matrix-vector products spent, restarts included
    int restarts = 0;
    bool degenerate = false;  // rank-one path: update vector orthogonal to the leading eigenspace
};

/// X = V diag(values) V^T with values in decreasing order and V orthonormal
/// (eigenvectors are the columns of V).
struct SpectralDecomp {
    Vector values;
    Matrix vectors;
    double cost_eigvecs = 0.0;

    Eigen::Index n() const noexcept { return values.size(); }
    double lambda_max() const { return values[0]; }

    SymMatrix reconstruct() const {
        return SymMatrix(vectors * values.asDiagonal() * vectors.transpose(), 1e-8);
    }

    /// Coordinates of v in the eigenbasis, i.e. O_X v.
    Vector to_eigenbasis(const Vector& v) const { return vectors.transpose() * v; }
    Vector from_eigenbasis(const Vector& c) const { return vectors * c; }
};

/// Flips v so that its first coordinate of non-negligible magnitude
/// (above 1e-8 * max|v_i|) is positive.
inline void normalize_sign(Eigen::Ref<Vector> v) {
    const double big = v.cwiseAbs().maxCoeff();
    if (big == 0.0) return;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-8 * big) {
            if (v[i] < 0) v = -v;
            return;
        }
    }
}

/// Full symmetric eigendecomposition, values decreasing (stable on ties).
/// Delegates the factorization to Eigen's self-adjoint solver. Costs n eigenvectors.
inline SpectralDecomp full_eig(const SymMatrix& x) {
    const Eigen::Index n = x.n();
    if (n == 0) throw InvalidInput("full_eig: empty matrix");
    if (!x.dense().allFinite()) throw InvalidInput("full_eig: non-finite entries");
    Eigen::SelfAdjointEigenSolver<Matrix> es(x.dense());
    if (es.info() != Eigen::Success) throw ConvergenceFailure("full_eig: eigensolver failed");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Vector& ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return ev[a] > ev[b]; });

    SpectralDecomp d;
    d.values.resize(n);
    d.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d.values[i] = ev[order[static_cast<std::size_t>(i)]];
        d.vectors.col(i) = es.eigenvectors().col(order[static_cast<std::size_t>(i)]);
        normalize_sign(d.vectors.col(i));
    }
    d.cost_eigvecs = static_cast<double>(n);
    return d;
}

/// exp(X - shift*I) through the eigendecomposition. Overflow is the caller's
/// problem: pre-scale or pass a shift near lambda_max.
inline SymMatrix matrix_exponential(const SpectralDecomp& d, double shift = 0.0) {
    Vector e = (d.values.array() - shift).exp().matrix();
    if (!e.allFinite()) throw InvalidInput("matrix_exponential: overflow, pre-scale the argument");
    return SymMatrix(d.vectors * e.asDiagonal() * d.vectors.transpose(), 1e-8);
}

inline SymMatrix matrix_exponential(const SymMatrix& x) { return matrix_exponential(full_eig(x)); }

/// Local Lipschitz constant of grad lambda_max at X: 1/(lambda_1 - lambda_2).
/// Throws NonsmoothPoint when the gap is at or below `gap_threshold`.
inline double local_lip_constant(const SpectralDecomp& d, double gap_threshold = 1e-12) {
    if (d.n() < 2) throw InvalidInput("local_lip_constant: need n >= 2");
    const double gap = d.values[0] - d.values[1];
    if (!(gap > gap_threshold)) throw NonsmoothPoint("local_lip_constant: leading eigenvalue is not simple");
    return 1.0 / gap;
}

/// Unit-Frobenius direction (phi_1 phi_2^T + phi_2 phi_1^T)/sqrt(2) along which the
/// second derivative of lambda_max equals 1/(lambda_1 - lambda_2).
inline SymMatrix extremal_direction(const SpectralDecomp& d) {
    if (d.n() < 2) throw InvalidInput("extremal_direction: need n >= 2");
    const Vector p1 = d.vectors.col(0);
    const Vector p2 = d.vectors.col(1);
    Matrix y = (p1 * p2.transpose() + p2 * p1.transpose()) / std::sqrt(2.0);
    return SymMatrix(y);
}

/// Second directional derivative of lambda_max at X along Y, from the
/// analytic perturbation expansion 2 * sum_{j>=2} (phi_1^T Y phi_j)^2 / (lambda_1 - lambda_j).
inline double lambda_max_curvature(const SpectralDecomp& d, const SymMatrix& y) {
    const Vector p1 = d.vectors.col(0);
    const Vector yp1 = y.apply(p1);
    double acc = 0.0;
    for (Eigen::Index j = 1; j < d.n(); ++j) {
        const double gap = d.values[0] - d.values[j];
        if (!(gap > 0)) throw NonsmoothPoint("lambda_max_curvature: leading eigenvalue is not simple");
        const double c = d.vectors.col(j).dot(yp1);
        acc += c * c / gap;
    }
    return 2.0 * acc;
}

}  // namespace ssmax
