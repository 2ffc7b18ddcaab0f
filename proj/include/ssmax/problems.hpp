#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ssmax/error.hpp"
#include "ssmax/io.hpp"
#include "ssmax/prox.hpp"
#include "ssmax/random.hpp"
#include "ssmax/smoothing.hpp"
#include "ssmax/spectral/decomposition.hpp"
#include "ssmax/spectral/lanczos.hpp"
#include "ssmax/sym_matrix.hpp"

namespace ssmax {

// A problem minimizes  weight * lambda_max(map(x)) + c^T x  over a feasible set,
// where map is affine and isometric (Frobenius norm on the image). Problems
// expose map, the adjoint `pullback` of matrix gradients, and the prox setup.

/// A / lambda_max-magnitude so that the spectral norm is 1.
inline SymMatrix normalize_spectral(const SymMatrix& a) {
    const SpectralDecomp d = full_eig(a);
    const double norm = std::max(std::abs(d.values[0]), std::abs(d.values[d.n() - 1]));
    if (!(norm > 0)) throw InvalidInput("normalize_spectral: zero matrix");
    return a * (1.0 / norm);
}

/// min lambda_max(A + X) over |X_ij| <= rho (diagonal included). The variable
/// is X flattened column-major.
class BoxProblem {
public:
    BoxProblem(SymMatrix a, double rho)
        : a_(std::move(a)), rho_(rho), prox_(BoxSet{a_.n() * a_.n(), rho}) {}

    Eigen::Index n() const { return a_.n(); }
    Eigen::Index dim() const { return a_.n() * a_.n(); }
    double rho() const { return rho_; }
    const SymMatrix& data() const { return a_; }
    const EuclideanProx& prox() const { return prox_; }
    double lambda_weight() const { return 1.0; }
    std::string name() const { return "dspca"; }

    SymMatrix map(const Vector& x) const {
        return a_ + SymMatrix(Eigen::Map<const Matrix>(x.data(), n(), n()), 1e-9);
    }
    double linear_value(const Vector&) const { return 0.0; }
    Vector linear_grad() const { return Vector::Zero(dim()); }

    /// Adjoint of the linear part applied to a symmetric matrix gradient.
    Vector pullback(const Matrix& g) const { return Eigen::Map<const Vector>(g.data(), dim()); }
    Vector pullback(const GradientEstimate& g) const { return pullback(g.dense().dense()); }
    Vector pullback_rank_one(const Vector& phi) const { return pullback(Matrix(phi * phi.transpose())); }

    static SymMatrix unflatten(const Vector& x, Eigen::Index n) {
        return SymMatrix(Eigen::Map<const Matrix>(x.data(), n, n), 1e-9);
    }

private:
    SymMatrix a_;
    double rho_;
    EuclideanProx prox_;
};

/// rho = max diag(A) / 2, A expected normalized to unit spectral norm.
inline BoxProblem dspca_problem(const SymMatrix& a) {
    const SpectralDecomp d = full_eig(a);
    const double norm = std::max(std::abs(d.values[0]), std::abs(d.values[d.n() - 1]));
    if (std::abs(norm - 1.0) > 1e-10) throw InvalidInput("dspca_problem: A must have spectral norm 1");
    const double rho = a.dense().diagonal().maxCoeff() / 2.0;
    if (!(rho > 0)) throw InvalidInput("dspca_problem: max diag(A) must be positive");
    return BoxProblem(a, rho);
}

/// min weight * lambda_max(C + diag(w)) - 1^T w over ||w|| <= R.
/// weight = 1 is the formula as written; weight = n gives the classical
/// bounded MaxCut dual (constant shifts of w leave it unchanged).
class BallProblem {
public:
    BallProblem(SymMatrix c, double radius, double weight = 1.0)
        : c_(std::move(c)), radius_(radius), weight_(weight), prox_(BallSet{c_.n(), radius}) {
        if (!(weight > 0)) throw InvalidInput("maxcut: lambda weight must be positive");
    }

    Eigen::Index n() const { return c_.n(); }
    Eigen::Index dim() const { return c_.n(); }
    double radius() const { return radius_; }
    const SymMatrix& data() const { return c_; }
    const EuclideanProx& prox() const { return prox_; }
    double lambda_weight() const { return weight_; }
    std::string name() const { return "maxcut"; }

    SymMatrix map(const Vector& w) const {
        SymMatrix out = c_;
        return out + SymMatrix::diagonal(w);
    }
    double linear_value(const Vector& w) const { return -w.sum(); }
    Vector linear_grad() const { return -Vector::Ones(dim()); }

    Vector pullback(const Matrix& g) const { return g.diagonal(); }
    Vector pullback(const GradientEstimate& g) const { return g.diagonal(); }
    Vector pullback_rank_one(const Vector& phi) const { return phi.cwiseProduct(phi); }

private:
    SymMatrix c_;
    double radius_;
    double weight_;
    EuclideanProx prox_;
};

/// C = G^T G / ||G||_2^2 with G standard Gaussian n x n.
inline SymMatrix wishart_normalized(Eigen::Index n, RandomStream& rng) {
    const Matrix g = rng.gaussian_matrix(n, n);
    const Matrix gtg = g.transpose() * g;
    const double top = full_eig(SymMatrix(gtg, 1e-9)).values[0];
    return SymMatrix(gtg / top, 1e-9);
}

inline BallProblem maxcut_problem(Eigen::Index n, double radius, RandomStream& rng, double weight = 1.0) {
    if (n < 2) throw InvalidInput("maxcut_problem: n must be at least 2");
    if (!(radius > 0)) throw InvalidInput("maxcut_problem: radius must be positive");
    return BallProblem(wishart_normalized(n, rng), radius, weight);
}

enum class ObjectiveMode { exact, sampled };

struct ObjectiveEval {
    double value = 0.0;
    Vector grad;
    double cost_eigvecs = 0.0;
    long matvecs = 0;
};

/// Exact-mode options, and sampled-mode smoothing parameters.
struct OracleConfig {
    SmoothingParams smoothing{};
    int q = 1;
    OracleOptions options{};
};

/// Objective value and (sub)gradient at x. Exact mode spends one Lanczos
/// eigenpair at map(x); sampled mode averages q smoothing samples.
template <class Problem>
ObjectiveEval composite_objective(const Problem& prob, const Vector& x, ObjectiveMode mode, const OracleConfig& cfg,
                                  std::uint64_t seed) {
    if (x.size() != prob.dim()) throw InvalidInput("composite_objective: dimension mismatch");
    const SymMatrix m = prob.map(x);
    const double w = prob.lambda_weight();
    ObjectiveEval out;
    if (mode == ObjectiveMode::exact) {
        RandomStream rng(seed);
        EigPair e = lanczos_leading(m, cfg.options.lanczos, rng);
        out.value = w * e.value + prob.linear_value(x);
        out.grad = w * prob.pullback_rank_one(e.vector) + prob.linear_grad();
        out.cost_eigvecs = e.cost_eigvecs;
        out.matvecs = e.matvecs;
        return out;
    }
    SmoothingParams sp = cfg.smoothing;
    sp.n = prob.n();
    GradientEstimate g = gradient_oracle(m, sp, cfg.q, seed, cfg.options);
    out.value = w * g.value + prob.linear_value(x);
    out.grad = w * prob.pullback(g) + prob.linear_grad();
    out.cost_eigvecs = g.cost_eigvecs;
    out.matvecs = g.matvecs;
    return out;
}

/// Objective through a dense eigensolve; diagnostics only, never charged.
template <class Problem>
double true_objective(const Problem& prob, const Vector& x) {
    return prob.lambda_weight() * full_eig(prob.map(x)).lambda_max() + prob.linear_value(x);
}

/// Indices of the `count` largest entries, ties to the lower index, returned in increasing order.
inline std::vector<Eigen::Index> top_variance_indices(const Vector& variances, Eigen::Index count) {
    if (count < 1 || count > variances.size())
        throw InvalidInput("n_select=" + std::to_string(count) + " exceeds the " +
                           std::to_string(variances.size()) + " available coordinates");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(variances.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return variances[a] > variances[b]; });
    idx.resize(static_cast<std::size_t>(count));
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Sample covariance (rows are observations), normalized by m - 1.
inline Matrix sample_covariance(const Matrix& samples) {
    if (samples.rows() < 2) throw InvalidInput("sample_covariance: need at least two observations");
    const Matrix centered = samples.rowwise() - samples.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
}

/// Covariance restricted to the n_select highest-variance coordinates, scaled
/// to unit spectral norm. Square input is taken as a covariance; "m p" input as samples.
inline SymMatrix covariance_from(const MatrixFile& f, Eigen::Index n_select) {
    const Matrix cov = f.square_header ? SymMatrix(f.data, 1e-12).dense() : sample_covariance(f.data);
    const auto idx = top_variance_indices(cov.diagonal(), n_select);
    Matrix sub(n_select, n_select);
    for (Eigen::Index i = 0; i < n_select; ++i)
        for (Eigen::Index j = 0; j < n_select; ++j)
            sub(i, j) = cov(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    return normalize_spectral(SymMatrix(sub, 1e-10));
}

inline SymMatrix load_covariance(const std::string& path, Eigen::Index n_select) {
    return covariance_from(read_matrix_file(path), n_select);
}

/// m observations of p variables from `factors` latent factors plus unit noise.
/// Factor loadings decay geometrically, so leading eigenvalues are well separated.
inline Matrix factor_samples(Eigen::Index m, Eigen::Index p, int factors, RandomStream& rng, double strength = 3.0) {
    if (m < 2 || p < 1 || factors < 0) throw InvalidInput("factor_samples: invalid sizes");
    Matrix loadings = rng.gaussian_matrix(factors, p);
    for (int f = 0; f < factors; ++f) loadings.row(f) *= strength / std::pow(2.0, f);
    const Matrix scores = rng.gaussian_matrix(m, factors);
    Vector noise_scale(p);
    for (Eigen::Index j = 0; j < p; ++j) noise_scale[j] = 0.5 + rng.uniform();
    return scores * loadings + rng.gaussian_matrix(m, p) * noise_scale.asDiagonal();
}

/// Low-rank-plus-noise covariance with unit spectral norm: sum_f s_f u_f u_f^T + noise * W W^T / n.
inline SymMatrix spiked_covariance(Eigen::Index n, int rank, RandomStream& rng, double noise = 0.5) {
    if (n < 1 || rank < 0) throw InvalidInput("spiked_covariance: invalid sizes");
    const Matrix u = rng.orthogonal(n);
    Matrix a = Matrix::Zero(n, n);
    for (int f = 0; f < rank && f < n; ++f) a += (1.0 / (1 + f)) * u.col(f) * u.col(f).transpose();
    const Matrix w = rng.gaussian_matrix(n, n);
    a += noise * w * w.transpose() / static_cast<double>(n * n);
    return normalize_spectral(SymMatrix(a, 1e-9));
}

}  // namespace ssmax
