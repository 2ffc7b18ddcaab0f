#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "ssmax/error.hpp"
#include "ssmax/random.hpp"
#include "ssmax/spectral/decomposition.hpp"
#include "ssmax/sym_matrix.hpp"

namespace ssmax {

struct LanczosOptions {
    double rel_tol = 1e-10;
    double fail_prob = 0.01;  // delta in the iteration bound
    int restart_limit = 3;
    int check_every = 4;      // Ritz convergence test period, in Lanczos steps
};

/// Krylov steps after which a random-start Lanczos run reaches relative
/// precision rel_tol with probability at least 1 - delta:
/// ceil(log(n / delta^2) / (4 sqrt(rel_tol))).
inline long lanczos_iteration_budget(long n, double rel_tol, double delta) {
    if (n <= 0 || !(rel_tol > 0 && rel_tol < 1) || !(delta > 0 && delta < 1))
        throw InvalidInput("lanczos_iteration_budget: need n > 0, 0 < rel_tol < 1, 0 < delta < 1");
    const double steps = std::ceil(std::log(static_cast<double>(n) / (delta * delta)) / (4.0 * std::sqrt(rel_tol)));
    constexpr double cap = 1e15;  // far beyond any n, keeps the cast defined
    return static_cast<long>(std::min(steps, cap));
}

/// Leading eigenpair of the symmetric operator `apply` (x -> A x) on R^n.
///
/// Lanczos with full reorthogonalization from a start vector uniform on the
/// sphere. Each attempt runs at most min(n, budget) steps; an attempt that does
/// not converge is restarted from a fresh random vector, up to restart_limit
/// restarts, after which ConvergenceFailure is thrown. Convergence means the
/// residual ||A v - value v|| is at most rel_tol * max(1, |value|).
template <class MatVec>
EigPair lanczos_leading(MatVec&& apply, Eigen::Index n, const LanczosOptions& opt, RandomStream& rng) {
    if (n <= 0) throw InvalidInput("lanczos_leading: dimension must be positive");
    if (!(opt.rel_tol > 0 && opt.rel_tol < 1)) throw InvalidInput("lanczos_leading: need 0 < rel_tol < 1");
    if (!(opt.fail_prob > 0 && opt.fail_prob < 1)) throw InvalidInput("lanczos_leading: need 0 < delta < 1");

    EigPair out;
    if (n == 1) {
        Vector e = Vector::Ones(1);
        out.value = apply(e)[0];
        out.vector = e;
        out.matvecs = 1;
        out.cost_eigvecs = 1.0;
        return out;
    }

    const long budget = lanczos_iteration_budget(n, opt.rel_tol, opt.fail_prob);
    const Eigen::Index steps = static_cast<Eigen::Index>(std::min<long>(budget, n));
    const int check = std::max(1, opt.check_every);

    Matrix q(n, steps + 1);
    Vector alpha(steps), beta(steps);
    Eigen::SelfAdjointEigenSolver<Matrix> tri;

    for (int attempt = 0; attempt <= opt.restart_limit; ++attempt) {
        q.col(0) = rng.unit_sphere(n);
        double scale = 0.0;  // running estimate of ||A||, for breakdown detection
        for (Eigen::Index j = 0; j < steps; ++j) {
            Vector w = apply(Vector(q.col(j)));
            ++out.matvecs;
            alpha[j] = q.col(j).dot(w);
            w -= alpha[j] * q.col(j);
            if (j > 0) w -= beta[j - 1] * q.col(j - 1);
            for (int pass = 0; pass < 2; ++pass) {
                auto basis = q.leftCols(j + 1);
                w -= basis * (basis.transpose() * w);
            }
            beta[j] = w.norm();
            scale = std::max({scale, std::abs(alpha[j]), beta[j]});
            const bool breakdown = beta[j] <= 1e-14 * std::max(1.0, scale);
            const bool last = (j + 1 == steps);

            if (breakdown || last || (j + 1) % check == 0) {
                const Eigen::Index m = j + 1;
                if (m == 1) {
                    tri.compute(Matrix::Constant(1, 1, alpha[0]));
                } else {
                    Vector d = alpha.head(m);
                    Vector e = beta.head(m - 1);
                    tri.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
                }
                const double theta = tri.eigenvalues()[m - 1];
                const double ritz_res = std::abs(beta[j] * tri.eigenvectors()(m - 1, m - 1));
                const double tol = opt.rel_tol * std::max(1.0, std::abs(theta));
                if (breakdown || ritz_res <= tol) {
                    Vector v = q.leftCols(m) * tri.eigenvectors().col(m - 1);
                    v.normalize();
                    Vector av = apply(v);
                    ++out.matvecs;
                    const double rq = v.dot(av);
                    const double res = (av - rq * v).norm();
                    if (res <= 10.0 * opt.rel_tol * std::max(1.0, std::abs(rq))) {
                        normalize_sign(v);
                        out.value = rq;
                        out.vector = std::move(v);
                        out.cost_eigvecs = 1.0;
                        out.restarts = attempt;
                        return out;
                    }
                }
                if (breakdown) break;  // invariant subspace without convergence: restart
            }
            q.col(j + 1) = w / beta[j];
        }
    }
    throw ConvergenceFailure("lanczos_leading: no convergence after " + std::to_string(opt.restart_limit) +
                             " restarts of " + std::to_string(steps) + " steps");
}

inline EigPair lanczos_leading(const SymMatrix& x, const LanczosOptions& opt, RandomStream& rng) {
    const Matrix& a = x.dense();
    return lanczos_leading([&a](const Vector& v) -> Vector { return a * v; }, x.n(), opt, rng);
}

/// Leading eigenpair of X + c z z^T without forming the update.
inline EigPair lanczos_leading_rank_one(const SymMatrix& x, const Vector& z, double c, const LanczosOptions& opt,
                                        RandomStream& rng) {
    const Matrix& a = x.dense();
    return lanczos_leading([&](const Vector& v) -> Vector { return a * v + (c * z.dot(v)) * z; }, x.n(), opt,
                           rng);
}

}  // namespace ssmax
