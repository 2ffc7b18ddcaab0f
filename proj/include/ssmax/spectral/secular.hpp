#pragma once

#include <cmath>
#include <limits>

#include "ssmax/error.hpp"
#include "ssmax/spectral/decomposition.hpp"
#include "ssmax/sym_matrix.hpp"

namespace ssmax {

/// Rank-one update X + scale * v v^T in the eigenbasis of X: `lambdas` are the
/// eigenvalues of X in decreasing order and `weights` the squared coordinates
/// of O_X v.
struct SecularProblem {
    Vector lambdas;
    Vector weights;
    double scale = 0.0;
};

struct SecularRoot {
    double t = 0.0;            // lambda_max(X + scale v v^T) - lambda_1(X) when t > 0
    bool degenerate = false;   // all weight on the leading eigenspace was deflated
    Eigen::Index deflated = 0; // coordinates dropped from s(t)
    int iterations = 0;
};

/// Relative weight below which a coordinate is dropped from the secular function.
inline constexpr double kDeflationThreshold = 1e-14;

inline SecularProblem make_secular_problem(const SpectralDecomp& d, const Vector& v, double scale) {
    if (v.size() != d.n()) throw InvalidInput("secular problem: dimension mismatch");
    return SecularProblem{d.values, d.to_eigenbasis(v).array().square().matrix(), scale};
}

/// Unique positive root of s(t) = 1/scale - sum_i w_i / (lambda_1 - lambda_i + t).
///
/// The root is bracketed in [scale * w_lead, scale * sum w] (w_lead: weight on
/// the leading eigenspace) and found by Newton's method, which moves
/// monotonically toward the root from the left because s is increasing and
/// concave; bisection takes over whenever a step leaves the bracket.
///
/// Coordinates with weight below kDeflationThreshold * sum w are deflated. If
/// that removes every coordinate of the leading eigenspace the root is taken
/// for the deflated system and flagged degenerate; t may then be <= 0, meaning
/// lambda_1(X) remains the top eigenvalue.
inline SecularRoot secular_root(const SecularProblem& p) {
    const Eigen::Index n = p.lambdas.size();
    if (n == 0 || p.weights.size() != n) throw InvalidInput("secular_root: dimension mismatch");
    if (!(p.scale > 0) || !std::isfinite(p.scale)) throw InvalidInput("secular_root: scale must be positive");
    if (!p.lambdas.allFinite() || !p.weights.allFinite()) throw InvalidInput("secular_root: non-finite input");
    if ((p.weights.array() < 0).any()) throw InvalidInput("secular_root: negative weight");
    for (Eigen::Index i = 1; i < n; ++i)
        if (p.lambdas[i] > p.lambdas[i - 1]) throw InvalidInput("secular_root: lambdas must be decreasing");
    const double total = p.weights.sum();
    if (!(total > 0)) throw InvalidInput("secular_root: all weights are zero");

    SecularRoot r;
    const double cut = kDeflationThreshold * total;
    double dmin = std::numeric_limits<double>::infinity();
    double kept = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (p.weights[i] < cut) {
            ++r.deflated;
            continue;
        }
        dmin = std::min(dmin, p.lambdas[0] - p.lambdas[i]);
        kept += p.weights[i];
    }
    r.degenerate = dmin > 0.0;

    // Shifted variable u = t + dmin; all remaining poles sit at u <= 0.
    double lead = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (p.weights[i] >= cut && p.lambdas[0] - p.lambdas[i] == dmin) lead += p.weights[i];

    const double inv_scale = 1.0 / p.scale;
    auto eval = [&](double u, double& deriv) {
        double s = inv_scale;
        deriv = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (p.weights[i] < cut) continue;
            const double den = (p.lambdas[0] - p.lambdas[i] - dmin) + u;
            const double q = p.weights[i] / den;
            s -= q;
            deriv += q / den;
        }
        return s;
    };

    double lo = p.scale * lead;
    double hi = p.scale * kept;
    double u = lo;
    if (hi > lo) {
        for (int it = 0; it < 400; ++it) {
            r.iterations = it + 1;
            double ds = 0.0;
            const double s = eval(u, ds);
            if (s == 0.0) break;
            if (s < 0) lo = u;
            else hi = u;
            double next = u - s / ds;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            const double step = std::abs(next - u);
            u = next;
            if (step <= 4.0 * std::numeric_limits<double>::epsilon() * u ||
                hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi)
                break;
        }
    }
    r.t = u - dmin;
    return r;
}

/// Leading eigenpair of X + eps_over_n * v v^T from the eigendecomposition of X.
/// Eigenvector coordinates in the eigenbasis are (O_X v)_j / (l_1 - lambda_j),
/// normalized and rotated back. Charged as one eigenvector.
inline EigPair rank_one_leading(const SpectralDecomp& d, const Vector& v, double eps_over_n) {
    if (v.size() != d.n()) throw InvalidInput("rank_one_leading: dimension mismatch");
    if (!(v.squaredNorm() > 0)) throw InvalidInput("rank_one_leading: v must be nonzero");
    const Vector y = d.to_eigenbasis(v);
    const SecularProblem p{d.values, y.array().square().matrix(), eps_over_n};
    const SecularRoot root = secular_root(p);
    const double total = p.weights.sum();

    EigPair out;
    out.degenerate = root.degenerate;
    out.cost_eigvecs = 1.0;
    Vector c = Vector::Zero(d.n());
    if (root.t <= 0.0) {
        // Degenerate update that does not lift the top: the unperturbed leading
        // eigenvector (orthogonal to v) stays an eigenvector.
        out.value = d.values[0];
        c[0] = 1.0;
    } else {
        out.value = d.values[0] + root.t;
        for (Eigen::Index j = 0; j < d.n(); ++j) {
            if (p.weights[j] < kDeflationThreshold * total) continue;
            c[j] = y[j] / ((d.values[0] - d.values[j]) + root.t);
        }
    }
    Vector phi = d.from_eigenbasis(c);
    phi.normalize();
    normalize_sign(phi);
    out.vector = std::move(phi);
    return out;
}

/// det(X + v v^T - lambda I) = prod_i (lambda_i - lambda) * (1 + sum_i y_i^2 / (lambda_i - lambda)),
/// with y the coordinates of v in the eigenbasis of X.
inline double char_poly_rank_one(const SpectralDecomp& d, const Vector& v, double lambda) {
    if (v.size() != d.n()) throw InvalidInput("char_poly_rank_one: dimension mismatch");
    const Vector y = d.to_eigenbasis(v);
    double prod = 1.0;
    double sec = 1.0;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        const double diff = d.values[i] - lambda;
        if (diff == 0.0) throw InvalidInput("char_poly_rank_one: lambda is an eigenvalue of X (pole)");
        prod *= diff;
        sec += y[i] * y[i] / diff;
    }
    return prod * sec;
}

}  // namespace ssmax
