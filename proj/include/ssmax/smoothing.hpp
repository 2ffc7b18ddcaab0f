#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "ssmax/error.hpp"
#include "ssmax/random.hpp"
#include "ssmax/spectral/decomposition.hpp"
#include "ssmax/spectral/lanczos.hpp"
#include "ssmax/spectral/secular.hpp"
#include "ssmax/sym_matrix.hpp"

namespace ssmax {

/// Rank-one Gaussian smoothing F_k(X) = E[max_i lambda_max(X + (eps/n) z_i z_i^T)].
struct SmoothingParams {
    double eps = 0.05;
    int k = 3;
    Eigen::Index n = 0;

    void validate() const {
        if (!(eps > 0) || !std::isfinite(eps)) throw InvalidInput("smoothing: eps must be positive");
        if (k < 1) throw InvalidInput("smoothing: k must be at least 1");
        if (n < 1) throw InvalidInput("smoothing: n must be positive");
    }
    double scale() const { return eps / static_cast<double>(n); }
};

/// How the k perturbed leading eigenpairs are computed.
enum class EigPath {
    secular,  // full_eig of X once, then one secular solve per perturbation
    lanczos,  // Lanczos on the implicitly perturbed operator
};

/// Eigenvector-equivalents charged per oracle sample.
enum class CostModel {
    eigenpairs,  // k: every perturbed leading eigenpair is charged
    samples,     // 1: only the returned eigenvector phi_{i0} is charged
};

struct OracleOptions {
    EigPath path = EigPath::lanczos;
    LanczosOptions lanczos{};
    CostModel cost = CostModel::eigenpairs;
};

/// One realization of the smoothed objective and its gradient phi phi^T.
struct OracleSample {
    double value = 0.0;
    int i0 = 0;                // winning perturbation, lowest index on ties
    Vector grad;               // phi_{i0}, unit norm
    double gap_witness = std::numeric_limits<double>::quiet_NaN();  // (eps/n) max_i (O_X z_i)_1^2, secular path only
    double cost_eigvecs = 0.0;
    long matvecs = 0;
    bool degenerate = false;
};

/// Average of q rank-one terms phi_l phi_l^T, kept as the eigenvector list.
struct GradientEstimate {
    std::vector<Vector> vectors;
    double value = 0.0;  // mean of the q sampled F_k values
    double cost_eigvecs = 0.0;
    long matvecs = 0;

    int q() const { return static_cast<int>(vectors.size()); }

    SymMatrix dense() const {
        if (vectors.empty()) throw InvalidInput("GradientEstimate: empty");
        const Eigen::Index n = vectors.front().size();
        Matrix m = Matrix::Zero(n, n);
        for (const Vector& v : vectors) m.noalias() += v * v.transpose();
        m /= static_cast<double>(vectors.size());
        return SymMatrix(m);
    }

    /// diag of the average, i.e. the mean of phi_l o phi_l.
    Vector diagonal() const {
        Vector d = Vector::Zero(vectors.front().size());
        for (const Vector& v : vectors) d += v.cwiseProduct(v);
        return d / static_cast<double>(vectors.size());
    }

    double trace() const {
        double t = 0.0;
        for (const Vector& v : vectors) t += v.squaredNorm();
        return t / static_cast<double>(vectors.size());
    }

    /// <mean phi phi^T, Y> without forming the average.
    double inner(const SymMatrix& y) const {
        double s = 0.0;
        for (const Vector& v : vectors) s += v.dot(y.apply(v));
        return s / static_cast<double>(vectors.size());
    }
};

namespace detail {

inline void check_noise(const std::vector<Vector>& z, const SmoothingParams& p) {
    p.validate();
    if (static_cast<int>(z.size()) != p.k) throw InvalidInput("F_k: expected k noise vectors");
    for (const Vector& zi : z)
        if (zi.size() != p.n) throw InvalidInput("F_k: noise dimension mismatch");
}

inline void keep_max(OracleSample& s, const EigPair& e, int i) {
    if (i == 0 || e.value > s.value) {
        s.value = e.value;
        s.i0 = i;
        s.grad = e.vector;
    }
    s.cost_eigvecs += e.cost_eigvecs;
    s.matvecs += e.matvecs;
    s.degenerate = s.degenerate || e.degenerate;
}

inline std::vector<Vector> draw_noise(const SmoothingParams& p, RandomStream& rng) {
    std::vector<Vector> z;
    z.reserve(static_cast<std::size_t>(p.k));
    for (int i = 0; i < p.k; ++i) z.push_back(rng.gaussian_vector(p.n));
    return z;
}

}  // namespace detail

/// max_i lambda_max(X + (eps/n) z_i z_i^T) for given noise, secular path.
inline OracleSample evaluate_Fk(const SpectralDecomp& d, const SmoothingParams& p, const std::vector<Vector>& z) {
    detail::check_noise(z, p);
    if (d.n() != p.n) throw InvalidInput("F_k: dimension mismatch");
    OracleSample s;
    double witness = 0.0;
    for (int i = 0; i < p.k; ++i) {
        const Vector& zi = z[static_cast<std::size_t>(i)];
        detail::keep_max(s, rank_one_leading(d, zi, p.scale()), i);
        const double y1 = d.vectors.col(0).dot(zi);
        witness = std::max(witness, p.scale() * y1 * y1);
    }
    s.gap_witness = witness;
    return s;
}

/// Same quantity via Lanczos on X + (eps/n) z_i z_i^T; X is never decomposed.
inline OracleSample evaluate_Fk(const SymMatrix& x, const SmoothingParams& p, const std::vector<Vector>& z,
                                const LanczosOptions& opt, RandomStream& rng) {
    detail::check_noise(z, p);
    if (x.n() != p.n) throw InvalidInput("F_k: dimension mismatch");
    OracleSample s;
    for (int i = 0; i < p.k; ++i)
        detail::keep_max(s, lanczos_leading_rank_one(x, z[static_cast<std::size_t>(i)], p.scale(), opt, rng), i);
    return s;
}

inline OracleSample sample_Fk(const SpectralDecomp& d, const SmoothingParams& p, RandomStream& rng) {
    p.validate();
    return evaluate_Fk(d, p, detail::draw_noise(p, rng));
}

inline OracleSample sample_Fk(const SymMatrix& x, const SmoothingParams& p, RandomStream& rng,
                              const LanczosOptions& opt = {}) {
    p.validate();
    const std::vector<Vector> z = detail::draw_noise(p, rng);
    return evaluate_Fk(x, p, z, opt, rng);
}

/// q-sample gradient oracle. Sample l uses its own stream derive_seed(seed, {l}),
/// so each term depends only on (seed, l); the average is reduced in sample order.
/// Cost is q*k eigenvectors (k perturbed eigenpairs per sample), or q under CostModel::samples.
inline GradientEstimate gradient_oracle(const SpectralDecomp& d, const SmoothingParams& p, int q,
                                        std::uint64_t seed, CostModel cost = CostModel::eigenpairs) {
    if (q < 1) throw InvalidInput("gradient_oracle: q must be at least 1");
    GradientEstimate g;
    g.vectors.reserve(static_cast<std::size_t>(q));
    double total = 0.0;
    for (int l = 0; l < q; ++l) {
        RandomStream rng(derive_seed(seed, {static_cast<std::uint64_t>(l)}));
        OracleSample s = sample_Fk(d, p, rng);
        total += s.value;
        g.cost_eigvecs += cost == CostModel::samples ? 1.0 : s.cost_eigvecs;
        g.matvecs += s.matvecs;
        g.vectors.push_back(std::move(s.grad));
    }
    g.value = total / q;
    return g;
}

inline GradientEstimate gradient_oracle(const SymMatrix& x, const SmoothingParams& p, int q, std::uint64_t seed,
                                        const OracleOptions& opt = {}) {
    if (q < 1) throw InvalidInput("gradient_oracle: q must be at least 1");
    if (opt.path == EigPath::secular) {
        GradientEstimate g = gradient_oracle(full_eig(x), p, q, seed, opt.cost);
        g.cost_eigvecs += static_cast<double>(x.n());
        return g;
    }
    GradientEstimate g;
    g.vectors.reserve(static_cast<std::size_t>(q));
    double total = 0.0;
    for (int l = 0; l < q; ++l) {
        RandomStream rng(derive_seed(seed, {static_cast<std::uint64_t>(l)}));
        OracleSample s = sample_Fk(x, p, rng, opt.lanczos);
        total += s.value;
        g.cost_eigvecs += opt.cost == CostModel::samples ? 1.0 : s.cost_eigvecs;
        g.matvecs += s.matvecs;
        g.vectors.push_back(std::move(s.grad));
    }
    g.value = total / q;
    return g;
}

/// Envelope of F_k - lambda_max: [eps/n, k*eps]. eps = 0 is allowed and gives (0, 0).
inline std::pair<double, double> approximation_bounds(const SmoothingParams& p) {
    if (p.eps < 0 || p.k < 1 || p.n < 1) throw InvalidInput("approximation_bounds: invalid parameters");
    return {p.eps / static_cast<double>(p.n), p.k * p.eps};
}

/// k/(k-2); only finite for k >= 3.
inline double smoothness_factor(int k) {
    if (k < 3) throw InvalidInput("smoothness_factor: Lipschitz bound requires k >= 3");
    return static_cast<double>(k) / static_cast<double>(k - 2);
}

/// Lipschitz constant of grad F_k: (k/(k-2)) n / eps.
inline double lipschitz_bound(const SmoothingParams& p) {
    p.validate();
    return smoothness_factor(p.k) * static_cast<double>(p.n) / p.eps;
}

/// Sample mean and its standard error.
struct MonteCarloEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    long draws = 0;
};

namespace detail {
template <class Draw>
MonteCarloEstimate monte_carlo(long draws, Draw&& draw) {
    if (draws < 2) throw InvalidInput("monte_carlo: need at least 2 draws");
    double mean = 0.0, m2 = 0.0;
    for (long i = 0; i < draws; ++i) {
        const double x = draw();
        const double delta = x - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (x - mean);
    }
    return {mean, std::sqrt(m2 / static_cast<double>(draws - 1) / static_cast<double>(draws)), draws};
}
}  // namespace detail

/// E[1 / max_i z_i^2] over k scalar standard normals. Infinite variance for k = 3:
/// the reported standard error understates the true fluctuation.
inline MonteCarloEstimate inverse_max_square_mc(int k, long draws, RandomStream& rng) {
    if (k < 1) throw InvalidInput("inverse_max_square_mc: k must be positive");
    return detail::monte_carlo(draws, [&] {
        double m = 0.0;
        for (int i = 0; i < k; ++i) {
            const double z = rng.normal();
            m = std::max(m, z * z);
        }
        return 1.0 / m;
    });
}

/// c_k = E[max_i ||z_i||^2 / n], the constant in F_k(0) = c_k eps.
inline MonteCarloEstimate c_k_mc(int k, Eigen::Index n, long draws, RandomStream& rng) {
    if (k < 1 || n < 1) throw InvalidInput("c_k_mc: invalid parameters");
    return detail::monte_carlo(draws, [&] {
        double m = 0.0;
        for (int i = 0; i < k; ++i) m = std::max(m, rng.gaussian_vector(n).squaredNorm());
        return m / static_cast<double>(n);
    });
}

struct VarianceProbe {
    double variance = 0.0;      // mean of ||phi phi^T - mean||_F^2
    double stderr_ = 0.0;
    double max_sq_dev = 0.0;    // worst single sample
    bool bound_ok = false;      // variance <= 1 + 3 stderr and max_sq_dev <= 4
};

/// Empirical variance of single gradient samples phi phi^T (secular path).
/// ||phi phi^T - M||_F^2 = 1 - 2 phi^T M phi + ||M||_F^2 for unit phi.
inline VarianceProbe gradient_variance_probe(const SpectralDecomp& d, const SmoothingParams& p, long trials,
                                             RandomStream& rng) {
    if (trials < 100) throw InvalidInput("gradient_variance_probe: need at least 100 trials");
    std::vector<Vector> phis;
    phis.reserve(static_cast<std::size_t>(trials));
    Matrix mean = Matrix::Zero(p.n, p.n);
    for (long i = 0; i < trials; ++i) {
        phis.push_back(sample_Fk(d, p, rng).grad);
        mean.noalias() += phis.back() * phis.back().transpose();
    }
    mean /= static_cast<double>(trials);
    const double mnorm = mean.squaredNorm();
    VarianceProbe out;
    std::size_t idx = 0;
    MonteCarloEstimate est = detail::monte_carlo(trials, [&] {
        const Vector& phi = phis[idx++];
        const double dev = phi.squaredNorm() * phi.squaredNorm() - 2.0 * phi.dot(mean * phi) + mnorm;
        out.max_sq_dev = std::max(out.max_sq_dev, dev);
        return dev;
    });
    out.variance = est.mean;
    out.stderr_ = est.stderr_;
    out.bound_ok = out.variance <= 1.0 + 3.0 * out.stderr_ && out.max_sq_dev <= 4.0;
    return out;
}

/// Soft-max smoothing mu log Tr exp(X/mu) and its gradient exp(X/mu)/Tr exp(X/mu).
/// Evaluated with the exponent shifted by lambda_max, so it never overflows.
/// Costs n eigenvectors (one full decomposition).
struct SoftMaxEval {
    double value = 0.0;
    SymMatrix grad;
    double lambda_max = 0.0;
    double cost_eigvecs = 0.0;
};

inline SoftMaxEval softmax_eval(const SymMatrix& x, double mu) {
    if (!(mu > 0)) throw InvalidInput("softmax_eval: mu must be positive");
    const SpectralDecomp d = full_eig(x);
    const double top = d.values[0];
    const Vector w = ((d.values.array() - top) / mu).exp().matrix();
    const double tr = w.sum();
    SoftMaxEval out;
    out.value = top + mu * std::log(tr);
    out.grad = SymMatrix(d.vectors * (w / tr).asDiagonal() * d.vectors.transpose(), 1e-8);
    out.lambda_max = top;
    out.cost_eigvecs = d.cost_eigvecs;
    return out;
}

/// mu = eps / log n, which keeps the soft-max within [lambda_max, lambda_max + eps].
inline double softmax_mu(double eps, Eigen::Index n) {
    if (!(eps > 0) || n < 2) throw InvalidInput("softmax_mu: need eps > 0 and n >= 2");
    return eps / std::log(static_cast<double>(n));
}

}  // namespace ssmax
