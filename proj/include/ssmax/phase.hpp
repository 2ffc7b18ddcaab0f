#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ssmax/error.hpp"
#include "ssmax/random.hpp"
#include "ssmax/spectral/decomposition.hpp"
#include "ssmax/spectral/secular.hpp"

namespace ssmax {

// Gap statistics of lambda_max(X + (eps/n) z z^T) - lambda_max(X), z ~ N(0, I),
// for a spectrum given directly (X diagonal, so z is already in the eigenbasis).

/// Spectrum with leading multiplicity l, gap = lambda_1 - lambda_{l+1} and
/// offsets deltas_j = lambda_1 - lambda_j - gap for j > l.
struct SpectrumModel {
    Vector lambdas;
    Eigen::Index l = 1;
    double gap = 0.0;
    Vector deltas;

    Eigen::Index n() const { return lambdas.size(); }

    /// gap + delta_j for the non-leading eigenvalues.
    Vector distances() const { return (deltas.array() + gap).matrix(); }

    void validate() const {
        const Eigen::Index m = n();
        if (m < 2) throw InvalidInput("spectrum: need at least two eigenvalues");
        if (!lambdas.allFinite()) throw InvalidInput("spectrum: non-finite eigenvalue");
        for (Eigen::Index i = 1; i < m; ++i)
            if (lambdas[i] > lambdas[i - 1]) throw InvalidInput("spectrum: eigenvalues must be decreasing");
        if (l < 1 || l >= m) throw InvalidInput("spectrum: leading multiplicity must be in [1, n)");
        if (!(gap > 0)) throw InvalidInput("spectrum: gap must be positive");
        if (deltas.size() != m - l || (deltas.array() < 0).any()) throw InvalidInput("spectrum: invalid offsets");
        for (Eigen::Index j = 0; j < deltas.size(); ++j)
            if (std::abs(lambdas[0] - lambdas[l + j] - gap - deltas[j]) > 1e-12 * (1 + std::abs(lambdas[0])))
                throw InvalidInput("spectrum: offsets inconsistent with eigenvalues");
    }

    /// Eigenvalues sorted decreasing; those within `tie_tol` of the top one count as leading.
    static SpectrumModel from_eigenvalues(std::vector<double> values, double tie_tol = 0.0) {
        if (values.size() < 2) throw InvalidInput("spectrum: need at least two eigenvalues");
        std::sort(values.begin(), values.end(), std::greater<>());
        SpectrumModel m;
        m.lambdas = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
        m.l = 1;
        while (m.l < m.n() && m.lambdas[0] - m.lambdas[m.l] <= tie_tol) ++m.l;
        if (m.l == m.n()) throw InvalidInput("spectrum: all eigenvalues equal, no gap");
        m.gap = m.lambdas[0] - m.lambdas[m.l];
        m.deltas = Vector(m.n() - m.l);
        for (Eigen::Index j = m.l; j < m.n(); ++j) m.deltas[j - m.l] = m.lambdas[0] - m.lambdas[j] - m.gap;
        m.validate();
        return m;
    }

    /// lambda_1 = 0 with multiplicity l, all others at -gap.
    static SpectrumModel equal_gap(Eigen::Index n, double gap, Eigen::Index l = 1) {
        if (n < 2 || l < 1 || l >= n) throw InvalidInput("equal_gap: need 1 <= l < n");
        if (!(gap > 0)) throw InvalidInput("equal_gap: gap must be positive");
        std::vector<double> v(static_cast<std::size_t>(n), -gap);
        std::fill(v.begin(), v.begin() + l, 0.0);
        return from_eigenvalues(std::move(v));
    }
};

/// 1/eps0 = (1/n) sum_{j>l} 1/(gap + delta_j).
inline double eps_critical(const SpectrumModel& m) {
    m.validate();
    return static_cast<double>(m.n()) / m.distances().cwiseInverse().sum();
}

/// Positive root t0 of 1/eps = (1/n) sum_{j>l} 1/(t0 + gap + delta_j), for eps > eps0.
inline double t0_solve(const SpectrumModel& m, double eps) {
    const double eps0 = eps_critical(m);
    if (!(eps > eps0)) throw InvalidInput("t0_solve: eps must exceed the critical scale " + std::to_string(eps0));
    const Vector d = m.distances();
    const double n = static_cast<double>(m.n());
    auto g = [&](double t) { return (d.array() + t).inverse().sum() / n - 1.0 / eps; };
    double lo = 0.0;
    double hi = (1.0 - static_cast<double>(m.l) / n) * eps;
    // g is decreasing, g(0) > 0 >= g(hi).
    while (hi - lo > 1e-15 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (g(mid) > 0) lo = mid;
        else hi = mid;
    }
    const double t0 = 0.5 * (lo + hi);
    if (!(t0 > 0) || t0 > (1.0 - static_cast<double>(m.l) / n) * eps)
        throw ConvergenceFailure("t0_solve: root outside (0, (1 - l/n) eps]");
    return t0;
}

enum class Regime { sub, critical, super };

inline std::string regime_name(Regime r) {
    switch (r) {
        case Regime::sub: return "sub";
        case Regime::critical: return "critical";
        case Regime::super: return "super";
    }
    return "?";
}

struct PhasePrediction {
    double eps = 0.0;
    double eps0 = 0.0;
    double t0 = std::numeric_limits<double>::quiet_NaN();  // super only
    Regime regime = Regime::sub;
    double predicted_order = -1.0;  // exponent of n in the leading random term
};

/// Critical when |eps - eps0| <= 1e-9 eps0.
inline PhasePrediction classify_regime(const SpectrumModel& m, double eps) {
    if (!(eps > 0) || !std::isfinite(eps)) throw InvalidInput("classify_regime: eps must be positive");
    PhasePrediction p;
    p.eps = eps;
    p.eps0 = eps_critical(m);
    if (std::abs(eps - p.eps0) <= 1e-9 * p.eps0) {
        p.regime = Regime::critical;
        p.predicted_order = -0.5;
    } else if (eps < p.eps0) {
        p.regime = Regime::sub;
        p.predicted_order = -1.0;
    } else {
        p.regime = Regime::super;
        p.predicted_order = 0.0;
        p.t0 = t0_solve(m, eps);
    }
    return p;
}

/// Random ingredients of the limit laws, evaluated on one draw of z.
struct PhaseStatistics {
    double chi2 = 0.0;   // sum of z_j^2 over the leading eigenspace
    double xi1 = 0.0;    // n^{-1/2} sum (z_j^2 - 1)/(gap + delta_j)
    double zeta1 = 0.0;  // n^{-1} sum z_j^2/(gap + delta_j)^2
    double xi_t0 = std::numeric_limits<double>::quiet_NaN();
    double zeta_t0 = std::numeric_limits<double>::quiet_NaN();
};

inline PhaseStatistics phase_statistics(const SpectrumModel& m, const PhasePrediction& p, const Vector& z) {
    if (z.size() != m.n()) throw InvalidInput("phase_statistics: dimension mismatch");
    const double n = static_cast<double>(m.n());
    const Vector d = m.distances();
    const Eigen::ArrayXd tail = z.tail(m.n() - m.l).array().square();
    PhaseStatistics s;
    s.chi2 = z.head(m.l).squaredNorm();
    s.xi1 = ((tail - 1.0) / d.array()).sum() / std::sqrt(n);
    s.zeta1 = (tail / d.array().square()).sum() / n;
    if (p.regime == Regime::super) {
        const Eigen::ArrayXd dt = d.array() + p.t0;
        s.xi_t0 = ((tail - 1.0) / dt).sum() / std::sqrt(n);
        s.zeta_t0 = (1.0 / dt.square()).sum() / n;
    }
    return s;
}

/// Leading random coefficient W1 of the regime's expansion.
inline double leading_coefficient(const PhasePrediction& p, const PhaseStatistics& s) {
    switch (p.regime) {
        case Regime::sub: return s.chi2 / (1.0 / p.eps - 1.0 / p.eps0);
        case Regime::critical: return (s.xi1 + std::sqrt(s.xi1 * s.xi1 + 4.0 * s.chi2 * s.zeta1)) / (2.0 * s.zeta1);
        case Regime::super: return s.xi_t0 / s.zeta_t0;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// Sub-critical second-order coefficient W2 = W1 xi1 / (1/eps - 1/eps0); NaN otherwise.
inline double second_order_coefficient(const PhasePrediction& p, const PhaseStatistics& s) {
    if (p.regime != Regime::sub) return std::numeric_limits<double>::quiet_NaN();
    return leading_coefficient(p, s) * s.xi1 / (1.0 / p.eps - 1.0 / p.eps0);
}

/// T predicted by the leading terms of the expansion.
inline double predicted_gap(const PhasePrediction& p, const PhaseStatistics& s, Eigen::Index n) {
    const double w1 = leading_coefficient(p, s);
    const double nn = static_cast<double>(n);
    switch (p.regime) {
        case Regime::sub: return w1 / nn;
        case Regime::critical: return w1 / std::sqrt(nn);
        case Regime::super: return p.t0 + w1 / std::sqrt(nn);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// T for one draw via the secular equation.
inline double sample_gap(const SpectrumModel& m, double eps, const Vector& z) {
    const SecularProblem sp{m.lambdas, z.array().square().matrix(), eps / static_cast<double>(m.n())};
    return secular_root(sp).t;
}

/// T for one draw via a dense eigensolve; O(n^3), for cross-checks.
inline double dense_gap(const SpectrumModel& m, double eps, const Vector& z) {
    Matrix x = m.lambdas.asDiagonal();
    x += (eps / static_cast<double>(m.n())) * z * z.transpose();
    return full_eig(SymMatrix(x, 1e-9)).lambda_max() - m.lambdas[0];
}

/// Empirical quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw InvalidInput("quantile: empty sample");
    std::sort(v.begin(), v.end());
    const double h = p * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(h));
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

struct LogLogFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double r2 = std::numeric_limits<double>::quiet_NaN();
};

/// Least squares of log y on log x; NaN fields with fewer than two usable points.
inline LogLogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
        if (x[i] > 0 && y[i] > 0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    LogLogFit f;
    if (lx.size() < 2) return f;
    const double k = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= k;
    my /= k;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

struct PhaseRow {
    Eigen::Index n = 0;
    PhasePrediction prediction;
    long trials = 0;
    double median_T = 0.0;
    double iqr_T = 0.0;
    double median_se = 0.0;            // 1.2533 * (IQR / 1.349) / sqrt(trials)
    double median_scaled = 0.0;        // median of T (sub, critical) or |T - t0| (super)
    double median_predicted = 0.0;     // median of the leading-term prediction of T
    double median_normalized = 0.0;    // sub: median n T (1/eps - 1/eps0); NaN otherwise
    double median_chi2 = 0.0;          // median of the chi^2_l draws behind the same trials
    double min_lower_bound_margin = 0.0;  // min over trials of T - (eps/n) chi2
};

struct PhaseReport {
    std::vector<PhaseRow> rows;
    LogLogFit fit;  // log median_scaled on log n
};

/// eps as a function of the model at each n (e.g. a multiple of the critical scale).
using EpsRule = std::function<double(const SpectrumModel&)>;
using ModelRule = std::function<SpectrumModel(Eigen::Index)>;

inline EpsRule eps_times_critical(double factor) {
    return [factor](const SpectrumModel& m) { return factor * eps_critical(m); };
}

/// Per n: `trials` independent draws of T through the secular equation, with
/// per-trial seeds derive_seed(seed, {n, trial}).
inline PhaseReport monte_carlo_gap(const ModelRule& model, const std::vector<Eigen::Index>& n_list,
                                   const EpsRule& eps_rule, long trials, std::uint64_t seed) {
    if (trials < 200) throw InvalidInput("monte_carlo_gap: need at least 200 trials per n");
    if (n_list.empty()) throw InvalidInput("monte_carlo_gap: empty n list");
    PhaseReport rep;
    std::vector<double> xs, ys;
    for (Eigen::Index n : n_list) {
        const SpectrumModel m = model(n);
        if (m.n() != n) throw InvalidInput("monte_carlo_gap: model size does not match n");
        const double eps = eps_rule(m);
        PhaseRow row;
        row.n = n;
        row.trials = trials;
        row.prediction = classify_regime(m, eps);
        const PhasePrediction& p = row.prediction;
        std::vector<double> T, scaled, pred, normalized, chi2;
        row.min_lower_bound_margin = std::numeric_limits<double>::infinity();
        for (long i = 0; i < trials; ++i) {
            RandomStream rng(derive_seed(seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(i)}));
            const Vector z = rng.gaussian_vector(n);
            const double t = sample_gap(m, eps, z);
            const PhaseStatistics s = phase_statistics(m, p, z);
            T.push_back(t);
            scaled.push_back(p.regime == Regime::super ? std::abs(t - p.t0) : t);
            pred.push_back(predicted_gap(p, s, n));
            chi2.push_back(s.chi2);
            if (p.regime == Regime::sub) normalized.push_back(static_cast<double>(n) * t * (1.0 / eps - 1.0 / p.eps0));
            row.min_lower_bound_margin = std::min(row.min_lower_bound_margin, t - eps / static_cast<double>(n) * s.chi2);
        }
        row.median_T = median(T);
        row.iqr_T = quantile(T, 0.75) - quantile(T, 0.25);
        row.median_se = 1.2533 * (row.iqr_T / 1.349) / std::sqrt(static_cast<double>(trials));
        row.median_scaled = median(scaled);
        row.median_predicted = median(pred);
        row.median_normalized = normalized.empty() ? std::numeric_limits<double>::quiet_NaN() : median(normalized);
        row.median_chi2 = median(chi2);
        xs.push_back(static_cast<double>(n));
        ys.push_back(row.median_scaled);
        rep.rows.push_back(row);
    }
    rep.fit = loglog_fit(xs, ys);
    return rep;
}

}  // namespace ssmax
