#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ssmax/error.hpp"
#include "ssmax/problems.hpp"
#include "ssmax/prox.hpp"
#include "ssmax/random.hpp"
#include "ssmax/smoothing.hpp"
#include "ssmax/sym_matrix.hpp"

namespace ssmax {

/// Oracle: (point, seed) -> value, gradient, cost. Truth: point -> objective (diagnostics).
using OracleFn = std::function<ObjectiveEval(const Vector&, std::uint64_t)>;
using TruthFn = std::function<double(const Vector&)>;

struct SolverConfig {
    long N = 100;
    double eps = 0.05;
    int k = 3;
    int q = 2;
    double lip_scale = 100.0;
    double L = 0.0;          // Lipschitz constant for the step sizes (already scaled)
    double sigma = 0.0;      // oracle noise level, sqrt of the variance bound
    double M = 0.0;          // nonsmooth modulus
    double mu = 0.0;         // noise-bias bound, k * eps for the smoothing oracle
    double gamma_max = 0.0;
    double gamma_min = 0.0;
    double gamma_d = 0.5;
    double gamma_init = 0.0;  // starting scale; 0 means gamma_max
    std::uint64_t seed = 0;
    long true_every = 0;      // obj_true cadence; 0 means ceil(N / 200)
    bool wall_time = false;   // wall_ms column stays 0 unless enabled, to keep traces byte-identical

    void validate() const {
        if (N < 1) throw InvalidInput("solver: N must be at least 1");
        if (!(gamma_d > 0 && gamma_d < 1)) throw InvalidInput("solver: gamma_d must lie in (0, 1)");
        if (!(gamma_min > 0)) throw InvalidInput("solver: gamma_min must be positive");
        if (gamma_min > gamma_max) throw InvalidInput("solver: gamma_min must not exceed gamma_max");
        const double g0 = start_gamma();
        if (g0 < gamma_min || g0 > gamma_max) throw InvalidInput("solver: gamma_init outside [gamma_min, gamma_max]");
    }
    double start_gamma() const { return gamma_init > 0 ? gamma_init : gamma_max; }
};

struct TraceRecord {
    long t = 0;
    double obj_true = std::numeric_limits<double>::quiet_NaN();
    double obj_sampled = std::numeric_limits<double>::quiet_NaN();
    double gamma = 0.0;
    double eigvecs = 0.0;  // cumulative
    double wall_ms = 0.0;
};

struct RunResult {
    Vector solution;
    std::vector<TraceRecord> trace;
    double total_eigvecs = 0.0;
    long iterations = 0;
    long oracle_calls = 0;
    long check_calls = 0;
    long T_gamma = -1;          // iterations before the line search first fails
    double bound = std::numeric_limits<double>::quiet_NaN();
    bool completed = true;
    std::string error;

    /// Smallest obj_true recorded, NaN if none.
    double best_true() const {
        double b = std::numeric_limits<double>::quiet_NaN();
        for (const auto& r : trace)
            if (!std::isnan(r.obj_true) && !(r.obj_true >= b)) b = r.obj_true;
        return b;
    }
    double final_true() const {
        for (auto it = trace.rbegin(); it != trace.rend(); ++it)
            if (!std::isnan(it->obj_true)) return it->obj_true;
        return std::numeric_limits<double>::quiet_NaN();
    }
};

/// Iterate triple of the accelerated scheme. x_md and x_ag are convex
/// combinations with weights 2/(t+1) and (t-1)/(t+1).
struct IterateState {
    Vector x, x_md, x_ag;
    long t = 1;
    double gamma = 0.0;

    double beta() const { return (t + 1) / 2.0; }
    double gamma_t() const { return (t + 1) * gamma / 2.0; }
    /// 2/(t+1) a + (t-1)/(t+1) b, written as b + beta (a - b) so equal inputs stay exact.
    static Vector combine(const Vector& a, const Vector& b, long t) {
        if (t == 1) return a;
        return b + (2.0 / (t + 1)) * (a - b);
    }
};

// ---------------------------------------------------------------- schedules and bounds

struct Schedule {
    long N = 0;
    int q = 0;
};

/// N = ceil(2 D sqrt(n) / eps), q = ceil(max(1, D / (eps sqrt(n)))).
inline Schedule default_schedule(Eigen::Index n, double eps, double D) {
    if (n < 1 || !(eps > 0) || !(D > 0)) throw InvalidInput("default_schedule: arguments must be positive");
    const double rn = std::sqrt(static_cast<double>(n));
    return {static_cast<long>(std::ceil(2.0 * D * rn / eps)),
            static_cast<int>(std::ceil(std::max(1.0, D / (eps * rn))))};
}

/// Experiment preset: eps = 0.05, q = ceil(0.1 / eps), k = 3, N capped at ceil(100 sqrt(n)).
inline Schedule preset_schedule(Eigen::Index n, double eps, double D, double cap_factor = 100.0) {
    Schedule s = default_schedule(n, eps, D);
    s.N = std::min<long>(s.N, static_cast<long>(std::ceil(cap_factor * std::sqrt(static_cast<double>(n)))));
    s.q = static_cast<int>(std::ceil(0.1 / eps - 1e-12));
    return s;
}

/// Constant step scale of plain AC-SA:
/// min(alpha/(2L), sqrt(6 alpha) D / ((N+2)^{3/2} sqrt(4 M^2 + sigma^2))).
inline double acsa_gamma(double alpha, double L, double D, long N, double M, double sigma) {
    double g = alpha / (2.0 * L);
    const double noise = std::sqrt(4 * M * M + sigma * sigma);
    if (noise > 0 && D > 0)
        g = std::min(g, std::sqrt(6.0 * alpha) * D / (std::pow(N + 2.0, 1.5) * noise));
    return g;
}

/// Expected-gap bound for AC-SA on the smoothed problem:
/// 8 n C_k D^2 / (eps N (N+2)) + 4 sqrt(2) D / sqrt(N q).
inline double acsa_expected_bound(Eigen::Index n, double eps, int k, double D, long N, int q) {
    return 8.0 * n * smoothness_factor(k) * D * D / (eps * N * (N + 2.0)) + 4.0 * std::sqrt(2.0) * D / std::sqrt(double(N) * q);
}

/// Coarse bound for the line-search variant with rho_N = (T+2)^3 / (N+2)^3.
inline double linesearch_coarse_bound(double L, double alpha, double D, long N, double M, double sigma,
                                      double gmax, double gmin, long T, double mu) {
    const double rho = std::pow(T + 2.0, 3) / std::pow(N + 2.0, 3);
    return 8.0 * L * D * D / (alpha * N * double(N)) +
           8.0 * D * std::sqrt(4 * M * M + sigma * sigma) / std::sqrt(double(N)) * (gmax / gmin * rho + 1.0 - rho) +
           std::pow(T + 2.0, 2) * gmax * mu / (2.0 * N * double(N) * gmin);
}

/// Line-search exit test:
/// psi_next <= psi_md + <G, ag - md> + (alpha gamma_d / (4 gamma)) ||ag - md||^2 + 2 M ||ag - md||.
inline bool line_search_exit(double psi_md, const Vector& grad_md, const Vector& x_md, double psi_next,
                             const Vector& x_ag_next, double alpha, double gamma, double gamma_d, double M) {
    const Vector d = x_ag_next - x_md;
    const double dn = d.norm();
    return psi_next <= psi_md + grad_md.dot(d) + alpha * gamma_d / (4.0 * gamma) * dn * dn + 2.0 * M * dn;
}

/// Fills L, sigma, mu and the gamma ladder for the smoothing oracle on `prob`:
/// L = weight * (k/(k-2)) n / eps / lip_scale, sigma = weight / sqrt(q), mu = weight * k * eps,
/// gamma_min = AC-SA scale, gamma_max = ladder_factor * alpha/(2L) (never below gamma_min).
template <class Problem>
SolverConfig configure_stochastic(const Problem& prob, SolverConfig cfg, double ladder_factor = 10.0) {
    const double w = prob.lambda_weight();
    const double D = prob.prox().diameter();
    const double alpha = prob.prox().alpha();
    if (cfg.L <= 0) cfg.L = w * lipschitz_bound(SmoothingParams{cfg.eps, cfg.k, prob.n()}) / cfg.lip_scale;
    if (cfg.sigma <= 0) cfg.sigma = w / std::sqrt(static_cast<double>(cfg.q));
    if (cfg.mu <= 0) cfg.mu = w * cfg.k * cfg.eps;
    const double g = acsa_gamma(alpha, cfg.L, D, cfg.N, cfg.M, cfg.sigma);
    if (cfg.gamma_min <= 0) cfg.gamma_min = g;
    if (cfg.gamma_max <= 0) cfg.gamma_max = std::max(cfg.gamma_min, ladder_factor * alpha / (2.0 * cfg.L));
    return cfg;
}

/// Sampled oracle Psi(x, xi) built from the smoothing gradient oracle.
template <class Problem>
OracleFn sampled_oracle(const Problem& prob, const SolverConfig& cfg, OracleOptions opt = {}) {
    OracleConfig oc{SmoothingParams{cfg.eps, cfg.k, prob.n()}, cfg.q, opt};
    return [&prob, oc](const Vector& x, std::uint64_t seed) {
        return composite_objective(prob, x, ObjectiveMode::sampled, oc, seed);
    };
}

/// Exact oracle: one Lanczos eigenpair per call, subgradient phi phi^T.
template <class Problem>
OracleFn exact_oracle(const Problem& prob, LanczosOptions lz = {}) {
    OracleConfig oc;
    oc.options.lanczos = lz;
    return [&prob, oc](const Vector& x, std::uint64_t seed) {
        return composite_objective(prob, x, ObjectiveMode::exact, oc, seed);
    };
}

template <class Problem>
TruthFn truth_of(const Problem& prob) {
    return [&prob](const Vector& x) { return true_objective(prob, x); };
}

namespace detail {

enum : std::uint64_t { kRoleStep = 0, kRoleCheck = 1 };

class Clock {
public:
    explicit Clock(bool on) : on_(on), start_(std::chrono::steady_clock::now()) {}
    double ms() const {
        if (!on_) return 0.0;
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    bool on_;
    std::chrono::steady_clock::time_point start_;
};

inline long true_cadence(const SolverConfig& cfg) {
    return cfg.true_every > 0 ? cfg.true_every : std::max<long>(1, (cfg.N + 199) / 200);
}

/// Shared AC-SA loop. With line_search = false (or gamma_max == gamma_min) no
/// check calls are made and the run is plain AC-SA at scale gamma_min.
inline RunResult acsa_core(const EuclideanProx& prox, const OracleFn& oracle, const TruthFn& truth,
                           const SolverConfig& cfg, bool line_search) {
    cfg.validate();
    const double alpha = prox.alpha();
    const long cadence = true_cadence(cfg);
    Clock clock(cfg.wall_time);

    RunResult res;
    IterateState s;
    s.x = prox.center();
    s.x_ag = s.x;
    s.gamma = line_search ? cfg.start_gamma() : cfg.gamma_min;
    const double gmin = cfg.gamma_min;

    std::optional<std::pair<Vector, ObjectiveEval>> cached;  // last check call, at x_ag_{t+1}
    double eig = 0.0;
    try {
        for (s.t = 1; s.t <= cfg.N; ++s.t) {
            const long t = s.t;
            s.x_md = IterateState::combine(s.x, s.x_ag, t);
            ObjectiveEval g;
            if (cached && cached->first == s.x_md) {
                g = std::move(cached->second);  // recycled, already charged
            } else {
                g = oracle(s.x_md, derive_seed(cfg.seed, {std::uint64_t(t), kRoleStep}));
                eig += g.cost_eigvecs;
                ++res.oracle_calls;
            }
            cached.reset();

            Vector x_next, ag_next;
            bool failed_phase = false;
            for (std::uint64_t retry = 0;; ++retry) {
                const double gt = (t + 1) * s.gamma / 2.0;
                x_next = prox.prox_map(s.x, gt * g.grad);
                ag_next = IterateState::combine(x_next, s.x_ag, t);
                if (!line_search || s.gamma <= gmin) {
                    failed_phase = true;
                    break;
                }
                ObjectiveEval c = oracle(ag_next, derive_seed(cfg.seed, {std::uint64_t(t), kRoleCheck, retry}));
                eig += c.cost_eigvecs;
                ++res.check_calls;
                if (line_search_exit(g.value, g.grad, s.x_md, c.value, ag_next, alpha, s.gamma, cfg.gamma_d,
                                     cfg.M)) {
                    cached.emplace(ag_next, std::move(c));
                    break;
                }
                s.gamma *= cfg.gamma_d;
            }
            if (failed_phase && res.T_gamma < 0) res.T_gamma = t - 1;
            s.gamma = std::max(gmin, s.gamma);
            s.x = std::move(x_next);
            s.x_ag = std::move(ag_next);

            TraceRecord r;
            r.t = t;
            r.obj_sampled = g.value;
            r.gamma = s.gamma;
            r.eigvecs = eig;
            if (truth && (t % cadence == 0 || t == cfg.N)) r.obj_true = truth(s.x_ag);
            r.wall_ms = clock.ms();
            res.trace.push_back(r);
            res.iterations = t;
        }
    } catch (const ConvergenceFailure& e) {
        res.completed = false;
        res.error = e.what();
    }
    if (res.T_gamma < 0) res.T_gamma = res.iterations;
    if (cfg.L > 0)
        res.bound = linesearch_coarse_bound(cfg.L, alpha, prox.diameter(), cfg.N, cfg.M, cfg.sigma,
                                            line_search ? cfg.gamma_max : cfg.gamma_min, cfg.gamma_min, res.T_gamma, cfg.mu);
    res.solution = s.x_ag;
    res.total_eigvecs = eig;
    return res;
}

}  // namespace detail

/// Plain AC-SA at the constant scale cfg.gamma_min.
inline RunResult acsa_run(const EuclideanProx& prox, const OracleFn& oracle, const TruthFn& truth,
                          const SolverConfig& cfg) {
    return detail::acsa_core(prox, oracle, truth, cfg, false);
}

/// AC-SA with the monotone line search on gamma in [gamma_min, gamma_max].
inline RunResult acsa_linesearch_run(const EuclideanProx& prox, const OracleFn& oracle, const TruthFn& truth,
                                     const SolverConfig& cfg) {
    return detail::acsa_core(prox, oracle, truth, cfg, true);
}

/// Projected subgradient with steps D / sqrt(t) along g / ||g||; returns the
/// best iterate by oracle value. One eigenvector per iteration.
inline RunResult subgradient_baseline(const EuclideanProx& prox, const OracleFn& exact, const TruthFn& truth,
                                      long budget, std::uint64_t seed, long true_every = 0, bool wall_time = false) {
    if (budget < 1) throw InvalidInput("subgradient: budget must be at least 1");
    const double D = prox.diameter();
    const long cadence = true_every > 0 ? true_every : std::max<long>(1, (budget + 199) / 200);
    detail::Clock clock(wall_time);
    RunResult res;
    Vector x = prox.center();
    Vector best = x;
    double best_val = std::numeric_limits<double>::infinity();
    double eig = 0.0;
    try {
        for (long t = 1; t <= budget; ++t) {
            ObjectiveEval e = exact(x, derive_seed(seed, {std::uint64_t(t), detail::kRoleStep}));
            eig += e.cost_eigvecs;
            ++res.oracle_calls;
            if (e.value < best_val) {
                best_val = e.value;
                best = x;
            }
            TraceRecord r;
            r.t = t;
            r.obj_sampled = best_val;
            r.gamma = D / std::sqrt(double(t));
            r.eigvecs = eig;
            if (truth && (t % cadence == 0 || t == budget)) r.obj_true = truth(best);
            r.wall_ms = clock.ms();
            res.trace.push_back(r);
            res.iterations = t;
            const double gn = e.grad.norm();
            if (gn == 0.0) continue;
            x = prox.project(x - (D / (gn * std::sqrt(double(t)))) * e.grad);
        }
    } catch (const ConvergenceFailure& e) {
        res.completed = false;
        res.error = e.what();
    }
    res.solution = best;
    res.total_eigvecs = eig;
    return res;
}

/// Soft-max smoothed objective weight * mu log Tr exp(map(x)/mu) + c^T x with gradient.
template <class Problem>
ObjectiveEval softmax_objective(const Problem& prob, const Vector& x, double mu) {
    SoftMaxEval s = softmax_eval(prob.map(x), mu);
    const double w = prob.lambda_weight();
    ObjectiveEval out;
    out.value = w * s.value + prob.linear_value(x);
    out.grad = w * prob.pullback(s.grad.dense()) + prob.linear_grad();
    out.cost_eigvecs = s.cost_eigvecs;
    return out;
}

struct SmoothBaselineOptions {
    double L0 = 0.0;          // starting Lipschitz estimate; 0 means weight / (mu * lip_scale)
    double lip_scale = 100.0;
    bool restart = true;      // restart momentum when the objective increases
    long true_every = 0;
    bool wall_time = false;
    Vector start;             // warm start, default the prox center
};

/// Accelerated projected gradient on the soft-max smoothing with backtracking
/// (L halves at each iteration, doubles on a failed sufficient-decrease test).
/// Every objective evaluation is a full decomposition charged as n eigenvectors.
template <class Problem>
RunResult nesterov_smooth_baseline(const Problem& prob, double mu, long budget, SmoothBaselineOptions opt = {}) {
    if (budget < 1) throw InvalidInput("det_smooth: budget must be at least 1");
    const EuclideanProx& prox = prob.prox();
    const long cadence = opt.true_every > 0 ? opt.true_every : std::max<long>(1, (budget + 199) / 200);
    detail::Clock clock(opt.wall_time);
    double L = opt.L0 > 0 ? opt.L0 : prob.lambda_weight() / (mu * opt.lip_scale);
    const double L_floor = L * 1e-9;

    RunResult res;
    Vector x = opt.start.size() ? prox.project(opt.start) : prox.center();
    Vector y = x;
    double theta = 1.0;
    double eig = 0.0;
    double f_prev = std::numeric_limits<double>::infinity();
    for (long t = 1; t <= budget; ++t) {
        ObjectiveEval fy = softmax_objective(prob, y, mu);
        eig += fy.cost_eigvecs;
        ++res.oracle_calls;
        L = std::max(L_floor, L / 2.0);
        Vector xn;
        double fxn = 0.0;
        for (;;) {
            xn = prox.project(y - fy.grad / L);
            const ObjectiveEval e = softmax_objective(prob, xn, mu);
            eig += e.cost_eigvecs;
            ++res.check_calls;
            fxn = e.value;
            const Vector d = xn - y;
            if (fxn <= fy.value + fy.grad.dot(d) + 0.5 * L * d.squaredNorm() + 1e-14 * std::abs(fy.value)) break;
            L *= 2.0;
        }
        const double theta_n = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        if (opt.restart && fxn > f_prev) {
            theta = 1.0;
            y = xn;
        } else {
            y = xn + ((theta - 1.0) / theta_n) * (xn - x);
            theta = theta_n;
        }
        x = std::move(xn);
        f_prev = fxn;

        TraceRecord r;
        r.t = t;
        r.obj_sampled = fxn;
        r.gamma = 1.0 / L;
        r.eigvecs = eig;
        if (t % cadence == 0 || t == budget) r.obj_true = true_objective(prob, x);
        r.wall_ms = clock.ms();
        res.trace.push_back(r);
        res.iterations = t;
    }
    res.solution = x;
    res.total_eigvecs = eig;
    return res;
}

/// High-accuracy optimum by soft-max continuation: mu shrinks by `shrink` per
/// stage down to mu_final, warm-starting each stage. Returns the final point and
/// its exact objective.
template <class Problem>
std::pair<Vector, double> reference_optimum(const Problem& prob, double mu_start = 0.05, double mu_final = 1e-8,
                                            double shrink = 0.2, long stage_iters = 3000) {
    SmoothBaselineOptions opt;
    opt.lip_scale = 1.0;
    opt.true_every = stage_iters;
    Vector x = prob.prox().center();
    double best = true_objective(prob, x);
    Vector best_x = x;
    for (double mu = mu_start; mu >= mu_final * (1 - 1e-12); mu *= shrink) {
        opt.start = x;
        RunResult r = nesterov_smooth_baseline(prob, mu, stage_iters, opt);
        x = r.solution;
        const double v = true_objective(prob, x);
        if (v < best) {
            best = v;
            best_x = x;
        }
    }
    return {best_x, best};
}

}  // namespace ssmax
