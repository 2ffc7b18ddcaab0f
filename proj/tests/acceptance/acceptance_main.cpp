// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ssmax/optimizer.hpp"
#include "ssmax/phase.hpp"
#include "ssmax/problems.hpp"
#include "ssmax/report.hpp"
#include "ssmax/smoothing.hpp"
#include "ssmax/spectral/decomposition.hpp"
#include "ssmax/spectral/secular.hpp"
#include "test_support.hpp"

using namespace ssmax;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

Eigen::SelfAdjointEigenSolver<Matrix> dense_solver(const Matrix& m) { return Eigen::SelfAdjointEigenSolver<Matrix>(m); }

// 1. Secular root and eigenvector against a dense solve of the perturbed matrix.
void secular_equivalence(Outcome& o) {
    RandomStream rng(101);
    double worst_val = 0.0, worst_vec = 0.0;
    int instances = 0;
    for (Eigen::Index n : {4, 20, 100})
        for (int rep = 0; rep < 100; ++rep) {
            const SymMatrix x = rng.gaussian_symmetric(n) * (1.0 / std::sqrt(static_cast<double>(n)));
            const Vector v = rng.gaussian_vector(n);
            const double eps = 0.1 + 4.9 * rng.uniform();
            const double scale = eps / static_cast<double>(n);
            const SpectralDecomp d = full_eig(x);
            const SecularRoot r = secular_root(make_secular_problem(d, v, scale));
            const EigPair e = rank_one_leading(d, v, scale);

            const Matrix pert = x.dense() + scale * v * v.transpose();
            const auto es = dense_solver(pert);
            const double lmax_pert = es.eigenvalues()[n - 1];
            const double lmax = dense_solver(x.dense()).eigenvalues()[n - 1];
            const double err = std::abs(r.t - (lmax_pert - lmax)) / (1 + std::abs(lmax_pert));
            const double verr = testing::sign_aligned_error(e.vector, es.eigenvectors().col(n - 1));
            worst_val = std::max(worst_val, err);
            worst_vec = std::max(worst_vec, verr);
            ++instances;
        }
    o.detail << instances << " instances, worst root error " << fmt(worst_val) << ", worst eigenvector error "
             << fmt(worst_vec);
    o.require(worst_val <= 1e-10, "root error <= 1e-10 (1 + |lambda_max|)");
    o.require(worst_vec <= 1e-8, "eigenvector error <= 1e-8");
}

// 2. Monte Carlo mean of F_3 inside [lambda_max + eps/n, lambda_max + 3 eps], 3 standard errors inside.
void envelope(Outcome& o) {
    RandomStream rng(202);
    const Eigen::Index n = 50;
    const SmoothingParams p{1.0, 3, n};
    double tightest = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 5; ++rep) {
        const SymMatrix x = rng.gaussian_symmetric(n) * (1.0 / std::sqrt(static_cast<double>(n)));
        const SpectralDecomp d = full_eig(x);
        const long draws = 10000;
        double sum = 0.0, sumsq = 0.0;
        for (long i = 0; i < draws; ++i) {
            const double f = sample_Fk(d, p, rng).value;
            sum += f;
            sumsq += f * f;
        }
        const double mean = sum / draws;
        const double se = std::sqrt((sumsq / draws - mean * mean) / (draws - 1));
        const auto [lo, hi] = approximation_bounds(p);
        const double shift = mean - d.lambda_max();
        o.require(shift - 3 * se >= lo && shift + 3 * se <= hi, "envelope at matrix " + std::to_string(rep));
        tightest = std::min({tightest, (shift - 3 * se) - lo, hi - (shift + 3 * se)});
        if (rep == 0) o.detail << "shift " << fmt(shift) << " +- " << fmt(se) << " in [" << fmt(lo) << ", " << fmt(hi) << "]";
    }
    o.detail << ", smallest 3-sigma margin " << fmt(tightest) << " over 5 matrices";
}

// 3. Gradient-sample variance <= 1 + 3 sigma and per-sample squared deviation <= 4.
void variance_bounds(Outcome& o) {
    RandomStream rng(303);
    double worst_var = 0.0, worst_dev = 0.0;
    std::vector<SpectralDecomp> points;
    points.push_back(full_eig(SymMatrix(20)));
    points.push_back(full_eig(SymMatrix::diagonal(Vector::LinSpaced(20, 1.0, 0.0))));
    for (int rep = 0; rep < 3; ++rep) points.push_back(full_eig(rng.gaussian_symmetric(20) * 0.2));
    points.push_back(full_eig(SymMatrix::diagonal((Vector(20) << Vector::Constant(5, 1.0), Vector::Zero(15)).finished())));
    for (const auto& d : points)
        for (double eps : {0.1, 1.0, 10.0}) {
            const VarianceProbe v = gradient_variance_probe(d, SmoothingParams{eps, 3, 20}, 3000, rng);
            o.require(v.variance <= 1.0 + 3.0 * v.stderr_, "variance bound");
            o.require(v.max_sq_dev <= 4.0, "per-sample deviation bound");
            worst_var = std::max(worst_var, v.variance);
            worst_dev = std::max(worst_dev, v.max_sq_dev);
        }
    o.detail << points.size() * 3 << " probes, largest variance " << fmt(worst_var) << ", largest squared deviation "
             << fmt(worst_dev);
}

// 4. C_3, E[1/max(z1^2, z2^2, z3^2)], and the inverse-gap curvature at diag(2, 1, 0).
void lipschitz_constants(Outcome& o) {
    o.require(smoothness_factor(3) == 3.0, "C_3 == 3");
    RandomStream rng(404);
    const MonteCarloEstimate e = inverse_max_square_mc(3, 1000000, rng);
    o.require(std::abs(e.mean - 1.5) <= 0.05, "E[1/max z^2] = 1.5 +- 0.05");

    const SymMatrix x = SymMatrix::diagonal((Vector(3) << 2.0, 1.0, 0.0).finished());
    const SpectralDecomp d = full_eig(x);
    const double h = 1e-3;
    const double yc = testing::fd_second_derivative(x, extremal_direction(d), h);
    double sup = yc;
    for (int rep = 0; rep < 2000; ++rep) sup = std::max(sup, testing::fd_second_derivative(x, testing::unit_direction(3, rng), h));
    o.require(std::abs(sup - 1.0) <= 0.1, "sup curvature within 10% of 1/gap");
    o.require(yc >= 0.99 * sup, "extremal direction attains 0.99 of the sup");
    o.detail << "C_3 = " << smoothness_factor(3) << ", E[1/max z^2] = " << fmt(e.mean) << ", sup curvature " << fmt(sup)
             << ", extremal direction " << fmt(yc);
}

// 5. Phase transition slopes for the equal-gap spectrum.
void phase_slopes(Outcome& o) {
    auto model = [](Eigen::Index n) { return SpectrumModel::equal_gap(n, 1.0); };
    const std::vector<Eigen::Index> ns{100, 400, 1600};
    const PhaseReport sub = monte_carlo_gap(model, ns, eps_times_critical(0.5), 500, 505);
    const PhaseReport crit = monte_carlo_gap(model, ns, eps_times_critical(1.0), 500, 506);
    const PhaseReport sup = monte_carlo_gap(model, ns, eps_times_critical(2.0), 500, 507);
    o.require(sub.fit.slope >= -1.15 && sub.fit.slope <= -0.85, "sub-critical slope");
    o.require(crit.fit.slope >= -0.65 && crit.fit.slope <= -0.35, "critical slope");
    o.require(sup.fit.slope >= -0.65 && sup.fit.slope <= -0.35, "super-critical |T - t0| slope");
    const PhaseRow& last = sup.rows.back();
    const double off = std::abs(last.median_T - last.prediction.t0);
    o.require(off <= 3 * last.median_se, "median(T) within 3 standard errors of t0 at n = 1600");
    double margin = std::numeric_limits<double>::infinity();
    for (const auto* rep : {&sub, &crit, &sup})
        for (const auto& r : rep->rows) margin = std::min(margin, r.min_lower_bound_margin);
    o.require(margin >= 0.0, "T >= (eps/n) z_1^2 on every sample");
    o.detail << "slopes sub " << fmt(sub.fit.slope) << ", critical " << fmt(crit.fit.slope) << ", super "
             << fmt(sup.fit.slope) << "; |median(T) - t0| = " << fmt(off) << " vs 3 SE " << fmt(3 * last.median_se);
}

// 6. Line-search behavior of the accelerated scheme.
void algorithm_behavior(Outcome& o) {
    RandomStream rng(606);
    const BallProblem p = maxcut_problem(20, 20.0, rng);
    SolverConfig cfg;
    cfg.N = 400;
    cfg.q = 2;
    cfg.seed = 6;
    cfg = configure_stochastic(p, cfg);
    const OracleFn oracle = sampled_oracle(p, cfg);
    const RunResult ls = acsa_linesearch_run(p.prox(), oracle, truth_of(p), cfg);
    bool monotone = true;
    for (std::size_t i = 1; i < ls.trace.size(); ++i) monotone = monotone && ls.trace[i].gamma <= ls.trace[i - 1].gamma;
    o.require(monotone, "gamma trace non-increasing");

    SolverConfig flat = cfg;
    flat.gamma_max = flat.gamma_min;
    const RunResult a = acsa_run(p.prox(), oracle, truth_of(p), flat);
    const RunResult b = acsa_linesearch_run(p.prox(), oracle, truth_of(p), flat);
    bool identical = a.trace.size() == b.trace.size() && a.solution == b.solution;
    for (std::size_t i = 0; identical && i < a.trace.size(); ++i)
        identical = a.trace[i].obj_sampled == b.trace[i].obj_sampled && a.trace[i].gamma == b.trace[i].gamma &&
                    a.trace[i].eigvecs == b.trace[i].eigvecs;
    o.require(identical, "collapsed ladder reproduces plain AC-SA bit for bit");

    // f(x) = L/2 ||x - c||^2 on the unit ball, exact gradients.
    const double L = 3.0;
    const Vector c = Vector::Constant(3, 0.2);
    const OracleFn quad = [&](const Vector& x, std::uint64_t) {
        ObjectiveEval e;
        e.value = 0.5 * L * (x - c).squaredNorm();
        e.grad = L * (x - c);
        return e;
    };
    const EuclideanProx ball(BallSet{3, 1.0});
    SolverConfig qc;
    qc.N = 100;
    qc.gamma_max = 10.0;
    qc.gamma_min = 1e-8;
    qc.gamma_d = 0.5;
    const RunResult qr = acsa_linesearch_run(ball, quad, nullptr, qc);
    const double threshold = ball.alpha() * qc.gamma_d / (2 * L);
    const double floor = qr.trace.back().gamma;
    o.require(floor <= threshold * (1 + 1e-12) && floor > qc.gamma_d * threshold, "quadratic floor within one gamma_d factor");
    o.detail << "gamma " << fmt(ls.trace.front().gamma) << " -> " << fmt(ls.trace.back().gamma) << " (T_gamma "
             << ls.T_gamma << "), quadratic floor " << fmt(floor) << " vs threshold " << fmt(threshold);
}

// Minimum of a convex function over a ball by repeated grid refinement.
double grid_refined_min(const BallProblem& p, int levels) {
    const Eigen::Index d = p.dim();
    const int per_axis = 9;
    Vector center = Vector::Zero(d);
    double h = p.radius() / 4.0;
    double best = true_objective(p, center);
    for (int level = 0; level < levels; ++level) {
        Vector best_x = center;
        long total = 1;
        for (Eigen::Index i = 0; i < d; ++i) total *= per_axis;
        for (long idx = 0; idx < total; ++idx) {
            Vector x = center;
            long r = idx;
            for (Eigen::Index i = 0; i < d; ++i) {
                x[i] += (static_cast<double>(r % per_axis) - (per_axis - 1) / 2.0) * h;
                r /= per_axis;
            }
            x = p.prox().project(x);
            const double v = true_objective(p, x);
            if (v < best) best = v, best_x = x;
        }
        center = best_x;
        h *= 0.5;
    }
    return best;
}

// 7. MaxCut n = 10 within 5 eps of a validated reference; DSPCA A = I, n = 2 at 0.5 +- eps.
void solver_correctness(Outcome& o) {
    const double eps = 0.05;
    {
        RandomStream rng(77);
        const BallProblem small = maxcut_problem(4, 4.0, rng);
        const double ref = reference_optimum(small).second;
        const double grid = grid_refined_min(small, 40);
        o.require(std::abs(ref - grid) <= 1e-6 * (1 + std::abs(grid)), "reference optimum matches grid refinement at n = 4");
        o.detail << "n=4 reference " << fmt(ref) << " vs grid " << fmt(grid) << "; ";
    }
    {
        RandomStream rng(42);
        const BallProblem p = maxcut_problem(10, 10.0, rng);
        const double ref = reference_optimum(p).second;
        SolverConfig cfg;
        cfg.N = 2000;
        cfg.q = 2;
        cfg.eps = eps;
        cfg.seed = 42;
        cfg.true_every = 50;
        cfg = configure_stochastic(p, cfg);
        const RunResult r = acsa_linesearch_run(p.prox(), sampled_oracle(p, cfg), truth_of(p), cfg);
        const double gap = r.final_true() - ref;
        o.require(r.completed && gap <= 5 * eps, "MaxCut n = 10 within 5 eps of the reference");
        o.detail << "MaxCut n=10 gap " << fmt(gap) << " (limit " << fmt(5 * eps) << "); ";
    }
    {
        const BoxProblem p = dspca_problem(SymMatrix::identity(2));
        double brute = std::numeric_limits<double>::infinity();
        const int m = 40;
        for (int a = 0; a <= m; ++a)
            for (int b = 0; b <= m; ++b)
                for (int c = 0; c <= m; ++c) {
                    auto at = [&](int i) { return -p.rho() + 2 * p.rho() * i / m; };
                    const Vector x = (Vector(4) << at(a), at(b), at(b), at(c)).finished();
                    brute = std::min(brute, true_objective(p, x));
                }
        SolverConfig cfg;
        cfg.N = 500;
        cfg.q = 2;
        cfg.eps = eps;
        cfg.seed = 2;
        cfg = configure_stochastic(p, cfg);
        const RunResult r = acsa_linesearch_run(p.prox(), sampled_oracle(p, cfg), truth_of(p), cfg);
        o.require(std::abs(brute - 0.5) <= 1e-12, "brute-force optimum is 0.5");
        o.require(std::abs(r.final_true() - 0.5) <= eps, "DSPCA A = I objective within eps of 0.5");
        o.detail << "DSPCA A=I objective " << fmt(r.final_true()) << " (brute force " << fmt(brute) << ")";
    }
}

// 8. Exact n-per-exponential charging, and the DSPCA n = 100 cost ordering.
void accounting(Outcome& o) {
    RandomStream rng(1);
    MatrixFile f;
    f.data = factor_samples(400, 200, 3, rng);
    f.square_header = false;
    const BoxProblem p = dspca_problem(covariance_from(f, 100));
    const double eps = 0.05;

    SolverConfig cfg;
    cfg.eps = eps;
    cfg.seed = 1;
    cfg.true_every = 1;
    const Schedule s = preset_schedule(p.n(), eps, p.prox().diameter());
    cfg.N = s.N;
    cfg.q = s.q;
    cfg = configure_stochastic(p, cfg);
    OracleOptions samples;
    samples.cost = CostModel::samples;
    const RunResult stoch = acsa_linesearch_run(p.prox(), sampled_oracle(p, cfg, samples), truth_of(p), cfg);
    const RunResult stoch_pairs = acsa_linesearch_run(p.prox(), sampled_oracle(p, cfg), truth_of(p), cfg);

    SmoothBaselineOptions dopt;
    dopt.true_every = 1;
    const RunResult det = nesterov_smooth_baseline(p, softmax_mu(eps, p.n()), 400, dopt);
    const long exps = det.oracle_calls + det.check_calls;
    o.require(det.total_eigvecs == 100.0 * static_cast<double>(exps) && det.trace.back().eigvecs == det.total_eigvecs,
              "det_smooth charges exactly n per exponential");

    const double target = stoch.best_true();
    const double stoch_at = eigvecs_to_reach(stoch.trace, target);
    const double det_at = eigvecs_to_reach(det.trace, target);
    o.require(!std::isnan(det_at), "det reaches the stochastic objective within its budget");
    o.require(stoch_at < det_at, "stochastic method reaches the common objective with fewer eigenvectors");
    const double pairs_at = eigvecs_to_reach(stoch_pairs.trace, target);
    o.detail << exps << " exponentials = " << fmt(det.total_eigvecs) << " eigvecs; objective " << fmt(target)
             << " reached at " << fmt(stoch_at) << " eigvecs (stoch, " << stoch.iterations << " iterations) vs "
             << fmt(det_at) << " (det); charging all k eigenpairs per sample: "
             << (std::isnan(pairs_at) ? std::string("not reached") : fmt(pairs_at));
}

// 9. Fixed-noise F_k directional derivatives and soft-max gradients against central differences.
void finite_differences(Outcome& o) {
    const Eigen::Index n = 20;
    RandomStream rng(909);
    const SmoothingParams p{0.5, 3, n};
    const SymMatrix x = rng.gaussian_symmetric(n) * 0.3;
    std::vector<Vector> z;
    for (int i = 0; i < 3; ++i) z.push_back(rng.gaussian_vector(n));
    const OracleSample s = evaluate_Fk(full_eig(x), p, z);
    double worst_fk = 0.0, worst_sm = 0.0;
    int fk_checked = 0;
    for (int rep = 0; rep < 10; ++rep) {
        const SymMatrix y = testing::unit_direction(n, rng);
        const double h = 1e-6;
        const OracleSample up = evaluate_Fk(full_eig(x + y * h), p, z);
        const OracleSample dn = evaluate_Fk(full_eig(x + y * (-h)), p, z);
        if (up.i0 != s.i0 || dn.i0 != s.i0) continue;
        const double an = s.grad.dot(y.apply(s.grad));
        worst_fk = std::max(worst_fk, std::abs((up.value - dn.value) / (2 * h) - an) / std::max(1.0, std::abs(an)));
        ++fk_checked;
    }
    const double mu = softmax_mu(0.5, n);
    const SoftMaxEval sm = softmax_eval(x, mu);
    for (int rep = 0; rep < 10; ++rep) {
        const SymMatrix y = testing::unit_direction(n, rng);
        const double h = 1e-5;
        const double fd = (softmax_eval(x + y * h, mu).value - softmax_eval(x + y * (-h), mu).value) / (2 * h);
        const double an = (sm.grad.dense().array() * y.dense().array()).sum();
        worst_sm = std::max(worst_sm, std::abs(fd - an) / std::max(1e-12, std::abs(an)));
    }
    o.require(fk_checked == 10, "all 10 F_k directions keep the same argmax sample");
    o.require(worst_fk <= 1e-5, "F_k directional derivatives");
    o.require(worst_sm <= 1e-5, "soft-max gradients");
    o.detail << "worst relative error F_k " << fmt(worst_fk) << ", soft-max " << fmt(worst_sm);
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"secular-equation oracle equivalence", secular_equivalence},
        {"smoothing envelope", envelope},
        {"gradient variance bounds", variance_bounds},
        {"Lipschitz constants", lipschitz_constants},
        {"phase transition slopes", phase_slopes},
        {"line-search behavior", algorithm_behavior},
        {"solver correctness at desk scale", solver_correctness},
        {"eigenvector accounting", accounting},
        {"finite-difference gradient audits", finite_differences},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failed;
        std::printf("criterion %zu %s: %s (%.1fs) %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL", secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
