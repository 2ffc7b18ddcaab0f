#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ssmax/config.hpp"
#include "ssmax/error.hpp"
#include "ssmax/optimizer.hpp"
#include "ssmax/phase.hpp"
#include "ssmax/problems.hpp"
#include "ssmax/report.hpp"

namespace ssmax {

// Config-driven runs behind the command line tool.

struct RunConfig {
    std::string problem;    // maxcut | dspca
    std::string algorithm;  // stoch_ls | acsa | det_smooth | subgrad
    Eigen::Index n = 0;
    std::uint64_t seed = 0;
    std::uint64_t data_seed = 0;

    // maxcut
    double radius = 0.0;  // 0 means n
    double lambda_weight = 1.0;

    // dspca
    std::string data_path;  // empty: synthetic factor data
    long samples = 0;       // synthetic: 0 means 4 n
    long variables = 0;     // synthetic: 0 means 2 n
    int factors = 3;
    double rho = 0.0;       // 0 means max diag / 2

    SolverConfig solver;
    std::string schedule = "preset";  // preset | default; explicit N or q override
    double ladder_factor = 10.0;
    OracleOptions oracle;
    long budget = 0;          // det_smooth / subgrad iterations; 0 means N
    double mu_smooth = 0.0;   // soft-max mu; 0 means eps / log n
    std::string trace_file = "trace.csv";
    std::string report_file = "report.json";
};

/// Reads every recognized key; unknown keys are rejected by name.
inline RunConfig parse_run_config(const KeyValueConfig& kv) {
    RunConfig c;
    c.problem = kv.get_choice("problem", {"maxcut", "dspca"});
    c.algorithm = kv.get_choice("algorithm", {"stoch_ls", "acsa", "det_smooth", "subgrad"});
    c.seed = kv.get_seed("seed");
    c.data_seed = kv.has("data_seed") ? kv.get_seed("data_seed") : c.seed;
    const long n = kv.get_long("n");
    if (n < 2) throw InvalidInput("config field 'n' must be at least 2");
    c.n = n;

    if (c.problem == "maxcut") {
        c.radius = kv.get_double("radius", static_cast<double>(n));
        if (!(c.radius > 0)) throw InvalidInput("config field 'radius' must be positive");
        c.lambda_weight = kv.get_double("lambda_weight", 1.0);
        if (!(c.lambda_weight > 0)) throw InvalidInput("config field 'lambda_weight' must be positive");
    } else {
        c.data_path = kv.get("data_path", "");
        c.samples = kv.get_long("samples", 4 * n);
        c.variables = kv.get_long("variables", 2 * n);
        c.factors = static_cast<int>(kv.get_long("factors", 3));
        if (c.data_path.empty() && (c.samples < 2 || c.variables < n || c.factors < 0))
            throw InvalidInput("config field 'variables' must be at least n, 'samples' at least 2");
        c.rho = kv.get_double("rho", 0.0);
        if (c.rho < 0) throw InvalidInput("config field 'rho' must be positive");
    }

    SolverConfig& s = c.solver;
    s.seed = c.seed;
    s.eps = kv.get_double("eps", 0.05);
    if (!(s.eps > 0)) throw InvalidInput("config field 'eps' must be positive");
    s.k = static_cast<int>(kv.get_long("k", 3));
    if (s.k < 3) throw InvalidInput("config field 'k' must be at least 3");
    c.schedule = kv.get_choice("schedule", {"preset", "default"}, "preset");
    s.N = kv.get_long("N", 0);
    s.q = static_cast<int>(kv.get_long("q", 0));
    if (kv.has("N") && s.N < 1) throw InvalidInput("config field 'N' must be at least 1");
    if (kv.has("q") && s.q < 1) throw InvalidInput("config field 'q' must be at least 1");
    s.lip_scale = kv.get_double("lip_scale", 100.0);
    if (!(s.lip_scale > 0)) throw InvalidInput("config field 'lip_scale' must be positive");
    s.M = kv.get_double("M_lipschitz", 0.0);
    s.mu = kv.get_double("mu", 0.0);
    s.gamma_max = kv.get_double("gamma_max", 0.0);
    s.gamma_min = kv.get_double("gamma_min", 0.0);
    s.gamma_d = kv.get_double("gamma_d", 0.5);
    if (!(s.gamma_d > 0 && s.gamma_d < 1)) throw InvalidInput("config field 'gamma_d' must lie in (0, 1)");
    s.gamma_init = kv.get_double("gamma_init", 0.0);
    s.true_every = kv.get_long("true_every", 0);
    s.wall_time = kv.get_bool("wall_time", false);
    c.ladder_factor = kv.get_double("ladder_factor", 10.0);
    if (!(c.ladder_factor >= 1)) throw InvalidInput("config field 'ladder_factor' must be at least 1");

    const std::string cost = kv.get_choice("cost_model", {"eigenpairs", "samples"}, "eigenpairs");
    c.oracle.cost = cost == "samples" ? CostModel::samples : CostModel::eigenpairs;
    const std::string path = kv.get_choice("eig_path", {"lanczos", "secular"}, "lanczos");
    c.oracle.path = path == "secular" ? EigPath::secular : EigPath::lanczos;
    c.oracle.lanczos.rel_tol = kv.get_double("lanczos_tol", c.oracle.lanczos.rel_tol);
    c.oracle.lanczos.restart_limit = static_cast<int>(kv.get_long("lanczos_restarts", c.oracle.lanczos.restart_limit));

    c.budget = kv.get_long("budget", 0);
    if (kv.has("budget") && c.budget < 1) throw InvalidInput("config field 'budget' must be at least 1");
    c.mu_smooth = kv.get_double("mu_smooth", 0.0);
    c.trace_file = kv.get("trace_file", c.trace_file);
    c.report_file = kv.get("report_file", c.report_file);
    kv.reject_unused();
    return c;
}

inline BallProblem build_maxcut(const RunConfig& c) {
    RandomStream rng(c.data_seed);
    return maxcut_problem(c.n, c.radius, rng, c.lambda_weight);
}

inline BoxProblem build_dspca(const RunConfig& c) {
    SymMatrix a = SymMatrix::identity(1);
    if (!c.data_path.empty()) {
        a = load_covariance(c.data_path, c.n);
    } else {
        RandomStream rng(c.data_seed);
        MatrixFile f;
        f.data = factor_samples(c.samples, c.variables, c.factors, rng);
        f.square_header = false;
        a = covariance_from(f, c.n);
    }
    if (c.rho > 0) return BoxProblem(a, c.rho);
    return dspca_problem(a);
}

struct RunOutput {
    RunResult result;
    RunReport report;
};

namespace detail {

template <class Problem>
RunOutput execute_on(const Problem& prob, RunConfig c) {
    const double D = prob.prox().diameter();
    SolverConfig s = c.solver;
    const Schedule sched = c.schedule == "default" ? default_schedule(prob.n(), s.eps, D) : preset_schedule(prob.n(), s.eps, D);
    if (s.N <= 0) s.N = sched.N;
    if (s.q <= 0) s.q = sched.q;
    const long budget = c.budget > 0 ? c.budget : s.N;
    const double mu_smooth = c.mu_smooth > 0 ? c.mu_smooth : softmax_mu(s.eps, prob.n());

    RunOutput out;
    nlohmann::json extra;
    extra["seed"] = c.seed;
    extra["data_seed"] = c.data_seed;
    extra["eps"] = s.eps;
    extra["diameter"] = D;
    extra["lambda_weight"] = prob.lambda_weight();

    if (c.algorithm == "stoch_ls" || c.algorithm == "acsa") {
        s = configure_stochastic(prob, s, c.ladder_factor);
        if (c.algorithm == "acsa") s.gamma_max = s.gamma_min, s.gamma_init = 0.0;
        const OracleFn oracle = sampled_oracle(prob, s, c.oracle);
        out.result = c.algorithm == "acsa" ? acsa_run(prob.prox(), oracle, truth_of(prob), s)
                                           : acsa_linesearch_run(prob.prox(), oracle, truth_of(prob), s);
        extra["N"] = s.N;
        extra["q"] = s.q;
        extra["k"] = s.k;
        extra["L"] = s.L;
        extra["sigma"] = s.sigma;
        extra["mu"] = s.mu;
        extra["gamma_min"] = s.gamma_min;
        extra["gamma_max"] = s.gamma_max;
        extra["gamma_d"] = s.gamma_d;
        extra["lip_scale"] = s.lip_scale;
        extra["T_gamma"] = out.result.T_gamma;
        extra["bound"] = json_number(out.result.bound);
        extra["cost_model"] = c.oracle.cost == CostModel::samples ? "samples" : "eigenpairs";
        extra["eig_path"] = c.oracle.path == EigPath::secular ? "secular" : "lanczos";
    } else if (c.algorithm == "det_smooth") {
        SmoothBaselineOptions opt;
        opt.lip_scale = s.lip_scale;
        opt.true_every = s.true_every;
        opt.wall_time = s.wall_time;
        out.result = nesterov_smooth_baseline(prob, mu_smooth, budget, opt);
        extra["budget"] = budget;
        extra["mu_smooth"] = mu_smooth;
        extra["lip_scale"] = s.lip_scale;
        extra["exponentials"] = out.result.oracle_calls + out.result.check_calls;
    } else {
        out.result = subgradient_baseline(prob.prox(), exact_oracle(prob, c.oracle.lanczos), truth_of(prob), budget,
                                          c.seed, s.true_every, s.wall_time);
        extra["budget"] = budget;
    }
    extra["oracle_calls"] = out.result.oracle_calls;
    extra["check_calls"] = out.result.check_calls;

    RunReport& r = out.report;
    r.label = c.algorithm;
    r.problem = prob.name();
    r.n = static_cast<long>(prob.n());
    r.iterations = out.result.iterations;
    r.total_eigvecs = out.result.trace.empty() ? 0.0 : out.result.trace.back().eigvecs;
    r.best_objective = out.result.best_true();
    r.final_objective = out.result.final_true();
    r.trace_path = c.trace_file;
    r.completed = out.result.completed;
    r.error = out.result.error;
    r.extra = extra;
    return out;
}

}  // namespace detail

inline RunOutput execute_run(const RunConfig& c) {
    if (c.problem == "maxcut") {
        const BallProblem p = build_maxcut(c);
        return detail::execute_on(p, c);
    }
    const BoxProblem p = build_dspca(c);
    return detail::execute_on(p, c);
}

/// Runs and writes <out>/<trace_file> and <out>/<report_file>.
inline RunOutput solve_to_directory(const RunConfig& c, const std::string& out_dir) {
    RunOutput o = execute_run(c);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_trace_file((dir / c.trace_file).string(), o.result.trace);
    write_json_file((dir / c.report_file).string(), o.report.to_json());
    return o;
}

// ---------------------------------------------------------------- phase

struct PhaseConfig {
    std::string model = "equal_gap";  // equal_gap | spectrum_file
    double gap = 1.0;
    long multiplicity = 1;
    std::string spectrum_path;
    std::vector<Eigen::Index> n_list{100, 400, 1600};
    bool eps_relative = true;  // eps_factor * eps0 when true, else absolute eps
    double eps_value = 0.5;
    long trials = 500;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
};

inline PhaseConfig parse_phase_config(const KeyValueConfig& kv) {
    PhaseConfig c;
    c.model = kv.get_choice("model", {"equal_gap", "spectrum_file"}, "equal_gap");
    if (c.model == "equal_gap") {
        c.gap = kv.get_double("gap", 1.0);
        if (!(c.gap > 0)) throw InvalidInput("config field 'gap' must be positive");
        c.multiplicity = kv.get_long("multiplicity", 1);
        if (c.multiplicity < 1) throw InvalidInput("config field 'multiplicity' must be at least 1");
        if (kv.has("n_list")) {
            c.n_list.clear();
            for (long n : kv.get_long_list("n_list")) {
                if (n <= c.multiplicity) throw InvalidInput("config field 'n_list': each n must exceed the multiplicity");
                c.n_list.push_back(n);
            }
        }
    } else {
        c.spectrum_path = kv.get("spectrum");
        c.n_list.clear();
    }
    if (kv.has("eps_factor") == kv.has("eps"))
        throw InvalidInput("config field 'eps_factor' or 'eps' is required (exactly one)");
    c.eps_relative = kv.has("eps_factor");
    c.eps_value = c.eps_relative ? kv.get_double("eps_factor") : kv.get_double("eps");
    if (!(c.eps_value > 0)) throw InvalidInput(std::string("config field '") + (c.eps_relative ? "eps_factor" : "eps") + "' must be positive");
    c.trials = kv.get_long("trials", 500);
    if (c.trials < 200) throw InvalidInput("config field 'trials' must be at least 200");
    c.seed = kv.get_seed("seed");
    c.out_dir = kv.get("out", ".");
    kv.reject_unused();
    return c;
}

struct PhaseOutput {
    PhaseReport report;
    nlohmann::json summary;
};

inline PhaseOutput run_phase(const PhaseConfig& c) {
    ModelRule model;
    std::vector<Eigen::Index> ns = c.n_list;
    if (c.model == "equal_gap") {
        const double gap = c.gap;
        const long l = c.multiplicity;
        model = [gap, l](Eigen::Index n) { return SpectrumModel::equal_gap(n, gap, l); };
    } else {
        const SpectrumModel m = SpectrumModel::from_eigenvalues(read_number_list(c.spectrum_path));
        ns = {m.n()};
        model = [m](Eigen::Index) { return m; };
    }
    const double v = c.eps_value;
    const EpsRule rule = c.eps_relative ? eps_times_critical(v) : EpsRule([v](const SpectrumModel&) { return v; });
    PhaseOutput out;
    out.report = monte_carlo_gap(model, ns, rule, c.trials, c.seed);

    nlohmann::json& j = out.summary;
    j["model"] = c.model;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["regime"] = regime_name(out.report.rows.front().prediction.regime);
    j["slope"] = json_number(out.report.fit.slope);
    j["intercept"] = json_number(out.report.fit.intercept);
    j["r2"] = json_number(out.report.fit.r2);
    j["predicted_order"] = out.report.rows.front().prediction.predicted_order;
    j["statistic"] = out.report.rows.front().prediction.regime == Regime::super ? "median |T - t0|" : "median T";
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : out.report.rows) {
        nlohmann::json row;
        row["n"] = r.n;
        row["eps"] = r.prediction.eps;
        row["eps0"] = r.prediction.eps0;
        row["t0"] = json_number(r.prediction.t0);
        row["regime"] = regime_name(r.prediction.regime);
        row["median_T"] = r.median_T;
        row["iqr_T"] = r.iqr_T;
        row["median_se"] = r.median_se;
        row["median_scaled"] = r.median_scaled;
        row["median_predicted"] = r.median_predicted;
        row["median_normalized"] = json_number(r.median_normalized);
        row["median_chi2"] = r.median_chi2;
        row["min_lower_bound_margin"] = r.min_lower_bound_margin;
        rows.push_back(row);
    }
    j["rows"] = rows;
    return out;
}

/// CSV rows n,eps,regime,median_T,predicted_order,slope; the slope is the fit over all rows.
inline void write_phase_csv(std::ostream& out, const PhaseReport& rep) {
    out << "n,eps,regime,median_T,predicted_order,slope\n";
    for (const auto& r : rep.rows)
        out << r.n << ',' << format_double(r.prediction.eps) << ',' << regime_name(r.prediction.regime) << ','
            << format_double(r.median_T) << ',' << format_double(r.prediction.predicted_order) << ','
            << format_double(rep.fit.slope) << '\n';
}

}  // namespace ssmax
