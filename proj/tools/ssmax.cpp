// ssmax: solve, compare and phase commands.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssmax/config.hpp"
#include "ssmax/report.hpp"
#include "ssmax/run.hpp"

namespace {

enum ExitCode { kOk = 0, kIncomplete = 1, kUsage = 2 };

// SSMAX_LOG=quiet silences progress lines; anything else keeps them.
bool verbose() {
    const char* v = std::getenv("SSMAX_LOG");
    return !(v && std::string(v) == "quiet");
}

void info(const std::string& msg) {
    if (verbose()) std::cerr << msg << '\n';
}

int cmd_solve(const std::string& config_path, const std::string& seed, const std::string& out_dir) {
    ssmax::KeyValueConfig kv = ssmax::KeyValueConfig::load(config_path);
    if (!seed.empty()) kv.set("seed", seed);
    const ssmax::RunConfig cfg = ssmax::parse_run_config(kv);
    const ssmax::RunOutput o = ssmax::solve_to_directory(cfg, out_dir);
    const auto& r = o.report;
    info(r.label + " on " + r.problem + " n=" + std::to_string(r.n) + ": " + std::to_string(r.iterations) +
         " iterations, " + ssmax::format_double(r.total_eigvecs) + " eigvecs, best " +
         ssmax::format_double(r.best_objective));
    if (!r.completed) {
        std::cerr << "solver stopped early: " << r.error << '\n';
        return kIncomplete;
    }
    return kOk;
}

int cmd_compare(const std::vector<std::string>& reports, const std::string& out_path) {
    std::vector<ssmax::LoadedRun> runs;
    for (const auto& p : reports) runs.push_back(ssmax::load_run(p));
    const ssmax::Comparison c = ssmax::compare_runs(runs);
    if (out_path.empty()) {
        ssmax::write_comparison(std::cout, c);
    } else {
        std::ofstream out(out_path);
        if (!out) throw ssmax::InvalidInput("cannot write " + out_path);
        ssmax::write_comparison(out, c);
    }
    // Soft check: eigvecs each run needs to match every other run's final objective.
    for (std::size_t i = 0; i < runs.size(); ++i)
        for (std::size_t j = 0; j < runs.size(); ++j) {
            if (i == j) continue;
            const double target = runs[j].report.final_objective;
            const double at = ssmax::eigvecs_to_reach(runs[i].trace, target);
            info(c.labels[i] + " reaches final objective of " + c.labels[j] + " (" + ssmax::format_double(target) +
                 ") at eigvecs " + (std::isnan(at) ? std::string("never") : ssmax::format_double(at)) + " vs " +
                 ssmax::format_double(runs[j].report.total_eigvecs));
        }
    return kOk;
}

int cmd_phase(const std::string& config_path, const std::string& out_override) {
    ssmax::KeyValueConfig kv = ssmax::KeyValueConfig::load(config_path);
    if (!out_override.empty()) kv.set("out", out_override);
    const ssmax::PhaseConfig cfg = ssmax::parse_phase_config(kv);
    const ssmax::PhaseOutput o = ssmax::run_phase(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path dir(cfg.out_dir);
    {
        std::ofstream csv(dir / "phase.csv");
        if (!csv) throw ssmax::InvalidInput("cannot write " + (dir / "phase.csv").string());
        ssmax::write_phase_csv(csv, o.report);
    }
    ssmax::write_json_file((dir / "phase.json").string(), o.summary);
    std::cout << "regime: " << o.summary["regime"].get<std::string>() << '\n';
    ssmax::write_phase_csv(std::cout, o.report);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maximum eigenvalue minimization by stochastic smoothing"};
    app.require_subcommand(1);

    std::string config, seed, out_dir = ".", out_file, phase_out;
    std::vector<std::string> reports;

    auto* solve = app.add_subcommand("solve", "run one solver from a config file");
    solve->add_option("--config", config, "key = value config")->required()->check(CLI::ExistingFile);
    solve->add_option("--seed", seed, "overrides the config seed");
    solve->add_option("--out", out_dir, "output directory for trace and report");

    auto* compare = app.add_subcommand("compare", "merge run reports on cumulative eigvecs");
    compare->add_option("reports", reports, "report JSON files")->required()->check(CLI::ExistingFile);
    compare->add_option("--out", out_file, "CSV path, default stdout");

    auto* phase = app.add_subcommand("phase", "Monte Carlo gap scaling for a rank-one perturbation");
    phase->add_option("--config", config, "key = value config")->required()->check(CLI::ExistingFile);
    phase->add_option("--out", phase_out, "output directory, overrides the config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*solve) return cmd_solve(config, seed, out_dir);
        if (*compare) return cmd_compare(reports, out_file);
        if (*phase) return cmd_phase(config, phase_out);
    } catch (const ssmax::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kUsage;
    } catch (const ssmax::InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIncomplete;
    }
    return kUsage;
}
