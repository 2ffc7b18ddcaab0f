#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ssmax/config.hpp"
#include "ssmax/report.hpp"
#include "ssmax/run.hpp"

using namespace ssmax;
namespace fs = std::filesystem;

namespace {

KeyValueConfig kv_of(const std::string& text) {
    std::istringstream in(text);
    return KeyValueConfig::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ssmax_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("SSMAX_LOG=quiet ") + SSMAX_CLI_PATH + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

const char* kSmallMaxcut = "problem = maxcut\nalgorithm = stoch_ls\nn = 8\nseed = 3\nN = 60\n";

}  // namespace

TEST(KeyValueConfig, ParsesCommentsAndRejectsDuplicates) {
    KeyValueConfig c = kv_of("# header\nproblem = maxcut  # trailing\n\n n=10\n");
    EXPECT_EQ(c.get("problem"), "maxcut");
    EXPECT_EQ(c.get_long("n"), 10);
    EXPECT_EQ(c.line_of("n"), 4);
    try {
        kv_of("a = 1\nb = 2\na = 3\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3);
    }
    try {
        kv_of("a = 1\njunk\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2);
    }
}

TEST(RunConfig, ErrorsNameTheField) {
    auto message = [](const std::string& text) {
        try {
            parse_run_config(kv_of(text));
        } catch (const InvalidInput& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message("problem = maxcut\nalgorithm = stoch_ls\nn = 8\n").find("'seed'"), std::string::npos);
    EXPECT_NE(message("problem = maxcut\nalgorithm = newton\nn = 8\nseed = 1\n").find("'algorithm'"), std::string::npos);
    EXPECT_NE(message("problem = maxcut\nalgorithm = acsa\nn = 8\nseed = 1\neps = abc\n").find("'eps'"), std::string::npos);
    EXPECT_NE(message("problem = maxcut\nalgorithm = acsa\nn = 8\nseed = 1\ngamma_d = 1.5\n").find("'gamma_d'"),
              std::string::npos);
    const std::string typo = message("problem = maxcut\nalgorithm = acsa\nn = 8\nseed = 1\nepsilon = 0.1\n");
    EXPECT_NE(typo.find("'epsilon'"), std::string::npos);
    EXPECT_NE(typo.find("line 5"), std::string::npos);
}

TEST(RunConfig, MaxcutDefaultsRadiusToN) {
    const RunConfig c = parse_run_config(kv_of(kSmallMaxcut));
    EXPECT_EQ(c.radius, 8.0);
    EXPECT_EQ(c.solver.N, 60);
    EXPECT_EQ(c.data_seed, 3u);
}

TEST(Trace, RoundTripIsLossless) {
    std::vector<TraceRecord> tr(3);
    tr[0] = {1, std::nan(""), 0.1 + 0.2, 1.0 / 3.0, 6, 0};
    tr[1] = {2, -345.52387770314823, 1e-300, 5e-324, 12, 1.5};
    tr[2] = {3, 2.0, -0.0, 0.125, 18, 0};
    std::stringstream ss;
    write_trace(ss, tr);
    const auto back = read_trace(ss);
    ASSERT_EQ(back.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back[i].t, tr[i].t);
        EXPECT_TRUE(std::isnan(tr[i].obj_true) ? std::isnan(back[i].obj_true) : back[i].obj_true == tr[i].obj_true);
        EXPECT_EQ(back[i].obj_sampled, tr[i].obj_sampled);
        EXPECT_EQ(back[i].gamma, tr[i].gamma);
        EXPECT_EQ(back[i].eigvecs, tr[i].eigvecs);
        EXPECT_EQ(back[i].wall_ms, tr[i].wall_ms);
    }
    std::istringstream bad("t,obj,obj_sampled,gamma,eigvecs,wall_ms\n");
    EXPECT_THROW(read_trace(bad), ParseError);
    std::istringstream short_row(std::string(kTraceHeader) + "\n1,2,3\n");
    try {
        read_trace(short_row);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2);
    }
}

TEST(Solve, ReportMatchesTraceAndIsDeterministic) {
    const RunConfig c = parse_run_config(kv_of(kSmallMaxcut));
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const RunOutput oa = solve_to_directory(c, a.string());
    solve_to_directory(c, b.string());
    EXPECT_EQ(slurp(a / "trace.csv"), slurp(b / "trace.csv"));
    EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
    const auto tr = read_trace_file((a / "trace.csv").string());
    ASSERT_FALSE(tr.empty());
    EXPECT_EQ(oa.report.total_eigvecs, tr.back().eigvecs);
    EXPECT_EQ(oa.report.iterations, 60);
    EXPECT_GE(oa.report.total_eigvecs, oa.report.iterations);
    EXPECT_TRUE(oa.report.completed);
}

TEST(Solve, DetSmoothChargesNPerExponential) {
    const RunConfig c =
        parse_run_config(kv_of("problem = maxcut\nalgorithm = det_smooth\nn = 50\nseed = 1\nbudget = 16\n"));
    const RunOutput o = execute_run(c);
    EXPECT_EQ(o.report.iterations, 16);
    const long exps = o.report.extra.at("exponentials").get<long>();
    EXPECT_EQ(o.report.total_eigvecs, 50.0 * exps);
    EXPECT_GE(exps, 16);
}

TEST(Solve, EveryAlgorithmRunsOnBothProblems) {
    for (const char* prob : {"maxcut", "dspca"})
        for (const char* alg : {"stoch_ls", "acsa", "det_smooth", "subgrad"}) {
            std::string text = std::string("problem = ") + prob + "\nalgorithm = " + alg + "\nn = 6\nseed = 2\nN = 20\n";
            const RunOutput o = execute_run(parse_run_config(kv_of(text)));
            EXPECT_TRUE(o.report.completed) << prob << " " << alg;
            EXPECT_EQ(o.report.iterations, 20) << prob << " " << alg;
            EXPECT_TRUE(std::isfinite(o.report.best_objective)) << prob << " " << alg;
        }
}

TEST(Compare, MergesOnEigvecs) {
    const fs::path a = scratch("cmp_a"), b = scratch("cmp_b");
    solve_to_directory(parse_run_config(kv_of(kSmallMaxcut)), a.string());
    solve_to_directory(parse_run_config(kv_of(kSmallMaxcut)), b.string());
    std::vector<LoadedRun> runs{load_run((a / "report.json").string()), load_run((b / "report.json").string())};
    const Comparison c = compare_runs(runs);
    EXPECT_EQ(c.labels, (std::vector<std::string>{"stoch_ls", "stoch_ls_2"}));
    for (const auto& row : c.best) {
        EXPECT_TRUE(std::isnan(row[0]) ? std::isnan(row[1]) : row[0] == row[1]);
    }
    for (std::size_t i = 1; i < c.eigvecs.size(); ++i) EXPECT_LT(c.eigvecs[i - 1], c.eigvecs[i]);
    EXPECT_THROW(compare_runs({runs[0]}), InvalidInput);
    LoadedRun empty = runs[1];
    empty.trace.clear();
    EXPECT_THROW(compare_runs({runs[0], empty}), InvalidInput);
}

TEST(Compare, RejectsEmptyTraceFile) {
    const fs::path d = scratch("cmp_empty");
    solve_to_directory(parse_run_config(kv_of(kSmallMaxcut)), d.string());
    write_file(d / "trace.csv", std::string(kTraceHeader) + "\n");
    EXPECT_THROW(load_run((d / "report.json").string()), InvalidInput);
}

TEST(Phase, CriticalHeaderAndSpectrumErrors) {
    const fs::path d = scratch("phase");
    write_file(d / "spec.txt", "1\n0\n-2\n-2\n");
    KeyValueConfig kv = kv_of("model = spectrum_file\neps = 2.4\ntrials = 200\nseed = 1\n");
    kv.set("spectrum", (d / "spec.txt").string());
    const PhaseOutput o = run_phase(parse_phase_config(kv));
    EXPECT_EQ(o.summary.at("regime").get<std::string>(), "critical");
    std::stringstream csv;
    write_phase_csv(csv, o.report);
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "n,eps,regime,median_T,predicted_order,slope");

    write_file(d / "bad.txt", "1\n0\n-2,\n");
    KeyValueConfig bad = kv_of("model = spectrum_file\neps = 2.4\ntrials = 200\nseed = 1\n");
    bad.set("spectrum", (d / "bad.txt").string());
    try {
        run_phase(parse_phase_config(bad));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3);
    }
    EXPECT_THROW(parse_phase_config(kv_of("eps = 1\neps_factor = 1\nseed = 1\n")), InvalidInput);
}

TEST(Binary, ExitCodes) {
    const fs::path d = scratch("bin");
    write_file(d / "ok.cfg", kSmallMaxcut);
    EXPECT_EQ(run_cli("solve --config " + (d / "ok.cfg").string() + " --out " + (d / "out").string()), 0);
    EXPECT_TRUE(fs::exists(d / "out" / "trace.csv"));
    EXPECT_EQ(run_cli("solve --config " + (d / "ok.cfg").string() + " --seed 4 --out " + (d / "out4").string()), 0);
    EXPECT_NE(slurp(d / "out" / "trace.csv"), slurp(d / "out4" / "trace.csv"));
    write_file(d / "bad.cfg", "problem = maxcut\nalgorithm = stoch_ls\nn = 8\n");
    EXPECT_EQ(run_cli("solve --config " + (d / "bad.cfg").string() + " --out " + (d / "o2").string()), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("compare " + (d / "out" / "report.json").string() + " " + (d / "out4" / "report.json").string() +
                      " --out " + (d / "cmp.csv").string()),
              0);
    EXPECT_EQ(run_cli("compare " + (d / "out" / "report.json").string()), 2);
}

TEST(Binary, SolverAbortLeavesPartialTrace) {
    const fs::path d = scratch("abort");
    // A one-step Lanczos budget with no restarts cannot meet 1e-15.
    write_file(d / "abort.cfg", std::string(kSmallMaxcut) + "lanczos_tol = 1e-300\nlanczos_restarts = 0\n");
    EXPECT_EQ(run_cli("solve --config " + (d / "abort.cfg").string() + " --out " + (d / "out").string()), 1);
    const auto tr = read_trace_file((d / "out" / "trace.csv").string());
    EXPECT_LT(tr.size(), 60u);
    const auto rep = read_json_file((d / "out" / "report.json").string());
    EXPECT_FALSE(rep.at("completed").get<bool>());
}
