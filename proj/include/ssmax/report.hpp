#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssmax/error.hpp"
#include "ssmax/io.hpp"
#include "ssmax/optimizer.hpp"

namespace ssmax {

inline constexpr const char* kTraceHeader = "t,obj_true,obj_sampled,gamma,eigvecs,wall_ms";

inline void write_trace(std::ostream& out, const std::vector<TraceRecord>& trace) {
    out << kTraceHeader << '\n';
    for (const auto& r : trace)
        out << r.t << ',' << format_double(r.obj_true) << ',' << format_double(r.obj_sampled) << ','
            << format_double(r.gamma) << ',' << format_double(r.eigvecs) << ',' << format_double(r.wall_ms) << '\n';
}

inline void write_trace_file(const std::string& path, const std::vector<TraceRecord>& trace) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    write_trace(out, trace);
}

/// Inverse of write_trace; exact for every double written.
inline std::vector<TraceRecord> read_trace(std::istream& in) {
    std::string raw;
    int line = 0;
    if (!std::getline(in, raw)) throw ParseError("empty trace", 1);
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw != kTraceHeader) throw ParseError("trace header must be '" + std::string(kTraceHeader) + "'", line);
    std::vector<TraceRecord> out;
    while (std::getline(in, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(raw);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() != 6) throw ParseError("expected 6 fields, got " + std::to_string(f.size()), line);
        TraceRecord r;
        r.t = parse_long(f[0], line);
        r.obj_true = parse_double(f[1], line);
        r.obj_sampled = parse_double(f[2], line);
        r.gamma = parse_double(f[3], line);
        r.eigvecs = parse_double(f[4], line);
        r.wall_ms = parse_double(f[5], line);
        out.push_back(r);
    }
    return out;
}

inline std::vector<TraceRecord> read_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open trace " + path);
    return read_trace(in);
}

/// JSON numbers cannot hold NaN; those become null.
inline nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline double number_or_nan(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.at(key).get<double>();
}

struct RunReport {
    std::string label;       // algorithm name
    std::string problem;
    long n = 0;
    long iterations = 0;
    double total_eigvecs = 0.0;   // equals the last cumulative eigvecs entry of the trace
    double best_objective = std::numeric_limits<double>::quiet_NaN();
    double final_objective = std::numeric_limits<double>::quiet_NaN();
    std::string trace_path;  // relative to the report's directory
    bool completed = true;
    std::string error;
    nlohmann::json extra = nlohmann::json::object();

    nlohmann::json to_json() const {
        nlohmann::json j = extra;
        j["algorithm"] = label;
        j["problem"] = problem;
        j["n"] = n;
        j["iterations"] = iterations;
        j["total_eigvecs"] = json_number(total_eigvecs);
        j["best_objective"] = json_number(best_objective);
        j["final_objective"] = json_number(final_objective);
        j["trace"] = trace_path;
        j["completed"] = completed;
        j["error"] = error;
        return j;
    }

    static RunReport from_json(const nlohmann::json& j) {
        for (const char* k : {"algorithm", "problem", "n", "iterations", "total_eigvecs", "trace"})
            if (!j.contains(k)) throw InvalidInput(std::string("report is missing field '") + k + "'");
        RunReport r;
        r.label = j.at("algorithm").get<std::string>();
        r.problem = j.at("problem").get<std::string>();
        r.n = j.at("n").get<long>();
        r.iterations = j.at("iterations").get<long>();
        r.total_eigvecs = number_or_nan(j, "total_eigvecs");
        r.best_objective = number_or_nan(j, "best_objective");
        r.final_objective = number_or_nan(j, "final_objective");
        r.trace_path = j.at("trace").get<std::string>();
        r.completed = j.value("completed", true);
        r.error = j.value("error", std::string());
        r.extra = j;
        return r;
    }
};

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    out << j.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what(), 0);
    }
}

struct LoadedRun {
    RunReport report;
    std::vector<TraceRecord> trace;
};

inline LoadedRun load_run(const std::string& report_path) {
    LoadedRun run;
    run.report = RunReport::from_json(read_json_file(report_path));
    std::filesystem::path tp(run.report.trace_path);
    if (tp.is_relative()) tp = std::filesystem::path(report_path).parent_path() / tp;
    run.trace = read_trace_file(tp.string());
    if (run.trace.empty()) throw InvalidInput(report_path + ": trace has no rows");
    return run;
}

/// Smallest cumulative eigvecs at which the best-so-far obj_true is <= target; NaN if never.
inline double eigvecs_to_reach(const std::vector<TraceRecord>& trace, double target) {
    for (const auto& r : trace)
        if (!std::isnan(r.obj_true) && r.obj_true <= target) return r.eigvecs;
    return std::numeric_limits<double>::quiet_NaN();
}

/// Merged table keyed on cumulative eigvecs (union of all rows, increasing);
/// one column per run holding its best obj_true so far, empty before the first value.
struct Comparison {
    std::vector<std::string> labels;
    std::vector<double> eigvecs;
    std::vector<std::vector<double>> best;  // [row][run]
};

inline Comparison compare_runs(const std::vector<LoadedRun>& runs) {
    if (runs.size() < 2) throw InvalidInput("compare: need at least two reports");
    Comparison c;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i].trace.empty()) throw InvalidInput("compare: empty trace for run " + std::to_string(i + 1));
        if (runs[i].report.problem != runs[0].report.problem || runs[i].report.n != runs[0].report.n)
            throw InvalidInput("compare: reports describe different problems");
        std::string label = runs[i].report.label;
        int dup = 1;
        while (std::find(c.labels.begin(), c.labels.end(), label) != c.labels.end())
            label = runs[i].report.label + "_" + std::to_string(++dup);
        c.labels.push_back(label);
        for (const auto& r : runs[i].trace) c.eigvecs.push_back(r.eigvecs);
    }
    std::sort(c.eigvecs.begin(), c.eigvecs.end());
    c.eigvecs.erase(std::unique(c.eigvecs.begin(), c.eigvecs.end()), c.eigvecs.end());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    c.best.assign(c.eigvecs.size(), std::vector<double>(runs.size(), nan));
    for (std::size_t j = 0; j < runs.size(); ++j) {
        std::size_t p = 0;
        double best = nan;
        for (std::size_t row = 0; row < c.eigvecs.size(); ++row) {
            const auto& tr = runs[j].trace;
            while (p < tr.size() && tr[p].eigvecs <= c.eigvecs[row]) {
                if (!std::isnan(tr[p].obj_true) && !(tr[p].obj_true >= best)) best = tr[p].obj_true;
                ++p;
            }
            c.best[row][j] = best;
        }
    }
    return c;
}

inline void write_comparison(std::ostream& out, const Comparison& c) {
    out << "eigvecs";
    for (const auto& l : c.labels) out << ',' << l;
    out << '\n';
    for (std::size_t row = 0; row < c.eigvecs.size(); ++row) {
        out << format_double(c.eigvecs[row]);
        for (double v : c.best[row]) out << ',' << (std::isnan(v) ? "" : format_double(v));
        out << '\n';
    }
}

}  // namespace ssmax
