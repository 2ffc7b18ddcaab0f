#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "ssmax/error.hpp"
#include "ssmax/sym_matrix.hpp"

namespace ssmax {

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

/// Parses one decimal token; accepts "nan"/"inf". Throws ParseError naming `line`.
inline double parse_double(const std::string& tok, int line) {
    if (tok == "nan" || tok == "NaN") return std::nan("");
    if (tok == "inf") return HUGE_VAL;
    if (tok == "-inf") return -HUGE_VAL;
    double v = 0.0;
    const char* first = tok.data();
    if (!tok.empty() && tok[0] == '+') ++first;
    auto res = std::from_chars(first, tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || tok.empty())
        throw ParseError("not a number: '" + tok + "'", line);
    return v;
}

inline long parse_long(const std::string& tok, int line) {
    long v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || tok.empty())
        throw ParseError("not an integer: '" + tok + "'", line);
    return v;
}

namespace detail {
inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}
}  // namespace detail

/// Matrix text format. Header "n" announces a square n x n matrix; header
/// "m p" announces m rows of p values (observations in rows). Blank lines and
/// lines starting with '#' are skipped.
struct MatrixFile {
    Matrix data;
    bool square_header = true;
};

inline MatrixFile parse_matrix(std::istream& in) {
    std::string raw;
    int line = 0;
    long rows = -1, cols = -1;
    MatrixFile out;
    Eigen::Index r = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto toks = detail::split_ws(raw);
        if (toks.empty() || toks[0][0] == '#') continue;
        if (rows < 0) {
            if (toks.size() == 1) {
                rows = cols = parse_long(toks[0], line);
            } else if (toks.size() == 2) {
                rows = parse_long(toks[0], line);
                cols = parse_long(toks[1], line);
                out.square_header = false;
            } else {
                throw ParseError("header must be 'n' or 'rows cols'", line);
            }
            if (rows <= 0 || cols <= 0) throw ParseError("dimensions must be positive", line);
            out.data.resize(rows, cols);
            continue;
        }
        if (r >= rows) throw ParseError("more rows than announced (" + std::to_string(rows) + ")", line);
        if (static_cast<long>(toks.size()) != cols)
            throw ParseError("expected " + std::to_string(cols) + " values, got " + std::to_string(toks.size()),
                             line);
        for (long j = 0; j < cols; ++j) {
            const double v = parse_double(toks[static_cast<std::size_t>(j)], line);
            if (!std::isfinite(v)) throw ParseError("non-finite value", line);
            out.data(r, j) = v;
        }
        ++r;
    }
    if (rows < 0) throw ParseError("empty matrix file", line);
    if (r != rows)
        throw ParseError("expected " + std::to_string(rows) + " rows, got " + std::to_string(r), line);
    return out;
}

/// Whitespace-separated numbers, any count per line; '#' lines and blank lines skipped.
inline std::vector<double> parse_number_list(std::istream& in) {
    std::string raw;
    int line = 0;
    std::vector<double> out;
    while (std::getline(in, raw)) {
        ++line;
        const auto toks = detail::split_ws(raw);
        if (toks.empty() || toks[0][0] == '#') continue;
        for (const auto& t : toks) {
            const double v = parse_double(t, line);
            if (!std::isfinite(v)) throw ParseError("non-finite value '" + t + "'", line);
            out.push_back(v);
        }
    }
    return out;
}

inline std::vector<double> read_number_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    return parse_number_list(in);
}

inline MatrixFile read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open matrix file: " + path);
    return parse_matrix(in);
}

/// Square symmetric matrix from file; symmetry is checked to 1e-12 then enforced.
inline SymMatrix read_sym_matrix(const std::string& path) {
    MatrixFile f = read_matrix_file(path);
    if (!f.square_header) throw InvalidInput(path + ": expected a square matrix (single-number header)");
    return SymMatrix(f.data, 1e-12);
}

inline void write_matrix(std::ostream& out, const Matrix& m, bool square_header = true) {
    if (square_header && m.rows() == m.cols()) out << m.rows() << '\n';
    else out << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_double(m(i, j));
        out << '\n';
    }
}

inline void write_matrix_file(const std::string& path, const Matrix& m, bool square_header = true) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write matrix file: " + path);
    write_matrix(out, m, square_header);
}

}  // namespace ssmax
