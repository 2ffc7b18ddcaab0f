#pragma once

#include <stdexcept>
#include <string>

namespace ssmax {

/// Rejected input: wrong shape, non-finite entries, violated precondition.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative eigensolver ran out of budget without meeting its tolerance.
class ConvergenceFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Leading eigenvalue is not simple (gap below threshold), so lambda_max is not smooth here.
class NonsmoothPoint : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Text input could not be parsed. `line()` is 1-based, 0 when not line-specific.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace ssmax
