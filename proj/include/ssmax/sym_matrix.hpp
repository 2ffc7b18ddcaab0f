#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "ssmax/error.hpp"

namespace ssmax {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense real symmetric matrix. Storage is exactly symmetric and finite.
class SymMatrix {
public:
    SymMatrix() = default;

    /// Zero matrix of dimension n.
    explicit SymMatrix(Eigen::Index n) : m_(Matrix::Zero(n, n)) {
        if (n <= 0) throw InvalidInput("SymMatrix: dimension must be positive");
    }

    /// Validates symmetry to `tol` (relative to max(1, max|a_ij|)) and then
    /// symmetrizes exactly as (A + A^T)/2.
    explicit SymMatrix(const Matrix& a, double tol = 1e-12) {
        if (a.rows() != a.cols() || a.rows() == 0)
            throw InvalidInput("SymMatrix: matrix must be square and non-empty");
        if (!a.allFinite()) throw InvalidInput("SymMatrix: non-finite entries");
        const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
        const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
        if (asym > tol * scale)
            throw InvalidInput("SymMatrix: matrix is not symmetric (max |a_ij - a_ji| = " +
                               std::to_string(asym) + ")");
        m_ = 0.5 * (a + a.transpose());
    }

    static SymMatrix identity(Eigen::Index n) {
        SymMatrix s(n);
        s.m_.diagonal().setOnes();
        return s;
    }

    static SymMatrix diagonal(const Vector& d) {
        SymMatrix s(d.size());
        s.m_.diagonal() = d;
        if (!d.allFinite()) throw InvalidInput("SymMatrix: non-finite entries");
        return s;
    }

    Eigen::Index n() const noexcept { return m_.rows(); }
    const Matrix& dense() const noexcept { return m_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    Vector apply(const Vector& x) const { return m_.selfadjointView<Eigen::Lower>() * x; }

    /// X + c * v v^T, formed explicitly.
    SymMatrix rank_one_update(const Vector& v, double c) const {
        SymMatrix out = *this;
        out.m_.noalias() += c * v * v.transpose();
        out.m_ = 0.5 * (out.m_ + out.m_.transpose()).eval();
        return out;
    }

    SymMatrix operator+(const SymMatrix& o) const {
        SymMatrix out = *this;
        out.m_ += o.m_;
        return out;
    }

    SymMatrix operator*(double c) const {
        SymMatrix out = *this;
        out.m_ *= c;
        return out;
    }

    double frobenius_norm() const { return m_.norm(); }

private:
    Matrix m_;
};

}  // namespace ssmax
