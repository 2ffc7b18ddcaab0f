#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "ssmax/sym_matrix.hpp"

namespace ssmax {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Counter-based seed derivation: the seed for a (run, iteration, sample, ...)
/// coordinate depends only on that coordinate, never on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = detail::splitmix64(base);
    for (std::uint64_t p : path) h = detail::splitmix64(h ^ detail::splitmix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

/// Seeded random stream. There is no default seed.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

    Vector gaussian_vector(Eigen::Index n) {
        Vector z(n);
        for (Eigen::Index i = 0; i < n; ++i) z[i] = normal_(engine_);
        return z;
    }

    /// Uniform on the unit sphere in R^n.
    Vector unit_sphere(Eigen::Index n) {
        Vector z = gaussian_vector(n);
        double nz = z.norm();
        while (nz == 0.0) {
            z = gaussian_vector(n);
            nz = z.norm();
        }
        return z / nz;
    }

    Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
        Matrix g(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = normal_(engine_);
        return g;
    }

    /// Symmetric matrix with N(0,1) upper triangle.
    SymMatrix gaussian_symmetric(Eigen::Index n) {
        Matrix a(n, n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i <= j; ++i) a(i, j) = a(j, i) = normal_(engine_);
        return SymMatrix(a);
    }

    /// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign fix).
    Matrix orthogonal(Eigen::Index n) {
        Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(n, n));
        Matrix q = qr.householderQ();
        Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (Eigen::Index i = 0; i < n; ++i)
            if (r(i, i) < 0) q.col(i) = -q.col(i);
        return q;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace ssmax
