#pragma once

#include <cmath>
#include <variant>

#include "ssmax/error.hpp"
#include "ssmax/sym_matrix.hpp"

namespace ssmax {

// Feasible sets for the Euclidean setup omega(x) = ||x||^2 / 2, alpha = 1.
// Points are flat vectors; a matrix variable is stored column-major.

/// {x : |x_i| <= half_width}.
struct BoxSet {
    Eigen::Index dim = 0;
    double half_width = 0.0;

    Vector project(const Vector& x) const { return x.cwiseMax(-half_width).cwiseMin(half_width); }
    bool contains(const Vector& x, double tol = 0.0) const { return x.cwiseAbs().maxCoeff() <= half_width + tol; }
    Vector center() const { return Vector::Zero(dim); }
    double max_omega() const { return 0.5 * half_width * half_width * static_cast<double>(dim); }
};

/// {x : ||x||_2 <= radius}.
struct BallSet {
    Eigen::Index dim = 0;
    double radius = 0.0;

    Vector project(const Vector& x) const {
        const double nx = x.norm();
        return nx <= radius ? x : Vector(x * (radius / nx));
    }
    bool contains(const Vector& x, double tol = 0.0) const { return x.norm() <= radius * (1 + tol) + tol; }
    Vector center() const { return Vector::Zero(dim); }
    double max_omega() const { return 0.5 * radius * radius; }
};

/// {point}.
struct SingletonSet {
    Vector point;

    Vector project(const Vector&) const { return point; }
    bool contains(const Vector& x, double tol = 0.0) const { return (x - point).cwiseAbs().maxCoeff() <= tol; }
    Vector center() const { return point; }
    double max_omega() const { return 0.5 * point.squaredNorm(); }
};

using FeasibleSet = std::variant<BoxSet, BallSet, SingletonSet>;

/// Euclidean prox setup: omega = ||x||^2/2, alpha = 1, V(x,z) = ||z - x||^2/2,
/// D = sqrt(max_Q omega - min_Q omega), center x^omega = argmin_Q omega.
class EuclideanProx {
public:
    explicit EuclideanProx(FeasibleSet set) : set_(std::move(set)) {
        std::visit(
            [](const auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, BoxSet>) {
                    if (!(s.half_width > 0) || s.dim < 1) throw InvalidInput("box: need positive half-width");
                } else if constexpr (std::is_same_v<S, BallSet>) {
                    if (!(s.radius > 0) || s.dim < 1) throw InvalidInput("ball: need positive radius");
                } else {
                    if (s.point.size() < 1) throw InvalidInput("singleton: empty point");
                }
            },
            set_);
    }

    double alpha() const { return 1.0; }
    Vector project(const Vector& x) const {
        return std::visit([&](const auto& s) { return s.project(x); }, set_);
    }
    bool contains(const Vector& x, double tol = 1e-12) const {
        return std::visit([&](const auto& s) { return s.contains(x, tol); }, set_);
    }
    Vector center() const {
        return std::visit([](const auto& s) { return s.center(); }, set_);
    }
    double diameter() const {
        const double min_omega = 0.5 * center().squaredNorm();
        return std::sqrt(std::visit([](const auto& s) { return s.max_omega(); }, set_) - min_omega);
    }
    Eigen::Index dim() const { return center().size(); }

    double bregman(const Vector& x, const Vector& z) const { return 0.5 * (z - x).squaredNorm(); }

    /// argmin_z { y^T (z - x) + V(x, z) } over the set = Proj(x - y).
    Vector prox_map(const Vector& x, const Vector& y) const { return project(x - y); }

    const FeasibleSet& set() const { return set_; }

private:
    FeasibleSet set_;
};

}  // namespace ssmax
