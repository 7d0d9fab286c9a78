#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dmax {

enum class LossKind { squared, abs };

// Univariate convex loss h(.; z) together with its monotone split
// h = h_up + h_down, where h_up is convex nondecreasing and h_down is convex
// nonincreasing.  Derivatives at kinks are one-sided (right) so that
// subgradient selections are deterministic.
class LossDecomposition {
  public:
    LossDecomposition(LossKind kind, double z) : kind_(kind), z_(z) {}

    LossKind kind() const { return kind_; }
    double response() const { return z_; }
    bool differentiable() const { return kind_ == LossKind::squared; }

    double value(double t) const {
        const double r = z_ - t;
        return kind_ == LossKind::squared ? r * r : std::abs(r);
    }

    double up(double t) const {
        const double s = std::max(t - z_, 0.0);
        return kind_ == LossKind::squared ? s * s : s;
    }

    double down(double t) const {
        const double s = std::max(z_ - t, 0.0);
        return kind_ == LossKind::squared ? s * s : s;
    }

    // Right derivative of h_up.
    double up_derivative(double t) const {
        if (kind_ == LossKind::squared) return 2.0 * std::max(t - z_, 0.0);
        return t >= z_ ? 1.0 : 0.0;
    }

    // Right derivative of h_down (nonpositive).
    double down_derivative(double t) const {
        if (kind_ == LossKind::squared) return -2.0 * std::max(z_ - t, 0.0);
        return t < z_ ? -1.0 : 0.0;
    }

    // h'(t); exact for the squared loss, right derivative otherwise.
    double derivative(double t) const { return up_derivative(t) + down_derivative(t); }

    // Lipschitz constant of h on [lo, hi].
    double lipschitz_on(double lo, double hi) const {
        if (kind_ == LossKind::abs) return 1.0;
        return 2.0 * std::max(std::abs(lo - z_), std::abs(hi - z_));
    }

  private:
    LossKind kind_;
    double z_;
};

inline LossDecomposition make_squared_loss(double z) { return {LossKind::squared, z}; }
inline LossDecomposition make_abs_loss(double z) { return {LossKind::abs, z}; }
inline LossDecomposition make_loss(LossKind kind, double z) { return {kind, z}; }

}  // namespace dmax
