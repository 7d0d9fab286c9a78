#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dmax/linalg.hpp"

namespace dmax {

// Compact convex feasible set: a centered Euclidean ball or an axis-aligned
// box.  Projections are exact.
class FeasibleSet {
  public:
    enum class Shape { ball, box };

    static FeasibleSet ball(int dim, double radius) {
        if (dim < 1 || radius <= 0.0) throw std::invalid_argument("FeasibleSet::ball: bad arguments");
        FeasibleSet set;
        set.shape_ = Shape::ball;
        set.dim_ = dim;
        set.radius_ = radius;
        return set;
    }

    static FeasibleSet box(Vec lower, Vec upper) {
        if (lower.empty() || lower.size() != upper.size())
            throw std::invalid_argument("FeasibleSet::box: bad bounds");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (lower[i] > upper[i]) throw std::invalid_argument("FeasibleSet::box: empty box");
        FeasibleSet set;
        set.shape_ = Shape::box;
        set.dim_ = static_cast<int>(lower.size());
        set.lower_ = std::move(lower);
        set.upper_ = std::move(upper);
        return set;
    }

    Shape shape() const { return shape_; }
    int dim() const { return dim_; }
    double radius() const { return radius_; }
    const Vec& lower() const { return lower_; }
    const Vec& upper() const { return upper_; }

    Vec project(Vec x) const {
        check_dim(x);
        if (shape_ == Shape::ball) {
            const double r = norm(x);
            if (r > radius_) {
                const double s = radius_ / r;
                for (auto& v : x) v *= s;
            }
            return x;
        }
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower_[i], upper_[i]);
        return x;
    }

    bool contains(std::span<const double> x, double tol = 0.0) const {
        check_dim(x);
        if (shape_ == Shape::ball) return norm(x) <= radius_ + tol;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] < lower_[i] - tol || x[i] > upper_[i] + tol) return false;
        return true;
    }

    double diameter() const {
        if (shape_ == Shape::ball) return 2.0 * radius_;
        double s = 0.0;
        for (std::size_t i = 0; i < lower_.size(); ++i) {
            const double w = upper_[i] - lower_[i];
            s += w * w;
        }
        return std::sqrt(s);
    }

    // max_{x in X} ||x - y||, used for proximal error bounds.
    double max_distance_from(std::span<const double> y) const {
        check_dim(y);
        if (shape_ == Shape::ball) return radius_ + norm(y);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double w = std::max(std::abs(y[i] - lower_[i]), std::abs(upper_[i] - y[i]));
            s += w * w;
        }
        return std::sqrt(s);
    }

  private:
    void check_dim(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("FeasibleSet: dimension mismatch");
    }

    Shape shape_ = Shape::ball;
    int dim_ = 0;
    double radius_ = 0.0;
    Vec lower_, upper_;
};

}  // namespace dmax
