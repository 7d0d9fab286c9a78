#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dmax/linalg.hpp"

namespace dmax {

// Population phase retrieval instance: responses |signal . xi| + noise for
// sphere-uniform features xi, noise with mean zero and the given standard
// deviation.
struct PhasePopulation {
    Vec signal;    // nonzero
    double sigma;  // noise standard deviation
    int p;
    double signal_norm;
};

inline PhasePopulation make_phase_population(Vec signal, double sigma) {
    PhasePopulation pop;
    pop.p = static_cast<int>(signal.size());
    if (pop.p < 2) throw std::invalid_argument("phase population: dimension must be >= 2");
    if (sigma < 0.0) throw std::invalid_argument("phase population: sigma must be nonnegative");
    pop.signal_norm = norm(signal);
    if (pop.signal_norm == 0.0) throw std::invalid_argument("phase population: signal must be nonzero");
    pop.signal = std::move(signal);
    pop.sigma = sigma;
    return pop;
}

// Exact population risk:
//
//   p M(x) = ||x||^2 + ||xbar||^2 + p sigma^2 + 2 xbar.x
//            - (4/pi) [ 2 x.xbar arctan(sqrt((q + s)/(q - s)))
//                       + sqrt((q + s)(q - s)) ],
//
// with s = xbar.x and q = ||x|| ||xbar||.  The singularities at x = 0 and at
// x parallel to xbar are removable and evaluated as their limits, which makes
// M(+-xbar) = sigma^2 exact.
inline double population_risk(const PhasePopulation& pop, std::span<const double> x) {
    if (static_cast<int>(x.size()) != pop.p) throw std::invalid_argument("population_risk: bad dimension");
    const double nx2 = norm_sq(x);
    const double nb2 = norm_sq(pop.signal);
    const double base = pop.sigma * pop.sigma;
    if (nx2 == 0.0) return base + nb2 / pop.p;
    // the risk is even in the cross term, so |s| gives a bitwise-symmetric
    // evaluation: M(x) == M(-x)
    const double s = std::abs(dot(pop.signal, x));
    const double q = std::sqrt(nx2 * nb2);
    if (s >= q * (1.0 - 1e-13)) {
        // parallel rays: arctan -> pi/2, sqrt term -> 0; exact at +-signal
        return base + (nx2 + nb2 - 2.0 * s) / pop.p;
    }
    const double g = std::sqrt((q + s) / (q - s));
    const double value = nx2 + nb2 + 2.0 * s -
                         (4.0 / std::numbers::pi) *
                             (2.0 * s * std::atan(g) + std::sqrt((q + s) * (q - s)));
    return base + value / pop.p;
}

// Gradient of the population risk.  Undefined exactly at the origin (only
// directional derivatives exist there); along the signal ray the smooth-branch
// limit applies, elsewhere the closed form is differentiated directly.
inline Vec population_gradient(const PhasePopulation& pop, std::span<const double> x) {
    if (static_cast<int>(x.size()) != pop.p) throw std::invalid_argument("population_gradient: bad dimension");
    const double nx = norm(x);
    if (nx == 0.0)
        throw std::domain_error("population_gradient: undefined at the origin (directional derivatives only)");
    const double nb = pop.signal_norm;
    const double s = dot(pop.signal, x);
    const double q = nx * nb;
    const double pi = std::numbers::pi;

    if (std::abs(s) >= q * (1.0 - 1e-10)) {
        // x = eta xbar: gradient = (2 (|eta| - 1) sgn(eta) / p) xbar
        const double eta = s / norm_sq(pop.signal);
        const double c = 2.0 * (std::abs(eta) - 1.0) * (eta > 0.0 ? 1.0 : -1.0) / pop.p;
        return scaled(pop.signal, c);
    }

    const double g = std::sqrt((q + s) / (q - s));
    const double root = std::sqrt(q * q - s * s);
    Vec grad(pop.p);
    // grad(2 s arctan g + root) collapses to 2 arctan(g) xbar + (root/nx^2) x
    const double cb = 2.0 * std::atan(g);
    const double cx = root / (nx * nx);
    for (int i = 0; i < pop.p; ++i) {
        const double correction = (4.0 / pi) * (cb * pop.signal[i] + cx * x[i]);
        grad[i] = (2.0 * x[i] + 2.0 * pop.signal[i] - correction) / pop.p;
    }
    return grad;
}

// M'(0; v) = -(1/p) E|e(v; u)| in closed form; strictly negative for any
// nonzero direction, which is the d-stationarity failure at the origin.
inline double directional_derivative_origin(const PhasePopulation& pop, std::span<const double> v) {
    if (static_cast<int>(v.size()) != pop.p)
        throw std::invalid_argument("directional_derivative_origin: bad dimension");
    const double nv2 = norm_sq(v);
    if (nv2 == 0.0) throw std::invalid_argument("directional_derivative_origin: zero direction");
    // E|e(v; u)| is even in the cross term; |s| keeps v and -v bitwise equal
    const double s = std::abs(dot(pop.signal, v));
    const double q = std::sqrt(nv2 * norm_sq(pop.signal));
    const double pi = std::numbers::pi;
    double expected_abs;
    if (s >= q * (1.0 - 1e-13)) {
        expected_abs = 2.0 * s;
    } else {
        const double g = std::sqrt((q + s) / (q - s));
        expected_abs = -2.0 * s + (4.0 / pi) * (2.0 * s * std::atan(g) + std::sqrt((q + s) * (q - s)));
    }
    return -expected_abs / pop.p;
}

struct Rank2Eigenvalues {
    double m1_plus, m1_minus;  // of xbar xbar^T + x x^T
    double m2_plus, m2_minus;  // of xbar x^T + x xbar^T
};

inline Rank2Eigenvalues rank2_eigenvalues(const PhasePopulation& pop, std::span<const double> x) {
    if (static_cast<int>(x.size()) != pop.p) throw std::invalid_argument("rank2_eigenvalues: bad dimension");
    const double nx2 = norm_sq(x);
    const double nb2 = norm_sq(pop.signal);
    const double s = dot(pop.signal, x);
    const double disc = std::sqrt((nx2 - nb2) * (nx2 - nb2) + 4.0 * s * s);
    const double q = std::sqrt(nx2 * nb2);
    return {(nx2 + nb2 + disc) / 2.0, (nx2 + nb2 - disc) / 2.0, s + q, s - q};
}

enum class StationaryLabel { global_min, saddle_circle, origin, none };

inline const char* to_string(StationaryLabel label) {
    switch (label) {
        case StationaryLabel::global_min: return "global-min";
        case StationaryLabel::saddle_circle: return "saddle-circle";
        case StationaryLabel::origin: return "origin";
        default: return "none-of-these";
    }
}

struct StationaryClassification {
    StationaryLabel label;
    double dist_global;  // to {+-xbar}
    double dist_saddle;  // to the circle {xbar.x = 0, ||x|| = (2/pi)||xbar||}
    double dist_origin;
};

// Distance-based classification against the three population stationary
// candidates.
inline StationaryClassification classify_stationary(const PhasePopulation& pop,
                                                    std::span<const double> x, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("classify_stationary: tol must be positive");
    StationaryClassification out{};
    const double nb = pop.signal_norm;
    Vec minus(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) minus[i] = -x[i];
    out.dist_global = std::min(distance(x, pop.signal), distance(minus, pop.signal));
    out.dist_origin = norm(x);

    // split x into the component along xbar and the orthogonal remainder
    const double along = dot(pop.signal, x) / nb;
    const double w_sq = std::max(norm_sq(x) - along * along, 0.0);
    const double radius = 2.0 / std::numbers::pi * nb;
    const double w = std::sqrt(w_sq);
    out.dist_saddle = w > 0.0 ? std::sqrt(along * along + (w - radius) * (w - radius))
                              : std::sqrt(along * along + radius * radius);

    out.label = StationaryLabel::none;
    if (out.dist_global <= tol)
        out.label = StationaryLabel::global_min;
    else if (out.dist_saddle <= tol)
        out.label = StationaryLabel::saddle_circle;
    else if (out.dist_origin <= tol)
        out.label = StationaryLabel::origin;
    return out;
}

struct SaddleDiagnostics {
    double trace;
    double min_eigenvalue;
    double max_eigenvalue;
};

// Central finite-difference Hessian of the closed-form risk; used to verify
// the zero-trace, indefinite verdict on the saddle circle.
inline SaddleDiagnostics saddle_diagnostics(const PhasePopulation& pop, std::span<const double> x,
                                            double step = 1e-4) {
    const auto cls = classify_stationary(pop, x, 1e-6 * (1.0 + pop.signal_norm));
    if (cls.label != StationaryLabel::saddle_circle)
        throw std::invalid_argument("saddle_diagnostics: point is not on the saddle circle");
    const int p = pop.p;
    Vec hessian(static_cast<std::size_t>(p) * p);
    Vec a(x.begin(), x.end());
    const double f0 = population_risk(pop, a);
    for (int i = 0; i < p; ++i) {
        for (int j = i; j < p; ++j) {
            double value;
            if (i == j) {
                a[i] = x[i] + step;
                const double fp = population_risk(pop, a);
                a[i] = x[i] - step;
                const double fm = population_risk(pop, a);
                a[i] = x[i];
                value = (fp - 2.0 * f0 + fm) / (step * step);
            } else {
                a[i] = x[i] + step;
                a[j] = x[j] + step;
                const double fpp = population_risk(pop, a);
                a[j] = x[j] - step;
                const double fpm = population_risk(pop, a);
                a[i] = x[i] - step;
                const double fmm = population_risk(pop, a);
                a[j] = x[j] + step;
                const double fmp = population_risk(pop, a);
                a[i] = x[i];
                a[j] = x[j];
                value = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
            }
            hessian[static_cast<std::size_t>(i) * p + j] = value;
            hessian[static_cast<std::size_t>(j) * p + i] = value;
        }
    }
    double trace = 0.0;
    for (int i = 0; i < p; ++i) trace += hessian[static_cast<std::size_t>(i) * p + i];
    const Vec eig = symmetric_eigenvalues(hessian, p);
    return {trace, eig.front(), eig.back()};
}

// Radius of the quadratic-growth neighborhood of +-xbar:
// delta(gamma) = ((1 - sin(pi gamma / 2)) / (1 + sin(pi gamma / 2))) ||xbar||,
// inside which M(x) - M(xbar) >= (gamma/p) ||x - xbar||^2.
inline double strong_convexity_radius(const PhasePopulation& pop, double gamma) {
    if (gamma <= 0.0 || gamma >= 1.0)
        throw std::invalid_argument("strong_convexity_radius: gamma must lie in (0, 1)");
    const double s = std::sin(0.5 * std::numbers::pi * gamma);
    return (1.0 - s) / (1.0 + s) * pop.signal_norm;
}

}  // namespace dmax
