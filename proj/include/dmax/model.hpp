#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmax/linalg.hpp"

namespace dmax {

enum class PieceKind { affine, squared_plus_affine, zero };

// One smooth convex piece of a difference-of-max model.  Given a feature
// vector xi, the piece materializes an affine form of the parameter x,
//
//   a(xi) = xi_map * [xi; 1],    alpha(xi) = offset_coeffs . [xi; 1],
//
// and evaluates to
//
//   affine:              a(xi).x + alpha(xi)
//   squared_plus_affine: weight * max(a(xi).x + alpha(xi), 0)^2
//   zero:                0
//
// xi_map is p x (d+1) row-major; empty arrays stand for all-zero maps.  The
// squared-plus kind is convex and once continuously differentiable.
struct SmoothConvexPiece {
    PieceKind kind = PieceKind::zero;
    int p = 0;
    int d = 0;
    std::vector<double> xi_map;         // p*(d+1) row-major, or empty
    std::vector<double> offset_coeffs;  // d+1, or empty
    double weight = 1.0;                // squared_plus_affine only

    // a(xi), the slope of the inner affine form in parameter space.
    Vec slope(std::span<const double> xi) const {
        Vec a(p, 0.0);
        if (xi_map.empty()) return a;
        const int cols = d + 1;
        for (int i = 0; i < p; ++i) {
            double s = 0.0;
            const double* row = xi_map.data() + static_cast<std::size_t>(i) * cols;
            for (int j = 0; j < d; ++j) s += row[j] * xi[j];
            s += row[d];
            a[i] = s;
        }
        return a;
    }

    double offset(std::span<const double> xi) const {
        if (offset_coeffs.empty()) return 0.0;
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += offset_coeffs[j] * xi[j];
        return s + offset_coeffs[d];
    }

    double value(std::span<const double> x, std::span<const double> xi) const {
        if (kind == PieceKind::zero) return 0.0;
        const Vec a = slope(xi);
        const double t = dot(a, x) + offset(xi);
        if (kind == PieceKind::affine) return t;
        const double s = std::max(t, 0.0);
        return weight * s * s;
    }

    Vec gradient(std::span<const double> x, std::span<const double> xi) const {
        if (kind == PieceKind::zero) return Vec(p, 0.0);
        Vec a = slope(xi);
        if (kind == PieceKind::affine) return a;
        const double t = dot(a, x) + offset(xi);
        const double c = 2.0 * weight * std::max(t, 0.0);
        for (auto& v : a) v *= c;
        return a;
    }

    // Exact Lipschitz constant in x for affine pieces: the slope norm.
    double lipschitz(std::span<const double> xi) const {
        if (kind == PieceKind::zero) return 0.0;
        if (kind != PieceKind::affine)
            throw std::logic_error("lipschitz: exact constant only for affine pieces");
        return norm(slope(xi));
    }
};

// Piece with a constant slope in x (independent of the feature).
inline SmoothConvexPiece make_constant_slope_piece(const Vec& slope, double alpha, int d) {
    SmoothConvexPiece piece;
    piece.kind = PieceKind::affine;
    piece.p = static_cast<int>(slope.size());
    piece.d = d;
    piece.xi_map.assign(static_cast<std::size_t>(piece.p) * (d + 1), 0.0);
    for (int i = 0; i < piece.p; ++i) piece.xi_map[static_cast<std::size_t>(i) * (d + 1) + d] = slope[i];
    piece.offset_coeffs.assign(d + 1, 0.0);
    piece.offset_coeffs[d] = alpha;
    return piece;
}

inline SmoothConvexPiece make_zero_piece(int p, int d) {
    SmoothConvexPiece piece;
    piece.kind = PieceKind::zero;
    piece.p = p;
    piece.d = d;
    return piece;
}

// m(x; xi) = max_j f_j(x; xi) - max_j g_j(x; xi) with convex differentiable
// pieces.  Both families are nonempty and share the dimensions p and d.
struct DifferenceMaxModel {
    int p = 0;
    int d = 0;
    std::vector<SmoothConvexPiece> f_pieces;
    std::vector<SmoothConvexPiece> g_pieces;

    void validate() const {
        if (p < 1 || d < 1) throw std::invalid_argument("model: dimensions must be positive");
        if (f_pieces.empty() || g_pieces.empty())
            throw std::invalid_argument("model: both piece families must be nonempty");
        for (const auto& piece : f_pieces) check_piece(piece);
        for (const auto& piece : g_pieces) check_piece(piece);
    }

  private:
    void check_piece(const SmoothConvexPiece& piece) const {
        if (piece.p != p || piece.d != d) throw std::invalid_argument("model: piece dimension mismatch");
        if (!piece.xi_map.empty() && piece.xi_map.size() != static_cast<std::size_t>(p) * (d + 1))
            throw std::invalid_argument("model: bad xi_map size");
        if (!piece.offset_coeffs.empty() && piece.offset_coeffs.size() != static_cast<std::size_t>(d) + 1)
            throw std::invalid_argument("model: bad offset size");
    }
};

inline double family_max(const std::vector<SmoothConvexPiece>& pieces, std::span<const double> x,
                         std::span<const double> xi) {
    double best = pieces.front().value(x, xi);
    for (std::size_t j = 1; j < pieces.size(); ++j) best = std::max(best, pieces[j].value(x, xi));
    return best;
}

inline double model_value(const DifferenceMaxModel& model, std::span<const double> x,
                          std::span<const double> xi) {
    if (static_cast<int>(x.size()) != model.p) throw std::invalid_argument("model_value: bad parameter dimension");
    if (static_cast<int>(xi.size()) != model.d) throw std::invalid_argument("model_value: bad feature dimension");
    return family_max(model.f_pieces, x, xi) - family_max(model.g_pieces, x, xi);
}

// |m(x1;xi) - m(x2;xi)| <= (Lip_f + Lip_g) ||x1 - x2|| with the family
// constants below (affine pieces).
inline double model_lipschitz(const DifferenceMaxModel& model, std::span<const double> xi) {
    double lf = 0.0, lg = 0.0;
    for (const auto& piece : model.f_pieces) lf = std::max(lf, piece.lipschitz(xi));
    for (const auto& piece : model.g_pieces) lg = std::max(lg, piece.lipschitz(xi));
    return lf + lg;
}

// m(x; xi) = |x.xi|: f-pieces {x.xi, -x.xi}, single zero g-piece.  The zero
// g-side is an affine piece with zero slope so the model stays inside the
// general template.
inline DifferenceMaxModel build_phase_retrieval_model(int p) {
    if (p < 1) throw std::invalid_argument("build_phase_retrieval_model: p must be >= 1");
    DifferenceMaxModel model;
    model.p = p;
    model.d = p;
    SmoothConvexPiece plus;
    plus.kind = PieceKind::affine;
    plus.p = p;
    plus.d = p;
    plus.xi_map.assign(static_cast<std::size_t>(p) * (p + 1), 0.0);
    for (int i = 0; i < p; ++i) plus.xi_map[static_cast<std::size_t>(i) * (p + 1) + i] = 1.0;
    SmoothConvexPiece minus = plus;
    for (auto& v : minus.xi_map) v = -v;
    model.f_pieces = {plus, minus};
    model.g_pieces = {make_zero_piece(p, p)};
    model.validate();
    return model;
}

// Piecewise affine regression model:
//
//   m(x; xi) = max_j (a^j . xi + alpha_j) - max_j (b^j . xi + beta_j)
//
// with x packing ((a^j, alpha_j) for j = 1..k_f, then (b^j, beta_j) for
// j = 1..k_g), so p = (k_f + k_g) (d + 1).
inline DifferenceMaxModel build_piecewise_affine_model(int k_f, int k_g, int d) {
    if (k_f < 1 || k_g < 1 || d < 1)
        throw std::invalid_argument("build_piecewise_affine_model: sizes must be >= 1");
    const int p = (k_f + k_g) * (d + 1);
    auto slot_piece = [&](int slot) {
        SmoothConvexPiece piece;
        piece.kind = PieceKind::affine;
        piece.p = p;
        piece.d = d;
        piece.xi_map.assign(static_cast<std::size_t>(p) * (d + 1), 0.0);
        const int base = slot * (d + 1);
        for (int j = 0; j <= d; ++j)
            piece.xi_map[static_cast<std::size_t>(base + j) * (d + 1) + j] = 1.0;
        return piece;
    };
    DifferenceMaxModel model;
    model.p = p;
    model.d = d;
    for (int j = 0; j < k_f; ++j) model.f_pieces.push_back(slot_piece(j));
    for (int j = 0; j < k_g; ++j) model.g_pieces.push_back(slot_piece(k_f + j));
    model.validate();
    return model;
}

struct ReluRewriteValue {
    double total;    // max(b . max(A xi, 0) + beta, 0)
    double f_value;  // convex majorant branch
    double g_value;  // convex subtrahend; f_value - g_value == total
};

// Two-layer ReLU network value and its difference-of-convex rewrite.  The
// squared-plus sums are enumerated literally over the 3^k binary selector
// set, so the width is capped.
inline ReluRewriteValue relu_two_layer_value(std::span<const double> b,
                                             std::span<const double> a_matrix,  // k x d row-major
                                             double beta, std::span<const double> xi) {
    const int k = static_cast<int>(b.size());
    const int d = static_cast<int>(xi.size());
    if (k < 1 || d < 1) throw std::invalid_argument("relu_two_layer_value: empty input");
    if (a_matrix.size() != static_cast<std::size_t>(k) * d)
        throw std::invalid_argument("relu_two_layer_value: bad matrix size");
    if (k > 10) throw std::invalid_argument("relu_two_layer_value: width above enumeration budget (k <= 10)");

    Vec ax(k);
    for (int i = 0; i < k; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += a_matrix[static_cast<std::size_t>(i) * d + j] * xi[j];
        ax[i] = s;
    }

    double raw = beta;
    for (int i = 0; i < k; ++i) raw += b[i] * std::max(ax[i], 0.0);
    const double total = std::max(raw, 0.0);

    auto sq_plus = [](double t) {
        const double s = std::max(t, 0.0);
        return s * s;
    };

    // max over the 3^k selectors of sum_i of the chosen squared-plus term;
    // sign = +1 picks (b_i, A_i xi, b_i + A_i xi), sign = -1 the mirrored set.
    auto delta_max = [&](double sign) {
        std::vector<int> choice(k, 0);
        double best = -1.0;
        while (true) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) {
                switch (choice[i]) {
                    case 0: s += sq_plus(sign * b[i]); break;
                    case 1: s += sq_plus(ax[i]); break;
                    default: s += sq_plus(sign * b[i] + ax[i]); break;
                }
            }
            best = std::max(best, s);
            int pos = 0;
            while (pos < k && ++choice[pos] == 3) choice[pos++] = 0;
            if (pos == k) break;
        }
        return best;
    };

    double plus_sq = 0.0, minus_sq = 0.0;
    for (int i = 0; i < k; ++i) {
        plus_sq += sq_plus(b[i]);
        minus_sq += sq_plus(-b[i]);
    }

    const double branch1 = delta_max(1.0) + minus_sq + 2.0 * beta;
    const double branch2 = delta_max(-1.0) + plus_sq;
    const double f_value = 0.5 * std::max(branch1, branch2);
    const double g_value = 0.5 * branch2;
    return {total, f_value, g_value};
}

}  // namespace dmax
