#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "dmax/dataset.hpp"
#include "dmax/loss.hpp"
#include "dmax/model.hpp"

namespace dmax {

// Per-sample, per-piece affine forms materialized once for a (model, dataset)
// pair.  Everything downstream (risk, surrogates, subproblem solves) works
// off these tables; they are immutable and safe to share across threads.
struct CompiledPiece {
    PieceKind kind;
    Vec slope;      // a(xi), length p
    double offset;  // alpha(xi)
    double weight;  // squared_plus_affine only

    double inner(std::span<const double> x) const { return dot(slope, x) + offset; }

    double value(std::span<const double> x) const {
        if (kind == PieceKind::zero) return 0.0;
        const double t = inner(x);
        if (kind == PieceKind::affine) return t;
        const double s = std::max(t, 0.0);
        return weight * s * s;
    }

    // grad += c * piece_gradient(x)
    void add_gradient(std::span<const double> x, double c, Vec& grad) const {
        if (kind == PieceKind::zero || c == 0.0) return;
        double factor = c;
        if (kind == PieceKind::squared_plus_affine) {
            factor *= 2.0 * weight * std::max(inner(x), 0.0);
            if (factor == 0.0) return;
        }
        axpy(factor, slope, grad);
    }
};

struct CompiledSample {
    std::vector<CompiledPiece> f;
    std::vector<CompiledPiece> g;
    double z;
};

struct FamilyMax {
    double value;
    int argmax;  // smallest maximizing index
};

inline FamilyMax family_max(const std::vector<CompiledPiece>& pieces, std::span<const double> x) {
    FamilyMax best{pieces.front().value(x), 0};
    for (int j = 1; j < static_cast<int>(pieces.size()); ++j) {
        const double v = pieces[j].value(x);
        if (v > best.value) best = {v, j};
    }
    return best;
}

class CompiledProblem {
  public:
    CompiledProblem(const DifferenceMaxModel& model, LossKind loss, const Dataset& data)
        : p_(model.p), loss_(loss) {
        model.validate();
        data.validate();
        if (model.d != data.d) throw std::invalid_argument("CompiledProblem: feature dimension mismatch");
        samples_.reserve(data.size());
        for (int n = 0; n < data.size(); ++n) {
            CompiledSample s;
            s.z = data.responses[n];
            s.f.reserve(model.f_pieces.size());
            s.g.reserve(model.g_pieces.size());
            for (const auto& piece : model.f_pieces) s.f.push_back(compile(piece, data.features[n]));
            for (const auto& piece : model.g_pieces) s.g.push_back(compile(piece, data.features[n]));
            samples_.push_back(std::move(s));
        }
    }

    int p() const { return p_; }
    int size() const { return static_cast<int>(samples_.size()); }
    LossKind loss_kind() const { return loss_; }
    const CompiledSample& sample(int n) const { return samples_[n]; }

    double model_value(int n, std::span<const double> x) const {
        const auto& s = samples_[n];
        return family_max(s.f, x).value - family_max(s.g, x).value;
    }

    double sample_loss(int n, std::span<const double> x) const {
        return make_loss(loss_, samples_[n].z).value(model_value(n, x));
    }

    // M_N(x) = (1/N) sum_n h(m(x; xi_n); z_n)
    double risk(std::span<const double> x) const {
        double s = 0.0;
        for (int n = 0; n < size(); ++n) s += sample_loss(n, x);
        return s / size();
    }

    Vec per_sample_losses(std::span<const double> x) const {
        Vec out(size());
        for (int n = 0; n < size(); ++n) out[n] = sample_loss(n, x);
        return out;
    }

  private:
    static CompiledPiece compile(const SmoothConvexPiece& piece, const Vec& xi) {
        CompiledPiece c;
        c.kind = piece.kind;
        c.slope = piece.kind == PieceKind::zero ? Vec(piece.p, 0.0) : piece.slope(xi);
        c.offset = piece.kind == PieceKind::zero ? 0.0 : piece.offset(xi);
        c.weight = piece.weight;
        return c;
    }

    int p_;
    LossKind loss_;
    std::vector<CompiledSample> samples_;
};

using CompiledProblemPtr = std::shared_ptr<const CompiledProblem>;

inline CompiledProblemPtr compile_problem(const DifferenceMaxModel& model, LossKind loss,
                                          const Dataset& data) {
    return std::make_shared<const CompiledProblem>(model, loss, data);
}

inline double empirical_risk(const DifferenceMaxModel& model, LossKind loss, const Dataset& data,
                             std::span<const double> x) {
    if (data.size() < 1) throw std::invalid_argument("empirical_risk: empty dataset");
    double s = 0.0;
    for (int n = 0; n < data.size(); ++n)
        s += make_loss(loss, data.responses[n]).value(model_value(model, x, data.features[n]));
    return s / data.size();
}

}  // namespace dmax
