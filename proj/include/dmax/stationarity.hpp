#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dmax/feasible_set.hpp"
#include "dmax/risk.hpp"
#include "dmax/rng.hpp"

namespace dmax {

// Indices attaining the pointwise maxima of the two piece families within
// eps, for one sample.  With eps = 0 these are the exact argmax sets.
struct EpsArgmax {
    std::vector<int> f_indices;  // sorted ascending, nonempty
    std::vector<int> g_indices;
    double eps = 0.0;
    Vec f_values;
    Vec g_values;

    bool ambiguous() const { return f_indices.size() * g_indices.size() >= 2; }
};

namespace detail {

inline std::vector<int> within_eps(const Vec& values, double eps) {
    double best = values.front();
    for (double v : values) best = std::max(best, v);
    std::vector<int> idx;
    for (int j = 0; j < static_cast<int>(values.size()); ++j)
        if (values[j] >= best - eps) idx.push_back(j);
    return idx;
}

}  // namespace detail

inline EpsArgmax eps_argmax(const CompiledSample& sample, std::span<const double> x, double eps) {
    if (eps < 0.0) throw std::invalid_argument("eps_argmax: eps must be nonnegative");
    EpsArgmax out;
    out.eps = eps;
    out.f_values.resize(sample.f.size());
    out.g_values.resize(sample.g.size());
    for (std::size_t j = 0; j < sample.f.size(); ++j) out.f_values[j] = sample.f[j].value(x);
    for (std::size_t j = 0; j < sample.g.size(); ++j) out.g_values[j] = sample.g[j].value(x);
    out.f_indices = detail::within_eps(out.f_values, eps);
    out.g_indices = detail::within_eps(out.g_values, eps);
    return out;
}

inline EpsArgmax eps_argmax(const DifferenceMaxModel& model, std::span<const double> x,
                            std::span<const double> xi, double eps) {
    if (eps < 0.0) throw std::invalid_argument("eps_argmax: eps must be nonnegative");
    EpsArgmax out;
    out.eps = eps;
    out.f_values.resize(model.f_pieces.size());
    out.g_values.resize(model.g_pieces.size());
    for (std::size_t j = 0; j < model.f_pieces.size(); ++j) out.f_values[j] = model.f_pieces[j].value(x, xi);
    for (std::size_t j = 0; j < model.g_pieces.size(); ++j) out.g_values[j] = model.g_pieces[j].value(x, xi);
    out.f_indices = detail::within_eps(out.f_values, eps);
    out.g_indices = detail::within_eps(out.g_values, eps);
    return out;
}

namespace detail {

inline double leading_gap(const Vec& values) {
    double best = values.front();
    for (double v : values) best = std::max(best, v);
    double runner = -std::numeric_limits<double>::infinity();
    for (double v : values)
        if (v < best) runner = std::max(runner, v);
    if (runner == -std::numeric_limits<double>::infinity())
        return std::numeric_limits<double>::infinity();  // family is flat
    return best - runner;
}

}  // namespace detail

// Largest eps_bar with A_{f;eps} = A_f and A_{g;eps} = A_g for all
// eps in [0, eps_bar]: half the smaller of the two leading value gaps;
// +infinity when both families are flat.
inline double stability_radius(const DifferenceMaxModel& model, std::span<const double> x,
                               std::span<const double> xi) {
    const EpsArgmax sets = eps_argmax(model, x, xi, 0.0);
    return 0.5 * std::min(detail::leading_gap(sets.f_values), detail::leading_gap(sets.g_values));
}

// One linearization index pair (j1_n, j2_n) per sample, drawn from the
// eps-argmax sets of the anchor it was built at.
struct IndexSelection {
    std::vector<std::pair<int, int>> pairs;
};

struct SurrogateParts {
    double up = 0.0;
    double down = 0.0;
    double total = 0.0;
};

namespace detail {

inline Vec piece_gradient_at(const CompiledPiece& piece, std::span<const double> x) {
    Vec g(x.size(), 0.0);
    piece.add_gradient(x, 1.0, g);
    return g;
}

}  // namespace detail

// R_{N;anchor;eps}(y, anchor): the pointwise-max surrogate built from the
// eps-argmax sets at the anchor, with every piece linearized at the anchor.
// Its diagonal value (y = anchor) equals the empirical risk there, and for
// affine pieces it majorizes the risk everywhere.
inline SurrogateParts surrogate_value(const CompiledProblem& problem, std::span<const double> anchor,
                                      double eps, std::span<const double> y) {
    if (eps < 0.0) throw std::invalid_argument("surrogate_value: eps must be nonnegative");
    SurrogateParts parts;
    Vec step = sub(y, anchor);
    for (int n = 0; n < problem.size(); ++n) {
        const auto& sample = problem.sample(n);
        const auto loss = make_loss(problem.loss_kind(), sample.z);
        const EpsArgmax sets = eps_argmax(sample, anchor, eps);

        double g_lin = -std::numeric_limits<double>::infinity();
        for (int j : sets.g_indices) {
            const Vec grad = detail::piece_gradient_at(sample.g[j], anchor);
            g_lin = std::max(g_lin, sets.g_values[j] + dot(grad, step));
        }
        double f_lin = -std::numeric_limits<double>::infinity();
        for (int j : sets.f_indices) {
            const Vec grad = detail::piece_gradient_at(sample.f[j], anchor);
            f_lin = std::max(f_lin, sets.f_values[j] + dot(grad, step));
        }

        const double f_y = family_max(sample.f, y).value;
        const double g_y = family_max(sample.g, y).value;
        parts.up += loss.up(f_y - g_lin);
        parts.down += loss.down(f_lin - g_y);
    }
    parts.up /= problem.size();
    parts.down /= problem.size();
    parts.total = parts.up + parts.down;
    return parts;
}

inline SurrogateParts surrogate_value(const DifferenceMaxModel& model, LossKind loss, const Dataset& data,
                                      std::span<const double> anchor, double eps,
                                      std::span<const double> y) {
    return surrogate_value(CompiledProblem(model, loss, data), anchor, eps, y);
}

// The indexed convex majorant
//
//   Mhat_{N;J1,J2}(x, anchor) + (c/2) ||x - anchor||^2
//
// for one index selection: h_up(f(x) - [linearized g_{j2}]) +
// h_down([linearized f_{j1}] - g(x)), averaged over samples.  Convex in x;
// strongly convex once c > 0.
class SurrogateProblem {
  public:
    SurrogateProblem(CompiledProblemPtr problem, FeasibleSet feasible, Vec anchor, double eps,
                     IndexSelection selection, double prox_weight)
        : problem_(std::move(problem)),
          feasible_(std::move(feasible)),
          anchor_(std::move(anchor)),
          eps_(eps),
          selection_(std::move(selection)),
          prox_weight_(prox_weight) {
        if (prox_weight_ < 0.0) throw std::invalid_argument("SurrogateProblem: prox weight must be >= 0");
        if (static_cast<int>(selection_.pairs.size()) != problem_->size())
            throw std::invalid_argument("SurrogateProblem: selection size mismatch");
        lin_.reserve(problem_->size());
        for (int n = 0; n < problem_->size(); ++n) {
            const auto& sample = problem_->sample(n);
            const auto [j1, j2] = selection_.pairs[n];
            if (j1 < 0 || j1 >= static_cast<int>(sample.f.size()) || j2 < 0 ||
                j2 >= static_cast<int>(sample.g.size()))
                throw std::invalid_argument("SurrogateProblem: selection index out of range");
            LinTerm term;
            term.f_value = sample.f[j1].value(anchor_);
            term.g_value = sample.g[j2].value(anchor_);
            term.f_slope = detail::piece_gradient_at(sample.f[j1], anchor_);
            term.g_slope = detail::piece_gradient_at(sample.g[j2], anchor_);
            lin_.push_back(std::move(term));
        }
    }

    const CompiledProblem& problem() const { return *problem_; }
    CompiledProblemPtr problem_ptr() const { return problem_; }
    const FeasibleSet& feasible() const { return feasible_; }
    const Vec& anchor() const { return anchor_; }
    double eps() const { return eps_; }
    const IndexSelection& selection() const { return selection_; }
    double prox_weight() const { return prox_weight_; }

    // Mhat without the proximal term.
    double raw_value(std::span<const double> x) const {
        double s = 0.0;
        Vec step = sub(x, anchor_);
        for (int n = 0; n < problem_->size(); ++n) s += sample_terms(n, x, step).loss;
        return s / problem_->size();
    }

    double value(std::span<const double> x) const { return raw_value(x) + prox(x); }

    // Returns the proximal objective value and fills a subgradient of it.
    double value_and_subgradient(std::span<const double> x, Vec& grad) const {
        const int p = problem_->p();
        grad.assign(p, 0.0);
        double s = 0.0;
        Vec step = sub(x, anchor_);
        for (int n = 0; n < problem_->size(); ++n) {
            const auto& sample = problem_->sample(n);
            const auto t = sample_terms(n, x, step);
            s += t.loss;
            const auto loss = make_loss(problem_->loss_kind(), sample.z);
            const double du = loss.up_derivative(t.up_arg);
            const double dd = loss.down_derivative(t.down_arg);
            if (du != 0.0) {
                sample.f[t.f_active].add_gradient(x, du, grad);
                axpy(-du, lin_[n].g_slope, grad);
            }
            if (dd != 0.0) {
                axpy(dd, lin_[n].f_slope, grad);
                sample.g[t.g_active].add_gradient(x, -dd, grad);
            }
        }
        const double inv_n = 1.0 / problem_->size();
        s *= inv_n;
        for (auto& v : grad) v *= inv_n;
        if (prox_weight_ > 0.0) {
            axpy(prox_weight_, step, grad);
            s += 0.5 * prox_weight_ * norm_sq(step);
        }
        return s;
    }

    Vec subgradient(std::span<const double> x) const {
        Vec g;
        value_and_subgradient(x, g);
        return g;
    }

  private:
    struct LinTerm {
        double f_value, g_value;
        Vec f_slope, g_slope;
    };

    struct SampleTerms {
        double loss, up_arg, down_arg;
        int f_active, g_active;
    };

    double prox(std::span<const double> x) const {
        if (prox_weight_ == 0.0) return 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - anchor_[i];
            s += d * d;
        }
        return 0.5 * prox_weight_ * s;
    }

    SampleTerms sample_terms(int n, std::span<const double> x, std::span<const double> step) const {
        const auto& sample = problem_->sample(n);
        const auto fm = family_max(sample.f, x);
        const auto gm = family_max(sample.g, x);
        const double up_arg = fm.value - (lin_[n].g_value + dot(lin_[n].g_slope, step));
        const double down_arg = (lin_[n].f_value + dot(lin_[n].f_slope, step)) - gm.value;
        const auto loss = make_loss(problem_->loss_kind(), sample.z);
        return {loss.up(up_arg) + loss.down(down_arg), up_arg, down_arg, fm.argmax, gm.argmax};
    }

    CompiledProblemPtr problem_;
    FeasibleSet feasible_;
    Vec anchor_;
    double eps_;
    IndexSelection selection_;
    double prox_weight_;
    std::vector<LinTerm> lin_;
};

// Validates the selection against the eps-argmax sets at the anchor.
inline SurrogateProblem build_surrogate(CompiledProblemPtr problem, const FeasibleSet& feasible,
                                        const Vec& anchor, double eps, const IndexSelection& selection,
                                        double prox_weight) {
    if (static_cast<int>(selection.pairs.size()) != problem->size())
        throw std::invalid_argument("build_surrogate: selection size mismatch");
    for (int n = 0; n < problem->size(); ++n) {
        const EpsArgmax sets = eps_argmax(problem->sample(n), anchor, eps);
        const auto [j1, j2] = selection.pairs[n];
        const bool ok_f = std::find(sets.f_indices.begin(), sets.f_indices.end(), j1) != sets.f_indices.end();
        const bool ok_g = std::find(sets.g_indices.begin(), sets.g_indices.end(), j2) != sets.g_indices.end();
        if (!ok_f || !ok_g) throw std::invalid_argument("build_surrogate: selection not in eps-argmax sets");
    }
    return SurrogateProblem(std::move(problem), feasible, anchor, eps, selection, prox_weight);
}

// Exact one-sided directional derivative of the empirical risk, valid for a
// differentiable loss:  (1/N) sum_n h'(m(x)) [max_{j in A_f} grad f_j . v -
// max_{j in A_g} grad g_j . v].
inline double directional_derivative(const CompiledProblem& problem, std::span<const double> x,
                                     std::span<const double> v) {
    if (problem.loss_kind() != LossKind::squared)
        throw std::invalid_argument("directional_derivative: loss must be differentiable (squared)");
    double s = 0.0;
    for (int n = 0; n < problem.size(); ++n) {
        const auto& sample = problem.sample(n);
        const EpsArgmax sets = eps_argmax(sample, x, 0.0);
        double df = -std::numeric_limits<double>::infinity();
        for (int j : sets.f_indices) df = std::max(df, dot(detail::piece_gradient_at(sample.f[j], x), v));
        double dg = -std::numeric_limits<double>::infinity();
        for (int j : sets.g_indices) dg = std::max(dg, dot(detail::piece_gradient_at(sample.g[j], x), v));
        const double m = sets.f_values[sets.f_indices.front()] - sets.g_values[sets.g_indices.front()];
        s += make_loss(problem.loss_kind(), sample.z).derivative(m) * (df - dg);
    }
    return s / problem.size();
}

inline double directional_derivative(const DifferenceMaxModel& model, LossKind loss, const Dataset& data,
                                     std::span<const double> x, std::span<const double> v) {
    return directional_derivative(CompiledProblem(model, loss, data), x, v);
}

struct ClarkeProbe {
    double averaged_limit_gradient_norm;    // || (g+ + g-) / 2 ||
    double descent_directional_derivative;  // M_N'(0; x_bar)
    Vec limit_gradient_plus;
    Vec limit_gradient_minus;
};

// The Clarke-vs-d dichotomy probe at the origin of the empirical phase
// problem: gradients along +x_hat/k and -x_hat/k average to zero (the Clarke
// stationarity construction) while the directional derivative along the
// reference signal is negative.
inline ClarkeProbe clarke_probe_origin(const Dataset& data, std::span<const double> x_hat,
                                       std::span<const double> x_bar) {
    data.validate();
    const int p = data.d;
    if (static_cast<int>(x_hat.size()) != p || static_cast<int>(x_bar.size()) != p)
        throw std::invalid_argument("clarke_probe_origin: dimension mismatch");
    const double nh = norm(x_hat), nb = norm(x_bar);
    if (nh == 0.0 || nb == 0.0) throw std::invalid_argument("clarke_probe_origin: degenerate direction");
    if (std::abs(dot(x_hat, x_bar)) > 1e-8 * nh * nb)
        throw std::invalid_argument("clarke_probe_origin: direction not orthogonal to the reference");

    // grad M_N(x) = (2/N) sum_n (|x.xi_n| - z_n) sgn(x.xi_n) xi_n at
    // differentiable points; evaluated at +-x_hat/k.
    const double k = 1e8;
    Vec gplus(p, 0.0), gminus(p, 0.0);
    for (int n = 0; n < data.size(); ++n) {
        const double t = dot(x_hat, data.features[n]);
        const double s = t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
        const double rplus = (std::abs(t) / k - data.responses[n]) * s;
        axpy(2.0 * rplus / data.size(), data.features[n], gplus);
        const double rminus = (std::abs(t) / k - data.responses[n]) * (-s);
        axpy(2.0 * rminus / data.size(), data.features[n], gminus);
    }
    Vec avg = add(gplus, gminus);
    for (auto& v : avg) v *= 0.5;

    const DifferenceMaxModel phase = build_phase_retrieval_model(p);
    const Vec origin(p, 0.0);
    const double dd =
        directional_derivative(CompiledProblem(phase, LossKind::squared, data), origin, x_bar);
    return {norm(avg), dd, std::move(gplus), std::move(gminus)};
}

// Sampled lower estimate of the sufficient-separation constant: the infimum
// over the ball of the gaps between each family's active pieces and the
// rest.  Families with one piece impose no constraint; a sampled tie gives 0.
inline double sufficient_separation_margin(const DifferenceMaxModel& model, const Dataset& data,
                                           std::span<const double> x, double delta, int sample_count,
                                           std::uint64_t seed = 0) {
    if (delta <= 0.0) throw std::invalid_argument("sufficient_separation_margin: delta must be positive");
    const CompiledProblem problem(model, LossKind::squared, data);
    Rng rng(seed);
    double margin = std::numeric_limits<double>::infinity();
    Vec center(x.begin(), x.end());
    for (int trial = 0; trial <= sample_count; ++trial) {
        const Vec point = trial == 0 ? center : rng.ball_vector(center, delta);
        for (int n = 0; n < problem.size(); ++n) {
            const EpsArgmax sets = eps_argmax(problem.sample(n), point, 0.0);
            for (const auto& [values, active] :
                 {std::pair{&sets.f_values, &sets.f_indices}, std::pair{&sets.g_values, &sets.g_indices}}) {
                if (values->size() <= 1) continue;
                if (active->size() == values->size()) return 0.0;  // tie: all pieces active
                const double best = (*values)[active->front()];
                double runner = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < static_cast<int>(values->size()); ++j)
                    if (std::find(active->begin(), active->end(), j) == active->end())
                        runner = std::max(runner, (*values)[j]);
                margin = std::min(margin, best - runner);
                if (margin == 0.0) return 0.0;
            }
        }
    }
    return margin;
}

// ----- certification -------------------------------------------------------

struct ConvexSolveResult {
    Vec x;
    double value = 0.0;        // objective at x (including any proximal term)
    double lower_bound = 0.0;  // certified lower bound on the constrained minimum
    double gap_bound = 0.0;    // value - lower_bound
    bool reached_tolerance = false;
    int iterations = 0;
};

// Handle to a convex subproblem solver; gap_tolerance is the target on the
// provable optimality gap.
using ConvexSolver =
    std::function<ConvexSolveResult(const SurrogateProblem&, const Vec& x0, double gap_tolerance)>;

enum class CertificateVerdict { certified, refuted, inconclusive_budget };

inline const char* to_string(CertificateVerdict v) {
    switch (v) {
        case CertificateVerdict::certified: return "certified";
        case CertificateVerdict::refuted: return "refuted";
        default: return "inconclusive-budget";
    }
}

struct Certificate {
    Vec anchor;
    double eps = 0.0;
    double tolerance = 0.0;
    double anchor_risk = 0.0;           // M_N(anchor)
    std::vector<double> gaps;           // min-value estimate minus M_N(anchor), per combination
    std::vector<double> gap_bounds;     // certified lower bound minus M_N(anchor)
    int ambiguous_samples = 0;
    std::uint64_t combinations_total = 0;  // saturates at uint64 max
    bool total_exact = true;
    std::uint64_t combinations_examined = 0;
    bool enumerated_all = false;
    CertificateVerdict verdict = CertificateVerdict::inconclusive_budget;
    Vec witness;                      // refuted only
    double witness_objective = 0.0;   // Mhat at the witness
    IndexSelection witness_selection;  // the refuting combination
    std::uint64_t seed = 0;
    std::string note;

    double worst_gap() const {
        double w = 0.0;
        for (double g : gaps) w = std::max(w, -g);
        return w;  // how far any subproblem minimum fell below M_N(anchor)
    }
};

namespace detail {

struct AmbiguityScan {
    std::vector<EpsArgmax> sets;
    std::vector<int> ambiguous;  // sample indices with more than one pair
    std::uint64_t total = 1;
    bool exact = true;
};

inline AmbiguityScan scan_eps_sets(const CompiledProblem& problem, std::span<const double> x, double eps) {
    AmbiguityScan scan;
    scan.sets.reserve(problem.size());
    for (int n = 0; n < problem.size(); ++n) {
        scan.sets.push_back(eps_argmax(problem.sample(n), x, eps));
        const auto& s = scan.sets.back();
        const std::uint64_t count =
            static_cast<std::uint64_t>(s.f_indices.size()) * s.g_indices.size();
        if (count > 1) {
            scan.ambiguous.push_back(n);
            if (scan.exact && scan.total > std::numeric_limits<std::uint64_t>::max() / count) {
                scan.exact = false;
                scan.total = std::numeric_limits<std::uint64_t>::max();
            }
            if (scan.exact) scan.total *= count;
        }
    }
    return scan;
}

inline IndexSelection smallest_index_selection(const AmbiguityScan& scan) {
    IndexSelection sel;
    sel.pairs.reserve(scan.sets.size());
    for (const auto& s : scan.sets) sel.pairs.emplace_back(s.f_indices.front(), s.g_indices.front());
    return sel;
}

// Odometer over the ambiguous samples; returns false once exhausted.
inline bool advance_selection(const AmbiguityScan& scan, std::vector<std::pair<int, int>>& cursor,
                              IndexSelection& sel) {
    for (std::size_t i = 0; i < scan.ambiguous.size(); ++i) {
        const int n = scan.ambiguous[i];
        const auto& s = scan.sets[n];
        auto& [fi, gi] = cursor[i];
        if (++fi < static_cast<int>(s.f_indices.size())) {
            sel.pairs[n] = {s.f_indices[fi], s.g_indices[gi]};
            return true;
        }
        fi = 0;
        sel.pairs[n].first = s.f_indices[0];
        if (++gi < static_cast<int>(s.g_indices.size())) {
            sel.pairs[n].second = s.g_indices[gi];
            return true;
        }
        gi = 0;
        sel.pairs[n].second = s.g_indices[0];
    }
    return false;
}

inline IndexSelection random_selection(const AmbiguityScan& scan, Rng& rng) {
    IndexSelection sel;
    sel.pairs.reserve(scan.sets.size());
    for (const auto& s : scan.sets)
        sel.pairs.emplace_back(s.f_indices[rng.below(s.f_indices.size())],
                               s.g_indices[rng.below(s.g_indices.size())]);
    return sel;
}

}  // namespace detail

inline double default_certification_tolerance(double anchor_risk) {
    return 1e-7 * (1.0 + anchor_risk);
}

// Checks Definition-style composite eps-strong d-stationarity of the anchor:
// every index combination's convex subproblem minimum must stay above
// M_N(anchor) - tolerance.  Combinations are enumerated exhaustively when
// their count fits the budget, otherwise the smallest-index combination plus
// uniformly sampled ones are examined (an absent refutation is then reported
// as inconclusive).  Each subproblem is solved with a small auxiliary
// proximal weight sized so that the certified lower bound carries over to the
// prox-free minimum within tolerance/10.
inline Certificate certify_strong_dstationarity(CompiledProblemPtr problem, const FeasibleSet& feasible,
                                                const Vec& anchor, double eps, std::uint64_t budget,
                                                double tolerance, const ConvexSolver& solver,
                                                std::uint64_t seed = 0) {
    if (budget < 1) throw std::invalid_argument("certify: budget must be >= 1");
    if (eps < 0.0) throw std::invalid_argument("certify: eps must be nonnegative");

    Certificate cert;
    cert.anchor = anchor;
    cert.eps = eps;
    cert.anchor_risk = problem->risk(anchor);
    cert.tolerance = tolerance > 0.0 ? tolerance : default_certification_tolerance(cert.anchor_risk);
    cert.seed = seed;

    const auto scan = detail::scan_eps_sets(*problem, anchor, eps);
    cert.ambiguous_samples = static_cast<int>(scan.ambiguous.size());
    cert.combinations_total = scan.total;
    cert.total_exact = scan.exact;
    cert.enumerated_all = scan.exact && scan.total <= budget;

    const double reach = std::max(feasible.max_distance_from(anchor), 1e-12);
    const double prox_weight = cert.tolerance / (10.0 * reach * reach);
    const double prox_distortion = 0.5 * prox_weight * reach * reach;  // = tolerance / 20
    const double solver_gap = prox_distortion;                          // total slack: tolerance / 10

    bool bound_failures = false;
    auto examine = [&](const IndexSelection& sel) -> bool {  // true when refuted
        SurrogateProblem sub(problem, feasible, anchor, eps, sel, prox_weight);
        const ConvexSolveResult res = solver(sub, anchor, solver_gap);
        const double raw = sub.raw_value(res.x);  // direct evaluation, no prox
        cert.gaps.push_back(raw - cert.anchor_risk);
        cert.gap_bounds.push_back(res.lower_bound - prox_distortion - cert.anchor_risk);
        if (!res.reached_tolerance) bound_failures = true;
        ++cert.combinations_examined;
        if (raw < cert.anchor_risk - cert.tolerance) {
            cert.verdict = CertificateVerdict::refuted;
            cert.witness = res.x;
            cert.witness_objective = raw;
            cert.witness_selection = sel;
            return true;
        }
        return false;
    };

    IndexSelection sel = detail::smallest_index_selection(scan);
    bool refuted = examine(sel);
    if (!refuted) {
        if (cert.enumerated_all) {
            std::vector<std::pair<int, int>> cursor(scan.ambiguous.size(), {0, 0});
            while (!refuted && detail::advance_selection(scan, cursor, sel)) refuted = examine(sel);
        } else {
            Rng rng(seed);
            while (!refuted && cert.combinations_examined < budget)
                refuted = examine(detail::random_selection(scan, rng));
        }
    }

    if (!refuted) {
        bool bounds_ok = true;
        for (double b : cert.gap_bounds)
            if (b < -cert.tolerance) bounds_ok = false;
        if (cert.enumerated_all && bounds_ok) {
            cert.verdict = CertificateVerdict::certified;
        } else {
            cert.verdict = CertificateVerdict::inconclusive_budget;
            cert.note = !cert.enumerated_all ? "combination space larger than budget; sampled subset only"
                                             : "subproblem lower bounds did not reach the tolerance";
        }
        if (bound_failures && cert.note.empty()) cert.note = "some subproblem solves hit iteration limits";
    }
    return cert;
}

}  // namespace dmax
