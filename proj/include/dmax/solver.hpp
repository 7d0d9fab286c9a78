#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include "dmax/stationarity.hpp"

namespace dmax {

struct ConvexSolveConfig {
    enum class StepRule { diminishing, constant };

    int max_iterations = 2000;  // subgradient phase budget (nonsmooth losses)
    StepRule step_rule = StepRule::diminishing;
    double step_a = 1.0;  // diminishing step a / (k + b), applied to the normalized direction
    double step_b = 10.0;
    double constant_step = 1e-3;
    bool averaging = true;

    int polish_iterations = 5000;  // monotone projected-gradient phase (differentiable losses)
    double default_gap_tolerance = 1e-10;
    double gradient_target = 1e-9;  // secondary stopping criterion for the polish phase
};

namespace detail {

// Certified lower bound on the constrained minimum from one subgradient:
// strong convexity when the proximal weight is positive, otherwise the
// linear bound over the feasible set.
inline double gap_bound_from_subgradient(const SurrogateProblem& sp, std::span<const double> x,
                                         const Vec& g) {
    const double gn = norm(g);
    if (sp.prox_weight() > 0.0) return gn * gn / (2.0 * sp.prox_weight());
    return gn * sp.feasible().max_distance_from(x);
}

}  // namespace detail

// Minimizes a SurrogateProblem over its feasible set.  A projected
// subgradient phase with iterate averaging handles nonsmooth losses; for
// differentiable losses a monotone projected-gradient phase with Armijo
// backtracking then drives the subgradient norm down far enough to certify
// the optimality gap.
inline ConvexSolveResult solve_convex(const SurrogateProblem& sp, const Vec& x0,
                                      const ConvexSolveConfig& cfg, double gap_tolerance = -1.0) {
    const double gap_tol = gap_tolerance > 0.0 ? gap_tolerance : cfg.default_gap_tolerance;
    const auto& feasible = sp.feasible();

    ConvexSolveResult res;
    res.x = feasible.project(x0);
    res.value = sp.value(res.x);
    int iterations = 0;

    auto consider = [&](const Vec& x, double value) {
        if (value < res.value) {
            res.x = x;
            res.value = value;
        }
    };

    // Subgradient phase (skipped for differentiable losses, where the polish
    // phase alone converges and is much faster).
    const bool smooth = make_loss(sp.problem().loss_kind(), 0.0).differentiable();
    if (!smooth) {
        Vec x = res.x;
        Vec average = x;
        Vec g;
        for (int k = 0; k < cfg.max_iterations; ++k, ++iterations) {
            const double value = sp.value_and_subgradient(x, g);
            consider(x, value);
            const double gn = norm(g);
            if (gn == 0.0) break;
            const double step = cfg.step_rule == ConvexSolveConfig::StepRule::diminishing
                                    ? cfg.step_a / (k + cfg.step_b)
                                    : cfg.constant_step;
            for (std::size_t i = 0; i < x.size(); ++i) x[i] -= step * g[i] / gn;
            x = feasible.project(x);
            if (cfg.averaging) {
                for (std::size_t i = 0; i < x.size(); ++i)
                    average[i] += (x[i] - average[i]) / (k + 2.0);
                if ((k + 1) % 64 == 0) consider(average, sp.value(average));
            }
        }
        if (cfg.averaging) consider(average, sp.value(average));
        consider(x, sp.value(x));
    }

    Vec x = res.x;
    Vec g;
    double value = sp.value_and_subgradient(x, g);
    double bound = detail::gap_bound_from_subgradient(sp, x, g);
    if (smooth) {
        double step = 1.0;
        for (int k = 0; k < cfg.polish_iterations; ++k, ++iterations) {
            if (bound <= gap_tol && norm(g) <= cfg.gradient_target) break;
            Vec trial(x.size());
            double trial_value = 0.0;
            bool accepted = false;
            for (int back = 0; back < 60; ++back) {
                for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - step * g[i];
                trial = feasible.project(trial);
                trial_value = sp.value(trial);
                double move_sq = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double d = trial[i] - x[i];
                    move_sq += d * d;
                }
                if (move_sq == 0.0) break;
                if (trial_value <= value - 1e-4 * move_sq / step) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;  // kink or numerical floor
            x = std::move(trial);
            value = sp.value_and_subgradient(x, g);
            bound = detail::gap_bound_from_subgradient(sp, x, g);
            step *= 1.6;
        }
        consider(x, value);
    }

    // Bound evaluated at the returned point.
    if (res.value < value) {
        value = sp.value_and_subgradient(res.x, g);
        bound = detail::gap_bound_from_subgradient(sp, res.x, g);
    }
    res.value = std::min(res.value, value);
    res.gap_bound = bound;
    res.lower_bound = res.value - bound;
    res.reached_tolerance = bound <= gap_tol;
    res.iterations = iterations;
    return res;
}

// A ConvexSolver handle backed by solve_convex with the given configuration.
inline ConvexSolver make_convex_solver(ConvexSolveConfig cfg = {}) {
    return [cfg](const SurrogateProblem& sp, const Vec& x0, double gap_tolerance) {
        return solve_convex(sp, x0, cfg, gap_tolerance);
    };
}

struct MMConfig {
    double eps = -1.0;        // < 0: 1e-3 * (1 + largest piece-value spread at x0)
    double prox_weight = 1e-4;
    double movement_tolerance = 1e-6;
    int max_outer_iterations = 500;
    std::uint64_t certification_budget = 256;
    double certification_tolerance = -1.0;  // < 0: 1e-7 * (1 + M_N(x))
    std::uint64_t seed = 0;
    ConvexSolveConfig inner;
    int threads = 1;  // concurrent candidate subproblem solves
};

struct SolveTrace {
    std::vector<Vec> iterates;
    Vec objectives;  // M_N(x^k), one ahead of movements
    Vec movements;
    std::vector<int> ambiguous_counts;
    Certificate certificate;
    double wall_seconds = 0.0;
    bool stalled = false;
    std::string status;  // certified | inconclusive-budget | stalled | max-iterations
    double eps_used = 0.0;
};

namespace detail {

inline double piece_value_spread(const CompiledProblem& problem, std::span<const double> x) {
    double spread = 0.0;
    for (int n = 0; n < problem.size(); ++n) {
        const EpsArgmax sets = eps_argmax(problem.sample(n), x, 0.0);
        for (const Vec* values : {&sets.f_values, &sets.g_values}) {
            const auto [lo, hi] = std::minmax_element(values->begin(), values->end());
            spread = std::max(spread, *hi - *lo);
        }
    }
    return spread;
}

inline std::vector<IndexSelection> candidate_selections(const AmbiguityScan& scan, std::uint64_t budget) {
    std::vector<IndexSelection> out;
    IndexSelection sel = smallest_index_selection(scan);
    out.push_back(sel);
    if (scan.exact && scan.total <= budget) {
        std::vector<std::pair<int, int>> cursor(scan.ambiguous.size(), {0, 0});
        while (advance_selection(scan, cursor, sel)) out.push_back(sel);
    }
    return out;
}

}  // namespace detail

// Majorization-minimization outer loop: at the current point build the
// eps-argmax sets, solve one proximal convex subproblem per index combination
// (all of them while the count fits the budget, the smallest-index selection
// otherwise), and move to the best candidate while the risk decreases.  On
// convergence the point is certified; a refuted certificate supplies a strict
// descent witness and the loop continues from it.
inline std::pair<Vec, SolveTrace> mm_solve(CompiledProblemPtr problem, const FeasibleSet& feasible,
                                           const Vec& x0, const MMConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    SolveTrace trace;
    Vec x = feasible.project(x0);
    double risk = problem->risk(x);
    trace.iterates.push_back(x);
    trace.objectives.push_back(risk);

    double eps = cfg.eps >= 0.0 ? cfg.eps : 1e-3 * (1.0 + detail::piece_value_spread(*problem, x));
    trace.eps_used = eps;
    const ConvexSolver solver = make_convex_solver(cfg.inner);
    bool eps_halved = false;
    trace.status = "max-iterations";

    auto certify_here = [&]() {
        const double tol = cfg.certification_tolerance > 0.0
                               ? cfg.certification_tolerance
                               : default_certification_tolerance(risk);
        return certify_strong_dstationarity(problem, feasible, x, eps, cfg.certification_budget, tol,
                                            solver, cfg.seed);
    };

    for (int outer = 0; outer < cfg.max_outer_iterations; ++outer) {
        const auto scan = detail::scan_eps_sets(*problem, x, eps);
        trace.ambiguous_counts.push_back(static_cast<int>(scan.ambiguous.size()));
        const auto selections = detail::candidate_selections(scan, cfg.certification_budget);

        std::vector<Vec> candidates(selections.size());
        auto solve_one = [&](std::size_t i) {
            SurrogateProblem sub(problem, feasible, x, eps, selections[i], cfg.prox_weight);
            candidates[i] = solve_convex(sub, x, cfg.inner).x;
        };
        if (cfg.threads > 1 && selections.size() > 1) {
            std::vector<std::future<void>> jobs;
            for (std::size_t i = 0; i < selections.size(); ++i)
                jobs.push_back(std::async(std::launch::async, solve_one, i));
            for (auto& job : jobs) job.get();
        } else {
            for (std::size_t i = 0; i < selections.size(); ++i) solve_one(i);
        }

        int best = -1;
        double best_risk = risk;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const double r = problem->risk(candidates[i]);
            if (r < best_risk) {
                best_risk = r;
                best = static_cast<int>(i);
            }
        }
        // improvements below floating noise do not count as progress
        if (best >= 0 && risk - best_risk <= 1e-14 * (1.0 + std::abs(risk))) best = -1;

        if (best >= 0) {
            const double movement = distance(candidates[best], x);
            x = candidates[best];
            risk = best_risk;
            trace.iterates.push_back(x);
            trace.objectives.push_back(risk);
            trace.movements.push_back(movement);
            if (movement > cfg.movement_tolerance) continue;
        } else if (!eps_halved) {
            // Over-wide ambiguity sets can freeze progress; shrink once.
            eps *= 0.5;
            eps_halved = true;
            trace.eps_used = eps;
            continue;
        }

        trace.certificate = certify_here();
        if (trace.certificate.verdict == CertificateVerdict::certified) {
            trace.status = "certified";
            break;
        }
        if (trace.certificate.verdict == CertificateVerdict::inconclusive_budget) {
            trace.status = "inconclusive-budget";
            break;
        }
        // Refuted: the witness strictly decreases the risk (the surrogate
        // majorizes it); continue from there.
        const Vec witness = feasible.project(trace.certificate.witness);
        const double witness_risk = problem->risk(witness);
        if (witness_risk >= risk) {  // floating-point pathology only
            trace.status = "stalled";
            trace.stalled = true;
            break;
        }
        trace.movements.push_back(distance(witness, x));
        x = witness;
        risk = witness_risk;
        trace.iterates.push_back(x);
        trace.objectives.push_back(risk);
    }

    trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {x, trace};
}

inline std::pair<Vec, SolveTrace> mm_solve(const DifferenceMaxModel& model, LossKind loss,
                                           const Dataset& data, const FeasibleSet& feasible,
                                           const Vec& x0, const MMConfig& cfg) {
    return mm_solve(compile_problem(model, loss, data), feasible, x0, cfg);
}

struct MultiStartResult {
    Vec best;
    int best_index = 0;
    std::vector<SolveTrace> traces;
};

inline MultiStartResult multi_start_solve(CompiledProblemPtr problem, const FeasibleSet& feasible,
                                          const std::vector<Vec>& starts, const MMConfig& cfg) {
    if (starts.empty()) throw std::invalid_argument("multi_start_solve: needs at least one start");
    MultiStartResult result;
    double best_risk = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < starts.size(); ++i) {
        auto [x, trace] = mm_solve(problem, feasible, starts[i], cfg);
        const double r = problem->risk(x);
        if (r < best_risk) {
            best_risk = r;
            result.best = x;
            result.best_index = static_cast<int>(i);
        }
        result.traces.push_back(std::move(trace));
    }
    return result;
}

inline MultiStartResult multi_start_solve(const DifferenceMaxModel& model, LossKind loss,
                                          const Dataset& data, const FeasibleSet& feasible,
                                          const std::vector<Vec>& starts, const MMConfig& cfg) {
    return multi_start_solve(compile_problem(model, loss, data), feasible, starts, cfg);
}

}  // namespace dmax
