#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <string>
#include <vector>

#include "dmax/dataset.hpp"
#include "dmax/phase_oracle.hpp"
#include "dmax/rng.hpp"
#include "dmax/solver.hpp"

namespace dmax {

// Seeded generator for phase retrieval data: sphere-uniform features
// (standard normal vectors divided by their norm) and responses
// z_n = |signal . xi_n| + sigma * normal.
struct GeneratorSpec {
    std::uint64_t seed = 0;
    Vec signal;
    double sigma = 0.0;
    int n = 0;
};

inline Dataset generate_phase_dataset(const GeneratorSpec& spec) {
    if (spec.n < 1) throw std::invalid_argument("generate_phase_dataset: n must be >= 1");
    if (spec.sigma < 0.0) throw std::invalid_argument("generate_phase_dataset: sigma must be nonnegative");
    const int p = static_cast<int>(spec.signal.size());
    if (p < 1) throw std::invalid_argument("generate_phase_dataset: empty signal");
    Rng rng(spec.seed);
    Dataset data;
    data.d = p;
    data.features.reserve(spec.n);
    data.responses.reserve(spec.n);
    for (int i = 0; i < spec.n; ++i) {
        Vec xi = rng.sphere_vector(p);
        const double z = std::abs(dot(spec.signal, xi)) + spec.sigma * rng.normal();
        data.features.push_back(std::move(xi));
        data.responses.push_back(z);
    }
    data.provenance.seed = spec.seed;
    data.provenance.generator = "phase-sphere";
    return data;
}

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int draws = 0;
};

// Monte-Carlo estimate of the population risk E h(m(x; xi); z) under the
// phase sampling law, for any model/loss pair.
inline McEstimate population_risk_mc(const DifferenceMaxModel& model, LossKind loss,
                                     const PhasePopulation& pop, std::span<const double> x, int draws,
                                     std::uint64_t seed) {
    if (draws < 100) throw std::invalid_argument("population_risk_mc: needs at least 100 draws");
    Rng rng(seed);
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < draws; ++i) {
        const Vec xi = rng.sphere_vector(pop.p);
        const double z = std::abs(dot(pop.signal, xi)) + pop.sigma * rng.normal();
        const double value = make_loss(loss, z).value(model_value(model, x, xi));
        const double delta = value - mean;
        mean += delta / (i + 1);
        m2 += delta * (value - mean);
    }
    const double variance = draws > 1 ? m2 / (draws - 1) : 0.0;
    return {mean, std::sqrt(variance / draws), draws};
}

// (1/N) sum_n [L(x; w_n) - mean]^2, the plug-in variance of the per-sample
// losses.
inline double variance_estimator(const DifferenceMaxModel& model, LossKind loss, const Dataset& data,
                                 std::span<const double> x) {
    if (data.size() < 2) throw std::invalid_argument("variance_estimator: needs at least two samples");
    const CompiledProblem problem(model, loss, data);
    const Vec losses = problem.per_sample_losses(x);
    double mean = 0.0;
    for (double v : losses) mean += v;
    mean /= losses.size();
    double s = 0.0;
    for (double v : losses) s += (v - mean) * (v - mean);
    return s / losses.size();
}

inline double variance_estimator(const CompiledProblem& problem, std::span<const double> x) {
    if (problem.size() < 2) throw std::invalid_argument("variance_estimator: needs at least two samples");
    const Vec losses = problem.per_sample_losses(x);
    double mean = 0.0;
    for (double v : losses) mean += v;
    mean /= losses.size();
    double s = 0.0;
    for (double v : losses) s += (v - mean) * (v - mean);
    return s / losses.size();
}

enum class StartMode { saddle_analog, random_ball };

struct ExperimentConfig {
    std::vector<int> sample_sizes;
    int replications = 20;
    std::uint64_t base_seed = 0;
    Vec signal;
    double sigma = 0.1;
    double radius_factor = 3.0;  // feasible ball radius = factor * ||signal||
    StartMode start = StartMode::saddle_analog;
    MMConfig solver;
    int threads = 1;
};

struct ReplicationRecord {
    int n = 0;
    int replication = 0;
    std::uint64_t seed = 0;
    Vec x_hat;
    double dist_d0 = 0.0;  // min(||x - xbar||, ||x + xbar||)
    double angle = 0.0;    // angle to xbar, in [0, pi]
    double empirical_risk = 0.0;
    std::string verdict;
    std::string status;
    bool solver_ok = true;
    std::string error;
};

struct Aggregate {
    int n = 0;
    double median_dist = 0.0, q1_dist = 0.0, q3_dist = 0.0;
    double median_risk = 0.0, q1_risk = 0.0, q3_risk = 0.0;
};

struct RateFit {
    bool defined = false;
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;      // root mean squared log residual
    double slope_stderr = 0.0;  // least-squares standard error of the slope
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<ReplicationRecord> records;  // sorted by (n, replication)
    std::vector<Aggregate> aggregates;
    RateFit rate;  // filled when at least three distinct sample sizes ran
};

inline RateFit fit_rate(const ExperimentReport& report);

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t slot) {
    SplitMix64 sm(base ^ ((index + 1) * 0x9E3779B97F4A7C15ULL));
    std::uint64_t out = 0;
    for (std::uint64_t i = 0; i <= slot; ++i) out = sm.next();
    return out;
}

inline double quantile(Vec sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * (sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - lo;
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// Unit vector orthogonal to the reference, drawn from the rotation-invariant
// law on that subspace.
inline Vec random_orthogonal_unit(Rng& rng, const Vec& reference) {
    const int p = static_cast<int>(reference.size());
    const double nr2 = norm_sq(reference);
    while (true) {
        Vec v = rng.sphere_vector(p);
        const double c = dot(v, reference) / nr2;
        for (int i = 0; i < p; ++i) v[i] -= c * reference[i];
        const double nv = norm(v);
        if (nv > 1e-8) {
            for (auto& y : v) y /= nv;
            return v;
        }
    }
}

template <typename Fn>
inline void parallel_for(int count, int threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::future<void>> jobs;
    const int workers = std::min(threads, count);
    for (int w = 0; w < workers; ++w) {
        jobs.push_back(std::async(std::launch::async, [&, w]() {
            for (int i = w; i < count; i += workers) fn(i);
        }));
    }
    for (auto& job : jobs) job.get();
}

}  // namespace detail

// One record: fresh dataset from the record's substream, one mm_solve run
// from the configured start, distances and angle against the signal.
inline ReplicationRecord run_replication(const ExperimentConfig& cfg, int n, int replication,
                                         std::uint64_t record_index) {
    ReplicationRecord rec;
    rec.n = n;
    rec.replication = replication;
    rec.seed = detail::derive_seed(cfg.base_seed, record_index, 0);
    try {
        const int p = static_cast<int>(cfg.signal.size());
        GeneratorSpec gen{rec.seed, cfg.signal, cfg.sigma, n};
        const Dataset data = generate_phase_dataset(gen);
        const DifferenceMaxModel model = build_phase_retrieval_model(p);
        const FeasibleSet feasible = FeasibleSet::ball(p, cfg.radius_factor * norm(cfg.signal));

        Rng start_rng(detail::derive_seed(cfg.base_seed, record_index, 1));
        Vec x0;
        if (cfg.start == StartMode::saddle_analog) {
            x0 = detail::random_orthogonal_unit(start_rng, cfg.signal);
            const double radius = 2.0 / std::numbers::pi * norm(cfg.signal);
            for (auto& v : x0) v *= radius;
        } else {
            x0 = start_rng.ball_vector(Vec(p, 0.0), cfg.radius_factor * norm(cfg.signal));
        }

        MMConfig solver_cfg = cfg.solver;
        solver_cfg.seed = detail::derive_seed(cfg.base_seed, record_index, 2);
        auto [x_hat, trace] = mm_solve(model, LossKind::squared, data, feasible, x0, solver_cfg);

        rec.x_hat = x_hat;
        Vec flipped = scaled(cfg.signal, -1.0);
        rec.dist_d0 = std::min(distance(x_hat, cfg.signal), distance(x_hat, flipped));
        rec.angle = angle_between(x_hat, cfg.signal);
        rec.empirical_risk = empirical_risk(model, LossKind::squared, data, x_hat);
        rec.verdict = trace.status == "certified" || trace.status == "inconclusive-budget"
                          ? to_string(trace.certificate.verdict)
                          : "none";
        rec.status = trace.status;
    } catch (const std::exception& err) {
        rec.solver_ok = false;
        rec.error = err.what();
    }
    return rec;
}

inline ExperimentReport run_consistency_experiment(const ExperimentConfig& cfg) {
    if (cfg.sample_sizes.empty())
        throw std::invalid_argument("run_consistency_experiment: no sample sizes");
    if (cfg.replications < 1)
        throw std::invalid_argument("run_consistency_experiment: replications must be >= 1");
    ExperimentReport report;
    report.config = cfg;
    const int total = static_cast<int>(cfg.sample_sizes.size()) * cfg.replications;
    report.records.resize(total);
    detail::parallel_for(total, cfg.threads, [&](int index) {
        const int size_index = index / cfg.replications;
        const int replication = index % cfg.replications;
        report.records[index] =
            run_replication(cfg, cfg.sample_sizes[size_index], replication, index);
    });

    for (std::size_t s = 0; s < cfg.sample_sizes.size(); ++s) {
        Vec dists, risks;
        for (int r = 0; r < cfg.replications; ++r) {
            const auto& rec = report.records[s * cfg.replications + r];
            if (!rec.solver_ok) continue;
            dists.push_back(rec.dist_d0);
            risks.push_back(rec.empirical_risk);
        }
        std::sort(dists.begin(), dists.end());
        std::sort(risks.begin(), risks.end());
        Aggregate agg;
        agg.n = cfg.sample_sizes[s];
        agg.median_dist = detail::quantile(dists, 0.5);
        agg.q1_dist = detail::quantile(dists, 0.25);
        agg.q3_dist = detail::quantile(dists, 0.75);
        agg.median_risk = detail::quantile(risks, 0.5);
        agg.q1_risk = detail::quantile(risks, 0.25);
        agg.q3_risk = detail::quantile(risks, 0.75);
        report.aggregates.push_back(agg);
    }
    std::vector<int> distinct = cfg.sample_sizes;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() >= 3) report.rate = fit_rate(report);
    return report;
}

// Least-squares slope of log(median distance) against log N.
inline RateFit fit_rate(const ExperimentReport& report) {
    std::vector<std::pair<double, double>> points;
    for (const auto& agg : report.aggregates) {
        bool duplicate = false;
        for (const auto& pt : points) duplicate = duplicate || pt.first == std::log(double(agg.n));
        if (!duplicate) points.emplace_back(std::log(double(agg.n)), agg.median_dist);
    }
    if (points.size() < 3) throw std::invalid_argument("fit_rate: needs at least 3 distinct sample sizes");
    RateFit fit;
    for (const auto& pt : points)
        if (pt.second <= 0.0) return fit;  // degenerate (e.g. exact recovery): slope undefined
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [lx, med] : points) {
        const double ly = std::log(med);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double count = static_cast<double>(points.size());
    const double denom = count * sxx - sx * sx;
    fit.defined = true;
    fit.slope = (count * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / count;
    double rss = 0.0;
    for (auto& [lx, med] : points) {
        const double e = std::log(med) - (fit.intercept + fit.slope * lx);
        rss += e * e;
    }
    fit.residual = std::sqrt(rss / count);
    if (points.size() > 2)
        fit.slope_stderr = std::sqrt(rss / (count - 2.0) / (sxx - sx * sx / count));
    return fit;
}

struct NormalityConfig {
    int n = 2000;
    int replications = 100;
    std::uint64_t base_seed = 0;
    Vec signal;
    double sigma = 0.1;
    double radius_factor = 3.0;
    StartMode start = StartMode::saddle_analog;
    MMConfig solver;
    int threads = 1;
};

struct NormalitySummary {
    double mean = 0.0;
    double variance = 0.0;  // unbiased sample variance
    int count = 0;
    Vec statistics;
};

// Normalized statistics T_r = sqrt(N / V_hat(x_r)) (M_N(x_r) - M(x_inf_r)),
// with x_inf_r the nearer of the two signs of the signal and M evaluated by
// the closed-form oracle.  A vanishing numerator (noiseless recovery) yields
// T_r = 0; a vanishing variance with a non-vanishing numerator is an error.
inline NormalitySummary normality_check(const NormalityConfig& cfg) {
    if (cfg.replications < 20) throw std::invalid_argument("normality_check: needs at least 20 replications");
    const PhasePopulation pop = make_phase_population(cfg.signal, cfg.sigma);

    ExperimentConfig exp_cfg;
    exp_cfg.sample_sizes = {cfg.n};
    exp_cfg.replications = cfg.replications;
    exp_cfg.base_seed = cfg.base_seed;
    exp_cfg.signal = cfg.signal;
    exp_cfg.sigma = cfg.sigma;
    exp_cfg.radius_factor = cfg.radius_factor;
    exp_cfg.start = cfg.start;
    exp_cfg.solver = cfg.solver;
    exp_cfg.threads = cfg.threads;

    NormalitySummary summary;
    summary.statistics.resize(cfg.replications, 0.0);
    const int p = static_cast<int>(cfg.signal.size());
    const DifferenceMaxModel model = build_phase_retrieval_model(p);

    detail::parallel_for(cfg.replications, cfg.threads, [&](int r) {
        const ReplicationRecord rec = run_replication(exp_cfg, cfg.n, r, r);
        if (!rec.solver_ok) throw std::runtime_error("normality_check: replication failed: " + rec.error);
        // regenerate the record's dataset to evaluate V_hat
        const Dataset data = generate_phase_dataset({rec.seed, cfg.signal, cfg.sigma, cfg.n});
        const double vhat = variance_estimator(model, LossKind::squared, data, rec.x_hat);
        Vec flipped = scaled(cfg.signal, -1.0);
        const Vec& x_inf = distance(rec.x_hat, cfg.signal) <= distance(rec.x_hat, flipped)
                               ? cfg.signal
                               : flipped;
        const double population = population_risk(pop, x_inf);
        const double numerator = rec.empirical_risk - population;
        // a numerator inside ten times the solver's certification resolution
        // carries no statistical signal (noiseless runs recover exactly)
        if (std::abs(numerator) <= 10.0 * default_certification_tolerance(population)) {
            summary.statistics[r] = 0.0;
        } else if (vhat <= 0.0) {
            throw std::runtime_error("normality_check: degenerate variance estimate");
        } else {
            summary.statistics[r] = std::sqrt(cfg.n / vhat) * numerator;
        }
    });

    summary.count = cfg.replications;
    for (double t : summary.statistics) summary.mean += t;
    summary.mean /= summary.count;
    for (double t : summary.statistics)
        summary.variance += (t - summary.mean) * (t - summary.mean);
    summary.variance /= std::max(summary.count - 1, 1);
    return summary;
}

}  // namespace dmax
