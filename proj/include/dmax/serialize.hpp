#pragma once

#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "dmax/dataset.hpp"
#include "dmax/experiments.hpp"
#include "dmax/feasible_set.hpp"
#include "dmax/model.hpp"
#include "dmax/solver.hpp"
#include "dmax/stationarity.hpp"

namespace dmax {

using json = nlohmann::json;

// ----- enums ---------------------------------------------------------------

NLOHMANN_JSON_SERIALIZE_ENUM(PieceKind, {
                                            {PieceKind::affine, "affine"},
                                            {PieceKind::squared_plus_affine, "squared-plus-affine"},
                                            {PieceKind::zero, "zero"},
                                        })

NLOHMANN_JSON_SERIALIZE_ENUM(LossKind, {
                                           {LossKind::squared, "squared"},
                                           {LossKind::abs, "abs"},
                                       })

NLOHMANN_JSON_SERIALIZE_ENUM(CertificateVerdict,
                             {
                                 {CertificateVerdict::certified, "certified"},
                                 {CertificateVerdict::refuted, "refuted"},
                                 {CertificateVerdict::inconclusive_budget, "inconclusive-budget"},
                             })

NLOHMANN_JSON_SERIALIZE_ENUM(StartMode, {
                                            {StartMode::saddle_analog, "saddle-analog"},
                                            {StartMode::random_ball, "random-ball"},
                                        })

// ----- model / dataset ------------------------------------------------------

inline void to_json(json& j, const SmoothConvexPiece& piece) {
    j = json{{"kind", piece.kind},
             {"p", piece.p},
             {"d", piece.d},
             {"xi_map", piece.xi_map},
             {"offset_coeffs", piece.offset_coeffs},
             {"weight", piece.weight}};
}

inline void from_json(const json& j, SmoothConvexPiece& piece) {
    j.at("kind").get_to(piece.kind);
    j.at("p").get_to(piece.p);
    j.at("d").get_to(piece.d);
    piece.xi_map = j.value("xi_map", std::vector<double>{});
    piece.offset_coeffs = j.value("offset_coeffs", std::vector<double>{});
    piece.weight = j.value("weight", 1.0);
}

inline void to_json(json& j, const DifferenceMaxModel& model) {
    j = json{{"p", model.p}, {"d", model.d}, {"f_pieces", model.f_pieces}, {"g_pieces", model.g_pieces}};
}

inline void from_json(const json& j, DifferenceMaxModel& model) {
    j.at("p").get_to(model.p);
    j.at("d").get_to(model.d);
    j.at("f_pieces").get_to(model.f_pieces);
    j.at("g_pieces").get_to(model.g_pieces);
    model.validate();
}

inline void to_json(json& j, const Dataset& data) {
    j = json{{"d", data.d},
             {"n", data.size()},
             {"features", data.features},
             {"responses", data.responses},
             {"provenance", {{"seed", data.provenance.seed}, {"generator", data.provenance.generator}}}};
}

inline void from_json(const json& j, Dataset& data) {
    j.at("d").get_to(data.d);
    j.at("features").get_to(data.features);
    j.at("responses").get_to(data.responses);
    if (j.contains("provenance")) {
        data.provenance.seed = j["provenance"].value("seed", std::uint64_t{0});
        data.provenance.generator = j["provenance"].value("generator", "unspecified");
    }
    data.validate();
}

// ----- certificates ----------------------------------------------------------

inline void to_json(json& j, const IndexSelection& sel) {
    j = json::array();
    for (const auto& [j1, j2] : sel.pairs) j.push_back(json::array({j1, j2}));
}

inline void from_json(const json& j, IndexSelection& sel) {
    sel.pairs.clear();
    for (const auto& pair : j) sel.pairs.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
}

inline void to_json(json& j, const Certificate& cert) {
    j = json{{"anchor", cert.anchor},
             {"eps", cert.eps},
             {"tolerance", cert.tolerance},
             {"anchor_risk", cert.anchor_risk},
             {"gaps", cert.gaps},
             {"gap_bounds", cert.gap_bounds},
             {"ambiguous_samples", cert.ambiguous_samples},
             {"combinations_total", cert.combinations_total},
             {"total_exact", cert.total_exact},
             {"combinations_examined", cert.combinations_examined},
             {"enumerated_all", cert.enumerated_all},
             {"verdict", cert.verdict},
             {"seed", cert.seed},
             {"note", cert.note}};
    if (cert.verdict == CertificateVerdict::refuted) {
        j["witness"] = cert.witness;
        j["witness_objective"] = cert.witness_objective;
        j["witness_selection"] = cert.witness_selection;
    }
}

inline void from_json(const json& j, Certificate& cert) {
    j.at("anchor").get_to(cert.anchor);
    j.at("eps").get_to(cert.eps);
    j.at("tolerance").get_to(cert.tolerance);
    j.at("anchor_risk").get_to(cert.anchor_risk);
    j.at("gaps").get_to(cert.gaps);
    cert.gap_bounds = j.value("gap_bounds", std::vector<double>{});
    j.at("ambiguous_samples").get_to(cert.ambiguous_samples);
    j.at("combinations_total").get_to(cert.combinations_total);
    cert.total_exact = j.value("total_exact", true);
    j.at("combinations_examined").get_to(cert.combinations_examined);
    j.at("enumerated_all").get_to(cert.enumerated_all);
    j.at("verdict").get_to(cert.verdict);
    cert.seed = j.value("seed", std::uint64_t{0});
    cert.note = j.value("note", "");
    cert.witness = j.value("witness", Vec{});
    cert.witness_objective = j.value("witness_objective", 0.0);
    if (j.contains("witness_selection")) j.at("witness_selection").get_to(cert.witness_selection);
}

// ----- configs ---------------------------------------------------------------

inline void to_json(json& j, const ConvexSolveConfig& cfg) {
    j = json{{"max_iterations", cfg.max_iterations},
             {"step_rule", cfg.step_rule == ConvexSolveConfig::StepRule::diminishing ? "diminishing"
                                                                                     : "constant"},
             {"step_a", cfg.step_a},
             {"step_b", cfg.step_b},
             {"constant_step", cfg.constant_step},
             {"averaging", cfg.averaging},
             {"polish_iterations", cfg.polish_iterations},
             {"default_gap_tolerance", cfg.default_gap_tolerance},
             {"gradient_target", cfg.gradient_target}};
}

inline void from_json(const json& j, ConvexSolveConfig& cfg) {
    cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
    cfg.step_rule = j.value("step_rule", std::string("diminishing")) == "constant"
                        ? ConvexSolveConfig::StepRule::constant
                        : ConvexSolveConfig::StepRule::diminishing;
    cfg.step_a = j.value("step_a", cfg.step_a);
    cfg.step_b = j.value("step_b", cfg.step_b);
    cfg.constant_step = j.value("constant_step", cfg.constant_step);
    cfg.averaging = j.value("averaging", cfg.averaging);
    cfg.polish_iterations = j.value("polish_iterations", cfg.polish_iterations);
    cfg.default_gap_tolerance = j.value("default_gap_tolerance", cfg.default_gap_tolerance);
    cfg.gradient_target = j.value("gradient_target", cfg.gradient_target);
}

inline void to_json(json& j, const MMConfig& cfg) {
    j = json{{"eps", cfg.eps},
             {"prox_weight", cfg.prox_weight},
             {"movement_tolerance", cfg.movement_tolerance},
             {"max_outer_iterations", cfg.max_outer_iterations},
             {"certification_budget", cfg.certification_budget},
             {"certification_tolerance", cfg.certification_tolerance},
             {"seed", cfg.seed},
             {"inner", cfg.inner},
             {"threads", cfg.threads}};
}

inline void from_json(const json& j, MMConfig& cfg) {
    cfg.eps = j.value("eps", cfg.eps);
    cfg.prox_weight = j.value("prox_weight", cfg.prox_weight);
    cfg.movement_tolerance = j.value("movement_tolerance", cfg.movement_tolerance);
    cfg.max_outer_iterations = j.value("max_outer_iterations", cfg.max_outer_iterations);
    cfg.certification_budget = j.value("certification_budget", cfg.certification_budget);
    cfg.certification_tolerance = j.value("certification_tolerance", cfg.certification_tolerance);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("inner")) j.at("inner").get_to(cfg.inner);
    cfg.threads = j.value("threads", cfg.threads);
}

inline void to_json(json& j, const GeneratorSpec& spec) {
    j = json{{"seed", spec.seed}, {"signal", spec.signal}, {"sigma", spec.sigma}, {"n", spec.n}};
}

inline void from_json(const json& j, GeneratorSpec& spec) {
    j.at("seed").get_to(spec.seed);
    j.at("signal").get_to(spec.signal);
    j.at("sigma").get_to(spec.sigma);
    j.at("n").get_to(spec.n);
}

inline void to_json(json& j, const ExperimentConfig& cfg) {
    j = json{{"sample_sizes", cfg.sample_sizes},
             {"replications", cfg.replications},
             {"base_seed", cfg.base_seed},
             {"signal", cfg.signal},
             {"sigma", cfg.sigma},
             {"radius_factor", cfg.radius_factor},
             {"start", cfg.start},
             {"solver", cfg.solver},
             {"threads", cfg.threads}};
}

inline void from_json(const json& j, ExperimentConfig& cfg) {
    j.at("sample_sizes").get_to(cfg.sample_sizes);
    cfg.replications = j.value("replications", cfg.replications);
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    j.at("signal").get_to(cfg.signal);
    cfg.sigma = j.value("sigma", cfg.sigma);
    cfg.radius_factor = j.value("radius_factor", cfg.radius_factor);
    cfg.start = j.value("start", cfg.start);
    if (j.contains("solver")) j.at("solver").get_to(cfg.solver);
    cfg.threads = j.value("threads", cfg.threads);
}

// ----- experiment artifacts ---------------------------------------------------

inline void to_json(json& j, const ReplicationRecord& rec) {
    j = json{{"n", rec.n},
             {"replication", rec.replication},
             {"seed", rec.seed},
             {"x_hat", rec.x_hat},
             {"dist_d0", rec.dist_d0},
             {"angle", rec.angle},
             {"empirical_risk", rec.empirical_risk},
             {"verdict", rec.verdict},
             {"status", rec.status},
             {"solver_ok", rec.solver_ok},
             {"error", rec.error}};
}

inline void from_json(const json& j, ReplicationRecord& rec) {
    j.at("n").get_to(rec.n);
    j.at("replication").get_to(rec.replication);
    rec.seed = j.value("seed", std::uint64_t{0});
    rec.x_hat = j.value("x_hat", Vec{});
    j.at("dist_d0").get_to(rec.dist_d0);
    j.at("angle").get_to(rec.angle);
    j.at("empirical_risk").get_to(rec.empirical_risk);
    rec.verdict = j.value("verdict", "");
    rec.status = j.value("status", "");
    rec.solver_ok = j.value("solver_ok", true);
    rec.error = j.value("error", "");
}

inline void to_json(json& j, const Aggregate& agg) {
    j = json{{"n", agg.n},
             {"median_dist", agg.median_dist},
             {"q1_dist", agg.q1_dist},
             {"q3_dist", agg.q3_dist},
             {"median_risk", agg.median_risk},
             {"q1_risk", agg.q1_risk},
             {"q3_risk", agg.q3_risk}};
}

inline void from_json(const json& j, Aggregate& agg) {
    j.at("n").get_to(agg.n);
    j.at("median_dist").get_to(agg.median_dist);
    agg.q1_dist = j.value("q1_dist", 0.0);
    agg.q3_dist = j.value("q3_dist", 0.0);
    agg.median_risk = j.value("median_risk", 0.0);
    agg.q1_risk = j.value("q1_risk", 0.0);
    agg.q3_risk = j.value("q3_risk", 0.0);
}

inline void to_json(json& j, const RateFit& fit) {
    j = json{{"defined", fit.defined},
             {"slope", fit.slope},
             {"intercept", fit.intercept},
             {"residual", fit.residual},
             {"slope_stderr", fit.slope_stderr},
             {"slope_band", json::array({fit.slope - 2.0 * fit.slope_stderr,
                                         fit.slope + 2.0 * fit.slope_stderr})}};
}

inline void from_json(const json& j, RateFit& fit) {
    fit.defined = j.value("defined", false);
    fit.slope = j.value("slope", 0.0);
    fit.intercept = j.value("intercept", 0.0);
    fit.residual = j.value("residual", 0.0);
    fit.slope_stderr = j.value("slope_stderr", 0.0);
}

inline void to_json(json& j, const ExperimentReport& report) {
    j = json{{"config", report.config},
             {"records", report.records},
             {"aggregates", report.aggregates},
             {"rate", report.rate}};
}

inline void from_json(const json& j, ExperimentReport& report) {
    j.at("config").get_to(report.config);
    j.at("records").get_to(report.records);
    j.at("aggregates").get_to(report.aggregates);
    if (j.contains("rate")) j.at("rate").get_to(report.rate);
}

inline void to_json(json& j, const NormalitySummary& summary) {
    j = json{{"mean", summary.mean},
             {"variance", summary.variance},
             {"count", summary.count},
             {"statistics", summary.statistics}};
}

// ----- traces -----------------------------------------------------------------

inline void to_json(json& j, const SolveTrace& trace) {
    j = json{{"objectives", trace.objectives},
             {"movements", trace.movements},
             {"ambiguous_counts", trace.ambiguous_counts},
             {"iterates", trace.iterates},
             {"certificate", trace.certificate},
             {"wall_seconds", trace.wall_seconds},
             {"stalled", trace.stalled},
             {"status", trace.status},
             {"eps_used", trace.eps_used}};
}

// CSV columns: iteration, objective, movement, ambiguous.  The first row has
// no movement; scans can be one shorter than the iterate list.
inline void write_trace_csv(const SolveTrace& trace, std::ostream& out, const std::string& config_note = "") {
    if (!config_note.empty()) out << "# " << config_note << "\n";
    out << "iteration,objective,movement,ambiguous\n";
    out.precision(17);
    for (std::size_t k = 0; k < trace.objectives.size(); ++k) {
        out << k << "," << trace.objectives[k] << ",";
        if (k > 0 && k - 1 < trace.movements.size()) out << trace.movements[k - 1];
        out << ",";
        if (k < trace.ambiguous_counts.size()) out << trace.ambiguous_counts[k];
        out << "\n";
    }
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

inline void save_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << j.dump(2) << "\n";
}

}  // namespace dmax
