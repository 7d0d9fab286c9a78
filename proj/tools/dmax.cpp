// Command-line front end: closed-form oracle queries, dataset generation,
// single-instance solves, stationarity certificates, and the replication
// studies.  Every JSON output embeds the fully resolved configuration.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dmax/dmax.hpp"

namespace {

using dmax::json;
using dmax::Vec;

Vec parse_signal(const std::string& text, int p) {
    if (text == "ones") {
        if (p < 1) throw CLI::ValidationError("--signal ones requires --p");
        return Vec(p, 1.0);
    }
    Vec out;
    std::stringstream stream(text);
    std::string cell;
    while (std::getline(stream, cell, ',')) out.push_back(std::stod(cell));
    if (out.empty()) throw CLI::ValidationError("empty --signal");
    if (p > 0 && static_cast<int>(out.size()) != p)
        throw CLI::ValidationError("--signal length does not match --p");
    return out;
}

Vec parse_vector(const std::string& text) {
    Vec out;
    std::stringstream stream(text);
    std::string cell;
    while (std::getline(stream, cell, ',')) out.push_back(std::stod(cell));
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream stream(text);
    std::string cell;
    while (std::getline(stream, cell, ',')) out.push_back(std::stoi(cell));
    return out;
}

void emit(const json& payload, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << payload.dump(2) << "\n";
    } else {
        dmax::save_json_file(payload, out_path);
        std::cerr << "wrote " << out_path << "\n";
    }
}

// Shared generator/solver options with config-file fallback: values given on
// the command line win over the config file, which wins over defaults.
struct CommonOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    int p = 20;
    std::string signal_text = "ones";
    double sigma = 0.1;
    int n = 2000;
    double eps = -1.0;
    double prox = 1e-4;
    std::uint64_t budget = 256;
    int threads = 2;
    std::string out;

    CLI::Option* seed_opt = nullptr;
    CLI::Option* p_opt = nullptr;
    CLI::Option* signal_opt = nullptr;
    CLI::Option* sigma_opt = nullptr;
    CLI::Option* n_opt = nullptr;
    CLI::Option* eps_opt = nullptr;
    CLI::Option* prox_opt = nullptr;
    CLI::Option* budget_opt = nullptr;
    CLI::Option* threads_opt = nullptr;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "JSON config file; command-line flags override it");
        seed_opt = app->add_option("--seed", seed, "base random seed");
        p_opt = app->add_option("--p", p, "signal dimension");
        signal_opt = app->add_option("--signal", signal_text, "true signal: 'ones' or comma list");
        sigma_opt = app->add_option("--sigma", sigma, "noise standard deviation");
        n_opt = app->add_option("--n", n, "sample count");
        eps_opt = app->add_option("--eps", eps, "eps-argmax tolerance (< 0: automatic)");
        prox_opt = app->add_option("--prox", prox, "proximal weight of the subproblems");
        budget_opt = app->add_option("--budget", budget, "certification combination budget");
        threads_opt = app->add_option("--threads", threads, "worker threads");
        app->add_option("--out", out, "output path (default: stdout)");
    }

    // config-file fallback for flags the user did not pass
    void resolve() {
        if (config_path.empty()) return;
        const json cfg = dmax::load_json_file(config_path);
        auto fill = [&](CLI::Option* opt, auto& value, const char* key) {
            if (opt != nullptr && opt->count() == 0 && cfg.contains(key)) value = cfg.at(key);
        };
        fill(seed_opt, seed, "seed");
        fill(p_opt, p, "p");
        fill(sigma_opt, sigma, "sigma");
        fill(n_opt, n, "n");
        fill(eps_opt, eps, "eps");
        fill(prox_opt, prox, "prox");
        fill(budget_opt, budget, "budget");
        fill(threads_opt, threads, "threads");
        if (signal_opt->count() == 0 && cfg.contains("signal")) {
            if (cfg.at("signal").is_array())
                signal_text = [&] {
                    std::string text;
                    for (double v : cfg.at("signal").get<Vec>())
                        text += (text.empty() ? "" : ",") + std::to_string(v);
                    return text;
                }();
            else
                signal_text = cfg.at("signal").get<std::string>();
        }
    }

    Vec signal() const { return parse_signal(signal_text, p); }

    dmax::MMConfig solver_config() const {
        dmax::MMConfig cfg;
        cfg.eps = eps;
        cfg.prox_weight = prox;
        cfg.certification_budget = budget;
        cfg.seed = seed;
        return cfg;
    }

    json resolved(const char* command) const {
        return json{{"command", command}, {"seed", seed},     {"p", p},
                    {"signal", signal()}, {"sigma", sigma},   {"n", n},
                    {"eps", eps},         {"prox", prox},     {"budget", budget},
                    {"threads", threads}, {"solver", solver_config()}};
    }
};

dmax::Dataset load_or_generate(const std::string& data_path, const CommonOptions& opts) {
    if (!data_path.empty()) return dmax::read_csv_file(data_path);
    return dmax::generate_phase_dataset({opts.seed, opts.signal(), opts.sigma, opts.n});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"difference-of-max composite risk minimization toolkit"};
    app.require_subcommand(1);

    // oracle -----------------------------------------------------------------
    auto* oracle = app.add_subcommand("oracle", "closed-form population phase quantities");
    CommonOptions oracle_opts;
    oracle_opts.attach(oracle);
    std::string oracle_x;
    double oracle_tol = 1e-8;
    oracle->add_option("--x", oracle_x, "query point, comma separated")->required();
    oracle->add_option("--tol", oracle_tol, "classification tolerance");

    // generate ---------------------------------------------------------------
    auto* generate = app.add_subcommand("generate", "write a phase retrieval dataset as CSV");
    CommonOptions gen_opts;
    gen_opts.attach(generate);

    // solve ------------------------------------------------------------------
    auto* solve = app.add_subcommand("solve", "run the majorization-minimization solver");
    CommonOptions solve_opts;
    solve_opts.attach(solve);
    std::string solve_data, solve_x0 = "saddle";
    solve->add_option("--data", solve_data, "dataset CSV (otherwise generated from flags)");
    solve->add_option("--x0", solve_x0, "start: 'saddle', 'zero', or comma list");

    // certify ----------------------------------------------------------------
    auto* certify = app.add_subcommand("certify", "certificate of composite eps-strong d-stationarity");
    CommonOptions cert_opts;
    cert_opts.attach(certify);
    std::string cert_data, cert_x;
    double cert_tol = -1.0;
    certify->add_option("--data", cert_data, "dataset CSV (otherwise generated from flags)");
    certify->add_option("--x", cert_x, "anchor point, comma separated")->required();
    certify->add_option("--tol", cert_tol, "certification tolerance (< 0: 1e-7 (1 + M_N))");

    // experiment ---------------------------------------------------------------
    auto* experiment = app.add_subcommand("experiment", "consistency study over sample sizes");
    CommonOptions exp_opts;
    exp_opts.attach(experiment);
    std::string exp_ns = "400,800,1200,1600,2000";
    int exp_reps = 100;
    experiment->add_option("--ns", exp_ns, "sample sizes, comma separated");
    experiment->add_option("--reps", exp_reps, "replications per sample size");

    // rate ---------------------------------------------------------------------
    auto* rate = app.add_subcommand("rate", "log-log rate fit from an experiment report");
    std::string rate_report, rate_out;
    rate->add_option("--report", rate_report, "experiment report JSON")->required();
    rate->add_option("--out", rate_out, "output path (default: stdout)");

    // normality ------------------------------------------------------------------
    auto* normality = app.add_subcommand("normality", "normalized-statistic study at one sample size");
    CommonOptions norm_opts;
    norm_opts.attach(normality);
    int norm_reps = 100;
    normality->add_option("--reps", norm_reps, "replications");

    CLI11_PARSE(app, argc, argv);

    try {
        if (oracle->parsed()) {
            oracle_opts.resolve();
            const Vec x = parse_vector(oracle_x);
            const auto pop = dmax::make_phase_population(oracle_opts.signal(), oracle_opts.sigma);
            json payload{{"config", oracle_opts.resolved("oracle")}, {"x", x}};
            payload["risk"] = dmax::population_risk(pop, x);
            if (dmax::norm(x) > 0.0) payload["gradient"] = dmax::population_gradient(pop, x);
            const auto cls = dmax::classify_stationary(pop, x, oracle_tol);
            payload["classification"] = {{"label", dmax::to_string(cls.label)},
                                         {"dist_global", cls.dist_global},
                                         {"dist_saddle", cls.dist_saddle},
                                         {"dist_origin", cls.dist_origin}};
            if (cls.label == dmax::StationaryLabel::saddle_circle) {
                const auto diag = dmax::saddle_diagnostics(pop, x);
                payload["saddle_diagnostics"] = {{"trace", diag.trace},
                                                 {"min_eigenvalue", diag.min_eigenvalue},
                                                 {"max_eigenvalue", diag.max_eigenvalue}};
            }
            emit(payload, oracle_opts.out);
        } else if (generate->parsed()) {
            gen_opts.resolve();
            const dmax::Dataset data =
                dmax::generate_phase_dataset({gen_opts.seed, gen_opts.signal(), gen_opts.sigma, gen_opts.n});
            const std::string note = "config: " + gen_opts.resolved("generate").dump();
            if (gen_opts.out.empty()) {
                std::ostringstream buffer;
                dmax::write_csv(data, buffer);
                std::cout << "# " << note << "\n" << buffer.str();
            } else {
                std::ofstream file(gen_opts.out);
                if (!file) throw std::runtime_error("cannot open " + gen_opts.out);
                file << "# " << note << "\n";
                dmax::write_csv(data, file);
                std::cerr << "wrote " << gen_opts.out << "\n";
            }
        } else if (solve->parsed()) {
            solve_opts.resolve();
            const dmax::Dataset data = load_or_generate(solve_data, solve_opts);
            const int p = data.d;
            const Vec signal = solve_opts.signal_opt->count() || solve_data.empty()
                                   ? solve_opts.signal()
                                   : Vec(p, 1.0);
            const auto model = dmax::build_phase_retrieval_model(p);
            const auto feasible = dmax::FeasibleSet::ball(p, 3.0 * dmax::norm(signal));
            Vec x0;
            if (solve_x0 == "zero") {
                x0.assign(p, 0.0);
            } else if (solve_x0 == "saddle") {
                dmax::Rng rng(solve_opts.seed + 1);
                Vec unit = rng.sphere_vector(p);
                const double c = dmax::dot(unit, signal) / dmax::norm_sq(signal);
                for (int i = 0; i < p; ++i) unit[i] -= c * signal[i];
                const double nu = dmax::norm(unit);
                const double radius = 2.0 / std::numbers::pi * dmax::norm(signal);
                for (auto& v : unit) v *= radius / nu;
                x0 = unit;
            } else {
                x0 = parse_vector(solve_x0);
            }
            dmax::MMConfig cfg = solve_opts.solver_config();
            cfg.threads = solve_opts.threads;
            auto [x_hat, trace] = dmax::mm_solve(model, dmax::LossKind::squared, data, feasible, x0, cfg);
            json payload{{"config", solve_opts.resolved("solve")},
                         {"x0", x0},
                         {"x_hat", x_hat},
                         {"objective", trace.objectives.back()},
                         {"status", trace.status},
                         {"trace", trace}};
            if (solve_opts.out.empty()) {
                emit(payload, "");
            } else {
                dmax::save_json_file(payload, solve_opts.out + ".json");
                std::ofstream csv(solve_opts.out + ".trace.csv");
                if (!csv) throw std::runtime_error("cannot open " + solve_opts.out + ".trace.csv");
                dmax::write_trace_csv(trace, csv, "config: " + solve_opts.resolved("solve").dump());
                std::cerr << "wrote " << solve_opts.out << ".json and " << solve_opts.out
                          << ".trace.csv\n";
            }
        } else if (certify->parsed()) {
            cert_opts.resolve();
            const dmax::Dataset data = load_or_generate(cert_data, cert_opts);
            const int p = data.d;
            const Vec anchor = parse_vector(cert_x);
            if (static_cast<int>(anchor.size()) != p)
                throw std::runtime_error("--x dimension does not match the dataset");
            const auto model = dmax::build_phase_retrieval_model(p);
            auto problem = dmax::compile_problem(model, dmax::LossKind::squared, data);
            const Vec signal = cert_opts.signal();
            const auto feasible = dmax::FeasibleSet::ball(
                p, 3.0 * std::max(dmax::norm(signal), dmax::norm(anchor)));
            const double eps = cert_opts.eps >= 0.0 ? cert_opts.eps : 1e-3;
            const auto cert = dmax::certify_strong_dstationarity(
                problem, feasible, anchor, eps, cert_opts.budget, cert_tol,
                dmax::make_convex_solver(), cert_opts.seed);
            emit(json{{"config", cert_opts.resolved("certify")}, {"certificate", cert}}, cert_opts.out);
        } else if (experiment->parsed()) {
            exp_opts.resolve();
            dmax::ExperimentConfig cfg;
            cfg.sample_sizes = parse_int_list(exp_ns);
            cfg.replications = exp_reps;
            cfg.base_seed = exp_opts.seed;
            cfg.signal = exp_opts.signal();
            cfg.sigma = exp_opts.sigma;
            cfg.solver = exp_opts.solver_config();
            cfg.threads = exp_opts.threads;
            const auto report = dmax::run_consistency_experiment(cfg);
            emit(json(report), exp_opts.out);
        } else if (rate->parsed()) {
            const auto report = dmax::load_json_file(rate_report).get<dmax::ExperimentReport>();
            emit(json{{"config", json(report.config)}, {"rate", dmax::fit_rate(report)}}, rate_out);
        } else if (normality->parsed()) {
            norm_opts.resolve();
            dmax::NormalityConfig cfg;
            cfg.n = norm_opts.n;
            cfg.replications = norm_reps;
            cfg.base_seed = norm_opts.seed;
            cfg.signal = norm_opts.signal();
            cfg.sigma = norm_opts.sigma;
            cfg.solver = norm_opts.solver_config();
            cfg.threads = norm_opts.threads;
            const auto summary = dmax::normality_check(cfg);
            emit(json{{"config", norm_opts.resolved("normality")}, {"normality", summary}},
                 norm_opts.out);
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
