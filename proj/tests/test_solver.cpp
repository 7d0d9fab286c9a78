#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "dmax/experiments.hpp"
#include "dmax/solver.hpp"

using namespace dmax;

namespace {

// m(x; xi) = x . xi: one affine f-piece with identity xi_map, zero g-piece
DifferenceMaxModel linear_model(int p) {
    DifferenceMaxModel model;
    model.p = p;
    model.d = p;
    SmoothConvexPiece piece;
    piece.kind = PieceKind::affine;
    piece.p = p;
    piece.d = p;
    piece.xi_map.assign(static_cast<std::size_t>(p) * (p + 1), 0.0);
    for (int i = 0; i < p; ++i) piece.xi_map[static_cast<std::size_t>(i) * (p + 1) + i] = 1.0;
    model.f_pieces = {piece};
    model.g_pieces = {make_zero_piece(p, p)};
    return model;
}

IndexSelection exact_selection(const CompiledProblem& problem, const Vec& anchor) {
    IndexSelection sel;
    for (int n = 0; n < problem.size(); ++n) {
        const auto sets = eps_argmax(problem.sample(n), anchor, 0.0);
        sel.pairs.emplace_back(sets.f_indices.front(), sets.g_indices.front());
    }
    return sel;
}

}  // namespace

TEST_CASE("solve_convex recovers the center of a separable quadratic") {
    // M_N(x) = (1/p) sum_i (a_i - x_i)^2 over a ball containing a
    const int p = 3;
    const Vec a{1.5, -2.0, 0.5};
    const auto model = linear_model(p);
    Dataset data;
    data.d = p;
    for (int i = 0; i < p; ++i) {
        Vec e(p, 0.0);
        e[i] = 1.0;
        data.features.push_back(e);
        data.responses.push_back(a[i]);
    }
    auto problem = compile_problem(model, LossKind::squared, data);
    const auto feasible = FeasibleSet::ball(p, 10.0);
    const Vec anchor(p, 0.0);
    const SurrogateProblem sp =
        build_surrogate(problem, feasible, anchor, 0.0, exact_selection(*problem, anchor), 0.0);
    const auto res = solve_convex(sp, anchor, {});
    CHECK(distance(res.x, a) <= 1e-6);
    CHECK(res.value <= sp.value(anchor));
    CHECK(feasible.contains(res.x, 1e-12));
}

TEST_CASE("solve_convex handles a flat minimum set") {
    // (1/2) [ (x1 - 2)_+^2 + (-1 - x1)_+^2 ] over the box [-5, 5]^2:
    // every x1 in [-1, 2] attains 0
    DifferenceMaxModel model;
    model.p = 2;
    model.d = 2;
    SmoothConvexPiece hinge;
    hinge.kind = PieceKind::squared_plus_affine;
    hinge.p = 2;
    hinge.d = 2;
    hinge.xi_map.assign(2 * 3, 0.0);
    hinge.xi_map[0] = 1.0;  // slope_0 = xi_1
    hinge.offset_coeffs = {0.0, 1.0, 0.0};  // offset = xi_2
    model.f_pieces = {hinge};
    model.g_pieces = {make_zero_piece(2, 2)};

    Dataset data;
    data.d = 2;
    data.features = {{1.0, -2.0}, {-1.0, -1.0}};  // (x1 - 2)_+^2 and (-x1 - 1)_+^2
    data.responses = {0.0, 0.0};

    auto problem = compile_problem(model, LossKind::abs, data);
    const auto feasible = FeasibleSet::box(Vec{-5.0, -5.0}, Vec{5.0, 5.0});
    const Vec anchor{0.0, 0.0};
    const SurrogateProblem sp =
        build_surrogate(problem, feasible, anchor, 0.0, exact_selection(*problem, anchor), 0.0);
    const auto res = solve_convex(sp, Vec{-5.0, 5.0}, {});
    CHECK(res.value <= 1e-8);
    CHECK(res.x[0] >= -1.0 - 1e-4);
    CHECK(res.x[0] <= 2.0 + 1e-4);
}

TEST_CASE("solve_convex matches a long-run reference on a phase surrogate") {
    Rng rng(51);
    const int p = 3;
    const auto model = build_phase_retrieval_model(p);
    GeneratorSpec spec{7, rng.normal_vector(p), 0.1, 20};
    const Dataset data = generate_phase_dataset(spec);
    auto problem = compile_problem(model, LossKind::squared, data);
    const auto feasible = FeasibleSet::ball(p, 8.0);
    const Vec anchor = rng.normal_vector(p);
    const SurrogateProblem sp = build_surrogate(problem, feasible, anchor, 1e-3,
                                                exact_selection(*problem, anchor), 1e-4);

    const auto res = solve_convex(sp, anchor, {});

    ConvexSolveConfig long_run;
    long_run.polish_iterations = 200000;
    long_run.gradient_target = 1e-13;
    double reference = std::numeric_limits<double>::infinity();
    for (int start = 0; start < 5; ++start) {
        const Vec x0 = start == 0 ? anchor : rng.ball_vector(Vec(p, 0.0), 4.0);
        reference = std::min(reference, solve_convex(sp, x0, long_run, 1e-16).value);
    }
    CHECK(std::abs(res.value - reference) <= 1e-6);
    CHECK(res.gap_bound >= 0.0);
    CHECK(res.value - res.gap_bound <= reference + 1e-12);  // lower bound is genuine
}

TEST_CASE("mm_solve on a convex instance reaches the least-squares optimum") {
    Rng rng(52);
    const int p = 3, n = 8;
    const auto model = linear_model(p);
    Dataset data;
    data.d = p;
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) {
        const Vec xi = rng.normal_vector(p);
        data.features.push_back(xi);
        data.responses.push_back(rng.normal());
        for (int j = 0; j < p; ++j) X(i, j) = xi[j];
        z(i) = data.responses[i];
    }
    const Eigen::VectorXd beta = (X.transpose() * X).ldlt().solve(X.transpose() * z);
    const double optimum = (z - X * beta).squaredNorm() / n;

    const auto feasible = FeasibleSet::ball(p, 50.0);
    MMConfig cfg;
    cfg.seed = 1;
    auto [x_hat, trace] = mm_solve(model, LossKind::squared, data, feasible, Vec(p, 0.0), cfg);
    CHECK(std::abs(empirical_risk(model, LossKind::squared, data, x_hat) - optimum) <= 1e-9);
    CHECK(trace.status == "certified");
    CHECK(trace.certificate.worst_gap() <= trace.certificate.tolerance);
}

TEST_CASE("mm_solve recovers a noiseless phase signal") {
    Rng rng(53);
    const int p = 2;
    const Vec signal = rng.sphere_vector(p);
    GeneratorSpec spec{21, signal, 0.0, 200};
    const Dataset data = generate_phase_dataset(spec);
    const auto model = build_phase_retrieval_model(p);
    const auto feasible = FeasibleSet::ball(p, 3.0 * norm(signal));

    Vec x0 = signal;
    axpy(0.25, rng.sphere_vector(p), x0);
    MMConfig cfg;
    cfg.seed = 2;
    auto [x_hat, trace] = mm_solve(model, LossKind::squared, data, feasible, x0, cfg);
    Vec flipped = scaled(signal, -1.0);
    CHECK(std::min(distance(x_hat, signal), distance(x_hat, flipped)) <= 1e-3);

    // monotone descent with slack
    for (std::size_t k = 1; k < trace.objectives.size(); ++k)
        CHECK(trace.objectives[k] <= trace.objectives[k - 1] + 1e-10);
}

TEST_CASE("mm_solve escapes the empirical saddle start") {
    Rng rng(54);
    const int p = 4;
    const Vec signal(p, 1.0);
    GeneratorSpec spec{33, signal, 0.1, 300};
    const Dataset data = generate_phase_dataset(spec);
    const auto model = build_phase_retrieval_model(p);
    const auto feasible = FeasibleSet::ball(p, 3.0 * norm(signal));

    // start orthogonal to the signal at radius (2/pi) ||signal||
    Vec x0 = rng.sphere_vector(p);
    const double c = dot(x0, signal) / norm_sq(signal);
    for (int i = 0; i < p; ++i) x0[i] -= c * signal[i];
    const double scale = 2.0 / std::numbers::pi * norm(signal) / norm(x0);
    for (auto& v : x0) v *= scale;

    MMConfig cfg;
    cfg.seed = 3;
    auto [x_hat, trace] = mm_solve(model, LossKind::squared, data, feasible, x0, cfg);
    const double angle = angle_between(x_hat, signal);
    CHECK(std::min(angle, std::numbers::pi - angle) <= 0.1);
}

TEST_CASE("mm_solve is deterministic") {
    const int p = 3;
    const Vec signal{1.0, -0.5, 2.0};
    GeneratorSpec spec{44, signal, 0.05, 40};
    const Dataset data = generate_phase_dataset(spec);
    const auto model = build_phase_retrieval_model(p);
    const auto feasible = FeasibleSet::ball(p, 3.0 * norm(signal));
    MMConfig cfg;
    cfg.seed = 77;

    auto [x1, t1] = mm_solve(model, LossKind::squared, data, feasible, Vec{1.0, 1.0, 1.0}, cfg);
    auto [x2, t2] = mm_solve(model, LossKind::squared, data, feasible, Vec{1.0, 1.0, 1.0}, cfg);
    CHECK(x1 == x2);
    REQUIRE(t1.objectives.size() == t2.objectives.size());
    for (std::size_t k = 0; k < t1.objectives.size(); ++k)
        CHECK(t1.objectives[k] == t2.objectives[k]);
    REQUIRE(t1.iterates.size() == t2.iterates.size());
    for (std::size_t k = 0; k < t1.iterates.size(); ++k) CHECK(t1.iterates[k] == t2.iterates[k]);
}

TEST_CASE("certificate at the phase origin is refuted with a sign witness") {
    const int p = 2;
    const auto model = build_phase_retrieval_model(p);
    Dataset data;
    data.d = p;
    data.features = {{1.0, 0.0}};
    data.responses = {1.0};
    auto problem = compile_problem(model, LossKind::squared, data);
    const auto feasible = FeasibleSet::ball(p, 5.0);

    const auto cert = certify_strong_dstationarity(problem, feasible, Vec(p, 0.0), 1e-3, 64, -1.0,
                                                   make_convex_solver(), 9);
    REQUIRE(cert.verdict == CertificateVerdict::refuted);
    CHECK(std::abs(std::abs(cert.witness[0]) - 1.0) <= 1e-3);
    CHECK(std::abs(cert.witness[1]) <= 1e-3);

    // soundness: re-verify the witness against its combination directly
    const SurrogateProblem sub =
        build_surrogate(problem, feasible, Vec(p, 0.0), cert.eps, cert.witness_selection, 0.0);
    CHECK(sub.value(cert.witness) < cert.anchor_risk - cert.tolerance);
    CHECK(std::abs(sub.value(cert.witness) - cert.witness_objective) <= 1e-12);
}

TEST_CASE("certified solver outputs satisfy the eps hierarchy") {
    Rng rng(55);
    const int p = 3;
    const Vec signal = rng.sphere_vector(p);
    GeneratorSpec spec{66, signal, 0.08, 60};
    const Dataset data = generate_phase_dataset(spec);
    const auto model = build_phase_retrieval_model(p);
    auto problem = compile_problem(model, LossKind::squared, data);
    const auto feasible = FeasibleSet::ball(p, 3.0 * norm(signal));

    MMConfig cfg;
    cfg.seed = 5;
    auto [x_hat, trace] = mm_solve(problem, feasible, signal, cfg);
    REQUIRE(trace.status == "certified");
    const double eps = trace.certificate.eps;
    const double tol = trace.certificate.tolerance;
    for (double eps_prime : {0.0, 0.5 * eps}) {
        const auto cert = certify_strong_dstationarity(problem, feasible, x_hat, eps_prime, 256, tol,
                                                       make_convex_solver(), 5);
        CHECK(cert.verdict == CertificateVerdict::certified);
    }
}

TEST_CASE("multi_start_solve") {
    Rng rng(56);
    const int p = 2;
    const Vec signal = rng.sphere_vector(p);
    GeneratorSpec spec{88, signal, 0.05, 50};
    const Dataset data = generate_phase_dataset(spec);
    const auto model = build_phase_retrieval_model(p);
    auto problem = compile_problem(model, LossKind::squared, data);
    const auto feasible = FeasibleSet::ball(p, 3.0 * norm(signal));
    MMConfig cfg;
    cfg.seed = 6;

    // single start is identical to mm_solve
    const Vec start = rng.ball_vector(Vec(p, 0.0), 1.0);
    auto single = multi_start_solve(problem, feasible, {start}, cfg);
    auto direct = mm_solve(problem, feasible, start, cfg);
    CHECK(single.best == direct.first);

    // a start at a certified solution comes back unchanged
    auto seeded = multi_start_solve(problem, feasible, {start, direct.first}, cfg);
    CHECK(distance(seeded.best, direct.first) <= 1e-8);

    // the multi-start winner is at least as good as every individual run
    std::vector<Vec> starts;
    for (int s = 0; s < 5; ++s) starts.push_back(rng.ball_vector(Vec(p, 0.0), 2.0));
    auto multi = multi_start_solve(problem, feasible, starts, cfg);
    const double best_risk = problem->risk(multi.best);
    for (const auto& s : starts) {
        auto run = mm_solve(problem, feasible, s, cfg);
        CHECK(best_risk <= problem->risk(run.first) + 1e-15);
    }
    CHECK_THROWS_AS(multi_start_solve(problem, feasible, {}, cfg), std::invalid_argument);
}
