#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "dmax/experiments.hpp"
#include "dmax/phase_oracle.hpp"

using namespace dmax;

namespace {

constexpr double kPi = std::numbers::pi;

Vec orthogonal_unit(Rng& rng, const Vec& reference) {
    while (true) {
        Vec v = rng.sphere_vector(static_cast<int>(reference.size()));
        const double c = dot(v, reference) / norm_sq(reference);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * reference[i];
        const double nv = norm(v);
        if (nv > 1e-8) {
            for (auto& y : v) y /= nv;
            return v;
        }
    }
}

double fd_risk_derivative(const PhasePopulation& pop, const Vec& x, const Vec& v, double tau) {
    Vec xs = x;
    axpy(tau, v, xs);
    return (population_risk(pop, xs) - population_risk(pop, x)) / tau;
}

}  // namespace

TEST_CASE("population risk anchor values") {
    const auto pop = make_phase_population(Vec(20, 1.0), 0.1);
    CHECK(population_risk(pop, pop.signal) == 0.01);  // sigma^2, exact
    CHECK(population_risk(pop, scaled(pop.signal, -1.0)) == 0.01);

    // x = 0: ||xbar||^2 / p + sigma^2
    CHECK(std::abs(population_risk(pop, Vec(20, 0.0)) - (20.0 / 20.0 + 0.01)) <= 1e-15);

    // saddle circle: sigma^2 + (1/p)(1 - 4/pi^2)||xbar||^2
    Rng rng(61);
    Vec saddle = orthogonal_unit(rng, pop.signal);
    const double radius = 2.0 / kPi * pop.signal_norm;
    for (auto& v : saddle) v *= radius;
    const double expected = 0.01 + (1.0 - 4.0 / (kPi * kPi));
    CHECK(std::abs(population_risk(pop, saddle) - expected) <= 1e-12);
    CHECK(std::abs(expected - 0.6047) <= 1e-4);
}

TEST_CASE("population risk agrees with Monte-Carlo") {
    {
        // x = 0 cross-check with many draws
        const auto pop = make_phase_population(Vec{2.0, -1.0, 0.5, 1.0, -0.4}, 0.2);
        const auto model = build_phase_retrieval_model(5);
        const auto mc = population_risk_mc(model, LossKind::squared, pop, Vec(5, 0.0), 1000000, 3);
        CHECK(std::abs(population_risk(pop, Vec(5, 0.0)) - mc.value) <= 3.0 * mc.std_error);
    }
    Rng rng(62);
    const auto pop = make_phase_population(rng.normal_vector(5), 0.15);
    const auto model = build_phase_retrieval_model(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec x = rng.ball_vector(Vec(5, 0.0), 2.0 * pop.signal_norm);
        const auto mc = population_risk_mc(model, LossKind::squared, pop, x, 100000,
                                           1000 + static_cast<std::uint64_t>(trial));
        CHECK(std::abs(population_risk(pop, x) - mc.value) <= 4.0 * mc.std_error + 1e-12);
    }
}

TEST_CASE("population risk sign symmetry and global minimality") {
    Rng rng(63);
    const auto pop = make_phase_population(rng.normal_vector(7), 0.1);
    const double sigma_sq = pop.sigma * pop.sigma;
    for (int trial = 0; trial < 200; ++trial) {
        const Vec x = rng.ball_vector(Vec(7, 0.0), 3.0 * pop.signal_norm);
        CHECK(population_risk(pop, x) == population_risk(pop, scaled(x, -1.0)));
        CHECK(population_risk(pop, x) >= sigma_sq - 1e-12);
    }
    // the suboptimal stationary value strictly exceeds sigma^2
    const double suboptimal =
        sigma_sq + (1.0 - 4.0 / (kPi * kPi)) * norm_sq(pop.signal) / pop.p;
    CHECK(suboptimal > sigma_sq);
}

TEST_CASE("population gradient at stationary candidates") {
    const auto pop = make_phase_population(Vec(20, 1.0), 0.1);
    Rng rng(64);

    CHECK(norm(population_gradient(pop, pop.signal)) <= 1e-10);
    CHECK(norm(population_gradient(pop, scaled(pop.signal, -1.0))) <= 1e-10);

    for (int trial = 0; trial < 20; ++trial) {
        Vec saddle = orthogonal_unit(rng, pop.signal);
        for (auto& v : saddle) v *= 2.0 / kPi * pop.signal_norm;
        CHECK(norm(population_gradient(pop, saddle)) <= 1e-10);
    }

    // orthogonal shortcut formula: (2x/p)(1 - 2||xbar||/(pi ||x||))
    const auto pop20 = make_phase_population(Vec(20, 1.0), 0.0);
    Vec unit = orthogonal_unit(rng, pop20.signal);
    const Vec grad = population_gradient(pop20, unit);
    const double factor = 2.0 / 20.0 * (1.0 - 2.0 * std::sqrt(20.0) / kPi);
    for (int i = 0; i < 20; ++i) CHECK(std::abs(grad[i] - factor * unit[i]) <= 1e-10);

    CHECK_THROWS_AS(population_gradient(pop, Vec(20, 0.0)), std::domain_error);
}

TEST_CASE("population gradient matches finite differences away from singular loci") {
    Rng rng(65);
    const auto pop = make_phase_population(rng.normal_vector(6), 0.1);
    int checked = 0;
    while (checked < 40) {
        const Vec x = rng.ball_vector(Vec(6, 0.0), 2.0 * pop.signal_norm);
        const double nx = norm(x);
        if (nx < 0.2) continue;
        const double cosine = std::abs(dot(x, pop.signal)) / (nx * pop.signal_norm);
        if (cosine > 0.95) continue;
        const auto cls = classify_stationary(pop, x, 0.05);
        if (cls.label != StationaryLabel::none) continue;
        ++checked;
        const Vec grad = population_gradient(pop, x);
        const double h = 1e-6;
        for (int i = 0; i < 6; ++i) {
            Vec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (population_risk(pop, xp) - population_risk(pop, xm)) / (2.0 * h);
            CHECK(std::abs(fd - grad[i]) <= 1e-6 * (1.0 + std::abs(grad[i])));
        }
    }

    // generic points are not stationary
    for (int trial = 0; trial < 50; ++trial) {
        Vec x = rng.ball_vector(Vec(6, 0.0), 2.0 * pop.signal_norm);
        if (norm(x) < 0.3) continue;
        const auto cls = classify_stationary(pop, x, 1e-3);
        if (cls.label == StationaryLabel::none) CHECK(norm(population_gradient(pop, x)) > 1e-6);
    }
}

TEST_CASE("directional derivative at the origin") {
    const auto pop = make_phase_population(Vec(20, 1.0), 0.1);
    CHECK(std::abs(directional_derivative_origin(pop, pop.signal) - (-2.0)) <= 1e-12);
    CHECK(directional_derivative_origin(pop, scaled(pop.signal, -1.0)) ==
          directional_derivative_origin(pop, pop.signal));

    Rng rng(66);
    const Vec ortho = orthogonal_unit(rng, pop.signal);
    const double dd = directional_derivative_origin(pop, ortho);
    CHECK(dd < 0.0);

    // agreement with one-sided finite differences of the closed form
    const Vec origin(20, 0.0);
    for (const Vec& v : {pop.signal, ortho}) {
        const double exact = directional_derivative_origin(pop, v);
        double previous = std::numeric_limits<double>::infinity();
        for (double tau : {1e-4, 1e-5, 1e-6}) {
            const double fd = fd_risk_derivative(pop, origin, v, tau);
            CHECK(std::abs(fd - exact) <= std::max(previous, 1e-9));
            previous = std::abs(fd - exact);
        }
        CHECK(previous <= 1e-5);
    }
    CHECK_THROWS_AS(directional_derivative_origin(pop, origin), std::invalid_argument);
}

TEST_CASE("rank-2 eigenvalues") {
    Rng rng(67);
    {
        const auto pop = make_phase_population(Vec{1.0, 2.0, -1.0}, 0.0);
        const auto eig = rank2_eigenvalues(pop, pop.signal);
        const double nb2 = norm_sq(pop.signal);
        CHECK(std::abs(eig.m1_plus - 2.0 * nb2) <= 1e-12);
        CHECK(std::abs(eig.m1_minus) <= 1e-12);
        CHECK(std::abs(eig.m2_plus - 2.0 * nb2) <= 1e-12);
        CHECK(std::abs(eig.m2_minus) <= 1e-12);
    }
    {
        Vec signal{1.0, 0.0};
        const auto pop = make_phase_population(signal, 0.0);
        const Vec x{0.0, 1.0};
        const auto eig = rank2_eigenvalues(pop, x);
        CHECK(std::abs(eig.m1_plus - 1.0) <= 1e-14);
        CHECK(std::abs(eig.m1_minus - 1.0) <= 1e-14);
        CHECK(std::abs(eig.m2_plus - 1.0) <= 1e-14);
        CHECK(std::abs(eig.m2_minus + 1.0) <= 1e-14);
    }
    // random x against a dense eigensolver on the explicit matrices
    const int p = 6;
    const auto pop = make_phase_population(rng.normal_vector(p), 0.0);
    for (int trial = 0; trial < 30; ++trial) {
        const Vec x = rng.normal_vector(p);
        const auto eig = rank2_eigenvalues(pop, x);

        Eigen::MatrixXd m1(p, p), m2(p, p);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                m1(i, j) = pop.signal[i] * pop.signal[j] + x[i] * x[j];
                m2(i, j) = pop.signal[i] * x[j] + x[i] * pop.signal[j];
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s1(m1), s2(m2);
        const auto& v1 = s1.eigenvalues();  // ascending: p-2 zeros, then the rank-2 pair
        const auto& v2 = s2.eigenvalues();
        CHECK(std::abs(eig.m1_plus - v1(p - 1)) <= 1e-10);
        CHECK(std::abs(eig.m1_minus - v1(p - 2)) <= 1e-10);
        CHECK(std::abs(eig.m2_plus - v2(p - 1)) <= 1e-10);
        CHECK(std::abs(eig.m2_minus - v2(0)) <= 1e-10);

        // trace and determinant of the nonzero block
        CHECK(std::abs(eig.m1_plus + eig.m1_minus - m1.trace()) <= 1e-10);
        CHECK(std::abs(eig.m2_plus + eig.m2_minus - m2.trace()) <= 1e-10);
    }
}

TEST_CASE("stationary classification") {
    const auto pop = make_phase_population(Vec(20, 1.0), 0.1);
    Rng rng(68);

    CHECK(classify_stationary(pop, scaled(pop.signal, -1.0), 1e-8).label ==
          StationaryLabel::global_min);

    Vec saddle = orthogonal_unit(rng, pop.signal);
    const double radius = 2.0 / kPi * pop.signal_norm;
    CHECK(std::abs(radius - 2.8470) <= 1e-4);
    for (auto& v : saddle) v *= radius;
    const auto cls = classify_stationary(pop, saddle, 1e-8);
    CHECK(cls.label == StationaryLabel::saddle_circle);
    CHECK(norm(population_gradient(pop, saddle)) <= 10.0 * 1e-8);

    CHECK(classify_stationary(pop, Vec(20, 0.0), 1e-8).label == StationaryLabel::origin);

    int generic = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Vec x = rng.ball_vector(Vec(20, 0.0), 2.0 * pop.signal_norm);
        const auto c = classify_stationary(pop, x, 1e-6);
        if (c.label == StationaryLabel::none && norm(x) > 0.1) {
            ++generic;
            CHECK(norm(population_gradient(pop, x)) > 1e-6);
        }
    }
    CHECK(generic > 0);
    CHECK_THROWS_AS(classify_stationary(pop, pop.signal, 0.0), std::invalid_argument);
}

TEST_CASE("saddle diagnostics") {
    Rng rng(69);
    {
        const auto pop = make_phase_population(Vec(20, 1.0), 0.1);
        Vec saddle = orthogonal_unit(rng, pop.signal);
        for (auto& v : saddle) v *= 2.0 / kPi * pop.signal_norm;
        const auto diag = saddle_diagnostics(pop, saddle);
        CHECK(std::abs(diag.trace) <= 1e-4 * norm_sq(pop.signal));
        CHECK(diag.min_eigenvalue < -1e-6);
        CHECK(diag.max_eigenvalue > 1e-6);

        // scale covariance: same verdict at 10x the signal
        const auto pop10 = make_phase_population(scaled(pop.signal, 10.0), 0.1);
        const auto diag10 = saddle_diagnostics(pop10, scaled(saddle, 10.0));
        CHECK(std::abs(diag10.trace) <= 1e-4 * norm_sq(pop10.signal));
        CHECK(diag10.min_eigenvalue < -1e-6);
        CHECK(diag10.max_eigenvalue > 1e-6);

        CHECK_THROWS_AS(saddle_diagnostics(pop, pop.signal), std::invalid_argument);
    }
    {
        // minimal dimension
        const auto pop = make_phase_population(Vec{1.0, 1.0}, 0.0);
        Vec saddle{1.0, -1.0};
        const double target = 2.0 / kPi * pop.signal_norm / norm(saddle);
        for (auto& v : saddle) v *= target;
        const auto diag = saddle_diagnostics(pop, saddle);
        CHECK(diag.min_eigenvalue < -1e-6);
        CHECK(diag.max_eigenvalue > 1e-6);
    }
}

TEST_CASE("strong convexity radius and quadratic growth") {
    const auto pop = make_phase_population(Vec(20, 1.0), 0.1);

    CHECK(std::abs(strong_convexity_radius(pop, 1e-9) - pop.signal_norm) <= 1e-6);
    CHECK(strong_convexity_radius(pop, 1.0 - 1e-12) <= 1e-9);
    const double delta_half = strong_convexity_radius(pop, 0.5);
    const double expect = (1.0 - std::sqrt(2.0) / 2.0) / (1.0 + std::sqrt(2.0) / 2.0) * std::sqrt(20.0);
    CHECK(std::abs(delta_half - expect) <= 1e-12);
    CHECK(std::abs(delta_half - 0.7673) <= 1e-4);
    CHECK_THROWS_AS(strong_convexity_radius(pop, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(strong_convexity_radius(pop, 1.0), std::invalid_argument);

    // growth inequality by sampling the ball
    Rng rng(70);
    const double gamma = 0.5;
    const double risk_at_signal = population_risk(pop, pop.signal);
    for (int trial = 0; trial < 1000; ++trial) {
        const Vec x = rng.ball_vector(pop.signal, delta_half);
        const double growth = population_risk(pop, x) - risk_at_signal;
        const double dist_sq = std::pow(distance(x, pop.signal), 2);
        CHECK(growth >= gamma / pop.p * dist_sq - 1e-10);
    }
}
