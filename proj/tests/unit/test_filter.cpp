#include <doctest.h>

#include <random>

#include "etop/filter.hpp"

using namespace etop;

TEST_CASE("single-element filter is the identity") {
    const Mesh m = build_grid(2, {1, 1}, {1.0, 1.0});
    const FilterOperator f = build_filter(m, 0.4);
    CHECK(f.weights.rows() == 1);
    CHECK(f.weights.coeff(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("radius below centroid spacing yields the identity") {
    const Mesh m = build_grid(2, {5, 5}, {1.0, 1.0});
    const FilterOperator f = build_filter(m, 0.19);  // spacing 0.2
    CHECK(f.weights.nonZeros() == 25);
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(25, 0.1, 0.9);
    CHECK((filter_forward(f, x) - x).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("two-element row matches the hand-evaluated weights") {
    const Mesh m = build_grid(2, {2, 1}, {1.0, 0.5});  // centroid distance 0.5
    const double r = 0.8, d = 0.5;
    const FilterOperator f = build_filter(m, r);
    // equal volumes: row = [r, r - d] / (2r - d)
    CHECK(f.weights.coeff(0, 0) == doctest::Approx(r / (2 * r - d)));
    CHECK(f.weights.coeff(0, 1) == doctest::Approx((r - d) / (2 * r - d)));
    CHECK(f.weights.coeff(1, 1) == doctest::Approx(r / (2 * r - d)));
}

TEST_CASE("rows sum to one, entries are nonnegative, support matches the radius") {
    const Mesh m = build_grid(2, {9, 6}, {3.0, 2.0});
    const double r = 0.75;
    const FilterOperator f = build_filter(m, r);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.num_elements());
    CHECK((f.weights * ones - ones).cwiseAbs().maxCoeff() <= 1e-12);
    for (int p = 0; p < m.num_elements(); ++p)
        for (int q = 0; q < m.num_elements(); ++q) {
            const double w = f.weights.coeff(p, q);
            CHECK(w >= 0.0);
            const double dist = (m.centroid(p) - m.centroid(q)).norm();
            CHECK((w > 0.0) == (dist < r));
        }
}

TEST_CASE("forward application against a dense multiply oracle") {
    const Mesh m = build_grid(2, {3, 1}, {3.0, 1.0});
    const FilterOperator f = build_filter(m, 1.5);
    const Eigen::MatrixXd dense = Eigen::MatrixXd(f.weights);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.1, 1.0);
    Eigen::VectorXd x(3);
    for (int i = 0; i < 3; ++i) x[i] = unit(rng);
    CHECK((filter_forward(f, x) - dense * x).cwiseAbs().maxCoeff() <= 1e-15);

    // constant fields are preserved exactly by row-stochastic weights
    Eigen::VectorXd c = Eigen::VectorXd::Constant(3, 0.37);
    CHECK((filter_forward(f, c) - c).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("backward application is the exact adjoint") {
    const Mesh m = build_grid(2, {8, 5}, {2.0, 1.0});
    const FilterOperator f = build_filter(m, 0.4);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd x(m.num_elements()), g(m.num_elements());
        for (int i = 0; i < m.num_elements(); ++i) {
            x[i] = gauss(rng);
            g[i] = gauss(rng);
        }
        const double lhs = g.dot(filter_forward(f, x));
        const double rhs = filter_backward(f, g).dot(x);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("filter rejects bad inputs") {
    const Mesh m = build_grid(2, {2, 2}, {1.0, 1.0});
    CHECK_THROWS_AS(build_filter(m, 0.0), DomainError);
    const FilterOperator f = build_filter(m, 0.6);
    CHECK_THROWS_AS(filter_forward(f, Eigen::VectorXd::Ones(3)), DomainError);
    CHECK_THROWS_AS(filter_backward(f, Eigen::VectorXd::Ones(5)), DomainError);
}

TEST_CASE("orbit expansion and gradient reduction") {
    const Mesh m = build_grid(2, {4, 4}, {1.0, 1.0});

    SUBCASE("no symmetry: both maps are identities") {
        const OrbitMap orbits = compute_orbits(m, Symmetry::None);
        Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(16, 0.0, 1.0);
        CHECK((orbit_expand(orbits, x) - x).cwiseAbs().maxCoeff() == 0.0);
        CHECK((orbit_reduce_grad(orbits, x) - x).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("gradients sum over the orbit") {
        const OrbitMap orbits = compute_orbits(m, Symmetry::Eighth);
        Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.num_elements());
        const Eigen::VectorXd reduced = orbit_reduce_grad(orbits, ones);
        for (int o = 0; o < orbits.num_reduced(); ++o)
            CHECK(reduced[o] == doctest::Approx(static_cast<double>(orbits.orbits[o].size())));
    }
    SUBCASE("expansion and reduction are adjoint") {
        const OrbitMap orbits = compute_orbits(m, Symmetry::Quarter);
        std::mt19937_64 rng(5);
        std::normal_distribution<double> gauss;
        Eigen::VectorXd delta(orbits.num_reduced()), g(m.num_elements());
        for (int i = 0; i < delta.size(); ++i) delta[i] = gauss(rng);
        for (int i = 0; i < g.size(); ++i) g[i] = gauss(rng);
        const double lhs = g.dot(orbit_expand(orbits, delta));
        const double rhs = orbit_reduce_grad(orbits, g).dot(delta);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
    SUBCASE("shape mismatches are rejected") {
        const OrbitMap orbits = compute_orbits(m, Symmetry::Half);
        CHECK_THROWS_AS(orbit_expand(orbits, Eigen::VectorXd::Ones(3)), DomainError);
        CHECK_THROWS_AS(orbit_reduce_grad(orbits, Eigen::VectorXd::Ones(3)), DomainError);
    }
}

TEST_CASE("symmetric designs stay symmetric through expansion and filtering") {
    const Mesh m = build_grid(2, {10, 10}, {1.0, 1.0});
    const OrbitMap orbits = compute_orbits(m, Symmetry::Eighth);
    const FilterOperator f = build_filter(m, 0.3);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(0.2, 1.0);
    Eigen::VectorXd reduced(orbits.num_reduced());
    for (int i = 0; i < reduced.size(); ++i) reduced[i] = unit(rng);

    const Eigen::VectorXd full = orbit_expand(orbits, reduced);
    for (const auto& orbit : orbits.orbits)
        for (int e : orbit) CHECK(full[e] == full[orbit[0]]);  // exact copies

    const Eigen::VectorXd rho = filter_forward(f, full);
    for (const auto& orbit : orbits.orbits)
        for (int e : orbit) CHECK(rho[e] == doctest::Approx(rho[orbit[0]]).epsilon(1e-13));
}
