#include <doctest.h>

#include <cmath>

#include "etop/verify.hpp"

using namespace etop;

TEST_CASE("cdm_gradient on analytic functions") {
    SUBCASE("quadratic") {
        const Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
        const Eigen::VectorXd g = cdm_gradient(
            [](const Eigen::VectorXd& v) { return v[0] * v[0]; }, x, 1e-8);
        CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-6));
    }
    SUBCASE("constant function") {
        const Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 0.4);
        const Eigen::VectorXd g =
            cdm_gradient([](const Eigen::VectorXd&) { return 5.0; }, x, 1e-8);
        CHECK(g.cwiseAbs().maxCoeff() <= 1e-6 * 5.0);
    }
    SUBCASE("one-sided fallback at box edges") {
        Eigen::VectorXd x(2), lo(2), hi(2);
        x << 0.0, 1.0;
        lo << 0.0, 0.0;
        hi << 1.0, 1.0;
        std::vector<int> flagged;
        const Eigen::VectorXd g = cdm_gradient(
            [](const Eigen::VectorXd& v) { return 3.0 * v[0] - 2.0 * v[1]; }, x, 1e-8, &lo, &hi,
            &flagged);
        CHECK(g[0] == doctest::Approx(3.0).epsilon(1e-6));
        CHECK(g[1] == doctest::Approx(-2.0).epsilon(1e-6));
        CHECK(flagged == std::vector<int>{0, 1});
    }
    SUBCASE("propagates failures with the coordinate index") {
        const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
        CHECK_THROWS_WITH_AS(
            cdm_gradient(
                [](const Eigen::VectorXd& v) -> double {
                    if (v[1] != 0.0) throw DomainError("boom");
                    return v[0];
                },
                x, 1e-8),
            doctest::Contains("coordinate 1"), Error);
    }
}

TEST_CASE("compare verdicts") {
    Eigen::VectorXd a(3);
    a << 1.0, -2.0, 0.5;
    SUBCASE("identical vectors match with zero error") {
        const SensitivityReport r = compare("q", "all", a, a, 1e-4);
        CHECK(r.match);
        CHECK(r.max_rel_error == 0.0);
    }
    SUBCASE("all-zero pair matches via the denominator guard") {
        const Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
        const SensitivityReport r = compare("q", "all", z, z, 1e-4);
        CHECK(r.match);
    }
    SUBCASE("a 10 percent deviation fails a 1e-4 tolerance") {
        Eigen::VectorXd b = a;
        b[1] *= 1.1;
        const SensitivityReport r = compare("q", "all", a, b, 1e-4);
        CHECK_FALSE(r.match);
        CHECK(r.max_rel_error == doctest::Approx(0.1));
    }
    SUBCASE("length mismatch throws") {
        CHECK_THROWS_AS(compare("q", "all", a, Eigen::VectorXd::Zero(2), 1e-4), DomainError);
    }
}

TEST_CASE("cdm of a cluster mean agrees with the analytic chain on a small block") {
    StudySpec spec;
    spec.cells = 6;
    spec.symmetry = Symmetry::Half;
    spec.warmup_iterations = 2;
    spec.filter_radius = 0.3;
    spec.youngs = 1e7;
    spec.quantities = {"cluster_means"};
    spec.spaces = {"symmetric"};
    const StudyResult result = run_study(spec);
    // any multi-member cluster at this state must carry a matching gradient
    for (const auto& report : result.reports) {
        INFO(report.quantity);
        CHECK(report.match);
    }
}

TEST_CASE("run_study emits the requested quantity/space grid") {
    StudySpec spec;
    spec.cells = 4;
    spec.symmetry = Symmetry::Half;
    spec.warmup_iterations = 1;
    spec.filter_radius = 0.4;
    spec.youngs = 1e7;
    spec.quantities = {"pnorm", "ks"};
    spec.spaces = {"symmetric"};
    spec.aggregate_clusters = 4;
    const StudyResult result = run_study(spec);
    REQUIRE(!result.reports.empty());
    int pnorm_complete = 0, ks_complete = 0;
    for (const auto& r : result.reports) {
        CHECK(r.space == "symmetric");
        if (r.quantity == "pnorm_complete") ++pnorm_complete;
        if (r.quantity == "ks_complete") ++ks_complete;
    }
    CHECK(pnorm_complete == 1);
    CHECK(ks_complete == 1);
    CHECK(result.base_cluster_sizes.size() >= 4);
}
