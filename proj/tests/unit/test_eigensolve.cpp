#include <doctest.h>

#include <Eigen/Dense>
#include <numeric>
#include <random>

#include "etop/eigensolve.hpp"

using namespace etop;

namespace {

SparseMatrix sparse_of(const Eigen::MatrixXd& dense) {
    return dense.sparseView(1.0, 1e-300);
}

// Dense generalized eigensolver oracle over the same free-DOF system.
Eigen::VectorXd dense_eigenvalues(const SparseMatrix& K, const SparseMatrix& M) {
    const Eigen::MatrixXd Kd(K), Md(M);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Kd, Md);
    return es.eigenvalues();
}

struct BlockSystem {
    SparseMatrix K, M;
};

// Square block with four corners fixed; a small system with symmetry-induced
// repeated eigenvalues.
BlockSystem corner_block(int cells, double youngs = 1.0) {
    Mesh mesh = build_grid(2, {cells, cells}, {1.0, 1.0});
    mesh = apply_supports(mesh, {SupportSpec{{{0, {0.0, 1.0}}, {1, {0.0, 1.0}}}, {}}});
    const auto h = mesh.cell_size();
    const UnitElementMatrices unit = unit_matrices({h[0], h[1]}, 0.3, 2);
    const DofMap dofs = build_dof_map(mesh);
    auto [K, M] = assemble(mesh, dofs, unit,
                           Eigen::VectorXd::Constant(mesh.num_elements(), youngs),
                           Eigen::VectorXd::Ones(mesh.num_elements()));
    return {std::move(K), std::move(M)};
}

}  // namespace

TEST_CASE("identical SPD pencil returns unit eigenvalues") {
    Eigen::MatrixXd A(4, 4);
    A << 4, 1, 0, 0, 1, 3, 1, 0, 0, 1, 5, 1, 0, 0, 1, 2;
    const SparseMatrix K = sparse_of(A);
    const EigenSet eig = solve_smallest(K, K, 3);
    for (int i = 0; i < 3; ++i) CHECK(eig.values[i] == doctest::Approx(1.0).epsilon(1e-12));
    // vectors K-orthonormal
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(eig.vectors.col(i).dot(A * eig.vectors.col(j)) ==
                  doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10).scale(1.0));
}

TEST_CASE("diagonal pencil with identity mass") {
    Eigen::MatrixXd K = Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal();
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(3, 3);
    const EigenSet eig = solve_smallest(sparse_of(K), sparse_of(M), 2);
    CHECK(eig.values[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eig.values[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(eig.vectors(0, 0)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(eig.vectors(1, 1)) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("4x4 corner block matches the dense oracle including repeated pairs") {
    const BlockSystem sys = corner_block(4);
    const Eigen::VectorXd oracle = dense_eigenvalues(sys.K, sys.M);
    const int n = 12;
    const EigenSet eig = solve_smallest(sys.K, sys.M, n);
    for (int i = 0; i < n; ++i)
        CHECK(eig.values[i] == doctest::Approx(oracle[i]).epsilon(1e-10));

    SUBCASE("M-orthonormality and residuals") {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j <= i; ++j)
                CHECK(std::abs(eig.vectors.col(i).dot(sys.M * eig.vectors.col(j)) -
                               (i == j ? 1.0 : 0.0)) <= 1e-8);
            const Eigen::VectorXd kphi = sys.K * eig.vectors.col(i);
            const Eigen::VectorXd r = kphi - eig.values[i] * (sys.M * eig.vectors.col(i));
            CHECK(r.norm() <= 1e-8 * kphi.norm());
        }
    }
    SUBCASE("Rayleigh identity") {
        for (int i = 0; i < n; ++i)
            CHECK(eig.vectors.col(i).dot(sys.K * eig.vectors.col(i)) ==
                  doctest::Approx(eig.values[i]).epsilon(1e-8));
    }
    SUBCASE("ascending order") {
        for (int i = 1; i < n; ++i) CHECK(eig.values[i] >= eig.values[i - 1]);
    }
}

TEST_CASE("eigenvalues are invariant under node renumbering") {
    Mesh mesh = build_grid(2, {3, 2}, {1.5, 1.0});
    mesh = apply_supports(mesh, {SupportSpec{{{0, {0.0}}}, {}}});
    const auto h = mesh.cell_size();
    const UnitElementMatrices unit = unit_matrices({h[0], h[1]}, 0.3, 2);

    // renumber nodes by reversing ids and remapping every reference
    Mesh permuted = mesh;
    const int nn = mesh.num_nodes();
    std::vector<int> perm(nn);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    for (int old_id = 0; old_id < nn; ++old_id)
        permuted.nodes.row(perm[old_id]) = mesh.nodes.row(old_id);
    for (int e = 0; e < mesh.num_elements(); ++e)
        for (int a = 0; a < 4; ++a)
            permuted.connectivity(e, a) = perm[mesh.connectivity(e, a)];
    permuted.fixed_dofs.clear();
    for (int d : mesh.fixed_dofs)
        permuted.fixed_dofs.push_back(perm[d / 2] * 2 + d % 2);
    std::sort(permuted.fixed_dofs.begin(), permuted.fixed_dofs.end());

    Eigen::VectorXd E(mesh.num_elements()), R(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        E[e] = 0.5 + 0.2 * e;
        R[e] = 1.0 + 0.1 * e;
    }
    const auto [K1, M1] = assemble(mesh, build_dof_map(mesh), unit, E, R);
    const auto [K2, M2] = assemble(permuted, build_dof_map(permuted), unit, E, R);
    const EigenSet a = solve_smallest(K1, M1, 5);
    const EigenSet b = solve_smallest(K2, M2, 5);
    for (int i = 0; i < 5; ++i)
        CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-10));
}

TEST_CASE("scaling the stiffness scales every eigenvalue") {
    const BlockSystem sys = corner_block(3);
    const EigenSet base = solve_smallest(sys.K, sys.M, 4);
    const SparseMatrix K4 = 4.0 * sys.K;
    const EigenSet scaled = solve_smallest(K4, sys.M, 4);
    for (int i = 0; i < 4; ++i)
        CHECK(scaled.values[i] == doctest::Approx(4.0 * base.values[i]).epsilon(1e-10));
}

TEST_CASE("solver rejects invalid requests") {
    const BlockSystem sys = corner_block(2);
    CHECK_THROWS_AS(solve_smallest(sys.K, sys.M, 0), SolverError);
    CHECK_THROWS_AS(solve_smallest(sys.K, sys.M, static_cast<int>(sys.K.rows())), SolverError);

    // indefinite K: flip the sign
    const SparseMatrix Kneg = -1.0 * sys.K;
    CHECK_THROWS_AS(solve_smallest(Kneg, sys.M, 2), SolverError);
}

TEST_CASE("determinism for a fixed seed") {
    const BlockSystem sys = corner_block(4);
    EigenOptions opts;
    opts.seed = 42;
    const EigenSet a = solve_smallest(sys.K, sys.M, 6, opts);
    const EigenSet b = solve_smallest(sys.K, sys.M, 6, opts);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.vectors - b.vectors).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("point-mass dominated pencil still solves cleanly") {
    Mesh mesh = build_grid(2, {3, 3}, {1.0, 1.0});
    mesh = apply_supports(mesh, {SupportSpec{{{1, {0.0}}}, {}}});
    mesh = add_point_mass(mesh, {0.5, 1.0}, 50.0);
    const auto h = mesh.cell_size();
    const UnitElementMatrices unit = unit_matrices({h[0], h[1]}, 0.3, 2);
    const DofMap dofs = build_dof_map(mesh);
    const auto [K, M] = assemble(mesh, dofs, unit, Eigen::VectorXd::Ones(9),
                                 Eigen::VectorXd::Ones(9));
    const Eigen::VectorXd oracle = dense_eigenvalues(K, M);
    const EigenSet eig = solve_smallest(K, M, 5);
    for (int i = 0; i < 5; ++i)
        CHECK(eig.values[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
}
