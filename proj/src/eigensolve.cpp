#include "etop/eigensolve.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace etop {

namespace {

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

struct RitzInfo {
    Eigen::VectorXd theta;  // ascending
    Eigen::MatrixXd y;
};

RitzInfo tridiagonal_eig(const std::vector<double>& alpha, const std::vector<double>& beta) {
    const int j = static_cast<int>(alpha.size());
    Eigen::VectorXd diag(j), sub(std::max(j - 1, 0));
    for (int i = 0; i < j; ++i) diag[i] = alpha[i];
    for (int i = 0; i + 1 < j; ++i) sub[i] = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub);
    if (es.info() != Eigen::Success) throw SolverError("tridiagonal eigendecomposition failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace

EigenSet solve_smallest(const SparseMatrix& K, const SparseMatrix& M, int count,
                        const EigenOptions& options) {
    const int n = static_cast<int>(K.rows());
    if (K.rows() != K.cols() || M.rows() != M.cols() || K.rows() != M.rows())
        throw SolverError("K and M must be square and of equal size");
    if (count < 1 || count >= n)
        throw SolverError("requested eigenpair count must satisfy 1 <= count < n_free");

    Eigen::SimplicialLDLT<SparseMatrix> factor(K);
    if (factor.info() != Eigen::Success || (factor.vectorD().array() <= 0.0).any())
        throw SolverError("stiffness factorization failed: K is not positive definite");

    const int max_basis = std::min(n, std::max(options.max_steps_factor * count, options.min_steps));

    std::mt19937_64 rng(options.seed);
    Eigen::MatrixXd basis(n, max_basis);    // M-orthonormal Lanczos vectors
    Eigen::MatrixXd m_basis(n, max_basis);  // M * basis
    std::vector<double> alpha, beta;        // beta[i] couples column i and i+1
    alpha.reserve(max_basis);
    beta.reserve(max_basis);

    // Gram-Schmidt (two passes) in the M inner product; returns the M-norm
    // remaining after orthogonalization, writing column `j` on success.
    auto append_column = [&](Eigen::VectorXd v, int j) -> double {
        for (int pass = 0; pass < 2 && j > 0; ++pass) {
            Eigen::VectorXd h = m_basis.leftCols(j).transpose() * v;
            v.noalias() -= basis.leftCols(j) * h;
        }
        Eigen::VectorXd mv = M * v;
        const double norm = std::sqrt(std::max(v.dot(mv), 0.0));
        if (norm > 0) {
            basis.col(j) = v / norm;
            m_basis.col(j) = mv / norm;
        }
        return norm;
    };
    auto append_fresh = [&](int j) -> bool {
        for (int attempt = 0; attempt < 8; ++attempt)
            if (append_column(random_vector(n, rng), j) > 1e-10) return true;
        return false;
    };

    if (!append_fresh(0)) throw SolverError("could not build an M-normalized start vector");

    RitzInfo ritz;
    bool converged = false;
    double op_scale = 0.0;
    int size = 1;  // current basis size

    while (true) {
        const int j = size - 1;
        Eigen::VectorXd w = factor.solve(m_basis.col(j));
        const double a = w.dot(m_basis.col(j));
        alpha.push_back(a);
        op_scale = std::max(op_scale, std::abs(a));
        w.noalias() -= a * basis.col(j);
        if (j > 0 && beta[j - 1] != 0.0) w.noalias() -= beta[j - 1] * basis.col(j - 1);
        // Full reorthogonalization keeps repeated eigenvalues resolvable.
        for (int pass = 0; pass < 2; ++pass) {
            Eigen::VectorXd h = m_basis.leftCols(size).transpose() * w;
            w.noalias() -= basis.leftCols(size) * h;
        }
        const Eigen::VectorXd mw = M * w;
        const double b_next = std::sqrt(std::max(w.dot(mw), 0.0));

        ritz = tridiagonal_eig(alpha, beta);
        if (size >= count) {
            bool all_ok = true;
            for (int i = 0; i < count && all_ok; ++i) {
                const int col = size - 1 - i;  // largest theta = smallest lambda
                const double bound = b_next * std::abs(ritz.y(size - 1, col));
                all_ok = bound <= options.tol * std::max(std::abs(ritz.theta[col]), 1e-300);
            }
            if (all_ok) {
                converged = true;
                break;
            }
        }
        if (size == max_basis || size == n) {
            converged = (size == n);  // full Krylov space: decomposition exact
            break;
        }

        if (b_next > 1e-12 * std::max(op_scale, 1e-300)) {
            basis.col(size) = w / b_next;
            m_basis.col(size) = mw / b_next;
            beta.push_back(b_next);
        } else {
            // Invariant subspace: deflate and continue with a fresh direction.
            if (!append_fresh(size)) {
                converged = true;  // whole space spanned
                break;
            }
            beta.push_back(0.0);
        }
        ++size;
    }

    if (size < count) throw SolverError("Lanczos basis smaller than requested eigenpair count");

    EigenSet out;
    out.count = count;
    out.values.resize(count);
    out.vectors.resize(n, count);
    for (int i = 0; i < count; ++i) {
        const int col = size - 1 - i;
        const double theta = ritz.theta[col];
        if (!(theta > 0))
            throw SolverError("inverted-operator Ritz value is not positive; pencil not SPD");
        out.values[i] = 1.0 / theta;
        Eigen::VectorXd phi = basis.leftCols(size) * ritz.y.col(col);
        const double mn = std::sqrt(phi.dot(M * phi));
        out.vectors.col(i) = phi / mn;
    }
    // theta descending maps to lambda ascending; guard the ordering exactly.
    std::vector<int> order(count);
    for (int q = 0; q < count; ++q) order[q] = q;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return out.values[a] < out.values[b]; });
    {
        Eigen::VectorXd vals(count);
        Eigen::MatrixXd vecs(n, count);
        for (int q = 0; q < count; ++q) {
            vals[q] = out.values[order[q]];
            vecs.col(q) = out.vectors.col(order[q]);
        }
        out.values.swap(vals);
        out.vectors.swap(vecs);
    }

    if (!converged) {
        double worst = 0.0;
        for (int i = 0; i < count; ++i) {
            const Eigen::VectorXd kphi = K * out.vectors.col(i);
            const Eigen::VectorXd r = kphi - out.values[i] * (M * out.vectors.col(i));
            worst = std::max(worst, r.norm() / kphi.norm());
        }
        if (worst > options.accept_tol)
            throw SolverError(
                "eigensolver did not converge within the step budget; worst relative residual " +
                std::to_string(worst));
    }
    return out;
}

}  // namespace etop
