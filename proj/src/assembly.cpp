#include "etop/assembly.hpp"

#include <cmath>

namespace etop {

namespace {

constexpr double kGauss = 0.5773502691896257;  // 1/sqrt(3)

Eigen::Matrix3d constitutive_2d(double nu, PlaneAssumption plane) {
    Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
    if (plane == PlaneAssumption::Strain) {
        const double lam = nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        const double mu = 1.0 / (2.0 * (1.0 + nu));
        c(0, 0) = c(1, 1) = lam + 2.0 * mu;
        c(0, 1) = c(1, 0) = lam;
        c(2, 2) = mu;
    } else {
        const double f = 1.0 / (1.0 - nu * nu);
        c(0, 0) = c(1, 1) = f;
        c(0, 1) = c(1, 0) = nu * f;
        c(2, 2) = f * (1.0 - nu) / 2.0;
    }
    return c;
}

Eigen::Matrix<double, 6, 6> constitutive_3d(double nu) {
    const double lam = nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    const double mu = 1.0 / (2.0 * (1.0 + nu));
    Eigen::Matrix<double, 6, 6> c = Eigen::Matrix<double, 6, 6>::Zero();
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) c(a, b) = lam;
        c(a, a) = lam + 2.0 * mu;
        c(3 + a, 3 + a) = mu;
    }
    return c;
}

UnitElementMatrices unit_matrices_q4(double a, double b, double nu, PlaneAssumption plane) {
    const Eigen::Matrix3d C = constitutive_2d(nu, plane);
    const double det_j = a * b / 4.0;

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(8, 8);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(8, 8);
    // Local nodes (0,0), (a,0), (a,b), (0,b) at (xi,eta) corners.
    const double xs[4] = {-1, 1, 1, -1};
    const double es[4] = {-1, -1, 1, 1};

    for (int gx = 0; gx < 2; ++gx)
        for (int gy = 0; gy < 2; ++gy) {
            const double xi = (gx == 0 ? -kGauss : kGauss);
            const double eta = (gy == 0 ? -kGauss : kGauss);

            Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3, 8);
            Eigen::MatrixXd N = Eigen::MatrixXd::Zero(2, 8);
            for (int n = 0; n < 4; ++n) {
                const double shape = 0.25 * (1 + xs[n] * xi) * (1 + es[n] * eta);
                const double dndx = 0.25 * xs[n] * (1 + es[n] * eta) * 2.0 / a;
                const double dndy = 0.25 * es[n] * (1 + xs[n] * xi) * 2.0 / b;
                B(0, 2 * n) = dndx;
                B(1, 2 * n + 1) = dndy;
                B(2, 2 * n) = dndy;
                B(2, 2 * n + 1) = dndx;
                N(0, 2 * n) = shape;
                N(1, 2 * n + 1) = shape;
            }
            K += B.transpose() * C * B * det_j;
            M += N.transpose() * N * det_j;
        }
    return {K, M};
}

UnitElementMatrices unit_matrices_h8(double a, double b, double c, double nu) {
    const Eigen::Matrix<double, 6, 6> C = constitutive_3d(nu);
    const double det_j = a * b * c / 8.0;

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(24, 24);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(24, 24);
    const double xs[8] = {-1, 1, 1, -1, -1, 1, 1, -1};
    const double es[8] = {-1, -1, 1, 1, -1, -1, 1, 1};
    const double zs[8] = {-1, -1, -1, -1, 1, 1, 1, 1};

    for (int gx = 0; gx < 2; ++gx)
        for (int gy = 0; gy < 2; ++gy)
            for (int gz = 0; gz < 2; ++gz) {
                const double xi = (gx == 0 ? -kGauss : kGauss);
                const double eta = (gy == 0 ? -kGauss : kGauss);
                const double zeta = (gz == 0 ? -kGauss : kGauss);

                Eigen::MatrixXd B = Eigen::MatrixXd::Zero(6, 24);
                Eigen::MatrixXd N = Eigen::MatrixXd::Zero(3, 24);
                for (int n = 0; n < 8; ++n) {
                    const double shape =
                        0.125 * (1 + xs[n] * xi) * (1 + es[n] * eta) * (1 + zs[n] * zeta);
                    const double dndx =
                        0.125 * xs[n] * (1 + es[n] * eta) * (1 + zs[n] * zeta) * 2.0 / a;
                    const double dndy =
                        0.125 * es[n] * (1 + xs[n] * xi) * (1 + zs[n] * zeta) * 2.0 / b;
                    const double dndz =
                        0.125 * zs[n] * (1 + xs[n] * xi) * (1 + es[n] * eta) * 2.0 / c;
                    // Strain order: xx, yy, zz, yz, xz, xy (engineering shear).
                    B(0, 3 * n) = dndx;
                    B(1, 3 * n + 1) = dndy;
                    B(2, 3 * n + 2) = dndz;
                    B(3, 3 * n + 1) = dndz;
                    B(3, 3 * n + 2) = dndy;
                    B(4, 3 * n) = dndz;
                    B(4, 3 * n + 2) = dndx;
                    B(5, 3 * n) = dndy;
                    B(5, 3 * n + 1) = dndx;
                    N(0, 3 * n) = shape;
                    N(1, 3 * n + 1) = shape;
                    N(2, 3 * n + 2) = shape;
                }
                K += B.transpose() * C * B * det_j;
                M += N.transpose() * N * det_j;
            }
    return {K, M};
}

}  // namespace

UnitElementMatrices unit_matrices(const std::vector<double>& cell_size, double poisson,
                                  int dimension, PlaneAssumption plane) {
    if (static_cast<int>(cell_size.size()) != dimension)
        throw GeometryError("cell size must list one extent per axis");
    for (double h : cell_size)
        if (!(h > 0)) throw GeometryError("inverted element: nonpositive cell extent");
    if (dimension == 2) return unit_matrices_q4(cell_size[0], cell_size[1], poisson, plane);
    if (dimension == 3) return unit_matrices_h8(cell_size[0], cell_size[1], cell_size[2], poisson);
    throw GeometryError("dimension must be 2 or 3");
}

DofMap build_dof_map(const Mesh& mesh) {
    DofMap map;
    map.free_of_global.assign(mesh.total_dofs(), 0);
    for (int d : mesh.fixed_dofs) map.free_of_global[d] = -1;
    int next = 0;
    for (int d = 0; d < mesh.total_dofs(); ++d)
        if (map.free_of_global[d] == 0) map.free_of_global[d] = next++;
    map.num_free = next;

    const int npe = static_cast<int>(mesh.connectivity.cols());
    const int dim = mesh.dimension;
    map.element_dofs.resize(mesh.num_elements(), npe * dim);
    for (int e = 0; e < mesh.num_elements(); ++e)
        for (int n = 0; n < npe; ++n)
            for (int d = 0; d < dim; ++d)
                map.element_dofs(e, n * dim + d) =
                    map.free_of_global[mesh.connectivity(e, n) * dim + d];
    return map;
}

std::pair<SparseMatrix, SparseMatrix> assemble(const Mesh& mesh, const DofMap& dofs,
                                               const UnitElementMatrices& unit,
                                               const Eigen::VectorXd& youngs_coeff,
                                               const Eigen::VectorXd& density_coeff) {
    if (youngs_coeff.size() != mesh.num_elements() || density_coeff.size() != mesh.num_elements())
        throw DomainError("coefficient vectors must have one entry per element");
    if (dofs.num_free == 0) throw SolverError("system is fully constrained: no free DOFs");
    for (int e = 0; e < mesh.num_elements(); ++e)
        if (!(youngs_coeff[e] > 0) || !(density_coeff[e] > 0))
            throw SolverError("nonpositive element coefficient at element " + std::to_string(e));

    const int ndofe = static_cast<int>(dofs.element_dofs.cols());
    std::vector<Eigen::Triplet<double>> kt, mt;
    kt.reserve(static_cast<size_t>(mesh.num_elements()) * ndofe * ndofe);
    mt.reserve(kt.capacity());

    for (int e = 0; e < mesh.num_elements(); ++e) {
        for (int a = 0; a < ndofe; ++a) {
            const int ia = dofs.element_dofs(e, a);
            if (ia < 0) continue;
            for (int b = 0; b < ndofe; ++b) {
                const int ib = dofs.element_dofs(e, b);
                if (ib < 0) continue;
                kt.emplace_back(ia, ib, youngs_coeff[e] * unit.stiffness(a, b));
                mt.emplace_back(ia, ib, density_coeff[e] * unit.mass(a, b));
            }
        }
    }
    for (const auto& pm : mesh.point_masses)
        for (int d = 0; d < mesh.dimension; ++d) {
            const int i = dofs.free_of_global[pm.node * mesh.dimension + d];
            if (i >= 0) mt.emplace_back(i, i, pm.magnitude);
        }

    SparseMatrix K(dofs.num_free, dofs.num_free), M(dofs.num_free, dofs.num_free);
    K.setFromTriplets(kt.begin(), kt.end());
    M.setFromTriplets(mt.begin(), mt.end());
    K.makeCompressed();
    M.makeCompressed();
    return {std::move(K), std::move(M)};
}

}  // namespace etop
