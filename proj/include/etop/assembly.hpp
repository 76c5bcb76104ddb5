#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "etop/mesh.hpp"

namespace etop {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class PlaneAssumption { Strain, Stress };  // 2D kinematics only

/// Dense element matrices for the shared cell shape of a structured grid,
/// evaluated with unit modulus and unit mass density. Scaling by the element
/// coefficients recovers the physical matrices.
struct UnitElementMatrices {
    Eigen::MatrixXd stiffness;  // 8x8 (Q4) or 24x24 (H8), E = 1
    Eigen::MatrixXd mass;       // consistent mass, rho = 1
};

/// 2x2(x2) Gauss quadrature on an axis-aligned rectangular/box cell.
UnitElementMatrices unit_matrices(const std::vector<double>& cell_size, double poisson,
                                  int dimension, PlaneAssumption plane = PlaneAssumption::Strain);

/// Free-DOF numbering with fixed DOFs eliminated.
struct DofMap {
    std::vector<int> free_of_global;  // global DOF -> free index, -1 when fixed
    Eigen::MatrixXi element_dofs;     // n_ele x dofs_per_element, free index or -1
    int num_free = 0;
};

DofMap build_dof_map(const Mesh& mesh);

/// Assembles sparse symmetric K and M over free DOFs with K_e = E_e * unit.K
/// and M_e = rho_e * unit.M; point masses land on the mass diagonal.
std::pair<SparseMatrix, SparseMatrix> assemble(const Mesh& mesh, const DofMap& dofs,
                                               const UnitElementMatrices& unit,
                                               const Eigen::VectorXd& youngs_coeff,
                                               const Eigen::VectorXd& density_coeff);

}  // namespace etop
