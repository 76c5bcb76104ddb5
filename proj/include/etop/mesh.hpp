#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "etop/errors.hpp"

namespace etop {

struct PointMass {
    int node = -1;
    double magnitude = 0.0;  // added to every translational DOF at the node
};

/// Structured grid of Q4 (2D) or H8 (3D) elements with lexicographic node
/// numbering (x fastest, then y, then z). All elements share one cell shape.
struct Mesh {
    int dimension = 2;
    std::array<int, 3> cells{0, 0, 1};       // cells per axis; cells[2] = 1 in 2D
    std::array<double, 3> lengths{0, 0, 0};  // side lengths; lengths[2] = 0 in 2D

    Eigen::MatrixXd nodes;         // n_nodes x dimension
    Eigen::MatrixXi connectivity;  // n_ele x (4 or 8), 0-based node ids
    Eigen::VectorXd element_volumes;

    std::vector<int> fixed_dofs;  // sorted, unique global DOF ids
    std::vector<PointMass> point_masses;

    int dofs_per_node() const { return dimension; }
    int num_nodes() const { return static_cast<int>(nodes.rows()); }
    int num_elements() const { return static_cast<int>(connectivity.rows()); }
    int total_dofs() const { return num_nodes() * dimension; }
    int num_free_dofs() const { return total_dofs() - static_cast<int>(fixed_dofs.size()); }

    std::array<double, 3> cell_size() const;
    Eigen::Vector3d centroid(int element) const;  // z = 0 in 2D
    double domain_diagonal() const;

    // Element index <-> grid index helpers.
    std::array<int, 3> element_grid_index(int element) const;
    int element_id(int i, int j, int k = 0) const;
};

/// Nodes are picked by a conjunction of per-axis coordinate predicates: a node
/// matches when, for every listed axis, its coordinate is within tolerance of
/// one of the listed values. An empty `dofs` list fixes all DOFs at the node.
struct SupportSpec {
    std::map<int, std::vector<double>> where;
    std::vector<int> dofs;
};

enum class Symmetry { None, Half, Quarter, Eighth };

Symmetry symmetry_from_string(const std::string& tag);
std::string to_string(Symmetry tag);

/// Element orbits under the reflection group of a symmetry tag. One reduced
/// design variable per orbit.
struct OrbitMap {
    Symmetry tag = Symmetry::None;
    std::vector<std::vector<int>> orbits;  // reduced index -> sorted element ids

    int num_reduced() const { return static_cast<int>(orbits.size()); }
    int num_elements() const;
};

Mesh build_grid(int dimension, const std::vector<int>& cells, const std::vector<double>& lengths);

/// Populates the fixed-DOF set; throws GeometryError when a spec matches no node.
Mesh apply_supports(Mesh mesh, const std::vector<SupportSpec>& specs);

/// Attaches a lumped mass to the grid node nearest to `at`.
Mesh add_point_mass(Mesh mesh, const std::vector<double>& at, double magnitude);

/// Mirror groups: half = x-mirror; quarter = x,y-mirrors; eighth = dihedral
/// group of the square in 2D (requires a square grid) and x,y,z-mirrors in 3D.
OrbitMap compute_orbits(const Mesh& mesh, Symmetry tag);

/// Checks the structural invariants (connectivity in range, positive volumes,
/// nonempty supports, nonnegative point masses). Throws on violation.
void validate_mesh(const Mesh& mesh);

}  // namespace etop
