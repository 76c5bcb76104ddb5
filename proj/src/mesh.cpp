#include "etop/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace etop {

std::array<double, 3> Mesh::cell_size() const {
    std::array<double, 3> h{0, 0, 0};
    for (int a = 0; a < dimension; ++a) h[a] = lengths[a] / cells[a];
    return h;
}

Eigen::Vector3d Mesh::centroid(int element) const {
    const auto idx = element_grid_index(element);
    const auto h = cell_size();
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (int a = 0; a < dimension; ++a) c[a] = (idx[a] + 0.5) * h[a];
    return c;
}

double Mesh::domain_diagonal() const {
    double s = 0;
    for (int a = 0; a < dimension; ++a) s += lengths[a] * lengths[a];
    return std::sqrt(s);
}

std::array<int, 3> Mesh::element_grid_index(int element) const {
    const int nx = cells[0];
    const int ny = cells[1];
    return {element % nx, (element / nx) % ny, element / (nx * ny)};
}

int Mesh::element_id(int i, int j, int k) const { return i + cells[0] * (j + cells[1] * k); }

int OrbitMap::num_elements() const {
    int n = 0;
    for (const auto& orbit : orbits) n += static_cast<int>(orbit.size());
    return n;
}

Symmetry symmetry_from_string(const std::string& tag) {
    if (tag == "none") return Symmetry::None;
    if (tag == "half") return Symmetry::Half;
    if (tag == "quarter") return Symmetry::Quarter;
    if (tag == "eighth") return Symmetry::Eighth;
    throw DomainError("unknown symmetry tag '" + tag + "'");
}

std::string to_string(Symmetry tag) {
    switch (tag) {
        case Symmetry::None: return "none";
        case Symmetry::Half: return "half";
        case Symmetry::Quarter: return "quarter";
        case Symmetry::Eighth: return "eighth";
    }
    return "none";
}

Mesh build_grid(int dimension, const std::vector<int>& cells, const std::vector<double>& lengths) {
    if (dimension != 2 && dimension != 3)
        throw GeometryError("dimension must be 2 or 3, got " + std::to_string(dimension));
    if (static_cast<int>(cells.size()) != dimension || static_cast<int>(lengths.size()) != dimension)
        throw GeometryError("cells/lengths must list one entry per axis");
    for (int a = 0; a < dimension; ++a) {
        if (cells[a] < 1) throw GeometryError("cells per axis must be >= 1");
        if (!(lengths[a] > 0)) throw GeometryError("side lengths must be positive");
    }

    Mesh mesh;
    mesh.dimension = dimension;
    for (int a = 0; a < dimension; ++a) {
        mesh.cells[a] = cells[a];
        mesh.lengths[a] = lengths[a];
    }

    const int nx = mesh.cells[0], ny = mesh.cells[1], nz = mesh.cells[2];
    const auto h = mesh.cell_size();

    const int nodes_x = nx + 1, nodes_y = ny + 1, nodes_z = (dimension == 3) ? nz + 1 : 1;
    const int n_nodes = nodes_x * nodes_y * nodes_z;
    mesh.nodes.resize(n_nodes, dimension);
    for (int k = 0; k < nodes_z; ++k)
        for (int j = 0; j < nodes_y; ++j)
            for (int i = 0; i < nodes_x; ++i) {
                const int id = i + nodes_x * (j + nodes_y * k);
                mesh.nodes(id, 0) = i * h[0];
                mesh.nodes(id, 1) = j * h[1];
                if (dimension == 3) mesh.nodes(id, 2) = k * h[2];
            }

    const int n_ele = nx * ny * (dimension == 3 ? nz : 1);
    const int nodes_per_ele = (dimension == 2) ? 4 : 8;
    mesh.connectivity.resize(n_ele, nodes_per_ele);
    auto node_id = [&](int i, int j, int k) { return i + nodes_x * (j + nodes_y * k); };
    if (dimension == 2) {
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const int e = mesh.element_id(i, j);
                mesh.connectivity(e, 0) = node_id(i, j, 0);
                mesh.connectivity(e, 1) = node_id(i + 1, j, 0);
                mesh.connectivity(e, 2) = node_id(i + 1, j + 1, 0);
                mesh.connectivity(e, 3) = node_id(i, j + 1, 0);
            }
    } else {
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    const int e = mesh.element_id(i, j, k);
                    mesh.connectivity(e, 0) = node_id(i, j, k);
                    mesh.connectivity(e, 1) = node_id(i + 1, j, k);
                    mesh.connectivity(e, 2) = node_id(i + 1, j + 1, k);
                    mesh.connectivity(e, 3) = node_id(i, j + 1, k);
                    mesh.connectivity(e, 4) = node_id(i, j, k + 1);
                    mesh.connectivity(e, 5) = node_id(i + 1, j, k + 1);
                    mesh.connectivity(e, 6) = node_id(i + 1, j + 1, k + 1);
                    mesh.connectivity(e, 7) = node_id(i, j + 1, k + 1);
                }
    }

    double cell_volume = 1.0;
    for (int a = 0; a < dimension; ++a) cell_volume *= h[a];
    mesh.element_volumes = Eigen::VectorXd::Constant(n_ele, cell_volume);
    return mesh;
}

Mesh apply_supports(Mesh mesh, const std::vector<SupportSpec>& specs) {
    if (specs.empty()) throw GeometryError("no supports specified");
    const double tol = 1e-9 * mesh.domain_diagonal();
    std::set<int> fixed(mesh.fixed_dofs.begin(), mesh.fixed_dofs.end());

    for (size_t s = 0; s < specs.size(); ++s) {
        const auto& spec = specs[s];
        for (const auto& [axis, values] : spec.where) {
            if (axis < 0 || axis >= mesh.dimension)
                throw GeometryError("support axis out of range for dimension " +
                                    std::to_string(mesh.dimension));
            if (values.empty()) throw GeometryError("support predicate lists no coordinate values");
        }
        for (int d : spec.dofs)
            if (d < 0 || d >= mesh.dimension) throw GeometryError("support DOF out of range");

        int matched = 0;
        for (int node = 0; node < mesh.num_nodes(); ++node) {
            bool match = true;
            for (const auto& [axis, values] : spec.where) {
                const double c = mesh.nodes(node, axis);
                bool near_any = false;
                for (double v : values) near_any |= std::abs(c - v) <= tol;
                if (!near_any) {
                    match = false;
                    break;
                }
            }
            if (!match) continue;
            ++matched;
            if (spec.dofs.empty()) {
                for (int d = 0; d < mesh.dimension; ++d) fixed.insert(node * mesh.dimension + d);
            } else {
                for (int d : spec.dofs) fixed.insert(node * mesh.dimension + d);
            }
        }
        if (matched == 0)
            throw GeometryError("support spec " + std::to_string(s) + " matches no nodes");
    }

    mesh.fixed_dofs.assign(fixed.begin(), fixed.end());
    return mesh;
}

Mesh add_point_mass(Mesh mesh, const std::vector<double>& at, double magnitude) {
    if (static_cast<int>(at.size()) != mesh.dimension)
        throw GeometryError("point-mass position must list one coordinate per axis");
    if (magnitude < 0) throw GeometryError("point-mass magnitude must be >= 0");

    int best = 0;
    double best_d2 = std::numeric_limits<double>::max();
    for (int node = 0; node < mesh.num_nodes(); ++node) {
        double d2 = 0;
        for (int a = 0; a < mesh.dimension; ++a) {
            const double d = mesh.nodes(node, a) - at[a];
            d2 += d * d;
        }
        if (d2 < best_d2) {
            best_d2 = d2;
            best = node;
        }
    }
    mesh.point_masses.push_back({best, magnitude});
    return mesh;
}

namespace {

// Group actions expressed in element-grid index space; all integer arithmetic,
// so orbit membership is exact.
using GridIdx = std::array<int, 3>;

std::vector<GridIdx> group_images(const Mesh& mesh, Symmetry tag, const GridIdx& g) {
    const int nx = mesh.cells[0], ny = mesh.cells[1], nz = mesh.cells[2];
    const int i = g[0], j = g[1], k = g[2];
    const int mi = nx - 1 - i, mj = ny - 1 - j, mk = nz - 1 - k;

    std::vector<GridIdx> images;
    switch (tag) {
        case Symmetry::None:
            images = {{i, j, k}};
            break;
        case Symmetry::Half:
            images = {{i, j, k}, {mi, j, k}};
            break;
        case Symmetry::Quarter:
            images = {{i, j, k}, {mi, j, k}, {i, mj, k}, {mi, mj, k}};
            break;
        case Symmetry::Eighth:
            if (mesh.dimension == 2) {
                // Dihedral group of the square: axis mirrors, diagonals, rotations.
                images = {{i, j, k},   {mi, j, k},  {i, mj, k},  {mi, mj, k},
                          {j, i, k},   {mj, i, k},  {j, mi, k},  {mj, mi, k}};
            } else {
                images = {{i, j, k},   {mi, j, k},  {i, mj, k},  {mi, mj, k},
                          {i, j, mk},  {mi, j, mk}, {i, mj, mk}, {mi, mj, mk}};
            }
            break;
    }
    return images;
}

}  // namespace

OrbitMap compute_orbits(const Mesh& mesh, Symmetry tag) {
    if (tag == Symmetry::Eighth && mesh.dimension == 2) {
        if (mesh.cells[0] != mesh.cells[1] ||
            std::abs(mesh.lengths[0] - mesh.lengths[1]) > 1e-12 * mesh.domain_diagonal())
            throw GeometryError("eighth-symmetry requires a square domain and grid");
    }

    OrbitMap map;
    map.tag = tag;
    const int n_ele = mesh.num_elements();
    std::vector<char> seen(n_ele, 0);
    for (int e = 0; e < n_ele; ++e) {
        if (seen[e]) continue;
        std::set<int> orbit;
        for (const auto& img : group_images(mesh, tag, mesh.element_grid_index(e)))
            orbit.insert(mesh.element_id(img[0], img[1], img[2]));
        for (int member : orbit) seen[member] = 1;
        map.orbits.emplace_back(orbit.begin(), orbit.end());
    }
    return map;
}

void validate_mesh(const Mesh& mesh) {
    const int nodes_per_ele = (mesh.dimension == 2) ? 4 : 8;
    if (mesh.connectivity.cols() != nodes_per_ele)
        throw GeometryError("connectivity width does not match element type");
    for (int e = 0; e < mesh.num_elements(); ++e) {
        std::set<int> ids;
        for (int a = 0; a < nodes_per_ele; ++a) {
            const int n = mesh.connectivity(e, a);
            if (n < 0 || n >= mesh.num_nodes())
                throw GeometryError("element references out-of-range node");
            ids.insert(n);
        }
        if (static_cast<int>(ids.size()) != nodes_per_ele)
            throw GeometryError("element references duplicate nodes");
        if (!(mesh.element_volumes[e] > 0)) throw GeometryError("nonpositive element volume");
    }
    if (mesh.fixed_dofs.empty())
        throw GeometryError("fixed-DOF set is empty; rigid-body modes unconstrained");
    for (int d : mesh.fixed_dofs)
        if (d < 0 || d >= mesh.total_dofs()) throw GeometryError("fixed DOF out of range");
    for (const auto& pm : mesh.point_masses) {
        if (pm.node < 0 || pm.node >= mesh.num_nodes())
            throw GeometryError("point mass attached to out-of-range node");
        if (pm.magnitude < 0) throw GeometryError("negative point-mass magnitude");
    }
}

}  // namespace etop
