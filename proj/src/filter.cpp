#include "etop/filter.hpp"

#include <cmath>
#include <vector>

namespace etop {

FilterOperator build_filter(const Mesh& mesh, double r_min) {
    if (!(r_min > 0)) throw DomainError("filter radius must be positive");

    const auto h = mesh.cell_size();
    const int nx = mesh.cells[0], ny = mesh.cells[1];
    const int nz = (mesh.dimension == 3) ? mesh.cells[2] : 1;
    // Neighbor window in grid indices; weights vanish beyond r_min.
    const int wx = static_cast<int>(std::ceil(r_min / h[0]));
    const int wy = static_cast<int>(std::ceil(r_min / h[1]));
    const int wz = (mesh.dimension == 3) ? static_cast<int>(std::ceil(r_min / h[2])) : 0;

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<size_t>(mesh.num_elements()) * (2 * wx + 1) * (2 * wy + 1));
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const int p = mesh.element_id(i, j, k);
                double row_sum = 0.0;
                const size_t row_begin = triplets.size();
                for (int kk = std::max(k - wz, 0); kk <= std::min(k + wz, nz - 1); ++kk)
                    for (int jj = std::max(j - wy, 0); jj <= std::min(j + wy, ny - 1); ++jj)
                        for (int ii = std::max(i - wx, 0); ii <= std::min(i + wx, nx - 1); ++ii) {
                            const double dx = (i - ii) * h[0];
                            const double dy = (j - jj) * h[1];
                            const double dz = (k - kk) * h[2];
                            const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
                            if (dist >= r_min) continue;
                            const int q = mesh.element_id(ii, jj, kk);
                            const double w = (r_min - dist) * mesh.element_volumes[q];
                            triplets.emplace_back(p, q, w);
                            row_sum += w;
                        }
                for (size_t t = row_begin; t < triplets.size(); ++t)
                    triplets[t] = {triplets[t].row(), triplets[t].col(),
                                   triplets[t].value() / row_sum};
            }

    FilterOperator filter;
    filter.radius = r_min;
    filter.weights.resize(mesh.num_elements(), mesh.num_elements());
    filter.weights.setFromTriplets(triplets.begin(), triplets.end());
    filter.weights.makeCompressed();
    return filter;
}

Eigen::VectorXd filter_forward(const FilterOperator& filter, const Eigen::VectorXd& x) {
    if (x.size() != filter.weights.cols())
        throw DomainError("filter input length does not match element count");
    return filter.weights * x;
}

Eigen::VectorXd filter_backward(const FilterOperator& filter, const Eigen::VectorXd& g_rho) {
    if (g_rho.size() != filter.weights.rows())
        throw DomainError("filter gradient length does not match element count");
    return filter.weights.transpose() * g_rho;
}

Eigen::VectorXd orbit_expand(const OrbitMap& orbits, const Eigen::VectorXd& reduced) {
    if (reduced.size() != orbits.num_reduced())
        throw DomainError("reduced vector length does not match orbit count");
    Eigen::VectorXd full(orbits.num_elements());
    for (int o = 0; o < orbits.num_reduced(); ++o)
        for (int e : orbits.orbits[o]) full[e] = reduced[o];
    return full;
}

Eigen::VectorXd orbit_reduce_grad(const OrbitMap& orbits, const Eigen::VectorXd& full) {
    if (full.size() != orbits.num_elements())
        throw DomainError("full vector length does not match element count");
    Eigen::VectorXd reduced(orbits.num_reduced());
    for (int o = 0; o < orbits.num_reduced(); ++o) {
        double s = 0.0;
        for (int e : orbits.orbits[o]) s += full[e];
        reduced[o] = s;
    }
    return reduced;
}

}  // namespace etop
