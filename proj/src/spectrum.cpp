#include "etop/spectrum.hpp"

#include <cmath>

namespace etop {

int ClusterSet::total_members() const {
    int n = 0;
    for (const auto& c : clusters) n += c.size();
    return n;
}

std::vector<int> ClusterSet::sizes() const {
    std::vector<int> s;
    s.reserve(clusters.size());
    for (const auto& c : clusters) s.push_back(c.size());
    return s;
}

ClusterSet cluster_eigenvalues(const Eigen::VectorXd& values, double tolerance) {
    if (!(tolerance > 0)) throw DomainError("clustering tolerance must be positive");
    for (int i = 0; i + 1 < values.size(); ++i)
        if (values[i] > values[i + 1]) throw DomainError("eigenvalues must be ascending");
    for (int i = 0; i < values.size(); ++i)
        if (!(values[i] > 0)) throw DomainError("eigenvalues must be positive");

    ClusterSet set;
    set.tolerance = tolerance;
    for (int i = 0; i < values.size(); ++i) {
        if (set.clusters.empty() ||
            std::abs(values[i] - values[set.clusters.back().members.front()]) >
                tolerance * std::abs(values[set.clusters.back().members.front()])) {
            set.clusters.push_back({});
        }
        set.clusters.back().members.push_back(i);
    }
    for (auto& c : set.clusters) {
        double s = 0;
        for (int m : c.members) s += values[m];
        c.mean = s / c.size();
    }
    return set;
}

double cluster_mean(const Cluster& cluster) {
    if (cluster.members.empty()) throw DomainError("cluster mean of an empty cluster");
    return cluster.mean;
}

ElementEnergies element_energies(const Mesh& mesh, const DofMap& dofs,
                                 const UnitElementMatrices& unit, const Eigen::VectorXd& phi) {
    const int n_ele = mesh.num_elements();
    const int ndofe = static_cast<int>(dofs.element_dofs.cols());
    ElementEnergies out;
    out.stiffness.resize(n_ele);
    out.mass.resize(n_ele);
    Eigen::VectorXd local(ndofe);
    for (int e = 0; e < n_ele; ++e) {
        for (int a = 0; a < ndofe; ++a) {
            const int i = dofs.element_dofs(e, a);
            local[a] = (i >= 0) ? phi[i] : 0.0;  // fixed DOFs carry zero displacement
        }
        out.stiffness[e] = local.dot(unit.stiffness * local);
        out.mass[e] = local.dot(unit.mass * local);
    }
    return out;
}

Eigen::MatrixXd eig_density_gradient(const ElementEnergies& energies, double lambda,
                                     const Eigen::MatrixXd& dyoungs,
                                     const Eigen::MatrixXd& ddensity) {
    if (dyoungs.rows() != energies.stiffness.size() || ddensity.rows() != dyoungs.rows() ||
        ddensity.cols() != dyoungs.cols())
        throw DomainError("material derivative tables must be n_ele x channels");
    Eigen::MatrixXd grad(dyoungs.rows(), dyoungs.cols());
    for (int c = 0; c < dyoungs.cols(); ++c)
        grad.col(c) = dyoungs.col(c).cwiseProduct(energies.stiffness) -
                      lambda * ddensity.col(c).cwiseProduct(energies.mass);
    return grad;
}

Eigen::MatrixXd simple_eig_sensitivity(const EigenSet& eig, int index, const ClusterSet& clusters,
                                       const Mesh& mesh, const DofMap& dofs,
                                       const UnitElementMatrices& unit,
                                       const Eigen::MatrixXd& dyoungs,
                                       const Eigen::MatrixXd& ddensity) {
    for (const auto& c : clusters.clusters)
        for (int m : c.members)
            if (m == index && c.size() > 1)
                throw DomainError("eigenvalue " + std::to_string(index) +
                                  " lies in a multi-member cluster; use the cluster mean");
    const auto energies = element_energies(mesh, dofs, unit, eig.vectors.col(index));
    return eig_density_gradient(energies, eig.values[index], dyoungs, ddensity);
}

Eigen::MatrixXd cluster_mean_sensitivity(const Cluster& cluster, const EigenSet& eig,
                                         const Mesh& mesh, const DofMap& dofs,
                                         const UnitElementMatrices& unit,
                                         const Eigen::MatrixXd& dyoungs,
                                         const Eigen::MatrixXd& ddensity) {
    if (cluster.members.empty()) throw DomainError("cluster has no members");
    for (int m : cluster.members)
        if (m < 0 || m >= eig.count)
            throw DomainError("cluster member has no computed eigenvector");

    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(dyoungs.rows(), dyoungs.cols());
    for (int m : cluster.members) {
        const auto energies = element_energies(mesh, dofs, unit, eig.vectors.col(m));
        grad += eig_density_gradient(energies, eig.values[m], dyoungs, ddensity);
    }
    return grad / cluster.size();
}

std::pair<double, Eigen::VectorXd> pnorm_stable(const Eigen::VectorXd& values, double p,
                                                double beta0) {
    if (!(p >= 1)) throw DomainError("p-norm exponent must be >= 1");
    if (!(beta0 > 0)) throw DomainError("p-norm scaling constant must be positive");
    if (values.size() == 0) throw DomainError("p-norm of an empty set");
    for (int i = 0; i < values.size(); ++i)
        if (!(values[i] > 0)) throw DomainError("p-norm inputs must be positive");

    const Eigen::ArrayXd ratio = values.array() / beta0;
    const double sum = ratio.pow(p).sum();
    const double value = beta0 * std::pow(sum, 1.0 / p);
    Eigen::VectorXd grad = (std::pow(sum, 1.0 / p - 1.0) * ratio.pow(p - 1.0)).matrix();
    return {value, std::move(grad)};
}

std::pair<double, Eigen::VectorXd> ks_stable(const Eigen::VectorXd& values, double q,
                                             double beta0) {
    if (!(q > 0)) throw DomainError("KS aggregation parameter must be positive");
    if (values.size() == 0) throw DomainError("KS of an empty set");

    const Eigen::ArrayXd e = (q * (values.array() - beta0)).exp();
    const double sum = e.sum();
    const double value = beta0 + std::log(sum) / q;
    Eigen::VectorXd grad = (e / sum).matrix();
    return {value, std::move(grad)};
}

}  // namespace etop
