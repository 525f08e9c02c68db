#include "csc/controls.hpp"

#include <cmath>

namespace csc {

RegionLabel classify_region(const AgentCloud& cloud, const CommKernel& kernel) {
    const Eigen::MatrixXd vperp = perp_projection(cloud);
    const Eigen::VectorXd norms = vperp.rowwise().norm();
    const double max_norm = norms.maxCoeff();
    const double gamma = gamma_threshold(dispersion_X(cloud), kernel, cloud.agents());
    const double tol = kTieTolerance * std::max(1.0, max_norm);

    RegionLabel label;
    for (int i = 0; i < norms.size(); ++i)
        if (norms(i) >= max_norm - tol) label.argmax_set.push_back(i);

    if (max_norm < gamma - tol)
        label.region = Region::C1;
    else if (std::abs(max_norm - gamma) <= tol)
        label.region = Region::C2;
    else
        label.region = label.argmax_set.size() == 1 ? Region::C3 : Region::C4;
    return label;
}

ControlVector sparse_feedback(const AgentCloud& cloud, const CommKernel& kernel,
                              double M) {
    ControlVector out{Eigen::MatrixXd::Zero(cloud.agents(), cloud.dim()), M};
    const Eigen::MatrixXd vperp = perp_projection(cloud);
    const Eigen::VectorXd norms = vperp.rowwise().norm();
    const double max_norm = norms.maxCoeff();
    const double gamma = gamma_threshold(dispersion_X(cloud), kernel, cloud.agents());
    if (max_norm <= gamma) return out;
    // Smallest index attaining the max, with a tolerance: symmetric
    // configurations tie the norms up to roundoff, and a strict comparison
    // would let ulp noise alternate the selected agent between samples.
    const double tie_tol = kTieTolerance * std::max(1.0, max_norm);
    int j = 0;
    while (norms(j) < max_norm - tie_tol) ++j;
    out.u.row(j) = -M / norms(j) * vperp.row(j);
    return out;
}

ControlVector distributed_feedback(const AgentCloud& cloud, double M,
                                   DistributedMode mode) {
    const int n = cloud.agents();
    ControlVector out{Eigen::MatrixXd::Zero(n, cloud.dim()), M};
    const Eigen::MatrixXd vperp = perp_projection(cloud);
    if (mode == DistributedMode::projection) {
        const double v0 = disagreement_V(cloud);
        if (v0 <= 0.0) return out;
        out.u = -(M / (n * std::sqrt(v0))) * vperp;
        return out;
    }
    for (int i = 0; i < n; ++i) {
        const double norm = vperp.row(i).norm();
        if (norm > 1e-14) out.u.row(i) = -(M / n) / norm * vperp.row(i);
    }
    return out;
}

double projection_alpha(const AgentCloud& initial, double M) {
    const double v0 = disagreement_V(initial);
    return v0 > 0.0 ? M / (initial.agents() * std::sqrt(v0)) : 0.0;
}

ControlPolicy make_projection_policy(const AgentCloud& initial, double M) {
    const double alpha = projection_alpha(initial, M);
    return [alpha](double, const AgentCloud& s) -> Eigen::MatrixXd {
        return -alpha * perp_projection(s);
    };
}

ControlPolicy make_uniform_policy(double M) {
    return [M](double, const AgentCloud& s) {
        return distributed_feedback(s, M, DistributedMode::uniform).u;
    };
}

FeedbackLaw make_sparse_feedback(const CommKernel& kernel, double M) {
    return [kernel, M](const AgentCloud& s) { return sparse_feedback(s, kernel, M).u; };
}

std::pair<double, double> decay_rate_bound_check(const AgentCloud& cloud,
                                                 const std::vector<double>& allocations,
                                                 double M) {
    const Eigen::MatrixXd vperp = perp_projection(cloud);
    const Eigen::VectorXd norms = vperp.rowwise().norm();
    if (allocations.size() != static_cast<std::size_t>(norms.size()))
        throw std::invalid_argument("decay_rate_bound_check: allocation size mismatch");
    double achieved = 0.0;
    for (int i = 0; i < norms.size(); ++i) achieved += allocations[i] * norms(i);
    return {achieved, M * norms.maxCoeff()};
}

bool admissibility_check(const ControlVector& u) {
    return u.l1l2_norm() <= u.budget + 1e-12;
}

}  // namespace csc
