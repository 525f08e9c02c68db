#include "csc/controllability.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

namespace csc {

namespace {

constexpr double kRankThreshold = 1e-10;

Eigen::MatrixXd augmented_matrix(const Eigen::MatrixXd& A) {
    const int n = static_cast<int>(A.rows());
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    aug.topRightCorner(n, n).setIdentity();
    aug.bottomRightCorner(n, n) = A;
    return aug;
}

Eigen::VectorXd augmented_input(int n, int agent) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * n);
    b(n + agent) = 1.0;
    return b;
}

}  // namespace

LinearizedSystem linearize_at_consensus(const Eigen::MatrixXd& x_tilde,
                                        const CommKernel& kernel, int agent) {
    const int n = static_cast<int>(x_tilde.rows());
    if (agent < 0 || agent >= n)
        throw std::invalid_argument("linearize_at_consensus: agent index out of range");
    AgentCloud cloud(x_tilde, Eigen::MatrixXd::Zero(n, x_tilde.cols()));
    LinearizedSystem sys;
    sys.A = -laplacian(cloud, kernel);
    sys.control_index = agent;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.A);
    sys.eigenvalues = es.eigenvalues();
    sys.eigenvectors = es.eigenvectors();
    sys.alpha = sys.eigenvectors.row(agent).transpose();
    return sys;
}

KalmanReport kalman_test(const LinearizedSystem& sys) {
    const int n = static_cast<int>(sys.A.rows());
    Eigen::MatrixXd kalman(n, n);
    Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
    col(sys.control_index) = 1.0;
    for (int k = 0; k < n; ++k) {
        kalman.col(k) = col;
        col = sys.A * col;
    }
    // Krylov columns decay geometrically; normalize them (rank-preserving)
    // so the SVD threshold measures directional degeneracy, not scale.
    for (int k = 0; k < n; ++k) {
        const double norm = kalman.col(k).norm();
        if (norm > 0.0) kalman.col(k) /= norm;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(kalman);
    const auto& sv = svd.singularValues();
    KalmanReport report;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > kRankThreshold * sv(0)) ++report.rank;

    const double scale = std::max(1.0, sys.eigenvalues.cwiseAbs().maxCoeff());
    double min_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < n; ++i)
        min_gap = std::min(min_gap, sys.eigenvalues(i + 1) - sys.eigenvalues(i));
    report.spectral.min_eigen_gap = min_gap;
    report.spectral.min_coefficient = sys.alpha.cwiseAbs().minCoeff();
    report.spectral.distinct_eigenvalues = min_gap > kRankThreshold * scale;
    report.spectral.nonzero_coefficients =
        report.spectral.min_coefficient > kRankThreshold;
    report.controllable = report.rank == n;
    return report;
}

SteeringControl minimal_energy_steering(const LinearizedSystem& sys,
                                        const Eigen::MatrixXd& x0,
                                        const Eigen::MatrixXd& v0,
                                        const Eigen::MatrixXd& x1,
                                        const Eigen::MatrixXd& v1, double T) {
    if (T <= 0.0) throw std::invalid_argument("minimal_energy_steering: T must be positive");
    const int n = static_cast<int>(sys.A.rows());
    const int d = static_cast<int>(x0.cols());
    const Eigen::MatrixXd aug = augmented_matrix(sys.A);
    const Eigen::VectorXd b = augmented_input(n, sys.control_index);

    // Gramian by composite Simpson; Phi(T - s_k) b advanced by one fixed
    // transition per node.
    const int panels = 1024;  // even
    const double h = T / panels;
    const Eigen::MatrixXd step = (aug * h).exp();
    Eigen::MatrixXd nodes(2 * n, panels + 1);
    nodes.col(panels) = b;
    for (int k = panels; k > 0; --k) nodes.col(k - 1) = step * nodes.col(k);
    Eigen::MatrixXd gramian = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int k = 0; k <= panels; ++k) {
        double w = (k == 0 || k == panels) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        gramian.noalias() += (w * h / 3.0) * nodes.col(k) * nodes.col(k).transpose();
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gramian);
    const Eigen::VectorXd lam = es.eigenvalues();
    const double lam_max = lam.maxCoeff();
    const double cutoff = 1e-12 * lam_max;
    int rank = 0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(lam.size());
    for (int i = 0; i < lam.size(); ++i)
        if (lam(i) > cutoff) {
            inv(i) = 1.0 / lam(i);
            ++rank;
        }
    const Eigen::MatrixXd pinv =
        es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();

    const Eigen::MatrixXd phiT = (aug * T).exp();
    Eigen::MatrixXd z0(2 * n, d), z1(2 * n, d);
    z0 << x0, v0;
    z1 << x1, v1;
    const Eigen::MatrixXd delta = z1 - phiT * z0;
    const Eigen::MatrixXd eta = pinv * delta;  // one column per axis
    const double residual = (gramian * eta - delta).norm();
    if (residual > 1e-8 * std::max(1.0, delta.norm()))
        throw std::runtime_error(
            "minimal_energy_steering: displacement outside the range of the "
            "(rank-deficient) Gramian; target unreachable");

    SteeringControl ctrl;
    ctrl.gramian = gramian;
    ctrl.gramian_rank = rank;
    ctrl.T = T;
    ctrl.agent = sys.control_index;
    ctrl.u = [aug, b, eta, T](double t) -> Eigen::VectorXd {
        const Eigen::MatrixXd phi = (aug * (T - t)).exp();
        return eta.transpose() * (phi * b);
    };
    return ctrl;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> integrate_linear(
    const LinearizedSystem& sys, const SteeringControl& ctrl,
    const Eigen::MatrixXd& x0, const Eigen::MatrixXd& v0, int steps) {
    const int n = static_cast<int>(sys.A.rows());
    const int d = static_cast<int>(x0.cols());
    const Eigen::MatrixXd aug = augmented_matrix(sys.A);
    const Eigen::VectorXd b = augmented_input(n, sys.control_index);
    Eigen::MatrixXd z(2 * n, d);
    z << x0, v0;
    const double h = ctrl.T / steps;
    const auto rhs = [&](double t, const Eigen::MatrixXd& s) -> Eigen::MatrixXd {
        return aug * s + b * ctrl.u(t).transpose();
    };
    double t = 0.0;
    for (int k = 0; k < steps; ++k) {
        const Eigen::MatrixXd k1 = rhs(t, z);
        const Eigen::MatrixXd k2 = rhs(t + 0.5 * h, z + 0.5 * h * k1);
        const Eigen::MatrixXd k3 = rhs(t + 0.5 * h, z + 0.5 * h * k2);
        const Eigen::MatrixXd k4 = rhs(t + h, z + h * k3);
        z += h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
        t += h;
    }
    return {z.topRows(n), z.bottomRows(n)};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> sample_reachable_target(
    const LinearizedSystem& sys, const Eigen::MatrixXd& x0,
    const Eigen::MatrixXd& v0, double T, double magnitude, unsigned seed) {
    const int n = static_cast<int>(sys.A.rows());
    const int d = static_cast<int>(x0.cols());
    const Eigen::MatrixXd aug = augmented_matrix(sys.A);
    const Eigen::VectorXd b = augmented_input(n, sys.control_index);

    const int panels = 512;
    const double h = T / panels;
    const Eigen::MatrixXd step = (aug * h).exp();
    Eigen::VectorXd node = b;
    Eigen::MatrixXd gramian = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int k = panels; k >= 0; --k) {
        double w = (k == 0 || k == panels) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        gramian.noalias() += (w * h / 3.0) * node * node.transpose();
        node = step * node;
    }

    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd z0(2 * n, d);
    z0 << x0, v0;
    Eigen::MatrixXd z1 = (aug * T).exp() * z0;
    for (int axis = 0; axis < d; ++axis) {
        Eigen::VectorXd xi(2 * n);
        for (int i = 0; i < 2 * n; ++i) xi(i) = gauss(rng);
        Eigen::VectorXd dir = gramian * xi;
        z1.col(axis) += magnitude / std::max(dir.norm(), 1e-300) * dir;
    }
    return {z1.topRows(n), z1.bottomRows(n)};
}

}  // namespace csc
