#include "csc/core.hpp"

#include <cmath>
#include <limits>

namespace csc {

AgentCloud::AgentCloud(Eigen::MatrixXd x_, Eigen::MatrixXd v_)
    : x(std::move(x_)), v(std::move(v_)) {
    if (x.rows() != v.rows() || x.cols() != v.cols())
        throw std::invalid_argument("AgentCloud: x and v shapes differ");
    if (x.rows() < 2) throw std::invalid_argument("AgentCloud: need at least 2 agents");
    if (x.cols() < 1) throw std::invalid_argument("AgentCloud: need dimension >= 1");
}

bool AgentCloud::finite() const {
    return x.allFinite() && v.allFinite();
}

CommKernel CommKernel::cucker_smale(double K, double sigma, double beta) {
    if (K <= 0.0) throw std::invalid_argument("CommKernel: K must be positive");
    if (sigma <= 0.0) throw std::invalid_argument("CommKernel: sigma must be positive");
    if (beta < 0.0) throw std::invalid_argument("CommKernel: beta must be nonnegative");
    CommKernel k;
    k.cs_ = true;
    k.K_ = K;
    k.sigma_ = sigma;
    k.beta_ = beta;
    k.integrable_ = beta > 0.5;
    return k;
}

CommKernel CommKernel::from_function(std::function<double(double)> a, bool integrable,
                                     std::function<double(double)> da) {
    CommKernel k;
    k.cs_ = false;
    k.fn_ = std::move(a);
    k.dfn_ = std::move(da);
    k.integrable_ = integrable;
    return k;
}

double CommKernel::rate(double r) const {
    if (cs_) {
        const double q = sigma_ * sigma_ + r * r;
        if (beta_ == 1.0) return K_ / q;  // hot path: avoids std::pow
        return K_ * std::pow(q, -beta_);
    }
    return fn_(r);
}

double CommKernel::rate_derivative(double r) const {
    if (cs_) return -2.0 * beta_ * K_ * r * std::pow(sigma_ * sigma_ + r * r, -beta_ - 1.0);
    if (dfn_) return dfn_(r);
    const double h = 1e-6 * std::max(1.0, std::abs(r));
    const double lo = std::max(0.0, r - h);
    return (fn_(r + h) - fn_(lo)) / (r + h - lo);
}

double CommKernel::rate_derivative_over_r(double r) const {
    if (cs_) return -2.0 * beta_ * K_ * std::pow(sigma_ * sigma_ + r * r, -beta_ - 1.0);
    if (r == 0.0) return 0.0;  // inner products vanish with r; see adjoint_rhs
    return rate_derivative(r) / r;
}

bool CommKernel::looks_nonincreasing(double r_max) const {
    double prev = rate(0.0);
    if (!(prev >= 0.0)) return false;
    for (int i = 1; i < 1024; ++i) {
        const double r = r_max * static_cast<double>(i) / 1023.0;
        const double cur = rate(r);
        if (!(cur >= 0.0) || cur > prev + 1e-12 * std::max(1.0, prev)) return false;
        prev = cur;
    }
    return true;
}

Eigen::VectorXd mean_consensus(const AgentCloud& cloud) {
    return cloud.v.colwise().mean().transpose();
}

Eigen::MatrixXd perp_projection(const Eigen::MatrixXd& v) {
    return v.rowwise() - v.colwise().mean();
}

Eigen::MatrixXd perp_projection(const AgentCloud& cloud) {
    return perp_projection(cloud.v);
}

double bilinear_B(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
    if (u.rows() != v.rows() || u.cols() != v.cols())
        throw std::invalid_argument("bilinear_B: dimension mismatch");
    const double n = static_cast<double>(u.rows());
    const Eigen::VectorXd ubar = u.colwise().mean().transpose();
    const Eigen::VectorXd vbar = v.colwise().mean().transpose();
    return u.cwiseProduct(v).sum() / n - ubar.dot(vbar);
}

double bilinear_B_pairwise(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
    if (u.rows() != v.rows() || u.cols() != v.cols())
        throw std::invalid_argument("bilinear_B_pairwise: dimension mismatch");
    const int n = static_cast<int>(u.rows());
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            acc += (u.row(i) - u.row(j)).dot(v.row(i) - v.row(j));
    return acc / (2.0 * n * n);
}

double dispersion_X(const AgentCloud& cloud) { return bilinear_B(cloud.x, cloud.x); }

double disagreement_V(const AgentCloud& cloud) { return bilinear_B(cloud.v, cloud.v); }

Eigen::MatrixXd laplacian(const AgentCloud& cloud, const CommKernel& kernel) {
    const int n = cloud.agents();
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i) {
        A(i, i) = kernel.rate(0.0) / n;
        for (int j = i + 1; j < n; ++j) {
            const double a = kernel.rate((cloud.x.row(j) - cloud.x.row(i)).norm()) / n;
            A(i, j) = a;
            A(j, i) = a;
        }
    }
    Eigen::MatrixXd L = -A;
    L.diagonal() += A.rowwise().sum();
    return L;
}

namespace {

// exp-sinh quadrature on [a, inf): r = a + exp(2 sinh t). Handles both
// exponential and heavy algebraic tails; the transformed integrand
// decays double-exponentially in t whenever the integral converges.
double integrate_half_line(const std::function<double(double)>& f, double a,
                           double abs_tol) {
    const auto node = [&](double t) -> double {
        const double s = 2.0 * std::sinh(t);
        if (s > 690.0) return 0.0;  // r astronomically large, f below underflow
        const double w = std::exp(s);
        const double val = f(a + w);
        return val * 2.0 * std::cosh(t) * w;
    };
    const double t_max = 6.0;
    double h = 0.5;
    double sum = node(0.0);
    for (double t = h; t <= t_max; t += h) sum += node(t) + node(-t);
    double result = h * sum;
    for (int level = 0; level < 12; ++level) {
        h *= 0.5;
        double extra = 0.0;
        for (double t = h; t <= t_max; t += 2.0 * h) extra += node(t) + node(-t);
        const double refined = 0.5 * result + h * extra;
        const double err = std::abs(refined - result);
        result = refined;
        if (level >= 2 && err < abs_tol) break;
    }
    return result;
}

}  // namespace

double gamma_threshold_quadrature(double X, const CommKernel& kernel, int N,
                                  double abs_tol) {
    if (!kernel.integrable())
        throw std::domain_error("gamma_threshold: kernel tail is not integrable (beta <= 1/2)");
    if (X < 0.0) throw std::invalid_argument("gamma_threshold: X must be nonnegative");
    const double root2N = std::sqrt(2.0 * N);
    return integrate_half_line([&](double r) { return kernel.rate(root2N * r); },
                               std::sqrt(X), abs_tol);
}

double gamma_threshold(double X, const CommKernel& kernel, int N) {
    if (!kernel.integrable())
        throw std::domain_error("gamma_threshold: kernel tail is not integrable (beta <= 1/2)");
    if (X < 0.0) throw std::invalid_argument("gamma_threshold: X must be nonnegative");
    if (kernel.is_cucker_smale() && kernel.exponent() == 1.0) {
        const double K = kernel.strength();
        const double sigma = kernel.offset();
        const double root2N = std::sqrt(2.0 * N);
        return K / (sigma * root2N) *
               (M_PI / 2.0 - std::atan(std::sqrt(2.0 * N * X) / sigma));
    }
    return gamma_threshold_quadrature(X, kernel, N);
}

Diagnostics compute_diagnostics(const AgentCloud& cloud, const CommKernel& kernel) {
    Diagnostics d;
    d.X = dispersion_X(cloud);
    d.V = disagreement_V(cloud);
    // A divergent tail means every state satisfies the consensus condition.
    d.gamma_of_X = kernel.integrable()
                       ? gamma_threshold(d.X, kernel, cloud.agents())
                       : std::numeric_limits<double>::infinity();
    d.max_perp_norm = perp_projection(cloud).rowwise().norm().maxCoeff();
    return d;
}

}  // namespace csc
