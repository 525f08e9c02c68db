#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>

namespace csc {

/// State of a group of N agents in d dimensions: main states x and
/// consensus parameters v, one agent per row.
struct AgentCloud {
    Eigen::MatrixXd x;  // N x d
    Eigen::MatrixXd v;  // N x d

    AgentCloud() = default;
    AgentCloud(Eigen::MatrixXd x_, Eigen::MatrixXd v_);

    int agents() const { return static_cast<int>(x.rows()); }
    int dim() const { return static_cast<int>(x.cols()); }
    bool finite() const;
};

/// Nonincreasing nonnegative communication rate a(r), either in the
/// Cucker--Smale parameterization a(r) = K/(sigma^2 + r^2)^beta or a
/// user-supplied callable with a declared integrability flag.
class CommKernel {
  public:
    static CommKernel cucker_smale(double K, double sigma, double beta);
    static CommKernel from_function(std::function<double(double)> a,
                                    bool integrable,
                                    std::function<double(double)> da = {});

    double operator()(double r) const { return rate(r); }
    double rate(double r) const;
    /// da/dr; central difference when no analytic form is available.
    double rate_derivative(double r) const;
    /// a'(r)/r, finite at r = 0 for the Cucker--Smale form.
    double rate_derivative_over_r(double r) const;

    bool integrable() const { return integrable_; }
    bool is_cucker_smale() const { return cs_; }
    double strength() const { return K_; }
    double offset() const { return sigma_; }
    double exponent() const { return beta_; }

    /// Spot-checks nonnegativity and monotonicity on a grid of 1024 points.
    bool looks_nonincreasing(double r_max = 100.0) const;

  private:
    CommKernel() = default;
    bool cs_ = false;
    double K_ = 1.0, sigma_ = 1.0, beta_ = 1.0;
    bool integrable_ = true;
    std::function<double(double)> fn_;
    std::function<double(double)> dfn_;
};

/// Scalar summaries of a state: dispersion X = B(x,x), disagreement
/// V = B(v,v), the threshold gamma(X), and max_i ||v_perp_i||.
struct Diagnostics {
    double X = 0.0;
    double V = 0.0;
    double gamma_of_X = 0.0;
    double max_perp_norm = 0.0;
};

/// Mean consensus parameter (an invariant of the uncontrolled dynamics).
Eigen::VectorXd mean_consensus(const AgentCloud& cloud);

/// v_perp with rows v_i - v_bar; the rows sum to zero.
Eigen::MatrixXd perp_projection(const AgentCloud& cloud);
Eigen::MatrixXd perp_projection(const Eigen::MatrixXd& v);

/// Symmetric bilinear form B(u,v) = (1/2N^2) sum_ij <u_i-u_j, v_i-v_j>.
double bilinear_B(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v);
/// Alternate closed form (1/N) sum_i <u_i,v_i> - <u_bar, v_bar>;
/// agrees with bilinear_B to roundoff and serves as its cross-check.
double bilinear_B_pairwise(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v);

double dispersion_X(const AgentCloud& cloud);
double disagreement_V(const AgentCloud& cloud);

/// Graph Laplacian L = D - A of the weights A_ij = a(||x_j - x_i||)/N.
/// Symmetric, positive semidefinite, annihilates the all-ones vector.
Eigen::MatrixXd laplacian(const AgentCloud& cloud, const CommKernel& kernel);

/// Threshold gamma(X) = int_{sqrt X}^inf a(sqrt(2N) r) dr. Uses the
/// arctan closed form for the Cucker--Smale kernel with beta = 1 and
/// quadrature otherwise. Throws std::domain_error for non-integrable
/// kernels.
double gamma_threshold(double X, const CommKernel& kernel, int N);

/// Same integral, always evaluated by quadrature (tail-robust
/// exp-sinh rule, absolute tolerance abs_tol). Cross-check oracle for
/// the closed form.
double gamma_threshold_quadrature(double X, const CommKernel& kernel, int N,
                                  double abs_tol = 1e-10);

Diagnostics compute_diagnostics(const AgentCloud& cloud, const CommKernel& kernel);

}  // namespace csc
