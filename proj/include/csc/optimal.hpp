#pragma once

#include "csc/controls.hpp"
#include "csc/core.hpp"
#include "csc/dynamics.hpp"

#include <vector>

namespace csc {

/// State + costate grids of a Pontryagin extremal for the finite-horizon
/// problem: minimize int_0^T ( sum_i ||v_i - vbar||^2 + w sum_i ||u_i|| ) dt
/// subject to the controlled dynamics and the l1-l2 budget M. The penalty
/// coefficient is called sparsity_weight to keep it apart from the
/// threshold function gamma(X).
struct Extremal {
    std::vector<double> times;
    std::vector<AgentCloud> states;
    std::vector<Eigen::MatrixXd> p_x;       // N x d per node
    std::vector<Eigen::MatrixXd> p_v;       // N x d per node
    std::vector<Eigen::MatrixXd> controls;  // N x d per node
    double cost = 0.0;
    double sparsity_weight = 0.0;
    double budget = 0.0;
    int iterations = 0;
    double final_change = 0.0;
    /// Fraction of grid nodes where the stored control agrees with the
    /// pointwise Hamiltonian minimizer of the stored costate.
    double pmp_agreement = 0.0;

    std::size_t size() const { return times.size(); }
};

struct SweepError : std::runtime_error {
    SweepError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

enum class CostateRegion { O1, O2, O3, O4, O5 };

struct CostateRegionLabel {
    CostateRegion region = CostateRegion::O1;
    std::vector<int> active_set;  // indices attaining the relevant max
};

/// Running-cost integral by composite trapezoid on the trajectory grid:
/// int ( N * V + w * sum_i ||u_i|| ) dt, since sum_i ||v_i - vbar||^2 = N V.
double cost_functional(const Trajectory& traj, double sparsity_weight);
double cost_functional(const std::vector<double>& times,
                       const std::vector<AgentCloud>& states,
                       const std::vector<Eigen::MatrixXd>& controls,
                       double sparsity_weight);

/// Adjoint right-hand side, the negative state gradient of the
/// Hamiltonian H = <p_x, v> + <p_v, -L_x v + u> + N V + w sum ||u_i||:
///   pdot_x_i = (1/N) sum_j (a'(r_ij)/r_ij) <v_j - v_i, p_v_i - p_v_j> (x_j - x_i)
///   pdot_v_i = -p_x_i - (1/N) sum_j a(r_ij) (p_v_j - p_v_i) - 2 (v_i - vbar)
/// with the 0/0 factor at coincident positions set to zero.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> adjoint_rhs(const AgentCloud& cloud,
                                                        const Eigen::MatrixXd& p_x,
                                                        const Eigen::MatrixXd& p_v,
                                                        const CommKernel& kernel);

/// Pointwise minimizer of sum_i <p_v_i, w_i> + w sum_i ||w_i|| over the
/// budget ball: zero when max_i ||p_v_i|| <= w, otherwise the full budget
/// M on the smallest maximizing index in direction -p_v_i / ||p_v_i||.
ControlVector hamiltonian_minimizer(const Eigen::MatrixXd& p_v,
                                    double sparsity_weight, double M);

/// O1..O5 of the costate space, compared against the sparsity weight with
/// tie tolerance 1e-10 (relative to the larger of 1 and the max norm).
CostateRegionLabel classify_costate_region(const Eigen::MatrixXd& p_v,
                                           double sparsity_weight);

/// Damped forward-backward sweep: forward RK4 of the controlled dynamics
/// with the current piecewise-constant control, backward RK4 of the
/// adjoint from p(T) = 0, damped update towards the Hamiltonian
/// minimizer, with the damping halved whenever the cost increases.
/// Throws SweepError (carrying the residual history) on non-convergence.
Extremal forward_backward_solve(const AgentCloud& initial, const CommKernel& kernel,
                                double T, double sparsity_weight, double M,
                                int grid_points = 2000, double damping = 0.3,
                                int max_iter = 500, double tol = 1e-6);

}  // namespace csc
