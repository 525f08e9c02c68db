#include "csc/optimal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace csc {

double cost_functional(const std::vector<double>& times,
                       const std::vector<AgentCloud>& states,
                       const std::vector<Eigen::MatrixXd>& controls,
                       double sparsity_weight) {
    const std::size_t n = times.size();
    if (states.size() != n || controls.size() != n)
        throw std::invalid_argument("cost_functional: grid size mismatch");
    double cost = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double N = states[i].agents();
        const double running = N * disagreement_V(states[i]) +
                               sparsity_weight * controls[i].rowwise().norm().sum();
        if (i > 0) cost += 0.5 * (times[i] - times[i - 1]) * (running + prev);
        prev = running;
    }
    return cost;
}

double cost_functional(const Trajectory& traj, double sparsity_weight) {
    return cost_functional(traj.times, traj.states, traj.controls, sparsity_weight);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> adjoint_rhs(const AgentCloud& cloud,
                                                        const Eigen::MatrixXd& p_x,
                                                        const Eigen::MatrixXd& p_v,
                                                        const CommKernel& kernel) {
    const int n = cloud.agents();
    const int d = cloud.dim();
    Eigen::MatrixXd dpx = Eigen::MatrixXd::Zero(n, d);
    Eigen::MatrixXd dpv = Eigen::MatrixXd::Zero(n, d);
    const Eigen::MatrixXd vperp = perp_projection(cloud);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const Eigen::RowVectorXd dx = cloud.x.row(j) - cloud.x.row(i);
            const Eigen::RowVectorXd dv = cloud.v.row(j) - cloud.v.row(i);
            const Eigen::RowVectorXd dp = p_v.row(i) - p_v.row(j);
            const double r = dx.norm();
            if (r > 0.0)
                dpx.row(i) +=
                    kernel.rate_derivative_over_r(r) * dv.dot(dp) / n * dx;
            dpv.row(i) += kernel.rate(r) / n * (p_v.row(j) - p_v.row(i));
        }
        dpv.row(i) = -p_x.row(i) - dpv.row(i) - 2.0 * vperp.row(i);
    }
    return {dpx, dpv};
}

ControlVector hamiltonian_minimizer(const Eigen::MatrixXd& p_v,
                                    double sparsity_weight, double M) {
    ControlVector out{Eigen::MatrixXd::Zero(p_v.rows(), p_v.cols()), M};
    const Eigen::VectorXd norms = p_v.rowwise().norm();
    const double max_norm = norms.maxCoeff();
    if (max_norm <= sparsity_weight) return out;
    // Smallest index attaining the max, with a tolerance: exactly symmetric
    // problems tie the row norms up to roundoff, and a strict comparison
    // would let ulp noise alternate the selected agent.
    const double tie_tol = kTieTolerance * std::max(1.0, max_norm);
    int j = 0;
    while (norms(j) < max_norm - tie_tol) ++j;
    out.u.row(j) = -M / norms(j) * p_v.row(j);
    return out;
}

CostateRegionLabel classify_costate_region(const Eigen::MatrixXd& p_v,
                                           double sparsity_weight) {
    const Eigen::VectorXd norms = p_v.rowwise().norm();
    const double max_norm = norms.maxCoeff();
    const double tol = kTieTolerance * std::max(1.0, max_norm);

    CostateRegionLabel label;
    for (int i = 0; i < norms.size(); ++i)
        if (norms(i) >= max_norm - tol) label.active_set.push_back(i);
    const std::size_t k = label.active_set.size();

    if (max_norm < sparsity_weight - tol)
        label.region = CostateRegion::O1;
    else if (std::abs(max_norm - sparsity_weight) <= tol)
        label.region = k == 1 ? CostateRegion::O2 : CostateRegion::O5;
    else
        label.region = k == 1 ? CostateRegion::O3 : CostateRegion::O4;
    return label;
}

namespace {

// One backward RK4 step of the adjoint from t to t - h; the state at the
// half and full stages is linearly interpolated between the stored nodes.
void adjoint_step(const AgentCloud& s_right, const AgentCloud& s_left, double h,
                  Eigen::MatrixXd& p_x, Eigen::MatrixXd& p_v,
                  const CommKernel& kernel) {
    const auto blend = [&](double frac) -> AgentCloud {
        return AgentCloud((1.0 - frac) * s_right.x + frac * s_left.x,
                          (1.0 - frac) * s_right.v + frac * s_left.v);
    };
    const AgentCloud mid = blend(0.5);
    const auto [kx1, kv1] = adjoint_rhs(s_right, p_x, p_v, kernel);
    const auto [kx2, kv2] =
        adjoint_rhs(mid, p_x - 0.5 * h * kx1, p_v - 0.5 * h * kv1, kernel);
    const auto [kx3, kv3] =
        adjoint_rhs(mid, p_x - 0.5 * h * kx2, p_v - 0.5 * h * kv2, kernel);
    const auto [kx4, kv4] =
        adjoint_rhs(s_left, p_x - h * kx3, p_v - h * kv3, kernel);
    p_x -= h / 6.0 * (kx1 + 2.0 * (kx2 + kx3) + kx4);
    p_v -= h / 6.0 * (kv1 + 2.0 * (kv2 + kv3) + kv4);
}

}  // namespace

Extremal forward_backward_solve(const AgentCloud& initial, const CommKernel& kernel,
                                double T, double sparsity_weight, double M,
                                int grid_points, double damping, int max_iter,
                                double tol) {
    if (grid_points < 100)
        throw std::invalid_argument("forward_backward_solve: grid_points must be >= 100");
    if (damping <= 0.0 || damping > 1.0)
        throw std::invalid_argument("forward_backward_solve: damping must be in (0, 1]");
    const int n = initial.agents();
    const int d = initial.dim();
    const double h = T / grid_points;

    std::vector<Eigen::MatrixXd> u(grid_points + 1, Eigen::MatrixXd::Zero(n, d));
    std::vector<AgentCloud> states(grid_points + 1);
    std::vector<Eigen::MatrixXd> px(grid_points + 1), pv(grid_points + 1);
    std::vector<double> times(grid_points + 1);
    for (int k = 0; k <= grid_points; ++k) times[k] = k * h;

    // The control on [t_k, t_{k+1}] is the node value u[k]; u[grid_points]
    // is carried for reporting only.
    const auto forward = [&](const std::vector<Eigen::MatrixXd>& ctrl) {
        states[0] = initial;
        for (int k = 0; k < grid_points; ++k)
            states[k + 1] = rk4_step(states[k], kernel, times[k], h, nullptr, &ctrl[k]);
    };
    const auto backward = [&]() {
        px[grid_points] = Eigen::MatrixXd::Zero(n, d);
        pv[grid_points] = Eigen::MatrixXd::Zero(n, d);
        for (int k = grid_points; k > 0; --k) {
            px[k - 1] = px[k];
            pv[k - 1] = pv[k];
            adjoint_step(states[k], states[k - 1], h, px[k - 1], pv[k - 1], kernel);
        }
    };

    forward(u);
    std::vector<double> history;
    double change = std::numeric_limits<double>::infinity();
    // Per-node damping: a switch-boundary node whose minimizer flips between
    // iterations (chattering) gets its step shrunk, while settled nodes keep
    // the full damping factor and converge geometrically.
    std::vector<double> lam(grid_points + 1, damping);
    std::vector<Eigen::MatrixXd> prev_target;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        backward();
        std::vector<Eigen::MatrixXd> target(grid_points + 1);
        for (int k = 0; k <= grid_points; ++k)
            target[k] = hamiltonian_minimizer(pv[k], sparsity_weight, M).u;
        if (!prev_target.empty())
            for (int k = 0; k <= grid_points; ++k) {
                const double jump =
                    (target[k] - prev_target[k]).cwiseAbs().maxCoeff();
                // Recovery must be much slower than the halving, or a node
                // that flips every few iterations settles into a limit
                // cycle instead of having its step driven to zero.
                lam[k] = jump > tol ? std::max(0.5 * lam[k], 1e-7)
                                    : std::min(damping, 1.05 * lam[k]);
            }
        change = 0.0;
        for (int k = 0; k <= grid_points; ++k) {
            Eigen::MatrixXd next = (1.0 - lam[k]) * u[k] + lam[k] * target[k];
            change = std::max(change, (next - u[k]).cwiseAbs().maxCoeff());
            u[k] = std::move(next);
        }
        prev_target = std::move(target);
        forward(u);
        history.push_back(change);
        if (change <= tol) break;
    }
    if (change > tol)
        throw SweepError("forward_backward_solve: no convergence after " +
                             std::to_string(max_iter) + " iterations",
                         history);

    forward(u);
    backward();
    Extremal ext;
    ext.times = std::move(times);
    ext.states = states;
    ext.p_x = px;
    ext.p_v = pv;
    ext.controls = u;
    ext.sparsity_weight = sparsity_weight;
    ext.budget = M;
    ext.iterations = iter + 1;
    ext.final_change = change;
    ext.cost = cost_functional(ext.times, ext.states, ext.controls, sparsity_weight);
    int agree = 0;
    for (int k = 0; k <= grid_points; ++k) {
        const Eigen::MatrixXd ustar =
            hamiltonian_minimizer(ext.p_v[k], sparsity_weight, M).u;
        if ((ustar - ext.controls[k]).cwiseAbs().maxCoeff() <= 10.0 * tol) ++agree;
    }
    ext.pmp_agreement = static_cast<double>(agree) / (grid_points + 1);
    return ext;
}

}  // namespace csc
