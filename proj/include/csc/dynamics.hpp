#pragma once

#include "csc/core.hpp"

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace csc {

/// Continuous control policy u(t, state), evaluated at every RK4 stage.
using ControlPolicy = std::function<Eigen::MatrixXd(double, const AgentCloud&)>;
/// State feedback u(state), frozen over sampling intervals by sampling_solve.
using FeedbackLaw = std::function<Eigen::MatrixXd(const AgentCloud&)>;

/// Discrete realization of a run: uniform time grid (last step may be
/// shorter), states, applied controls, and per-point diagnostics.
struct Trajectory {
    std::vector<double> times;
    std::vector<AgentCloud> states;
    std::vector<Eigen::MatrixXd> controls;
    std::vector<Diagnostics> diagnostics;
    /// First time at which sqrt(V) <= gamma(X), located by bisection;
    /// empty when the run never enters the consensus region.
    std::optional<double> entry_time;
    /// (time, active agent index or -1) at each sampling instant; empty
    /// for non-sampled runs.
    std::vector<std::pair<double, int>> switch_log;

    std::size_t size() const { return times.size(); }
};

struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Time derivative (xdot, vdot) of the uncontrolled system:
/// xdot_i = v_i, vdot_i = (1/N) sum_j a(||x_j - x_i||)(v_j - v_i).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> uncontrolled_rhs(const AgentCloud& cloud,
                                                             const CommKernel& kernel);

/// Matrix form (v, -L_x v); agrees with the componentwise form to roundoff.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> uncontrolled_rhs_matrix(
    const AgentCloud& cloud, const CommKernel& kernel);

/// Controlled derivative: u_i added to vdot_i.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> controlled_rhs(const AgentCloud& cloud,
                                                           const CommKernel& kernel,
                                                           const Eigen::MatrixXd& u);

/// Single classical RK4 step of length h; the control is re-evaluated at
/// every stage when policy is non-null, otherwise held at u_frozen.
AgentCloud rk4_step(const AgentCloud& cloud, const CommKernel& kernel, double t,
                    double h, const ControlPolicy& policy,
                    const Eigen::MatrixXd* u_frozen = nullptr);

/// Fixed-step RK4 integration over [0, T]. A null policy means u = 0.
/// Aborts with IntegrationError on non-finite state or coordinate blow-up.
Trajectory integrate(const AgentCloud& initial, const CommKernel& kernel,
                     const ControlPolicy& policy, double T, double h);

/// Sampling solution: the feedback is frozen at the state observed at
/// each sampling instant k*tau and held constant on [k*tau, (k+1)*tau].
/// The inner step is adjusted so that tau is an integer multiple of it.
Trajectory sampling_solve(const AgentCloud& initial, const CommKernel& kernel,
                          const FeedbackLaw& feedback, double tau, double T,
                          double h = 0.0);

/// The two-agent relative dynamics xdot = v, vdot = -v/(1 + x^2)
/// (Cucker--Smale kernel K = sigma = beta = 1) conserves v + arctan(x);
/// returns (v + arctan x) - (v0 + arctan x0).
double two_agent_invariant_residual(double x, double v, double x0, double v0);

/// Initial state of the two-agent line configuration with relative main
/// state x0 and relative consensus parameter v0.
AgentCloud two_agent_initial(double x0, double v0);

}  // namespace csc
