#include "csc/dynamics.hpp"

#include <cmath>

namespace csc {

namespace {

constexpr double kBlowupGuard = 1e12;
constexpr double kEntryTimeTol = 1e-4;

void check_state(const AgentCloud& cloud) {
    if (!cloud.finite() || cloud.x.cwiseAbs().maxCoeff() > kBlowupGuard ||
        cloud.v.cwiseAbs().maxCoeff() > kBlowupGuard)
        throw IntegrationError("integration aborted: non-finite or blown-up state");
}

int active_index(const Eigen::MatrixXd& u) {
    int idx = -1;
    double best = 0.0;
    for (int i = 0; i < u.rows(); ++i) {
        const double n = u.row(i).norm();
        if (n > best) {
            best = n;
            idx = i;
        }
    }
    return idx;
}

double entry_gap(const AgentCloud& cloud, const CommKernel& kernel) {
    if (!kernel.integrable()) return -1.0;  // condition holds for every state
    return std::sqrt(std::max(0.0, disagreement_V(cloud))) -
           gamma_threshold(dispersion_X(cloud), kernel, cloud.agents());
}

// Locates the sign change of sqrt(V) - gamma(X) inside [t0, t0+h] by
// bisection, re-stepping from the bracket-left state each probe.
double bisect_entry(const AgentCloud& before, const CommKernel& kernel, double t0,
                    double h, const ControlPolicy& policy,
                    const Eigen::MatrixXd* u_frozen) {
    double lo = 0.0, hi = h;
    while (hi - lo > kEntryTimeTol) {
        const double mid = 0.5 * (lo + hi);
        const AgentCloud probe = rk4_step(before, kernel, t0, mid, policy, u_frozen);
        if (entry_gap(probe, kernel) <= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return t0 + 0.5 * (lo + hi);
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> uncontrolled_rhs(const AgentCloud& cloud,
                                                             const CommKernel& kernel) {
    const int n = cloud.agents();
    Eigen::MatrixXd vdot = Eigen::MatrixXd::Zero(n, cloud.dim());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double a = kernel.rate((cloud.x.row(j) - cloud.x.row(i)).norm());
            vdot.row(i) += a * (cloud.v.row(j) - cloud.v.row(i));
        }
    }
    return {cloud.v, vdot / n};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> uncontrolled_rhs_matrix(
    const AgentCloud& cloud, const CommKernel& kernel) {
    return {cloud.v, -laplacian(cloud, kernel) * cloud.v};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> controlled_rhs(const AgentCloud& cloud,
                                                           const CommKernel& kernel,
                                                           const Eigen::MatrixXd& u) {
    auto [xdot, vdot] = uncontrolled_rhs_matrix(cloud, kernel);
    return {std::move(xdot), vdot + u};
}

AgentCloud rk4_step(const AgentCloud& cloud, const CommKernel& kernel, double t,
                    double h, const ControlPolicy& policy,
                    const Eigen::MatrixXd* u_frozen) {
    const auto eval = [&](double ts, const AgentCloud& s) {
        if (policy) return controlled_rhs(s, kernel, policy(ts, s));
        if (u_frozen) return controlled_rhs(s, kernel, *u_frozen);
        return uncontrolled_rhs_matrix(s, kernel);
    };
    const auto shifted = [&](const AgentCloud& s, double c,
                             const std::pair<Eigen::MatrixXd, Eigen::MatrixXd>& k) {
        return AgentCloud(s.x + c * k.first, s.v + c * k.second);
    };
    const auto k1 = eval(t, cloud);
    const auto k2 = eval(t + 0.5 * h, shifted(cloud, 0.5 * h, k1));
    const auto k3 = eval(t + 0.5 * h, shifted(cloud, 0.5 * h, k2));
    const auto k4 = eval(t + h, shifted(cloud, h, k3));
    AgentCloud next = cloud;
    next.x += h / 6.0 * (k1.first + 2.0 * (k2.first + k3.first) + k4.first);
    next.v += h / 6.0 * (k1.second + 2.0 * (k2.second + k3.second) + k4.second);
    return next;
}

namespace {

// Shared driver: steps of size h up to T (final step truncated), control
// either re-evaluated per stage (policy) or held per sampling window.
Trajectory drive(const AgentCloud& initial, const CommKernel& kernel,
                 const ControlPolicy& policy, const FeedbackLaw& feedback,
                 double tau, double T, double h) {
    if (h <= 0.0) throw std::invalid_argument("integrate: step must be positive");
    if (T <= 0.0) throw std::invalid_argument("integrate: horizon must be positive");

    Trajectory traj;
    AgentCloud state = initial;
    check_state(state);

    Eigen::MatrixXd frozen = Eigen::MatrixXd::Zero(initial.agents(), initial.dim());
    const bool sampled = static_cast<bool>(feedback);

    const auto current_control = [&](double t, const AgentCloud& s) {
        if (policy) return policy(t, s);
        return frozen;
    };

    double t = 0.0;
    long window = -1;
    bool entered = entry_gap(state, kernel) <= 0.0;
    if (entered) traj.entry_time = 0.0;

    traj.times.push_back(0.0);
    traj.states.push_back(state);
    traj.diagnostics.push_back(compute_diagnostics(state, kernel));

    while (t < T - 1e-12 * T) {
        if (sampled) {
            const long w = static_cast<long>(std::floor(t / tau + 0.5 * h / tau));
            if (w != window) {
                window = w;
                frozen = feedback(state);
                traj.switch_log.emplace_back(w * tau, active_index(frozen));
            }
        }
        double step = h;
        if (t + step > T) step = T - t;
        if (sampled) {
            const double window_end = (window + 1) * tau;
            if (t + step > window_end + 1e-12) step = window_end - t;
        }
        traj.controls.push_back(current_control(t, state));
        const AgentCloud before = state;
        state = rk4_step(before, kernel, t, step, policy, sampled ? &frozen : nullptr);
        check_state(state);
        const double t_next = t + step;
        if (!entered && entry_gap(state, kernel) <= 0.0) {
            entered = true;
            traj.entry_time = bisect_entry(before, kernel, t, step, policy,
                                           sampled ? &frozen : nullptr);
        }
        t = t_next;
        traj.times.push_back(t);
        traj.states.push_back(state);
        traj.diagnostics.push_back(compute_diagnostics(state, kernel));
    }
    traj.controls.push_back(current_control(t, state));
    return traj;
}

}  // namespace

Trajectory integrate(const AgentCloud& initial, const CommKernel& kernel,
                     const ControlPolicy& policy, double T, double h) {
    return drive(initial, kernel, policy, nullptr, 0.0, T, h);
}

Trajectory sampling_solve(const AgentCloud& initial, const CommKernel& kernel,
                          const FeedbackLaw& feedback, double tau, double T,
                          double h) {
    if (tau <= 0.0) throw std::invalid_argument("sampling_solve: tau must be positive");
    if (!feedback) throw std::invalid_argument("sampling_solve: feedback required");
    if (h <= 0.0) h = std::min(tau / 10.0, 1e-2);
    // tau must be an integer multiple of the inner step.
    const long m = std::max(1L, static_cast<long>(std::ceil(tau / h - 1e-9)));
    h = tau / static_cast<double>(m);
    return drive(initial, kernel, nullptr, feedback, tau, T, h);
}

double two_agent_invariant_residual(double x, double v, double x0, double v0) {
    return (v + std::atan(x)) - (v0 + std::atan(x0));
}

AgentCloud two_agent_initial(double x0, double v0) {
    Eigen::MatrixXd x(2, 1), v(2, 1);
    x << x0 / 2.0, -x0 / 2.0;
    v << v0 / 2.0, -v0 / 2.0;
    return AgentCloud(x, v);
}

}  // namespace csc
