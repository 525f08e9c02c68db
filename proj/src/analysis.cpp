#include "csc/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace csc {

bool consensus_region_check(const AgentCloud& cloud, const CommKernel& kernel) {
    if (!kernel.integrable()) return true;
    return gamma_threshold(dispersion_X(cloud), kernel, cloud.agents()) >=
           std::sqrt(disagreement_V(cloud));
}

std::pair<double, double> steering_time_bound(const AgentCloud& cloud,
                                              const CommKernel& kernel, double M,
                                              bool sampled) {
    const double N = cloud.agents();
    const double X0 = dispersion_X(cloud);
    const double V0 = disagreement_V(cloud);
    if (V0 <= 0.0) return {X0, 0.0};
    const double N4 = N * N * N * N;
    double X_bar, T0;
    if (sampled) {
        X_bar = 2.0 * X0 + 2.0 * N4 * V0 * V0 / (M * M);
        T0 = 2.0 * N / M * (std::sqrt(V0) - gamma_threshold(X_bar, kernel, cloud.agents()));
    } else {
        X_bar = 2.0 * X0 + N4 * V0 * V0 / (2.0 * M * M);
        T0 = N / M * (std::sqrt(V0) - gamma_threshold(X_bar, kernel, cloud.agents()));
    }
    return {X_bar, std::max(0.0, T0)};
}

double max_sampling_time(const AgentCloud& cloud, const CommKernel& kernel, double M) {
    const double N = cloud.agents();
    const double V0 = disagreement_V(cloud);
    if (V0 <= 0.0) throw std::invalid_argument("max_sampling_time: V0 must be positive");
    const auto [X_bar, T0] = steering_time_bound(cloud, kernel, M, /*sampled=*/true);
    (void)T0;
    const double a0 = kernel.rate(0.0);
    const double qa = 2.0 * a0 * M;
    const double qb = a0 * (1.0 + std::sqrt(N)) * std::sqrt(V0) + M;
    const double qc = -0.5 * gamma_threshold(X_bar, kernel, cloud.agents());
    return (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
}

double consensus_number_bound(const AgentCloud& cloud, const CommKernel& kernel,
                              double M, double T) {
    if (disagreement_V(cloud) <= 0.0) return 0.0;
    const auto [X_bar, T0] = steering_time_bound(cloud, kernel, M, /*sampled=*/true);
    (void)X_bar;
    if (T < T0) return std::numeric_limits<double>::infinity();
    if (T0 <= 0.0) return 0.0;
    return std::ceil(T0 / max_sampling_time(cloud, kernel, M));
}

StabilizationBounds stabilization_bounds(const AgentCloud& cloud,
                                         const CommKernel& kernel, double M, double T) {
    StabilizationBounds b;
    const auto [X_bar, T0] = steering_time_bound(cloud, kernel, M, /*sampled=*/true);
    b.X_bar = X_bar;
    b.T0 = T0;
    b.tau0 = disagreement_V(cloud) > 0.0 ? max_sampling_time(cloud, kernel, M) : 0.0;
    b.n_bound = consensus_number_bound(cloud, kernel, M, T);
    return b;
}

double LemmaReport::max_violation() const {
    return std::max({lyapunov_decay, sqrtV_decay, sqrtX_growth, tail_integral,
                     c1_monotonicity, decay_envelope_V, dispersion_bound_X});
}

LemmaReport lemma_checkers(const Trajectory& traj, const CommKernel& kernel,
                           bool uncontrolled, std::optional<double> decay_alpha) {
    LemmaReport report;
    const std::size_t n = traj.size();
    if (n < 2) return report;
    const double N = traj.states.front().agents();

    std::vector<double> V(n), X(n), sqrtV(n), sqrtX(n), gap(n), gamma(n);
    for (std::size_t i = 0; i < n; ++i) {
        V[i] = traj.diagnostics[i].V;
        X[i] = traj.diagnostics[i].X;
        sqrtV[i] = std::sqrt(std::max(0.0, V[i]));
        sqrtX[i] = std::sqrt(std::max(0.0, X[i]));
        gamma[i] = traj.diagnostics[i].gamma_of_X;
        gap[i] = traj.diagnostics[i].max_perp_norm - gamma[i];
    }

    const double V0 = V.front();
    const double X0 = X.front();
    const double sqrtV0 = sqrtV.front();

    double t_end = traj.times.back();
    if (decay_alpha && traj.entry_time) t_end = *traj.entry_time;

    for (std::size_t i = 0; i < n; ++i) {
        const double t = traj.times[i];
        if (uncontrolled && i + 1 < n) {
            // Step-wise (integrated) form of the decay lemmas: since a is
            // nonincreasing, a(sqrt(2N max(X_i, X_{i+1}))) under-estimates
            // the rate on the interval, so each inequality must hold up to
            // integrator error even in the tight N = 2 case.
            const double dt = traj.times[i + 1] - traj.times[i];
            const double a_weak =
                kernel.rate(std::sqrt(2.0 * N * std::max(X[i], X[i + 1])));
            report.lyapunov_decay =
                std::max(report.lyapunov_decay,
                         V[i + 1] - V[i] * std::exp(-2.0 * a_weak * dt));
            report.sqrtV_decay =
                std::max(report.sqrtV_decay,
                         sqrtV[i + 1] - sqrtV[i] * std::exp(-a_weak * dt));
            report.sqrtX_growth =
                std::max(report.sqrtX_growth,
                         sqrtX[i + 1] - sqrtX[i] -
                             dt * std::max(sqrtV[i], sqrtV[i + 1]));
            report.c1_monotonicity =
                std::max(report.c1_monotonicity, gap[i + 1] - gap[i]);
        }
        if (uncontrolled) {
            // int_{sqrtX(0)}^{sqrtX(t)} a(sqrt(2N) r) dr = gamma(X0) - gamma(X(t))
            report.tail_integral = std::max(
                report.tail_integral, sqrtV[i] + (gamma[0] - gamma[i]) - sqrtV0);
        }
        if (decay_alpha && t <= t_end) {
            const double alpha = *decay_alpha;
            const double env = sqrtV0 - 0.5 * alpha * t;
            if (env >= 0.0)
                report.decay_envelope_V =
                    std::max(report.decay_envelope_V, V[i] - env * env);
            report.dispersion_bound_X =
                std::max(report.dispersion_bound_X,
                         X[i] - (2.0 * X0 + 2.0 * N * N * V0 * V0 / (alpha * alpha)));
        }
    }
    return report;
}

}  // namespace csc
