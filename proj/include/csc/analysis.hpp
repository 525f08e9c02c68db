#pragma once

#include "csc/core.hpp"
#include "csc/dynamics.hpp"

#include <limits>
#include <optional>

namespace csc {

/// Explicit bounds attached to an initial condition: the dispersion
/// bound X_bar, the steering-time bound T0, the maximal sampling time
/// tau0, and the consensus-number upper bound (possibly infinite).
struct StabilizationBounds {
    double X_bar = 0.0;
    double T0 = 0.0;
    double tau0 = 0.0;
    double n_bound = 0.0;
};

/// True iff gamma(X0) >= sqrt(V0), i.e. the state is in the region from
/// which the free dynamics tends to consensus.
bool consensus_region_check(const AgentCloud& cloud, const CommKernel& kernel);

/// (X_bar, T0). Continuous feedback: X_bar = 2 X0 + N^4 V0^2 / (2 M^2),
/// T0 = (N/M)(sqrt(V0) - gamma(X_bar)). Sampled: X_bar = 2 X0 +
/// 2 N^4 V0^2 / M^2, T0 = (2N/M)(sqrt(V0) - gamma(X_bar)). T0 clamped at 0.
std::pair<double, double> steering_time_bound(const AgentCloud& cloud,
                                              const CommKernel& kernel, double M,
                                              bool sampled);

/// Positive root of 2 a(0) M tau^2 + (a(0)(1+sqrt(N)) sqrt(V0) + M) tau
/// = gamma(X_bar)/2; every tau below it keeps the sampled sparse control
/// effective.
double max_sampling_time(const AgentCloud& cloud, const CommKernel& kernel, double M);

/// Upper bound on the number of control activations needed to reach the
/// consensus region by time T: infinity below T0, else ceil(T0 / tau0).
double consensus_number_bound(const AgentCloud& cloud, const CommKernel& kernel,
                              double M, double T);

StabilizationBounds stabilization_bounds(const AgentCloud& cloud,
                                         const CommKernel& kernel, double M, double T);

/// Max positive violations of the discrete versions of the appendix
/// inequalities along a trajectory. Entries not applicable to the run
/// stay at zero.
struct LemmaReport {
    double lyapunov_decay = 0.0;     // dV/dt <= -2 a(sqrt(2NX)) V
    double sqrtV_decay = 0.0;        // d sqrtV/dt <= -a(sqrt(2NX)) sqrtV
    double sqrtX_growth = 0.0;       // d sqrtX/dt <= sqrtV
    double tail_integral = 0.0;      // sqrtV(t) + int a <= sqrtV(0)
    double c1_monotonicity = 0.0;    // d/dt (max||v_perp|| - gamma(X)) <= 0
    double decay_envelope_V = 0.0;   // V(t) <= (sqrtV0 - alpha t / 2)^2
    double dispersion_bound_X = 0.0; // X(t) <= 2 X0 + 2 N^2 V0^2 / alpha^2

    double max_violation() const;
};

/// Evaluates the inequality chain on a stored trajectory. The
/// uncontrolled-only checks (Lyapunov decay, C1 monotonicity) are run
/// when uncontrolled is true. When decay_alpha is set, the consequents
/// of the integration lemma are checked up to horizon (default: the
/// trajectory's entry time, else its full span).
LemmaReport lemma_checkers(const Trajectory& traj, const CommKernel& kernel,
                           bool uncontrolled = true,
                           std::optional<double> decay_alpha = std::nullopt);

}  // namespace csc
