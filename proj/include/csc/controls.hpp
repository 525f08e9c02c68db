#pragma once

#include "csc/core.hpp"
#include "csc/dynamics.hpp"

#include <vector>

namespace csc {

/// Per-agent control with its l1(of l2-norms) budget M.
struct ControlVector {
    Eigen::MatrixXd u;  // N x d
    double budget = 0.0;

    double l1l2_norm() const { return u.rowwise().norm().sum(); }
};

enum class Region { C1, C2, C3, C4 };

/// Region of the C1..C4 partition plus the set of indices attaining
/// max_i ||v_perp_i|| (within the tie tolerance).
struct RegionLabel {
    Region region = Region::C1;
    std::vector<int> argmax_set;
};

constexpr double kTieTolerance = 1e-10;

/// Classifies the state against the partition: below / at / above the
/// threshold gamma(B(x,x)), with the above case split by whether the
/// maximizer is unique (C3) or tied (C4). Ties use a relative tolerance.
RegionLabel classify_region(const AgentCloud& cloud, const CommKernel& kernel);

/// Componentwise sparse feedback: zero at or below the threshold,
/// otherwise the full budget on the smallest index attaining
/// max_i ||v_perp_i||, directed against its v_perp. At most one nonzero row.
ControlVector sparse_feedback(const AgentCloud& cloud, const CommKernel& kernel,
                              double M);

enum class DistributedMode { projection, uniform };

/// Projection mode: u = -alpha * v_perp with alpha = M / (N sqrt(B(v,v)))
/// computed from the given state (freeze it at t=0 for a run, see
/// make_projection_policy). Uniform mode: budget split in N equal shares,
/// each directed against the agent's own v_perp.
ControlVector distributed_feedback(const AgentCloud& cloud, double M,
                                   DistributedMode mode);

/// Maximal admissible projection gain M / (N sqrt(B(v0,v0))).
double projection_alpha(const AgentCloud& initial, double M);

/// Continuous policy u = -alpha v_perp with alpha frozen from the run's
/// initial disagreement.
ControlPolicy make_projection_policy(const AgentCloud& initial, double M);
/// Continuous policy evaluating the uniform distributed feedback.
ControlPolicy make_uniform_policy(double M);
/// Sampled feedback law wrapping sparse_feedback.
FeedbackLaw make_sparse_feedback(const CommKernel& kernel, double M);

/// Returns (sum_j alpha_j ||v_perp_j||, M * max_i ||v_perp_i||): the decay
/// rate achieved by an allocation and the sparse maximizer's rate. The
/// first never exceeds the second.
std::pair<double, double> decay_rate_bound_check(const AgentCloud& cloud,
                                                 const std::vector<double>& allocations,
                                                 double M);

/// True iff sum_i ||u_i|| <= M + 1e-12.
bool admissibility_check(const ControlVector& u);

}  // namespace csc
