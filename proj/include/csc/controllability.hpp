#pragma once

#include "csc/core.hpp"

#include <functional>

namespace csc {

/// Linearization of the controlled dynamics at a consensus point with
/// the input on a single agent: per spatial axis, vdot = A v + B u with
/// A = -L at the frozen configuration and B the indicator column of the
/// controlled agent. The x-equations are pure integrators.
struct LinearizedSystem {
    Eigen::MatrixXd A;           // N x N, symmetric negative semidefinite
    int control_index = 0;
    Eigen::VectorXd eigenvalues; // ascending, last is 0
    Eigen::MatrixXd eigenvectors;
    Eigen::VectorXd alpha;       // modal input coefficients P^T e_i
};

struct SpectralReport {
    bool distinct_eigenvalues = false;
    bool nonzero_coefficients = false;
    double min_eigen_gap = 0.0;
    double min_coefficient = 0.0;
};

struct KalmanReport {
    bool controllable = false;
    int rank = 0;
    SpectralReport spectral;
};

LinearizedSystem linearize_at_consensus(const Eigen::MatrixXd& x_tilde,
                                        const CommKernel& kernel, int agent);

/// Rank of [B, AB, ..., A^{N-1}B] by singular values (relative threshold
/// 1e-10), cross-checked against the spectral criterion: pairwise
/// distinct eigenvalues and nonzero modal coefficients.
KalmanReport kalman_test(const LinearizedSystem& sys);

/// Minimal-energy open-loop control steering the integrator-augmented
/// linear system (per axis, state (x, v) in R^{2N}) between two nearby
/// states over [0, T], acting only on the controlled agent. The
/// augmented Gramian is rank-deficient in the shared position-integrator
/// directions, so the control is the minimal-norm solution and the
/// requested displacement must lie in the reachable subspace; otherwise
/// an exception reports the unreachable residual.
struct SteeringControl {
    /// d-vector of control values for the controlled agent at time t.
    std::function<Eigen::VectorXd(double)> u;
    Eigen::MatrixXd gramian;  // 2N x 2N, one shared across axes
    int gramian_rank = 0;
    double T = 0.0;
    int agent = 0;
};

SteeringControl minimal_energy_steering(const LinearizedSystem& sys,
                                        const Eigen::MatrixXd& x0,
                                        const Eigen::MatrixXd& v0,
                                        const Eigen::MatrixXd& x1,
                                        const Eigen::MatrixXd& v1, double T);

/// Forward integration of the augmented linear system under a steering
/// control; used to verify the Gramian construction.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> integrate_linear(
    const LinearizedSystem& sys, const SteeringControl& ctrl,
    const Eigen::MatrixXd& x0, const Eigen::MatrixXd& v0, int steps = 4000);

/// Samples a state reachable from (x0, v0) in time T, perturbing along
/// the range of the Gramian with the given magnitude.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> sample_reachable_target(
    const LinearizedSystem& sys, const Eigen::MatrixXd& x0,
    const Eigen::MatrixXd& v0, double T, double magnitude, unsigned seed);

}  // namespace csc
