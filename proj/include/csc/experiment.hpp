#pragma once

#include "csc/analysis.hpp"
#include "csc/controls.hpp"
#include "csc/core.hpp"
#include "csc/dynamics.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace csc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key=value run description. Initial data comes either from the
/// named generator (example-symmetric, example-circle-20, two-agent) or
/// from explicit comma-separated x and v arrays (row-major, N*d values).
struct ExperimentConfig {
    int N = 0;
    int d = 0;
    double K = 1.0;
    double sigma = 1.0;
    double beta = 1.0;
    double M = 1.0;
    std::string strategy = "none";  // none | sparse | distributed-uniform |
                                    // distributed-projection | optimal
    double tau = 0.0;               // 0 with tau_auto set means "computed tau0"
    bool tau_auto = false;
    double h = 1e-3;
    double T = 10.0;
    std::string generator;
    double x0 = 0.0, v0 = 0.0;      // two-agent generator parameters
    std::vector<double> x_data, v_data;
    double sparsity_weight = 0.1;
    int grid_points = 2000;
    double damping = 0.3;
    int max_iter = 500;
    double tol = 1e-6;
    std::string output;
    unsigned seed = 0;
};

/// Parses "key = value" lines ('#' comments and blank lines allowed).
/// Unknown keys and malformed values raise ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
/// Applies a single "key=value" override onto an existing config.
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);
/// Validates cross-field requirements; raises ConfigError.
void validate_config(const ExperimentConfig& config);

CommKernel config_kernel(const ExperimentConfig& config);
AgentCloud config_initial(const ExperimentConfig& config);

struct RunSummary {
    std::string strategy;
    std::optional<double> entry_time;
    int interventions = 0;
    double control_effort = 0.0;  // int sum_i ||u_i|| dt
    double final_sqrtV = 0.0;
    double final_gammaX = 0.0;
    double final_X = 0.0;
    std::optional<StabilizationBounds> bounds;
    double optimal_cost = 0.0;  // strategy "optimal" only
};

struct RunResult {
    Trajectory trajectory;
    RunSummary summary;
};

/// Executes the configured strategy and writes the CSV when an output
/// path is set.
RunResult run(const ExperimentConfig& config);

/// Runs every config (which must share initial data and kernel) and
/// returns one summary row per strategy.
std::vector<RunSummary> compare(const std::vector<ExperimentConfig>& configs);

/// Trajectory CSV: header
/// t,sqrtV,gammaX,X,active_agent,control_l1l2_norm,x_1_1..x_N_d,v_1_1..v_N_d
/// with 17 significant digits. active_agent is the unique agent with a
/// nonzero control row, or -1.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

/// Scalar columns of a stored trajectory read back from disk.
struct CsvTrajectory {
    std::vector<double> times;
    std::vector<AgentCloud> states;
    std::vector<double> sqrtV, gammaX, X, control_norm;
    std::vector<int> active_agent;
};
CsvTrajectory read_trajectory_csv(const std::string& path);

}  // namespace csc
