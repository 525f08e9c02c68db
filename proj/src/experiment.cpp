#include "csc/experiment.hpp"

#include "csc/optimal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace csc {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double out;
    try {
        out = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("invalid number for key '" + key + "': " + value);
    }
    if (pos != value.size())
        throw ConfigError("invalid number for key '" + key + "': " + value);
    return out;
}

int parse_int(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    if (v != std::floor(v))
        throw ConfigError("expected integer for key '" + key + "': " + value);
    return static_cast<int>(v);
}

std::vector<double> parse_array(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    return out;
}

}  // namespace

void apply_config_entry(ExperimentConfig& c, const std::string& key,
                        const std::string& value) {
    if (key == "N") c.N = parse_int(key, value);
    else if (key == "d") c.d = parse_int(key, value);
    else if (key == "K") c.K = parse_double(key, value);
    else if (key == "sigma") c.sigma = parse_double(key, value);
    else if (key == "beta") c.beta = parse_double(key, value);
    else if (key == "M") c.M = parse_double(key, value);
    else if (key == "strategy") c.strategy = value;
    else if (key == "tau") {
        if (value == "auto") {
            c.tau_auto = true;
            c.tau = 0.0;
        } else {
            c.tau_auto = false;
            c.tau = parse_double(key, value);
        }
    } else if (key == "h") c.h = parse_double(key, value);
    else if (key == "T") c.T = parse_double(key, value);
    else if (key == "generator") c.generator = value;
    else if (key == "x0") c.x0 = parse_double(key, value);
    else if (key == "v0") c.v0 = parse_double(key, value);
    else if (key == "x") c.x_data = parse_array(key, value);
    else if (key == "v") c.v_data = parse_array(key, value);
    else if (key == "sparsity_weight") c.sparsity_weight = parse_double(key, value);
    else if (key == "grid_points") c.grid_points = parse_int(key, value);
    else if (key == "damping") c.damping = parse_double(key, value);
    else if (key == "max_iter") c.max_iter = parse_int(key, value);
    else if (key == "tol") c.tol = parse_double(key, value);
    else if (key == "output") c.output = value;
    else if (key == "seed") c.seed = static_cast<unsigned>(parse_int(key, value));
    else throw ConfigError("unknown config key: " + key);
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected key = value");
        apply_config_entry(config, trim(line.substr(0, eq)),
                           trim(line.substr(eq + 1)));
    }
    return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

void validate_config(const ExperimentConfig& c) {
    static const std::vector<std::string> strategies = {
        "none", "sparse", "distributed-uniform", "distributed-projection",
        "optimal"};
    if (std::find(strategies.begin(), strategies.end(), c.strategy) ==
        strategies.end())
        throw ConfigError("unknown strategy: " + c.strategy);
    if (c.T <= 0.0) throw ConfigError("T must be positive");
    if (c.h <= 0.0) throw ConfigError("h must be positive");
    if (c.M <= 0.0) throw ConfigError("M must be positive");
    if (c.K <= 0.0 || c.sigma <= 0.0) throw ConfigError("K and sigma must be positive");
    if (c.beta < 0.0) throw ConfigError("beta must be nonnegative");
    if (!c.tau_auto && c.tau < 0.0) throw ConfigError("tau must be nonnegative");
    if (c.strategy == "optimal") {
        if (c.grid_points < 100) throw ConfigError("grid_points must be >= 100");
        if (c.damping <= 0.0 || c.damping > 1.0)
            throw ConfigError("damping must be in (0, 1]");
        if (c.sparsity_weight <= 0.0)
            throw ConfigError("sparsity_weight must be positive");
    }
    if (c.generator.empty()) {
        if (c.N < 2 || c.d < 1)
            throw ConfigError("explicit initial data requires N >= 2 and d >= 1");
        const std::size_t expected = static_cast<std::size_t>(c.N) * c.d;
        if (c.x_data.size() != expected || c.v_data.size() != expected)
            throw ConfigError("x and v must each hold N*d comma-separated values");
    } else if (c.generator != "example-symmetric" &&
               c.generator != "example-circle-20" && c.generator != "two-agent") {
        throw ConfigError("unknown generator: " + c.generator);
    }
}

CommKernel config_kernel(const ExperimentConfig& c) {
    return CommKernel::cucker_smale(c.K, c.sigma, c.beta);
}

AgentCloud config_initial(const ExperimentConfig& c) {
    if (c.generator == "example-symmetric") {
        Eigen::MatrixXd x(4, 2), v(4, 2);
        x << -1, 0, 0, 1, 1, 0, 0, -1;
        v = x;
        return AgentCloud(x, v);
    }
    if (c.generator == "example-circle-20") {
        const int n = 20;
        Eigen::MatrixXd x(n, 2), v(n, 2);
        for (int i = 1; i <= n; ++i) {
            x(i - 1, 0) = std::cos(i + std::sqrt(2.0));
            x(i - 1, 1) = std::cos(i + 2.0 * std::sqrt(2.0));
            v(i - 1, 0) = 2.0 * std::sin(i * std::sqrt(3.0) - 1.0);
            v(i - 1, 1) = 2.0 * std::sin(i * std::sqrt(3.0) - 2.0);
        }
        return AgentCloud(x, v);
    }
    if (c.generator == "two-agent") return two_agent_initial(c.x0, c.v0);
    Eigen::MatrixXd x(c.N, c.d), v(c.N, c.d);
    for (int i = 0; i < c.N; ++i)
        for (int j = 0; j < c.d; ++j) {
            x(i, j) = c.x_data[static_cast<std::size_t>(i) * c.d + j];
            v(i, j) = c.v_data[static_cast<std::size_t>(i) * c.d + j];
        }
    return AgentCloud(x, v);
}

namespace {

int active_agent_of(const Eigen::MatrixXd& u) {
    int active = -1;
    for (int i = 0; i < u.rows(); ++i) {
        if (u.row(i).norm() > 0.0) {
            if (active >= 0) return -1;  // more than one nonzero row
            active = i;
        }
    }
    return active;
}

int count_interventions(const Trajectory& traj) {
    int count = 0;
    int prev = -1;
    for (const auto& [t, active] : traj.switch_log) {
        if (active != prev && active >= 0) ++count;
        prev = active;
    }
    return count;
}

double control_effort(const Trajectory& traj) {
    double effort = 0.0;
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const double a = traj.controls[i - 1].rowwise().norm().sum();
        const double b = traj.controls[i].rowwise().norm().sum();
        effort += 0.5 * (traj.times[i] - traj.times[i - 1]) * (a + b);
    }
    return effort;
}

Trajectory extremal_to_trajectory(const Extremal& ext, const CommKernel& kernel) {
    Trajectory traj;
    traj.times = ext.times;
    traj.states = ext.states;
    traj.controls = ext.controls;
    traj.diagnostics.reserve(ext.size());
    for (const auto& s : ext.states)
        traj.diagnostics.push_back(compute_diagnostics(s, kernel));
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& diag = traj.diagnostics[i];
        if (std::sqrt(diag.V) <= diag.gamma_of_X) {
            traj.entry_time = traj.times[i];
            break;
        }
    }
    return traj;
}

}  // namespace

RunResult run(const ExperimentConfig& config) {
    validate_config(config);
    const CommKernel kernel = config_kernel(config);
    const AgentCloud initial = config_initial(config);

    double tau = config.tau;
    if (config.tau_auto) tau = max_sampling_time(initial, kernel, config.M);

    RunResult result;
    result.summary.strategy = config.strategy;
    if (config.strategy == "none") {
        result.trajectory = integrate(initial, kernel, nullptr, config.T, config.h);
    } else if (config.strategy == "optimal") {
        const Extremal ext = forward_backward_solve(
            initial, kernel, config.T, config.sparsity_weight, config.M,
            config.grid_points, config.damping, config.max_iter, config.tol);
        result.trajectory = extremal_to_trajectory(ext, kernel);
        result.summary.optimal_cost = ext.cost;
    } else {
        FeedbackLaw feedback;
        if (config.strategy == "sparse") {
            feedback = make_sparse_feedback(kernel, config.M);
        } else if (config.strategy == "distributed-uniform") {
            const double M = config.M;
            feedback = [M](const AgentCloud& s) {
                return distributed_feedback(s, M, DistributedMode::uniform).u;
            };
        } else {  // distributed-projection, gain frozen at t = 0
            const double alpha = projection_alpha(initial, config.M);
            feedback = [alpha](const AgentCloud& s) -> Eigen::MatrixXd {
                return -alpha * perp_projection(s);
            };
        }
        if (tau <= 0.0)
            throw ConfigError("sampled strategies need tau > 0 (or tau = auto)");
        result.trajectory =
            sampling_solve(initial, kernel, feedback, tau, config.T, config.h);
    }

    const Trajectory& traj = result.trajectory;
    RunSummary& s = result.summary;
    s.entry_time = traj.entry_time;
    s.interventions = count_interventions(traj);
    s.control_effort = control_effort(traj);
    s.final_sqrtV = std::sqrt(std::max(0.0, traj.diagnostics.back().V));
    s.final_gammaX = traj.diagnostics.back().gamma_of_X;
    s.final_X = traj.diagnostics.back().X;
    if (disagreement_V(initial) > 0.0 && kernel.integrable())
        s.bounds = stabilization_bounds(initial, kernel, config.M, config.T);

    if (!config.output.empty()) write_trajectory_csv(traj, config.output);
    return result;
}

std::vector<RunSummary> compare(const std::vector<ExperimentConfig>& configs) {
    if (configs.empty()) return {};
    const AgentCloud reference = config_initial(configs.front());
    for (const auto& c : configs) {
        const AgentCloud other = config_initial(c);
        if (other.agents() != reference.agents() || other.dim() != reference.dim() ||
            (other.x - reference.x).cwiseAbs().maxCoeff() > 0.0 ||
            (other.v - reference.v).cwiseAbs().maxCoeff() > 0.0)
            throw ConfigError("compare: configs must share initial data");
        if (c.K != configs.front().K || c.sigma != configs.front().sigma ||
            c.beta != configs.front().beta)
            throw ConfigError("compare: configs must share the kernel");
    }
    std::vector<RunSummary> rows;
    rows.reserve(configs.size());
    for (const auto& c : configs) rows.push_back(run(c).summary);
    return rows;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    const int n = traj.states.empty() ? 0 : traj.states.front().agents();
    const int d = traj.states.empty() ? 0 : traj.states.front().dim();
    out << "t,sqrtV,gammaX,X,active_agent,control_l1l2_norm";
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= d; ++j) out << ",x_" << i << "_" << j;
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= d; ++j) out << ",v_" << i << "_" << j;
    out << "\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& diag = traj.diagnostics[k];
        const auto& u = traj.controls[k];
        out << traj.times[k] << "," << std::sqrt(std::max(0.0, diag.V)) << ","
            << diag.gamma_of_X << "," << diag.X << "," << active_agent_of(u) << ","
            << u.rowwise().norm().sum();
        const auto& s = traj.states[k];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) out << "," << s.x(i, j);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) out << "," << s.v(i, j);
        out << "\n";
    }
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    write_trajectory_csv(traj, out);
}

CsvTrajectory read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trajectory file: " + path);
    std::string header;
    if (!std::getline(in, header))
        throw ConfigError("empty trajectory file: " + path);
    int columns = 1;
    for (char ch : header)
        if (ch == ',') ++columns;
    // 6 scalar columns + 2 N d coordinates; infer N*d from the header names.
    const int nd = (columns - 6) / 2;
    int n = 0, d = 0;
    {
        std::stringstream ss(header);
        std::string name;
        while (std::getline(ss, name, ',')) {
            if (name.rfind("x_", 0) == 0) {
                const auto mid = name.find('_', 2);
                n = std::max(n, std::stoi(name.substr(2, mid - 2)));
                d = std::max(d, std::stoi(name.substr(mid + 1)));
            }
        }
    }
    if (n * d != nd) throw ConfigError("malformed trajectory header: " + path);

    CsvTrajectory out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ','))
            row.push_back(parse_double("csv", trim(cell)));
        if (static_cast<int>(row.size()) != columns)
            throw ConfigError("malformed trajectory row: " + path);
        out.times.push_back(row[0]);
        out.sqrtV.push_back(row[1]);
        out.gammaX.push_back(row[2]);
        out.X.push_back(row[3]);
        out.active_agent.push_back(static_cast<int>(row[4]));
        out.control_norm.push_back(row[5]);
        Eigen::MatrixXd x(n, d), v(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) {
                x(i, j) = row[6 + i * d + j];
                v(i, j) = row[6 + nd + i * d + j];
            }
        out.states.emplace_back(x, v);
    }
    return out;
}

}  // namespace csc
