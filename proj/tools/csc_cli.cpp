#include "csc/controllability.hpp"
#include "csc/experiment.hpp"
#include "csc/optimal.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <sstream>

namespace {

struct ConfigCapture {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
};

// Every config key becomes a flag; values are funneled through the same
// parser as the config file so overrides behave identically.
void add_config_options(CLI::App* cmd, ConfigCapture& cap) {
    cmd->add_option("--config", cap.config_path, "key = value config file");
    static const char* keys[] = {"N",   "d",     "K",        "sigma",
                                 "beta", "M",    "strategy", "tau",
                                 "h",    "T",    "generator", "x0",
                                 "v0",   "x",    "v",        "sparsity_weight",
                                 "grid_points",  "damping",  "max_iter",
                                 "tol",  "output", "seed"};
    for (const char* key : keys) {
        cmd->add_option_function<std::string>(
            std::string("--") + key,
            [&cap, key](const std::string& value) {
                cap.overrides.emplace_back(key, value);
            },
            std::string("config key ") + key);
    }
}

csc::ExperimentConfig build_config(const ConfigCapture& cap) {
    csc::ExperimentConfig config;
    if (!cap.config_path.empty())
        config = csc::parse_config_file(cap.config_path);
    for (const auto& [key, value] : cap.overrides)
        csc::apply_config_entry(config, key, value);
    return config;
}

void print_summary(const csc::RunSummary& s) {
    std::cout << "strategy: " << s.strategy << "\n";
    if (s.entry_time)
        std::cout << "entry_time: " << *s.entry_time << "\n";
    else
        std::cout << "entry_time: none\n";
    std::cout << "interventions: " << s.interventions << "\n"
              << "control_effort: " << s.control_effort << "\n"
              << "final_sqrtV: " << s.final_sqrtV << "\n"
              << "final_gammaX: " << s.final_gammaX << "\n"
              << "final_X: " << s.final_X << "\n";
    if (s.bounds)
        std::cout << "X_bar: " << s.bounds->X_bar << "\n"
                  << "T0: " << s.bounds->T0 << "\n"
                  << "tau0: " << s.bounds->tau0 << "\n"
                  << "n_bound: " << s.bounds->n_bound << "\n";
    if (s.strategy == "optimal") std::cout << "cost: " << s.optimal_cost << "\n";
}

int run_simulate(const ConfigCapture& cap) {
    const csc::RunResult result = csc::run(build_config(cap));
    print_summary(result.summary);
    return 0;
}

int run_compare(const ConfigCapture& cap, const std::string& strategies) {
    std::vector<csc::ExperimentConfig> configs;
    std::stringstream ss(strategies);
    std::string item;
    while (std::getline(ss, item, ',')) {
        csc::ExperimentConfig c = build_config(cap);
        c.strategy = item;
        if (!c.output.empty()) c.output += "." + item + ".csv";
        configs.push_back(std::move(c));
    }
    if (configs.empty()) throw csc::ConfigError("compare: no strategies given");
    const auto rows = csc::compare(configs);
    std::cout << "strategy,entry_time,interventions,control_effort,"
                 "final_sqrtV,final_gammaX\n";
    for (const auto& s : rows) {
        std::cout << s.strategy << ",";
        if (s.entry_time)
            std::cout << *s.entry_time;
        else
            std::cout << "none";
        std::cout << "," << s.interventions << "," << s.control_effort << ","
                  << s.final_sqrtV << "," << s.final_gammaX << "\n";
    }
    return 0;
}

int run_bounds(const ConfigCapture& cap) {
    const csc::ExperimentConfig config = build_config(cap);
    csc::validate_config(config);
    const auto kernel = csc::config_kernel(config);
    const auto initial = csc::config_initial(config);
    const auto b = csc::stabilization_bounds(initial, kernel, config.M, config.T);
    std::cout << "X_bar: " << b.X_bar << "\n"
              << "T0: " << b.T0 << "\n"
              << "tau0: " << b.tau0 << "\n"
              << "n_bound: " << b.n_bound << "\n";
    return 0;
}

int run_controllability(const ConfigCapture& cap, int agent) {
    const csc::ExperimentConfig config = build_config(cap);
    csc::validate_config(config);
    const auto kernel = csc::config_kernel(config);
    const auto initial = csc::config_initial(config);
    const auto sys = csc::linearize_at_consensus(initial.x, kernel, agent);
    const auto report = csc::kalman_test(sys);
    std::cout << "controllable: " << (report.controllable ? "yes" : "no") << "\n"
              << "rank: " << report.rank << " of " << sys.A.rows() << "\n"
              << "distinct_eigenvalues: "
              << (report.spectral.distinct_eigenvalues ? "yes" : "no") << "\n"
              << "nonzero_coefficients: "
              << (report.spectral.nonzero_coefficients ? "yes" : "no") << "\n"
              << "min_eigen_gap: " << report.spectral.min_eigen_gap << "\n"
              << "min_coefficient: " << report.spectral.min_coefficient << "\n";
    return 0;
}

int run_optimal(const ConfigCapture& cap) {
    csc::ExperimentConfig config = build_config(cap);
    config.strategy = "optimal";
    const csc::RunResult result = csc::run(config);
    print_summary(result.summary);
    return 0;
}

int run_oracle(const ConfigCapture& cap) {
    const csc::ExperimentConfig config = build_config(cap);
    const auto kernel = csc::CommKernel::cucker_smale(1.0, 1.0, 1.0);
    const auto initial = csc::two_agent_initial(config.x0, config.v0);
    const auto traj = csc::integrate(initial, kernel, nullptr, config.T, config.h);
    double max_residual = 0.0;
    for (const auto& s : traj.states) {
        const double x = s.x(0, 0) - s.x(1, 0);
        const double v = s.v(0, 0) - s.v(1, 0);
        max_residual = std::max(max_residual,
                                std::abs(csc::two_agent_invariant_residual(
                                    x, v, config.x0, config.v0)));
    }
    const bool analytic =
        std::abs(std::atan(config.x0) + config.v0) < M_PI / 2.0;
    std::cout << "max_invariant_residual: " << max_residual << "\n"
              << "analytic_consensus: " << (analytic ? "yes" : "no") << "\n"
              << "final_sqrtV: " << std::sqrt(std::max(0.0, traj.diagnostics.back().V))
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Alignment-dynamics simulation and sparse-control toolkit"};
    app.require_subcommand(1);

    ConfigCapture cap_simulate, cap_compare, cap_bounds, cap_ctrb, cap_optimal,
        cap_oracle;
    std::string strategies = "none,sparse,distributed-uniform";
    int agent = 0;

    auto* simulate = app.add_subcommand("simulate", "run one configured strategy");
    add_config_options(simulate, cap_simulate);
    auto* compare = app.add_subcommand("compare", "run several strategies");
    add_config_options(compare, cap_compare);
    compare->add_option("--strategies", strategies, "comma-separated strategy list");
    auto* bounds = app.add_subcommand("bounds", "print stabilization bounds");
    add_config_options(bounds, cap_bounds);
    auto* ctrb = app.add_subcommand("controllability", "Kalman report at x(0)");
    add_config_options(ctrb, cap_ctrb);
    ctrb->add_option("--agent", agent, "controlled agent index");
    auto* optimal = app.add_subcommand("optimal", "PMP forward-backward sweep");
    add_config_options(optimal, cap_optimal);
    auto* oracle = app.add_subcommand("oracle", "two-agent invariant check");
    add_config_options(oracle, cap_oracle);

    try {
        app.parse(argc, argv);
        if (simulate->parsed()) return run_simulate(cap_simulate);
        if (compare->parsed()) return run_compare(cap_compare, strategies);
        if (bounds->parsed()) return run_bounds(cap_bounds);
        if (ctrb->parsed()) return run_controllability(cap_ctrb, agent);
        if (optimal->parsed()) return run_optimal(cap_optimal);
        if (oracle->parsed()) return run_oracle(cap_oracle);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const csc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
