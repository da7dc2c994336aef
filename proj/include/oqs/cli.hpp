// cli.hpp — Named-experiment runner: config parsing, CSV/JSON emission, and
// the subcommand entry points

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "oqs/types.hpp"

namespace oqs::cli {

using nlohmann::json;

// Validated experiment configuration. Unknown keys are rejected.
struct ExperimentConfig {
    std::string experiment;
    json model;            // {"model":"hubbard","l":..,"N":..,"J":..,"V":..} or oscillator block
    json bath;             // {"gamma":..,"Ec":..,"T":..} (imbalance: T_left/T_right)
    std::vector<double> grid_T;
    std::vector<double> grid_gamma;
    std::vector<int> grid_l;
    std::vector<double> beta_grid;
    std::vector<double> temperature_list; // brownian
    std::string coupling{"local"};        // errormap: local | global
    std::uint64_t seed{0};
    int n_traj{2000};
    bool full{false};
    std::string out_dir{"."};
    int threads{0};

    json raw; // canonical echo written to the meta file
};

ExperimentConfig parse_config(const json& j, const std::string& experiment_hint = "");
ExperimentConfig load_config_file(const std::string& path);

std::string config_hash(const json& j);

// Subcommand runners; return the paths of the files written
std::vector<std::string> run_errormap(const ExperimentConfig& cfg);
std::vector<std::string> run_imbalance(const ExperimentConfig& cfg);
std::vector<std::string> run_optim_compare(const ExperimentConfig& cfg);
std::vector<std::string> run_brownian(const ExperimentConfig& cfg);
std::vector<std::string> run_weights(const ExperimentConfig& cfg);

// Full CLI entry: `oqs <subcommand> --config <file> [--out <dir>] [--seed <u64>]
// [--threads <n>] [--full]`. Exit codes: 0 success, 2 config error, 3 numerical failure.
int main(const std::vector<std::string>& args);

} // namespace oqs::cli
