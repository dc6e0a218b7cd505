#pragma once

#include <json.hpp>
#include <string>

#include "qtraj/report.hpp"

namespace qtraj {

// Run configuration parsed from a JSON document. Unknown keys are rejected;
// physical constraints are checked before any run starts.
struct ScenarioConfig {
    std::string scenario;  // qutrit-qnd | repetition | fluorescence | xp |
                           // emission | dispersive | custom
    nlohmann::json params;
    double T = 0.3;
    double dt = 1e-4;
    int n_traj = 100;
    uint64_t seed = 1;
    int n_threads = 1;
    std::vector<double> snapshot_times;
    std::string out_dir = ".";

    static ScenarioConfig parse(const nlohmann::json& doc);
    static ScenarioConfig load(const std::string& path);
    nlohmann::json to_json() const;

    // builds the model + initial state declared by scenario/params
    struct Built {
        ScenarioModel model;
        DensityOperator rho0{Operator::Identity(2, 2) / 2.0, DensityOperator::Unchecked{}};
        std::vector<std::pair<std::string, std::function<double(const Operator&)>>> observables;
    };
    Built build() const;
};

// CSV of declared observables per trajectory/time plus a summary JSON
int run_simulate(const ScenarioConfig& cfg);
int run_rank(const ScenarioConfig& cfg);

}  // namespace qtraj
