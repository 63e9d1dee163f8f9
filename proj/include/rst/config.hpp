#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rst/lmi.hpp"
#include "rst/search.hpp"
#include "rst/sim.hpp"

namespace rst {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimConfig {
    double horizon = 100.0;
    double step = 0.0;          // 0: default h/100
    Vector initial;             // constant initial history; empty: e_1
    double tail_fraction = 0.5;
};

struct SweepConfig {
    std::vector<double> p_r;
    std::vector<double> h;
    double T_cap = 3.0;
    double tm_ratio = 1.0;
};

struct ProblemConfig {
    Plant plant;
    PiRiController controller;
    double delay = 0.0;
    std::optional<AnalysisQuery> query;
    ResettingLaw law = NoResetLaw{};
    SimConfig sim;
    std::vector<int> table1_M = {1, 3, 5, 10, 50};
    SweepConfig sweep;
    SearchOptions search;   // includes solver options

    SampledDataModel sampled_model() const { return build_sampled_data(plant, controller, delay); }
    ClosedLoopModel closed_loop_model() const { return build_closed_loop(plant, controller, delay); }
    double sim_step() const { return sim.step > 0.0 ? sim.step : delay / 100.0; }
    InitialCondition initial_condition(Eigen::Index n) const;
};

ProblemConfig parse_config(const nlohmann::json& j);
ProblemConfig load_config(const std::string& path);

nlohmann::json resolved_config_json(const ProblemConfig& cfg);

nlohmann::json certificate_to_json(const ProblemConfig& cfg, const LmiProblem& problem,
                                   const Certificate& cert);

}  // namespace rst
