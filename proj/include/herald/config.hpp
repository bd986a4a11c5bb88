#pragma once

#include "herald/events.hpp"
#include "herald/herald.hpp"
#include "herald/llm_client.hpp"
#include "herald/prompt.hpp"
#include "herald/sim.hpp"
#include "herald/types.hpp"

#include <string>
#include <vector>

namespace herald {

struct GridConfig {
    int rows = 1;
    int cols = 1;
    double segment_length_m = 300.0;
};

struct ControllerConfig {
    std::string kind = "fixed"; // random | fixed | max-pressure | herald-rule | llm
    double green_s = 0.0;       // 0 means the kind's default (fixed 30, max-pressure 20)
};

struct HeraldConfig {
    double forecast_horizon_s = 40.0;
    double delta_s = 1.0;
    std::vector<AdjustRule> rules = HeraldTable::default_rules();
    double imbalance_factor = 2.0;
    double calibration_horizon_s = 600.0;
    std::string table_path; // pre-calibrated table; empty -> probe + calibrate
};

struct LlmConfig {
    EndpointConfig agent;
    EndpointConfig critic;
    bool critic_configured = false; // falls back to the agent endpoint
    int max_correction_attempts = 2;
    double q_error = 0.0;
    double q_corrected = 1.0;
    double beta = 0.1;
    std::string logprob_fixture;
};

// One experiment: network, demand, kinematics, weather, controller and
// endpoints. JSON round-trips carry a schema_version and reject unknown
// fields.
struct ScenarioConfig {
    int schema_version = 1;
    std::string name = "scenario";
    GridConfig grid;
    VehicleParams vehicle;
    WeatherProfile weather = WeatherProfile::base();
    std::vector<FlowEntry> flows;
    double horizon_s = 3600.0;
    uint64_t seed = 1;
    ControllerConfig controller;
    HeraldConfig herald;
    LlmConfig llm;
    double vehicle_space_m = 7.5; // queue-length meters per queued vehicle

    json to_json() const;
    static ScenarioConfig from_json(const json &j);
    void save(const std::string &path) const;
    static ScenarioConfig load(const std::string &path);

    void validate() const;
};

// Named presets: jn-like 3x4 (12 intersections), hz-like 4x4 (16),
// ny-like 7x28 (196), each with its demand profile.
ScenarioConfig make_preset(const std::string &name);
std::vector<std::string> preset_names();

// Arbitrary grid with the preset-style boundary demand (one entry per
// boundary stub, straight-heavy with spread turn exits).
ScenarioConfig make_grid_scenario(int rows, int cols, double ew_period_s, double ns_period_s);

} // namespace herald
