#pragma once

#include "herald/config.hpp"
#include "herald/controllers.hpp"
#include "herald/critic.hpp"
#include "herald/metrics.hpp"
#include "herald/sim.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace herald {

struct RunResult {
    EventLog log;
    MetricsReport report;
    std::vector<SignalAction> actions;      // every green issued, decision order
    std::vector<DecisionRecord> decisions;  // llm runs only
    HeraldTable table;
    bool used_table = false;
};

// Builds the controller named by the config. Llm controllers push their
// records into `sink`.
std::unique_ptr<Controller> make_controller(const ScenarioConfig &config,
                                            const HeraldTable *table,
                                            std::vector<DecisionRecord> *sink);

// Runs the scenario closed-loop to its horizon. `table` may be null for
// controllers that do not consult it. Weather is applied to the vehicle
// parameters before the engine starts.
RunResult run_closed_loop(const ScenarioConfig &config, const HeraldTable *table);

// Fixed-time probe run on the scenario (same weather and demand), calibrated
// into a HeraldTable.
HeraldTable calibrate_scenario(const ScenarioConfig &config);

// Loads the configured table or calibrates one when the controller needs it.
// Returns false when the run proceeds without a table.
bool prepare_table(const ScenarioConfig &config, HeraldTable &table);

// Critic pass over the flagged records.
std::map<size_t, Correction> correct_flagged(const ScenarioConfig &config,
                                             std::vector<DecisionRecord> &records);

// Full experiment: optional calibration, closed-loop run, critic pass,
// dataset emission, artifact files under out_dir (events.jsonl, report.json,
// metrics.csv; decisions/corpus/preferences JSONL for llm runs).
RunResult run_experiment(const ScenarioConfig &config, const std::string &out_dir);

struct EpisodeSummary {
    int episode = 0;
    MetricsReport report;
    long decisions = 0;
    long flagged = 0;
    long preference_pairs = 0;
    double mean_score_loss = 0.0; // over pairs with log-probabilities; 0 when none
};

struct Algorithm1Result {
    std::vector<EpisodeSummary> episodes;
    std::string summary_path;
};

// Iterated agent/critic data collection: per episode, run the llm
// controller, correct flagged decisions, emit the imitation corpus and
// preference pairs, and report the ranking loss over pairs whose
// log-probabilities are available (from the endpoint or the configured
// fixture). Fine-tuning itself is external.
Algorithm1Result run_algorithm1(const ScenarioConfig &config, int episodes,
                                const std::string &out_dir);

} // namespace herald
