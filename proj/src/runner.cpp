#include "herald/runner.hpp"

#include "herald/util.hpp"

#include <filesystem>
#include <stdexcept>

namespace herald {

std::unique_ptr<Controller> make_controller(const ScenarioConfig &config,
                                            const HeraldTable *table,
                                            std::vector<DecisionRecord> *sink) {
    const std::string &kind = config.controller.kind;
    if (kind == "random") return std::make_unique<RandomController>(config.seed);
    if (kind == "fixed") {
        double green = config.controller.green_s > 0.0 ? config.controller.green_s : 30.0;
        return std::make_unique<FixedTimeController>(green);
    }
    if (kind == "max-pressure") {
        double green = config.controller.green_s > 0.0 ? config.controller.green_s : 20.0;
        return std::make_unique<MaxPressureController>(green);
    }
    PromptConfig pc;
    pc.imbalance_factor = config.herald.imbalance_factor;
    if (kind == "herald-rule") return std::make_unique<HeraldRuleController>(pc);
    if (kind == "llm") {
        if (!table) throw ConfigError("llm controller requires a herald table");
        auto client = std::make_shared<LlmClient>(config.llm.agent);
        return std::make_unique<LlmController>(std::move(client), pc, sink);
    }
    throw ConfigError("unknown controller kind: " + kind);
}

RunResult run_closed_loop(const ScenarioConfig &config, const HeraldTable *table) {
    config.validate();
    Network net = build_grid_network(config.grid.rows, config.grid.cols,
                                     config.grid.segment_length_m, config.vehicle);
    VehicleParams params = apply_weather(config.vehicle, config.weather);

    // The meta record carries everything `report` needs to re-render.
    EngineOptions opts;
    opts.horizon_s = config.horizon_s;
    opts.scenario_name = config.name;
    opts.controller_name = config.controller.kind;
    opts.weather_name = config.weather.name;
    opts.vehicle_space_m = config.vehicle_space_m;
    Engine engine(std::move(net), params, config.flows, config.seed, opts);

    RunResult result;
    if (table) {
        result.table = *table;
        result.used_table = true;
    }
    std::unique_ptr<Controller> controller = make_controller(config, table, &result.decisions);
    const bool needs_context = config.controller.kind == "herald-rule" ||
                               config.controller.kind == "llm";
    const bool is_llm = config.controller.kind == "llm";

    while (engine.time() < config.horizon_s) {
        std::vector<IntersectionId> due = engine.due_intersections();
        if (!due.empty()) {
            std::vector<Observation> observations;
            std::vector<Forecast> forecasts;
            std::vector<std::array<DurationCandidates, 4>> candidates;
            observations.reserve(due.size());
            std::vector<DecisionInput> inputs(due.size());
            for (size_t i = 0; i < due.size(); ++i)
                observations.push_back(engine.observe(due[i]));
            if (needs_context) {
                forecasts.reserve(due.size());
                candidates.reserve(due.size());
                for (size_t i = 0; i < due.size(); ++i) {
                    forecasts.push_back(
                        forecast_queues(observations[i], config.herald.forecast_horizon_s));
                    candidates.push_back(
                        duration_candidates(observations[i], forecasts[i], *table));
                }
            }
            for (size_t i = 0; i < due.size(); ++i) {
                inputs[i].time_s = engine.time();
                inputs[i].obs = &observations[i];
                inputs[i].pressures = engine.phase_pressures(due[i]);
                if (needs_context) {
                    inputs[i].forecast = &forecasts[i];
                    inputs[i].candidates = &candidates[i];
                    inputs[i].table = table;
                }
            }
            size_t records_before = result.decisions.size();
            std::vector<SignalAction> actions = controller->decide_batch(inputs);
            for (size_t i = 0; i < due.size(); ++i) {
                ActionCheck check = engine.apply_signal(due[i], actions[i]);
                if (!check.ok)
                    throw std::runtime_error("controller produced invalid action: " +
                                             check.reason);
                result.actions.push_back(actions[i]);
            }
            if (is_llm) {
                for (size_t r = records_before; r < result.decisions.size(); ++r) {
                    const DecisionRecord &rec = result.decisions[r];
                    json flags = json::array();
                    for (HallucinationFlag f : rec.flags)
                        flags.push_back(std::string(flag_name(f)));
                    engine.log().emit({{"ev", "llm"},
                                       {"t", static_cast<long>(rec.sim_time_s)},
                                       {"int", rec.intersection},
                                       {"flags", flags},
                                       {"fallback", rec.fallback_used}});
                }
            }
        }
        engine.step();
    }
    engine.finalize();

    result.log = engine.log();
    result.report = compute_metrics(result.log, config.horizon_s);
    result.report.scenario = config.name;
    result.report.controller = config.controller.kind;
    result.report.seed = config.seed;
    return result;
}

HeraldTable calibrate_scenario(const ScenarioConfig &config) {
    ScenarioConfig probe = config;
    probe.controller = {"fixed", 30.0};
    probe.horizon_s = std::min(config.horizon_s, config.herald.calibration_horizon_s);
    probe.name = config.name + "-probe";
    RunResult run = run_closed_loop(probe, nullptr);
    CalibrationOptions opts;
    opts.delta_s = config.herald.delta_s;
    opts.rules = config.herald.rules;
    return calibrate(run.log, opts);
}

bool prepare_table(const ScenarioConfig &config, HeraldTable &table) {
    const std::string &kind = config.controller.kind;
    if (kind != "herald-rule" && kind != "llm") return false;
    if (!config.herald.table_path.empty()) {
        table = HeraldTable::load(config.herald.table_path);
        return true;
    }
    table = calibrate_scenario(config);
    return true;
}

std::map<size_t, Correction> correct_flagged(const ScenarioConfig &config,
                                             std::vector<DecisionRecord> &records) {
    std::map<size_t, Correction> corrections;
    const EndpointConfig &endpoint =
        config.llm.critic_configured ? config.llm.critic : config.llm.agent;
    LlmClient critic(endpoint);
    CorrectionOptions opts;
    opts.max_attempts = config.llm.max_correction_attempts;
    for (size_t i = 0; i < records.size(); ++i) {
        if (!records[i].flagged()) continue;
        corrections.emplace(i, request_correction(critic, records[i], opts));
    }
    return corrections;
}

namespace {

void write_decisions(const std::vector<DecisionRecord> &records,
                     const std::map<size_t, Correction> &corrections, const std::string &path) {
    std::string out = json({{"schema", "herald-decisions/1"}}).dump() + "\n";
    for (size_t i = 0; i < records.size(); ++i) {
        json row = records[i].to_json();
        auto it = corrections.find(i);
        row["correction"] = it == corrections.end() ? json(nullptr) : it->second.to_json();
        out += row.dump() + "\n";
    }
    write_file_atomic(path, out);
}

} // namespace

RunResult run_experiment(const ScenarioConfig &config, const std::string &out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto at = [&](const std::string &file) { return (fs::path(out_dir) / file).string(); };

    HeraldTable table;
    bool with_table = prepare_table(config, table);
    if (with_table && config.herald.table_path.empty()) table.save(at("table.json"));

    RunResult result = run_closed_loop(config, with_table ? &table : nullptr);

    if (config.controller.kind == "llm") {
        auto corrections = correct_flagged(config, result.decisions);
        write_decisions(result.decisions, corrections, at("decisions.jsonl"));
        DatasetOptions opts;
        opts.q_error = config.llm.q_error;
        opts.q_corrected = config.llm.q_corrected;
        emit_datasets(result.decisions, corrections, at("corpus.jsonl"),
                      at("preferences.jsonl"), opts);
    }

    result.log.save(at("events.jsonl"));
    write_file_atomic(at("report.json"), result.report.to_json().dump(2) + "\n");
    write_file_atomic(at("metrics.csv"),
                      MetricsReport::csv_header() + "\n" + result.report.csv_row() + "\n");
    return result;
}

} // namespace herald
