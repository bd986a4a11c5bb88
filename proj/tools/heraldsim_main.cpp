#include "herald/config.hpp"
#include "herald/metrics.hpp"
#include "herald/runner.hpp"
#include "herald/util.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

namespace {

using namespace herald;

int cmd_gen_scenario(const std::string &preset, const std::string &out, double horizon,
                     long long seed) {
    ScenarioConfig config = make_preset(preset);
    if (horizon > 0.0) config.horizon_s = horizon;
    if (seed >= 0) config.seed = static_cast<uint64_t>(seed);
    config.save(out);
    std::printf("wrote %s (%dx%d grid, %zu flow entries, horizon %.0f s)\n", out.c_str(),
                config.grid.rows, config.grid.cols, config.flows.size(), config.horizon_s);
    return 0;
}

int cmd_calibrate(const std::string &config_path, const std::string &out) {
    ScenarioConfig config = ScenarioConfig::load(config_path);
    HeraldTable table = calibrate_scenario(config);
    table.save(out);
    std::printf("wrote %s (%zu knots, tau %.3f s, max speed %.2f m/s)\n", out.c_str(),
                table.knots.size(), table.tau_s, table.v_max_observed_mps);
    return 0;
}

void apply_overrides(ScenarioConfig &config, const std::string &controller, long long seed,
                     const std::string &weather, const std::string &replay) {
    if (!controller.empty()) config.controller.kind = controller;
    if (seed >= 0) config.seed = static_cast<uint64_t>(seed);
    if (!weather.empty()) {
        auto profile = WeatherProfile::named(weather);
        if (!profile) throw ConfigError("unknown weather profile: " + weather);
        config.weather = *profile;
    }
    if (!replay.empty()) {
        config.llm.agent.mode = EndpointConfig::Mode::Replay;
        config.llm.agent.replay_path = replay;
        if (!config.llm.critic_configured) {
            config.llm.critic = config.llm.agent;
            config.llm.critic_configured = true;
        }
    }
    config.validate();
}

int cmd_run(const std::string &config_path, const std::string &controller, long long seed,
            const std::string &weather, const std::string &replay, const std::string &out_dir,
            int episodes) {
    ScenarioConfig config = ScenarioConfig::load(config_path);
    apply_overrides(config, controller, seed, weather, replay);

    if (config.controller.kind == "llm" && episodes > 1) {
        Algorithm1Result result = run_algorithm1(config, episodes, out_dir);
        for (const EpisodeSummary &ep : result.episodes) {
            std::printf("episode %d: ATT %.2f s, decisions %ld, flagged %ld, pairs %ld, "
                        "mean L_score %.4f\n",
                        ep.episode, ep.report.att_s, ep.decisions, ep.flagged,
                        ep.preference_pairs, ep.mean_score_loss);
        }
        std::printf("wrote %s\n", result.summary_path.c_str());
        return 0;
    }

    RunResult result = run_experiment(config, out_dir);
    const MetricsReport &rep = result.report;
    std::printf("%s | %s | seed %llu | ATT %.2f s | AQL %.2f veh (%.2f m) | AWT %.2f s\n",
                rep.scenario.c_str(), rep.controller.c_str(),
                static_cast<unsigned long long>(rep.seed), rep.att_s, rep.aql_veh, rep.aql_m,
                rep.awt_s);
    if (rep.decisions > 0)
        std::printf("llm decisions %ld, hallucinations %ld (%.3f%%)\n", rep.decisions,
                    rep.hallucinations, 100.0 * rep.hallucination_rate);
    std::printf("artifacts in %s\n", out_dir.c_str());
    return 0;
}

int cmd_report(const std::string &log_path, const std::string &out, double horizon) {
    EventLog log = EventLog::load(log_path);
    double h = horizon;
    if (h <= 0.0) {
        log.for_each([&](const json &rec) {
            if (rec.at("ev") == "meta") h = rec.at("horizon").get<double>();
        });
    }
    if (h <= 0.0) throw ConfigError("no horizon in log; pass --horizon");
    MetricsReport rep = compute_metrics(log, h);
    write_file_atomic(out, rep.to_json().dump(2) + "\n");
    std::printf("wrote %s (ATT %.2f s over %ld vehicles)\n", out.c_str(), rep.att_s,
                rep.vehicles_spawned);
    return 0;
}

int cmd_dataset(const std::string &decisions_path, const std::string &out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    EventLog lines = EventLog::load(decisions_path);
    std::vector<DecisionRecord> records;
    std::map<size_t, Correction> corrections;
    lines.for_each([&](const json &row) {
        if (row.contains("schema")) {
            if (row["schema"] != "herald-decisions/1")
                throw ConfigError("unsupported decisions schema");
            return;
        }
        size_t idx = records.size();
        records.push_back(DecisionRecord::from_json(row));
        if (row.contains("correction") && !row["correction"].is_null())
            corrections.emplace(idx, Correction::from_json(row["correction"]));
    });
    std::string corpus = (fs::path(out_dir) / "corpus.jsonl").string();
    std::string prefs = (fs::path(out_dir) / "preferences.jsonl").string();
    DatasetSummary summary = emit_datasets(records, corrections, corpus, prefs);
    std::printf("wrote %s (%ld rows) and %s (%ld rows)\n", corpus.c_str(), summary.corpus_rows,
                prefs.c_str(), summary.preference_rows);
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"heraldsim: grid traffic-signal control experiments"};
    app.require_subcommand(1);

    std::string preset = "jn-like", out = "scenario.json";
    double horizon = 0.0;
    long long seed = -1;
    auto *gen = app.add_subcommand("gen-scenario", "emit a scenario config for a named preset");
    gen->add_option("--preset", preset, "jn-like | hz-like | ny-like");
    gen->add_option("--out", out, "output config path");
    gen->add_option("--horizon", horizon, "override horizon seconds");
    gen->add_option("--seed", seed, "override seed");

    std::string config_path, table_out = "table.json";
    auto *cal = app.add_subcommand("calibrate", "probe the scenario and emit a herald table");
    cal->add_option("--config", config_path, "scenario config path")->required();
    cal->add_option("--out", table_out, "output table path");

    std::string controller, weather, replay, out_dir = "out";
    int episodes = 1;
    auto *run = app.add_subcommand("run", "run a scenario and write artifacts");
    run->add_option("--config", config_path, "scenario config path")->required();
    run->add_option("--controller", controller, "random|fixed|max-pressure|herald-rule|llm");
    run->add_option("--seed", seed, "override seed");
    run->add_option("--weather", weather, "base | extreme");
    run->add_option("--replay", replay, "agent replay file (forces replay mode)");
    run->add_option("--out", out_dir, "artifact directory");
    run->add_option("--episodes", episodes, "llm episodes (iterated agent/critic collection)");

    std::string log_path, report_out = "report.json";
    double report_horizon = 0.0;
    auto *rep = app.add_subcommand("report", "re-render report.json from an event log");
    rep->add_option("--log", log_path, "events.jsonl path")->required();
    rep->add_option("--out", report_out, "output report path");
    rep->add_option("--horizon", report_horizon, "override horizon seconds");

    std::string decisions_path, dataset_dir = "dataset";
    auto *ds = app.add_subcommand("dataset", "re-emit corpus/preference JSONL from decisions");
    ds->add_option("--decisions", decisions_path, "decisions.jsonl path")->required();
    ds->add_option("--out-dir", dataset_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_scenario(preset, out, horizon, seed);
        if (cal->parsed()) return cmd_calibrate(config_path, table_out);
        if (run->parsed())
            return cmd_run(config_path, controller, seed, weather, replay, out_dir, episodes);
        if (rep->parsed()) return cmd_report(log_path, report_out, report_horizon);
        if (ds->parsed()) return cmd_dataset(decisions_path, dataset_dir);
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
