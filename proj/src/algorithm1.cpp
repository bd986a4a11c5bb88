#include "herald/runner.hpp"

#include "herald/util.hpp"

#include <filesystem>

namespace herald {

namespace {

struct LogprobFixture {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_hash;

    static LogprobFixture load(const std::string &path) {
        LogprobFixture fx;
        if (path.empty()) return fx;
        EventLog lines = EventLog::load(path);
        lines.for_each([&](const json &row) {
            std::vector<double> a1, a2;
            for (const auto &v : row.at("a1")) a1.push_back(v.get<double>());
            for (const auto &v : row.at("a2")) a2.push_back(v.get<double>());
            fx.by_hash[row.at("prompt_hash").get<std::string>()] = {std::move(a1), std::move(a2)};
        });
        return fx;
    }
};

} // namespace

Algorithm1Result run_algorithm1(const ScenarioConfig &config, int episodes,
                                const std::string &out_dir) {
    if (config.controller.kind != "llm")
        throw ConfigError("run_algorithm1 requires the llm controller");
    if (episodes < 1) throw ConfigError("episodes must be >= 1");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    HeraldTable table;
    if (!config.herald.table_path.empty()) table = HeraldTable::load(config.herald.table_path);
    else table = calibrate_scenario(config);

    LogprobFixture fixture = LogprobFixture::load(config.llm.logprob_fixture);

    Algorithm1Result result;
    json summary;
    summary["schema"] = "herald-algorithm1/1";
    summary["episodes"] = json::array();

    for (int ep = 0; ep < episodes; ++ep) {
        ScenarioConfig episode_config = config;
        episode_config.seed = config.seed + static_cast<uint64_t>(ep);

        RunResult run = run_closed_loop(episode_config, &table);
        auto corrections = correct_flagged(episode_config, run.decisions);

        std::string tag = "episode_" + std::to_string(ep);
        auto at = [&](const std::string &suffix) {
            return (fs::path(out_dir) / (tag + suffix)).string();
        };
        DatasetOptions opts;
        opts.q_error = config.llm.q_error;
        opts.q_corrected = config.llm.q_corrected;
        DatasetSummary emitted = emit_datasets(run.decisions, corrections, at("_corpus.jsonl"),
                                               at("_preferences.jsonl"), opts);
        run.log.save(at("_events.jsonl"));

        // Ranking loss over pairs whose log-probabilities are available,
        // either captured from the endpoints or supplied by the fixture.
        double loss_sum = 0.0;
        long loss_pairs = 0;
        for (const auto &[idx, corr] : corrections) {
            const DecisionRecord &rec = run.decisions[idx];
            std::vector<double> a1 = rec.logprobs;
            std::vector<double> a2 = corr.logprobs;
            auto fx = fixture.by_hash.find(rec.prompt_hash);
            if (fx != fixture.by_hash.end()) {
                a1 = fx->second.first;
                a2 = fx->second.second;
            }
            if (a1.empty() || a2.empty()) continue;
            std::vector<ScoredTrajectory> pair = {
                {config.llm.q_error, mean_log_likelihood(a1)},
                {config.llm.q_corrected, mean_log_likelihood(a2)},
            };
            loss_sum += score_loss(pair, config.llm.beta);
            loss_pairs += 1;
        }

        EpisodeSummary es;
        es.episode = ep;
        es.report = run.report;
        es.decisions = static_cast<long>(run.decisions.size());
        es.flagged = static_cast<long>(corrections.size());
        es.preference_pairs = emitted.preference_rows;
        es.mean_score_loss = loss_pairs > 0 ? loss_sum / static_cast<double>(loss_pairs) : 0.0;
        result.episodes.push_back(es);

        summary["episodes"].push_back({{"episode", ep},
                                       {"att_s", es.report.att_s},
                                       {"aql_veh", es.report.aql_veh},
                                       {"awt_s", es.report.awt_s},
                                       {"decisions", es.decisions},
                                       {"flagged", es.flagged},
                                       {"preference_pairs", es.preference_pairs},
                                       {"hallucination_rate", es.report.hallucination_rate},
                                       {"mean_score_loss", es.mean_score_loss}});
    }

    result.summary_path = (fs::path(out_dir) / "algorithm1_summary.json").string();
    write_file_atomic(result.summary_path, summary.dump(2) + "\n");
    return result;
}

} // namespace herald
