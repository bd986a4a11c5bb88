#include "herald/critic.hpp"

#include "herald/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace herald {

std::string_view flag_name(HallucinationFlag f) {
    switch (f) {
    case HallucinationFlag::Malformed: return "malformed";
    case HallucinationFlag::InvalidPhase: return "invalid-phase";
    case HallucinationFlag::ConstraintViolation: return "constraint-violation";
    case HallucinationFlag::Repetitive: return "repetitive";
    case HallucinationFlag::Incoherent: return "incoherent";
    case HallucinationFlag::TransportFailure: return "transport-failure";
    }
    return "malformed";
}

namespace {

json action_to_json(const SignalAction &a) {
    return {{"phase", std::string(phase_name(a.phase))}, {"duration_s", a.duration_s}};
}

SignalAction action_from_json(const json &j) {
    auto phase = phase_from_name(j.at("phase").get<std::string>());
    if (!phase) throw ConfigError("bad phase in record");
    return {*phase, j.at("duration_s").get<double>()};
}

json parse_to_json(const ParseResult &p) {
    json j;
    j["status"] = std::string(parse_status_name(p.status));
    if (p.ok()) {
        j["phase"] = std::string(phase_name(p.action.phase));
        j["duration_s"] = p.action.duration_s;
    } else {
        j["detail"] = p.detail;
    }
    return j;
}

ParseResult parse_from_json(const json &j) {
    ParseResult p;
    std::string status = j.at("status");
    if (status == "ok") {
        p.status = ParseStatus::Ok;
        auto phase = phase_from_name(j.at("phase").get<std::string>());
        if (!phase) throw ConfigError("bad phase in parse record");
        p.action = {*phase, j.at("duration_s").get<double>()};
    } else {
        if (status == "malformed") p.status = ParseStatus::Malformed;
        else if (status == "invalid-phase") p.status = ParseStatus::InvalidPhase;
        else if (status == "constraint-violation") p.status = ParseStatus::ConstraintViolation;
        else throw ConfigError("bad parse status: " + status);
        p.detail = j.value("detail", "");
    }
    return p;
}

std::optional<HallucinationFlag> flag_from_name(std::string_view name) {
    for (HallucinationFlag f :
         {HallucinationFlag::Malformed, HallucinationFlag::InvalidPhase,
          HallucinationFlag::ConstraintViolation, HallucinationFlag::Repetitive,
          HallucinationFlag::Incoherent, HallucinationFlag::TransportFailure})
        if (flag_name(f) == name) return f;
    return std::nullopt;
}

// A 20+ character substring repeated at least 3 consecutive times. Valid
// schema responses are too short to enter the scan.
bool has_repetition(const std::string &s) {
    const size_t n = std::min<size_t>(s.size(), 4096);
    for (size_t len = 20; len * 3 <= n; ++len) {
        for (size_t i = 0; i + 3 * len <= n; ++i) {
            if (std::memcmp(s.data() + i, s.data() + i + len, len) == 0 &&
                std::memcmp(s.data() + i, s.data() + i + 2 * len, len) == 0)
                return true;
        }
    }
    return false;
}

} // namespace

json DecisionRecord::to_json() const {
    json j;
    j["time"] = sim_time_s;
    j["intersection"] = intersection;
    j["prompt"] = prompt;
    j["prompt_hash"] = prompt_hash;
    j["raw_response"] = raw_response;
    j["parsed"] = parse_to_json(parsed);
    j["executed"] = action_to_json(executed);
    j["fallback_used"] = fallback_used;
    j["fallback"] = action_to_json(fallback_action);
    j["flags"] = json::array();
    for (HallucinationFlag f : flags) j["flags"].push_back(std::string(flag_name(f)));
    j["demand"] = {{"herald", demand.herald_q}, {"original", demand.original_q}};
    if (!logprobs.empty()) j["logprobs"] = logprobs;
    return j;
}

DecisionRecord DecisionRecord::from_json(const json &j) {
    DecisionRecord r;
    r.sim_time_s = j.at("time");
    r.intersection = j.at("intersection");
    r.prompt = j.at("prompt");
    r.prompt_hash = j.at("prompt_hash");
    r.raw_response = j.at("raw_response");
    r.parsed = parse_from_json(j.at("parsed"));
    r.executed = action_from_json(j.at("executed"));
    r.fallback_used = j.at("fallback_used");
    r.fallback_action = action_from_json(j.at("fallback"));
    for (const auto &name : j.at("flags")) {
        auto f = flag_from_name(name.get<std::string>());
        if (!f) throw ConfigError("bad flag name in record");
        r.flags.insert(*f);
    }
    for (int i = 0; i < 4; ++i) {
        r.demand.herald_q[i] = j.at("demand").at("herald").at(i);
        r.demand.original_q[i] = j.at("demand").at("original").at(i);
    }
    if (j.contains("logprobs"))
        for (const auto &lp : j["logprobs"]) r.logprobs.push_back(lp.get<double>());
    return r;
}

FlagSet detect_hallucination(const DemandSnapshot &demand, const std::string &raw_response,
                             const ParseResult &parsed) {
    FlagSet flags;
    switch (parsed.status) {
    case ParseStatus::Malformed: flags.insert(HallucinationFlag::Malformed); break;
    case ParseStatus::InvalidPhase: flags.insert(HallucinationFlag::InvalidPhase); break;
    case ParseStatus::ConstraintViolation:
        flags.insert(HallucinationFlag::ConstraintViolation);
        break;
    case ParseStatus::Ok: break;
    }
    if (has_repetition(raw_response)) flags.insert(HallucinationFlag::Repetitive);
    if (parsed.ok()) {
        int chosen = phase_index(parsed.action.phase);
        bool chosen_empty = demand.herald_q[chosen] == 0.0 && demand.original_q[chosen] == 0.0;
        bool other_busy = false;
        for (int i = 0; i < 4; ++i)
            if (i != chosen && demand.herald_q[i] > 0.0 && demand.original_q[i] > 0.0)
                other_busy = true;
        if (chosen_empty && other_busy) flags.insert(HallucinationFlag::Incoherent);
    }
    return flags;
}

double mean_log_likelihood(const std::vector<double> &token_logprobs) {
    if (token_logprobs.empty())
        throw std::invalid_argument("mean_log_likelihood needs at least one token");
    double sum = 0.0;
    for (double lp : token_logprobs) sum += lp;
    return sum / static_cast<double>(token_logprobs.size());
}

double score_loss(const std::vector<ScoredTrajectory> &trajectories, double beta) {
    if (trajectories.empty()) throw std::invalid_argument("score_loss needs >= 1 trajectory");
    const size_t n = trajectories.size();
    double sum = 0.0;
    for (size_t j = 0; j < n; ++j) {
        // Least favorable higher-rated path for this j.
        double p_star = std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < n; ++k)
            if (trajectories[k].quality > trajectories[j].quality)
                p_star = std::min(p_star, trajectories[k].log_likelihood);
        for (size_t i = 0; i < n; ++i) {
            if (!(trajectories[i].quality > trajectories[j].quality)) continue;
            double pi = trajectories[i].log_likelihood;
            double pj = trajectories[j].log_likelihood;
            sum += std::exp(pj - pi) + std::exp(2.0 * p_star - 2.0 * beta - pi - pj);
        }
    }
    return std::log1p(sum);
}

std::string correction_prompt(const DecisionRecord &record) {
    std::string flags;
    for (HallucinationFlag f : record.flags) {
        if (!flags.empty()) flags += ", ";
        flags += flag_name(f);
    }
    std::string shown = record.raw_response.empty() ? "(no response)" : record.raw_response;
    return record.prompt +
           "\n### Review\nA previous reply to the prompt above was rejected (" + flags +
           "). The reply was:\n" + shown +
           "\nProvide a corrected reply that satisfies the Requirements, Rules and Important "
           "blocks. Output only the two tags.\n";
}

Correction request_correction(LlmClient &critic, const DecisionRecord &record,
                              const CorrectionOptions &options) {
    std::string prompt = correction_prompt(record);
    Correction corr;
    for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
        corr.attempts = attempt;
        LlmResult res = critic.complete(prompt);
        if (!res.ok) continue;
        ParseResult parsed = parse_response(res.text);
        if (!parsed.ok()) continue;
        if (!detect_hallucination(record.demand, res.text, parsed).empty()) continue;
        corr.text = res.text;
        corr.action = parsed.action;
        corr.logprobs = res.token_logprobs;
        return corr;
    }
    corr.synthetic = true;
    corr.action = record.fallback_action;
    corr.text = render_action(corr.action);
    return corr;
}

json Correction::to_json() const {
    json j;
    j["text"] = text;
    j["action"] = action_to_json(action);
    j["synthetic"] = synthetic;
    j["attempts"] = attempts;
    if (!logprobs.empty()) j["logprobs"] = logprobs;
    return j;
}

Correction Correction::from_json(const json &j) {
    Correction c;
    c.text = j.at("text");
    c.action = action_from_json(j.at("action"));
    c.synthetic = j.at("synthetic");
    c.attempts = j.at("attempts");
    if (j.contains("logprobs"))
        for (const auto &lp : j["logprobs"]) c.logprobs.push_back(lp.get<double>());
    return c;
}

DatasetSummary emit_datasets(const std::vector<DecisionRecord> &records,
                             const std::map<size_t, Correction> &corrections,
                             const std::string &corpus_path, const std::string &preferences_path,
                             const DatasetOptions &options) {
    if (!(options.q_corrected > options.q_error))
        throw std::invalid_argument("q_corrected must exceed q_error");

    std::vector<size_t> order(records.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (records[a].sim_time_s != records[b].sim_time_s)
            return records[a].sim_time_s < records[b].sim_time_s;
        return records[a].intersection < records[b].intersection;
    });

    DatasetSummary summary;
    std::string corpus = json({{"schema", "herald-corpus/1"}}).dump() + "\n";
    std::string prefs = json({{"schema", "herald-preferences/1"}}).dump() + "\n";

    for (size_t idx : order) {
        const DecisionRecord &rec = records[idx];
        json row;
        row["time"] = rec.sim_time_s;
        row["intersection"] = rec.intersection;
        row["prompt"] = rec.prompt;
        row["raw_response"] = rec.raw_response;
        row["parsed"] = parse_to_json(rec.parsed);
        row["executed"] = action_to_json(rec.executed);
        row["flags"] = json::array();
        for (HallucinationFlag f : rec.flags) row["flags"].push_back(std::string(flag_name(f)));
        corpus += row.dump() + "\n";
        summary.corpus_rows += 1;

        auto corr = corrections.find(idx);
        if (!rec.flagged() || corr == corrections.end()) continue;
        json pref;
        pref["time"] = rec.sim_time_s;
        pref["intersection"] = rec.intersection;
        pref["prompt"] = rec.prompt;
        pref["a1"] = rec.raw_response;
        pref["a2"] = corr->second.text;
        pref["q1"] = options.q_error;
        pref["q2"] = options.q_corrected;
        pref["synthetic"] = corr->second.synthetic;
        if (!rec.logprobs.empty() && !corr->second.logprobs.empty())
            pref["logprobs"] = {{"a1", rec.logprobs}, {"a2", corr->second.logprobs}};
        prefs += pref.dump() + "\n";
        summary.preference_rows += 1;
    }

    write_file_atomic(corpus_path, corpus);
    write_file_atomic(preferences_path, prefs);
    return summary;
}

} // namespace herald
