#include "herald/controllers.hpp"

#include <cmath>
#include <future>
#include <stdexcept>

namespace herald {

std::vector<SignalAction> Controller::decide_batch(const std::vector<DecisionInput> &inputs) {
    std::vector<SignalAction> out;
    out.reserve(inputs.size());
    for (const DecisionInput &input : inputs) out.push_back(decide(input));
    return out;
}

SignalAction quantize_action(Phase phase, double duration_s) {
    long secs = std::lround(duration_s);
    secs = std::max(1l, std::min(40l, secs));
    return {phase, static_cast<double>(secs)};
}

SignalAction fixed_time_next(std::optional<Phase> cursor, double green_s) {
    if (!cursor) return {Phase::P1, green_s};
    return {phase_from_index((phase_index(*cursor) + 1) % 4), green_s};
}

SignalAction max_pressure_decide(const std::array<double, 4> &pressures, double green_s) {
    int best = 0;
    for (int i = 1; i < 4; ++i)
        if (pressures[i] > pressures[best]) best = i;
    return {phase_from_index(best), green_s};
}

SignalAction herald_rule_decide(const Observation &obs, const Forecast &forecast,
                                const std::array<DurationCandidates, 4> &candidates,
                                const HeraldTable &table, const PromptConfig &config) {
    auto demands = phase_demands(obs, forecast, candidates, config);
    int best = 0;
    for (int i = 1; i < 4; ++i) {
        if (demands[i].total > demands[best].total ||
            (demands[i].total == demands[best].total &&
             demands[i].imbalance > demands[best].imbalance))
            best = i;
    }
    Phase phase = phase_from_index(best);
    return {phase, herald_duration(obs, phase, table)};
}

std::vector<IntersectionId> schedule_decisions(const Engine &engine, double t) {
    if (t != engine.time()) throw std::invalid_argument("schedule time must match engine time");
    return engine.due_intersections();
}

SignalAction RandomController::decide(const DecisionInput &) {
    Phase phase = phase_from_index(rng_.uniform_int(0, 3));
    return {phase, static_cast<double>(rng_.uniform_int(1, 40))};
}

SignalAction FixedTimeController::decide(const DecisionInput &input) {
    if (!input.obs) throw std::invalid_argument("fixed controller needs an observation");
    auto it = cursor_.find(input.obs->intersection);
    std::optional<Phase> cursor;
    if (it != cursor_.end()) cursor = it->second;
    SignalAction action = fixed_time_next(cursor, green_s_);
    cursor_[input.obs->intersection] = action.phase;
    return action;
}

SignalAction MaxPressureController::decide(const DecisionInput &input) {
    return max_pressure_decide(input.pressures, green_s_);
}

SignalAction HeraldRuleController::decide(const DecisionInput &input) {
    if (!input.obs || !input.forecast || !input.candidates || !input.table)
        throw std::invalid_argument("herald-rule controller needs forecast context");
    SignalAction action = herald_rule_decide(*input.obs, *input.forecast, *input.candidates,
                                             *input.table, config_);
    return quantize_action(action.phase, action.duration_s);
}

SignalAction LlmController::finish(const DecisionInput &input, const std::string &prompt,
                                   const LlmResult &result) {
    SignalAction fallback =
        quantize_action(Phase::P1, kMinDurationS);
    {
        SignalAction rule = herald_rule_decide(*input.obs, *input.forecast, *input.candidates,
                                               *input.table, config_);
        fallback = quantize_action(rule.phase, rule.duration_s);
    }

    DecisionRecord rec;
    rec.sim_time_s = input.time_s;
    rec.intersection = input.obs->intersection;
    rec.prompt = prompt;
    rec.prompt_hash = LlmClient::prompt_hash(prompt);
    rec.fallback_action = fallback;
    rec.demand = snapshot_demands(*input.obs, *input.forecast);

    if (!result.ok) {
        rec.raw_response = "";
        rec.parsed = {ParseStatus::Malformed, {}, result.error};
        rec.flags.insert(HallucinationFlag::TransportFailure);
        rec.executed = fallback;
        rec.fallback_used = true;
    } else {
        rec.raw_response = result.text;
        rec.logprobs = result.token_logprobs;
        rec.parsed = parse_response(result.text);
        rec.flags = detect_hallucination(rec.demand, rec.raw_response, rec.parsed);
        if (rec.parsed.ok()) {
            rec.executed = rec.parsed.action;
        } else {
            rec.executed = fallback;
            rec.fallback_used = true;
        }
    }

    SignalAction executed = rec.executed;
    if (sink_) sink_->push_back(std::move(rec));
    return executed;
}

SignalAction LlmController::decide(const DecisionInput &input) {
    if (!input.obs || !input.forecast || !input.candidates || !input.table)
        throw std::invalid_argument("llm controller needs forecast context");
    std::string prompt = compose_prompt(*input.obs, *input.forecast, *input.candidates, config_);
    return finish(input, prompt, client_->complete(prompt));
}

std::vector<SignalAction> LlmController::decide_batch(const std::vector<DecisionInput> &inputs) {
    const bool parallel = client_->config().mode == EndpointConfig::Mode::Http &&
                          client_->config().max_inflight > 1 && inputs.size() > 1;
    if (!parallel) return Controller::decide_batch(inputs);

    // Fan requests out in bounded waves; responses are consumed in input
    // order so records and actions stay deterministic given the endpoint.
    std::vector<std::string> prompts;
    prompts.reserve(inputs.size());
    for (const DecisionInput &input : inputs) {
        if (!input.obs || !input.forecast || !input.candidates || !input.table)
            throw std::invalid_argument("llm controller needs forecast context");
        prompts.push_back(
            compose_prompt(*input.obs, *input.forecast, *input.candidates, config_));
    }

    std::vector<LlmResult> results(inputs.size());
    const size_t wave = static_cast<size_t>(client_->config().max_inflight);
    for (size_t base = 0; base < inputs.size(); base += wave) {
        size_t end = std::min(inputs.size(), base + wave);
        std::vector<std::future<LlmResult>> futures;
        for (size_t i = base; i < end; ++i) {
            futures.push_back(std::async(std::launch::async, [this, &prompts, i]() {
                return client_->complete(prompts[i]);
            }));
        }
        for (size_t i = base; i < end; ++i) results[i] = futures[i - base].get();
    }

    std::vector<SignalAction> out;
    out.reserve(inputs.size());
    for (size_t i = 0; i < inputs.size(); ++i)
        out.push_back(finish(inputs[i], prompts[i], results[i]));
    return out;
}

} // namespace herald
