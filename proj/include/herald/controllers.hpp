#pragma once

#include "herald/critic.hpp"
#include "herald/herald.hpp"
#include "herald/llm_client.hpp"
#include "herald/obs.hpp"
#include "herald/prompt.hpp"
#include "herald/rng.hpp"
#include "herald/sim.hpp"

#include <map>
#include <memory>
#include <string_view>
#include <vector>

namespace herald {

// Everything a controller may consult at one decision epoch. Forecast,
// candidates and table are present only when the run carries a HeraldTable.
struct DecisionInput {
    double time_s = 0.0;
    const Observation *obs = nullptr;
    const Forecast *forecast = nullptr;
    const std::array<DurationCandidates, 4> *candidates = nullptr;
    const HeraldTable *table = nullptr;
    std::array<double, 4> pressures{};
};

class Controller {
public:
    virtual ~Controller() = default;
    virtual std::string_view kind() const = 0;
    virtual SignalAction decide(const DecisionInput &input) = 0;

    // Decisions for the intersections due at one tick, inputs ascending by
    // id. The base implementation decides sequentially; the llm controller
    // overrides it to fan requests out.
    virtual std::vector<SignalAction> decide_batch(const std::vector<DecisionInput> &inputs);
};

// Rounds a duration to whole seconds in [1, 40]; controllers emit 1 s
// granularity.
SignalAction quantize_action(Phase phase, double duration_s);

// Next action of the fixed cycle P1 -> P2 -> P3 -> P4 -> P1; a fresh cursor
// starts at P1.
SignalAction fixed_time_next(std::optional<Phase> cursor, double green_s = 30.0);

// Phase with the largest pressure, ties to the lowest index; fixed green.
SignalAction max_pressure_decide(const std::array<double, 4> &pressures, double green_s = 20.0);

// Demand-driven rule: phase = argmax Q_i over the per-phase demands (Herald
// source unless the fall-back fires), ties broken by larger I_i then lower
// index; duration = herald_duration for the chosen phase (real seconds,
// caller quantizes).
SignalAction herald_rule_decide(const Observation &obs, const Forecast &forecast,
                                const std::array<DurationCandidates, 4> &candidates,
                                const HeraldTable &table, const PromptConfig &config = {});

// Intersections due for a decision at time t, ascending id.
std::vector<IntersectionId> schedule_decisions(const Engine &engine, double t);

class RandomController : public Controller {
public:
    explicit RandomController(uint64_t seed) : rng_(Rng::stream(seed, "controller/random")) {}
    std::string_view kind() const override { return "random"; }
    SignalAction decide(const DecisionInput &input) override;

private:
    Rng rng_;
};

class FixedTimeController : public Controller {
public:
    explicit FixedTimeController(double green_s = 30.0) : green_s_(green_s) {}
    std::string_view kind() const override { return "fixed"; }
    SignalAction decide(const DecisionInput &input) override;

private:
    double green_s_;
    std::map<IntersectionId, Phase> cursor_;
};

class MaxPressureController : public Controller {
public:
    explicit MaxPressureController(double green_s = 20.0) : green_s_(green_s) {}
    std::string_view kind() const override { return "max-pressure"; }
    SignalAction decide(const DecisionInput &input) override;

private:
    double green_s_;
};

class HeraldRuleController : public Controller {
public:
    explicit HeraldRuleController(PromptConfig config = {}) : config_(config) {}
    std::string_view kind() const override { return "herald-rule"; }
    SignalAction decide(const DecisionInput &input) override;

private:
    PromptConfig config_;
};

// LLM-backed controller. Every decision produces a DecisionRecord in `sink`;
// transport and parse failures fall back to the herald rule so runs always
// complete.
class LlmController : public Controller {
public:
    LlmController(std::shared_ptr<LlmClient> client, PromptConfig config,
                  std::vector<DecisionRecord> *sink)
        : client_(std::move(client)), config_(config), sink_(sink) {}

    std::string_view kind() const override { return "llm"; }
    SignalAction decide(const DecisionInput &input) override;
    std::vector<SignalAction> decide_batch(const std::vector<DecisionInput> &inputs) override;

private:
    SignalAction finish(const DecisionInput &input, const std::string &prompt,
                        const LlmResult &result);

    std::shared_ptr<LlmClient> client_;
    PromptConfig config_;
    std::vector<DecisionRecord> *sink_;
};

} // namespace herald
