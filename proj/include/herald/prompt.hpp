#pragma once

#include "herald/herald.hpp"
#include "herald/obs.hpp"
#include "herald/types.hpp"

#include <array>
#include <string>

namespace herald {

// Total demand for a phase: sum of its lane queues, or the larger lane when
// exactly one is empty.
double phase_demand(double q1, double q2);

// Absolute lane-queue difference.
double lane_imbalance(double q1, double q2);

// Demand figures for one phase under the queue source chosen for it.
struct PhaseDemand {
    double q1 = 0.0;
    double q2 = 0.0;
    double total = 0.0;     // Q_i
    double imbalance = 0.0; // I_i
    QueueSource source = QueueSource::Herald;
};

// Per-phase Q under both sources; feeds coherence checks without re-parsing
// prompt text.
struct DemandSnapshot {
    std::array<double, 4> herald_q{};
    std::array<double, 4> original_q{};
};

DemandSnapshot snapshot_demands(const Observation &obs, const Forecast &forecast);

struct PromptConfig {
    // Predicted imbalance above this multiple of the measured one triggers
    // the fall-back to the Original source.
    double imbalance_factor = 2.0;
};

// Demands with the fall-back applied per phase: the Herald source is used
// unless its implied duration exceeds 40 s pre-clamp or its imbalance is
// excessive relative to the measurement.
std::array<PhaseDemand, 4> phase_demands(const Observation &obs, const Forecast &forecast,
                                         const std::array<DurationCandidates, 4> &candidates,
                                         const PromptConfig &config = {});

// The six prompt blocks in render order.
struct PromptBlocks {
    std::string intersection;
    std::string task;
    std::string details;
    std::string requirements;
    std::string rules;
    std::string important;
};

PromptBlocks build_prompt_blocks(const Observation &obs, const Forecast &forecast,
                                 const std::array<DurationCandidates, 4> &candidates,
                                 const PromptConfig &config = {});

// Renders the full decision prompt. Pure: identical inputs produce identical
// text. Throws std::invalid_argument when the observation does not cover all
// four phases.
std::string compose_prompt(const Observation &obs, const Forecast &forecast,
                           const std::array<DurationCandidates, 4> &candidates,
                           const PromptConfig &config = {});

enum class ParseStatus { Ok, Malformed, InvalidPhase, ConstraintViolation };

std::string_view parse_status_name(ParseStatus s);

struct ParseResult {
    ParseStatus status = ParseStatus::Malformed;
    SignalAction action{};
    std::string detail;

    bool ok() const { return status == ParseStatus::Ok; }
};

// Extracts the <signal>/<duration> tag pair from an agent response. Lenient
// to surrounding prose, strict on tag contents: the token must match a phase
// exactly and the duration must be a plain integer in (0, 40].
ParseResult parse_response(const std::string &text);

// Renders an action in the response schema, duration at 1 s granularity.
std::string render_action(const SignalAction &action);

} // namespace herald
