#pragma once

#include "herald/llm_client.hpp"
#include "herald/prompt.hpp"
#include "herald/types.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace herald {

enum class HallucinationFlag {
    Malformed,
    InvalidPhase,
    ConstraintViolation,
    Repetitive,
    Incoherent,
    TransportFailure,
};

std::string_view flag_name(HallucinationFlag f);

using FlagSet = std::set<HallucinationFlag>;

// One agent interaction: the prompt, what came back, what was executed, and
// why it was (or was not) flagged.
struct DecisionRecord {
    double sim_time_s = 0.0;
    IntersectionId intersection = 0;
    std::string prompt;
    std::string prompt_hash;
    std::string raw_response;
    ParseResult parsed;
    SignalAction executed{};
    bool fallback_used = false;
    SignalAction fallback_action{}; // rule decision at the same epoch
    FlagSet flags;
    DemandSnapshot demand;
    std::vector<double> logprobs; // agent response token log-probabilities

    bool flagged() const { return !flags.empty(); }

    json to_json() const;
    static DecisionRecord from_json(const json &j);
};

// Content rules applied to every agent response:
//  - parse failures map to malformed / invalid-phase / constraint-violation;
//  - repetitive: some substring of 20+ characters repeats 3+ times in a row;
//  - incoherent: the chosen phase has zero demand under both queue sources
//    while another phase shows demand under both.
// Transport failures are flagged by the caller, which has no response text.
FlagSet detect_hallucination(const DemandSnapshot &demand, const std::string &raw_response,
                             const ParseResult &parsed);

// Arithmetic mean of per-token log-likelihoods; empty input is an error.
double mean_log_likelihood(const std::vector<double> &token_logprobs);

struct ScoredTrajectory {
    double quality = 0.0;        // critic-assigned score q
    double log_likelihood = 0.0; // mean token log-likelihood p
};

// Score-based ranking loss over trajectories:
//   L = log(1 + sum over ordered pairs with q_i > q_j of
//           [e^(p_j - p_i) + e^(2 p_j* - 2 beta - p_i - p_j)])
// where p_j* is the smallest p among trajectories rated above q_j. Zero when
// no pair qualifies.
double score_loss(const std::vector<ScoredTrajectory> &trajectories, double beta);

struct CorrectionOptions {
    int max_attempts = 2;
};

struct Correction {
    std::string text;
    SignalAction action{};
    bool synthetic = false; // critic kept failing; rule decision substituted
    int attempts = 0;
    std::vector<double> logprobs;

    json to_json() const;
    static Correction from_json(const json &j);
};

// Prompt sent to the critic for a flagged record.
std::string correction_prompt(const DecisionRecord &record);

// Asks the critic endpoint for a corrected response until one parses cleanly
// and passes detect_hallucination, falling back to the record's rule action
// rendered in schema form after `max_attempts` failures.
Correction request_correction(LlmClient &critic, const DecisionRecord &record,
                              const CorrectionOptions &options = {});

struct DatasetOptions {
    double q_error = 0.0;
    double q_corrected = 1.0;
};

struct DatasetSummary {
    long corpus_rows = 0;
    long preference_rows = 0;
};

// Writes the imitation corpus (one row per decision) and the preference set
// (one row per corrected hallucination), both ordered by (time,
// intersection) and preceded by a schema header record.
DatasetSummary emit_datasets(const std::vector<DecisionRecord> &records,
                             const std::map<size_t, Correction> &corrections,
                             const std::string &corpus_path, const std::string &preferences_path,
                             const DatasetOptions &options = {});

} // namespace herald
