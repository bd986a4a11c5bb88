#include "herald/prompt.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace herald {

double phase_demand(double q1, double q2) {
    if (q1 < 0.0 || q2 < 0.0) throw std::invalid_argument("queue lengths must be >= 0");
    if (q1 > 0.0 && q2 > 0.0) return q1 + q2;
    return std::max(q1, q2);
}

double lane_imbalance(double q1, double q2) {
    if (q1 < 0.0 || q2 < 0.0) throw std::invalid_argument("queue lengths must be >= 0");
    return std::abs(q1 - q2);
}

DemandSnapshot snapshot_demands(const Observation &obs, const Forecast &forecast) {
    DemandSnapshot snap;
    for (Phase p : kAllPhases) {
        int i = phase_index(p);
        snap.herald_q[i] = phase_demand(forecast.queues[i][0], forecast.queues[i][1]);
        auto meas = obs.phase_queues(p);
        snap.original_q[i] = phase_demand(meas[0], meas[1]);
    }
    return snap;
}

std::array<PhaseDemand, 4> phase_demands(const Observation &obs, const Forecast &forecast,
                                         const std::array<DurationCandidates, 4> &candidates,
                                         const PromptConfig &config) {
    std::array<PhaseDemand, 4> out{};
    for (Phase p : kAllPhases) {
        int i = phase_index(p);
        auto pred = forecast.queues[i];
        auto meas = obs.phase_queues(p);
        double imb_pred = lane_imbalance(pred[0], pred[1]);
        double imb_meas = lane_imbalance(meas[0], meas[1]);
        bool implausible_duration = candidates[i].herald_unclamped_s > kMaxDurationS;
        bool excessive_imbalance = imb_pred > config.imbalance_factor * imb_meas;
        PhaseDemand d;
        if (forecast.source == QueueSource::Original || implausible_duration ||
            excessive_imbalance) {
            d.q1 = meas[0];
            d.q2 = meas[1];
            d.source = QueueSource::Original;
        } else {
            d.q1 = pred[0];
            d.q2 = pred[1];
            d.source = QueueSource::Herald;
        }
        d.total = phase_demand(d.q1, d.q2);
        d.imbalance = lane_imbalance(d.q1, d.q2);
        out[i] = d;
    }
    return out;
}

namespace {

std::string fmt(const char *format, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, value);
    return buf;
}

std::string queue_row(Phase p, double q1, double q2, double duration_s) {
    std::string row = "  ";
    row += phase_name(p);
    row += " (";
    row += phase_token(p);
    row += "): lanes ";
    row += fmt("%.0f", q1);
    row += " + ";
    row += fmt("%.0f", q2);
    row += " | demand ";
    row += fmt("%.0f", phase_demand(q1, q2));
    row += " | imbalance ";
    row += fmt("%.0f", lane_imbalance(q1, q2));
    row += " | suggested duration ";
    row += fmt("%.1f", duration_s);
    row += " s\n";
    return row;
}

void require_full_coverage(const Observation &obs) {
    std::array<int, 4> lanes_per_phase{};
    for (const LaneObservation &lane : obs.lanes)
        if (lane.phase) lanes_per_phase[phase_index(*lane.phase)] += 1;
    for (Phase p : kAllPhases)
        if (lanes_per_phase[phase_index(p)] != 2)
            throw std::invalid_argument("observation must cover two lanes per phase");
}

} // namespace

PromptBlocks build_prompt_blocks(const Observation &obs, const Forecast &forecast,
                                 const std::array<DurationCandidates, 4> &candidates,
                                 const PromptConfig &config) {
    require_full_coverage(obs);
    PromptBlocks b;

    b.intersection =
        "You control the traffic signal of intersection " + std::to_string(obs.intersection) +
        ".\n"
        "It has four approaches (N, E, S, W), each with three incoming lanes: left, straight, "
        "right.\n"
        "Signal phases and the lanes they control:\n"
        "  P1 (NTST): north straight + south straight\n"
        "  P2 (NLSL): north left + south left\n"
        "  P3 (ETWT): east straight + west straight\n"
        "  P4 (ELWL): east left + west left\n"
        "Right-turn lanes are always permissive and belong to no phase.\n";

    b.task =
        "Pick the next signal phase and its green duration in whole seconds.\n"
        "Serve the highest-demand phase; use the suggested durations to size the green so the "
        "queue just clears.\n";

    std::string details = "Queue table, Herald source (predicted, horizon " +
                          fmt("%.0f", forecast.horizon_s) + " s ahead):\n";
    for (Phase p : kAllPhases) {
        int i = phase_index(p);
        details += queue_row(p, forecast.queues[i][0], forecast.queues[i][1],
                             candidates[i].herald_s);
    }
    details += "Queue table, Original source (measured now):\n";
    for (Phase p : kAllPhases) {
        int i = phase_index(p);
        auto meas = obs.phase_queues(p);
        details += queue_row(p, meas[0], meas[1], candidates[i].original_s);
    }
    details +=
        "Demand of a phase is the sum of its two lane queues; when exactly one lane is empty it "
        "is the occupied lane's queue alone.\n"
        "Imbalance is the absolute difference between the two lane queues.\n";
    b.details = details;

    b.requirements =
        "Reply with exactly one signal tag followed by one duration tag:\n"
        "<signal>TOKEN</signal><duration>SECONDS</duration>\n"
        "TOKEN is one of NTST, NLSL, ETWT, ELWL. SECONDS is a plain integer number of seconds.\n";

    b.rules =
        "Use the Herald (predicted) table by default. Fall back to the Original table for a "
        "phase when its Herald-implied duration exceeds 40 s before clamping, or when its "
        "predicted imbalance exceeds " +
        fmt("%.1f", config.imbalance_factor) +
        "x the measured imbalance.\n"
        "If every phase shows zero demand, pick P1 with the minimum duration.\n";

    b.important =
        "The duration must lie in [1, 40]. Never choose a phase with zero demand while another "
        "phase has queued vehicles. Output the two tags and nothing else.\n";

    return b;
}

std::string compose_prompt(const Observation &obs, const Forecast &forecast,
                           const std::array<DurationCandidates, 4> &candidates,
                           const PromptConfig &config) {
    PromptBlocks b = build_prompt_blocks(obs, forecast, candidates, config);
    std::string out;
    out += "### Intersection\n" + b.intersection + "\n";
    out += "### Task\n" + b.task + "\n";
    out += "### Details\n" + b.details + "\n";
    out += "### Requirements\n" + b.requirements + "\n";
    out += "### Rules\n" + b.rules + "\n";
    out += "### Important\n" + b.important;
    return out;
}

std::string_view parse_status_name(ParseStatus s) {
    switch (s) {
    case ParseStatus::Ok: return "ok";
    case ParseStatus::Malformed: return "malformed";
    case ParseStatus::InvalidPhase: return "invalid-phase";
    case ParseStatus::ConstraintViolation: return "constraint-violation";
    }
    return "malformed";
}

namespace {

struct TagScan {
    int count = 0;
    std::string first;
};

TagScan scan_tag(const std::string &text, const std::string &open, const std::string &close) {
    TagScan scan;
    size_t pos = 0;
    while (true) {
        size_t start = text.find(open, pos);
        if (start == std::string::npos) break;
        size_t body = start + open.size();
        size_t end = text.find(close, body);
        if (end == std::string::npos) break;
        if (scan.count == 0) scan.first = text.substr(body, end - body);
        scan.count += 1;
        pos = end + close.size();
    }
    return scan;
}

bool all_digits(const std::string &s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

} // namespace

ParseResult parse_response(const std::string &text) {
    TagScan signal = scan_tag(text, "<signal>", "</signal>");
    TagScan duration = scan_tag(text, "<duration>", "</duration>");

    if (signal.count == 0) return {ParseStatus::Malformed, {}, "missing signal tag"};
    if (duration.count == 0) return {ParseStatus::Malformed, {}, "missing duration tag"};
    if (signal.count > 1) return {ParseStatus::Malformed, {}, "duplicate signal tag"};
    if (duration.count > 1) return {ParseStatus::Malformed, {}, "duplicate duration tag"};

    auto phase = phase_from_token(signal.first);
    if (!phase)
        return {ParseStatus::InvalidPhase, {}, "unknown phase token '" + signal.first + "'"};

    if (!all_digits(duration.first) || duration.first.size() > 9)
        return {ParseStatus::Malformed, {}, "duration is not a plain integer"};

    SignalAction action{*phase, static_cast<double>(std::stol(duration.first))};
    ActionCheck check = validate_action(action);
    if (!check.ok) return {ParseStatus::ConstraintViolation, action, check.reason};
    return {ParseStatus::Ok, action, ""};
}

std::string render_action(const SignalAction &action) {
    long secs = std::lround(action.duration_s);
    return "<signal>" + std::string(phase_token(action.phase)) + "</signal><duration>" +
           std::to_string(secs) + "</duration>";
}

} // namespace herald
