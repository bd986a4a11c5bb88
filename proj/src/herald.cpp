#include "herald/herald.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace herald {

std::vector<AdjustRule> HeraldTable::default_rules() {
    return {{AdjustRule::Kind::GreaterEqual, 30.0, 4.0}, {AdjustRule::Kind::Equal, 1.0, 2.0}};
}

json HeraldTable::to_json() const {
    json j;
    j["schema"] = "herald-table/1";
    j["knots"] = json::array();
    for (const auto &[q, rel] : knots) j["knots"].push_back({q, rel});
    j["tau_s"] = tau_s;
    j["delta_s"] = delta_s;
    j["rules"] = json::array();
    for (const AdjustRule &r : rules) {
        j["rules"].push_back({{"kind", r.kind == AdjustRule::Kind::GreaterEqual ? "ge" : "eq"},
                              {"threshold_s", r.threshold_s},
                              {"gain_s", r.gain_s}});
    }
    j["v_max_observed_mps"] = v_max_observed_mps;
    return j;
}

HeraldTable HeraldTable::from_json(const json &j) {
    HeraldTable t;
    if (j.value("schema", "") != "herald-table/1")
        throw ConfigError("unsupported herald table schema");
    t.knots.clear();
    for (const auto &k : j.at("knots")) t.knots.emplace_back(k.at(0), k.at(1));
    t.tau_s = j.at("tau_s");
    t.delta_s = j.at("delta_s");
    t.rules.clear();
    for (const auto &r : j.at("rules")) {
        AdjustRule rule;
        std::string kind = r.at("kind");
        if (kind == "ge") rule.kind = AdjustRule::Kind::GreaterEqual;
        else if (kind == "eq") rule.kind = AdjustRule::Kind::Equal;
        else throw ConfigError("unknown adjust rule kind: " + kind);
        rule.threshold_s = r.at("threshold_s");
        rule.gain_s = r.at("gain_s");
        t.rules.push_back(rule);
    }
    t.v_max_observed_mps = j.value("v_max_observed_mps", 0.0);
    return t;
}

void HeraldTable::save(const std::string &path) const {
    write_file_atomic(path, to_json().dump(2) + "\n");
}

HeraldTable HeraldTable::load(const std::string &path) {
    return from_json(json::parse(read_file(path)));
}

namespace {

// Pool-adjacent-violators pass: makes `values` non-decreasing while
// preserving weighted means within pooled blocks.
void isotonic(std::vector<double> &values, const std::vector<double> &weights) {
    struct Block {
        double sum, weight;
        int count;
    };
    std::vector<Block> blocks;
    for (size_t i = 0; i < values.size(); ++i) {
        blocks.push_back({values[i] * weights[i], weights[i], 1});
        while (blocks.size() > 1) {
            auto &b = blocks[blocks.size() - 1];
            auto &a = blocks[blocks.size() - 2];
            if (a.sum / a.weight <= b.sum / b.weight) break;
            a.sum += b.sum;
            a.weight += b.weight;
            a.count += b.count;
            blocks.pop_back();
        }
    }
    size_t i = 0;
    for (const Block &b : blocks) {
        double mean = b.sum / b.weight;
        for (int k = 0; k < b.count; ++k) values[i++] = mean;
    }
}

} // namespace

HeraldTable calibrate(const EventLog &log, const CalibrationOptions &options) {
    // queue length -> (sum of release times, count)
    std::map<int, std::pair<double, int>> episodes;
    double v_max = 0.0;
    log.for_each([&](const json &rec) {
        const std::string ev = rec.at("ev");
        if (ev == "release") {
            int q = rec.at("q");
            double rel = rec.at("rel");
            if (q >= 1) {
                auto &slot = episodes[q];
                slot.first += rel;
                slot.second += 1;
            }
        } else if (ev == "cross") {
            v_max = std::max(v_max, rec.at("v").get<double>());
        }
    });
    if (episodes.empty())
        throw CalibrationError("no complete release episodes in log");

    std::vector<double> qs, rels, weights;
    double rel_total = 0.0, q_total = 0.0;
    for (const auto &[q, slot] : episodes) {
        qs.push_back(q);
        rels.push_back(slot.first / slot.second);
        weights.push_back(slot.second);
        rel_total += slot.first;
        q_total += static_cast<double>(q) * slot.second;
    }
    isotonic(rels, weights);

    HeraldTable table;
    table.knots.clear();
    for (size_t i = 0; i < qs.size(); ++i) table.knots.emplace_back(qs[i], rels[i]);
    table.tau_s = rel_total / q_total;
    table.delta_s = options.delta_s;
    table.rules = options.rules;
    table.v_max_observed_mps = v_max;
    return table;
}

double release_time(const HeraldTable &table, double queue_length) {
    if (queue_length <= 0.0) return 0.0;
    if (table.knots.empty()) return queue_length * table.tau_s;

    // Implicit origin anchor unless the table starts at q = 0.
    double prev_q = 0.0, prev_r = 0.0;
    size_t start = 0;
    if (table.knots.front().first <= 0.0) {
        prev_q = table.knots.front().first;
        prev_r = table.knots.front().second;
        start = 1;
    }
    for (size_t i = start; i < table.knots.size(); ++i) {
        auto [q, r] = table.knots[i];
        if (queue_length <= q) {
            double w = (queue_length - prev_q) / (q - prev_q);
            return prev_r + w * (r - prev_r);
        }
        prev_q = q;
        prev_r = r;
    }
    // Beyond the last knot: continue with the last segment's slope. A
    // single-knot table's only segment is the one through the origin.
    double last_q = table.knots.back().first;
    double last_r = table.knots.back().second;
    double base_q = 0.0, base_r = 0.0;
    if (table.knots.size() >= 2) {
        base_q = table.knots[table.knots.size() - 2].first;
        base_r = table.knots[table.knots.size() - 2].second;
    }
    double slope = last_q > base_q ? (last_r - base_r) / (last_q - base_q) : table.tau_s;
    return last_r + slope * (queue_length - last_q);
}

double reference_duration(double q1, double q2, const HeraldTable &table) {
    if (q1 < 0.0 || q2 < 0.0) throw std::invalid_argument("queue lengths must be >= 0");
    double a = std::max(q1, q2);
    if (a == 0.0) return kMinDurationS;
    return a * table.tau_s + table.delta_s;
}

double piecewise_adjust_raw(double t_ref_s, const HeraldTable &table) {
    for (const AdjustRule &rule : table.rules) {
        bool match = rule.kind == AdjustRule::Kind::GreaterEqual
                         ? t_ref_s >= rule.threshold_s
                         : std::abs(t_ref_s - rule.threshold_s) < 1e-9;
        if (match) return t_ref_s + rule.gain_s;
    }
    return t_ref_s;
}

double piecewise_adjust(double t_ref_s, const HeraldTable &table) {
    return std::min(piecewise_adjust_raw(t_ref_s, table), kMaxDurationS);
}

double time_to_line(double distance_m, double speed_mps) {
    if (distance_m < 0.0) throw std::invalid_argument("distance must be >= 0");
    return distance_m / std::max(speed_mps, 1.0);
}

std::vector<size_t> admitted_set(const std::vector<RunningVehicle> &running, double t_ref_s) {
    if (!(t_ref_s > 0.0)) throw std::invalid_argument("t_ref must be > 0");
    std::vector<size_t> out;
    for (size_t i = 0; i < running.size(); ++i) {
        if (time_to_line(running[i].distance_m, running[i].speed_mps) <= t_ref_s)
            out.push_back(i);
    }
    return out;
}

std::string_view queue_source_name(QueueSource s) {
    return s == QueueSource::Herald ? "herald" : "original";
}

Forecast forecast_queues(const Observation &obs, double horizon_s) {
    if (horizon_s < 0.0 || horizon_s > kMaxDurationS)
        throw std::invalid_argument("forecast horizon must be in [0, 40]");
    Forecast fc;
    fc.horizon_s = horizon_s;
    fc.source = horizon_s > 0.0 ? QueueSource::Herald : QueueSource::Original;
    std::array<int, 4> slot{};
    for (const LaneObservation &lane : obs.lanes) {
        if (!lane.phase) continue;
        int p = phase_index(*lane.phase);
        double predicted = lane.queued;
        if (horizon_s > 0.0) {
            for (const RunningVehicle &v : lane.running)
                if (time_to_line(v.distance_m, v.speed_mps) <= horizon_s) predicted += 1.0;
        }
        if (slot[p] < 2) fc.queues[p][slot[p]++] = predicted;
    }
    return fc;
}

double herald_duration(const Observation &obs, Phase phase, const HeraldTable &table) {
    auto queues = obs.phase_queues(phase);
    double t = piecewise_adjust(reference_duration(queues[0], queues[1], table), table);
    auto running = obs.phase_running(phase);
    auto admitted = admitted_set(running, t);
    if (!admitted.empty()) {
        double latest = 0.0;
        for (size_t idx : admitted)
            latest = std::max(latest,
                              time_to_line(running[idx].distance_m, running[idx].speed_mps));
        t = std::max(t, latest + table.tau_s);
    }
    return std::min(t, kMaxDurationS);
}

std::array<DurationCandidates, 4> duration_candidates(const Observation &obs,
                                                      const Forecast &forecast,
                                                      const HeraldTable &table) {
    std::array<DurationCandidates, 4> out{};
    for (Phase p : kAllPhases) {
        int i = phase_index(p);
        const auto &pred = forecast.queues[i];
        auto meas = obs.phase_queues(p);
        DurationCandidates c;
        c.herald_unclamped_s =
            piecewise_adjust_raw(reference_duration(pred[0], pred[1], table), table);
        c.herald_s = std::min(c.herald_unclamped_s, kMaxDurationS);
        c.original_s = piecewise_adjust(reference_duration(meas[0], meas[1], table), table);
        out[i] = c;
    }
    return out;
}

} // namespace herald
