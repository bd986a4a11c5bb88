#include "herald/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace herald {

json MetricsReport::to_json() const {
    json j;
    j["schema"] = "herald-report/1";
    j["scenario"] = scenario;
    j["controller"] = controller;
    j["seed"] = seed;
    j["horizon_s"] = horizon_s;
    j["vehicles"] = {{"spawned", vehicles_spawned},
                     {"finished", vehicles_finished},
                     {"unfinished", vehicles_unfinished}};
    j["zero_vehicles"] = zero_vehicles;
    j["att_s"] = att_s;
    j["aql_veh"] = aql_veh;
    j["aql_m"] = aql_m;
    j["awt_s"] = awt_s;
    j["vehicle_space_m"] = vehicle_space_m;
    j["phase_counts"] = {{"P1", phase_counts[0]},
                         {"P2", phase_counts[1]},
                         {"P3", phase_counts[2]},
                         {"P4", phase_counts[3]}};
    j["duration_ecdf"] = json::array();
    for (const auto &[d, f] : duration_ecdf) j["duration_ecdf"].push_back({d, f});
    j["hallucination"] = {{"decisions", decisions},
                          {"flagged", hallucinations},
                          {"rate", hallucination_rate}};
    return j;
}

std::string MetricsReport::csv_header() {
    return "scenario,controller,seed,att_s,aql_veh,aql_m,awt_s,hallucination_rate";
}

std::string MetricsReport::csv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%llu,%.3f,%.3f,%.3f,%.3f,%.6f", scenario.c_str(),
                  controller.c_str(), static_cast<unsigned long long>(seed), att_s, aql_veh,
                  aql_m, awt_s, hallucination_rate);
    return buf;
}

MetricsReport compute_metrics(const EventLog &log, double horizon_s) {
    MetricsReport rep;
    rep.horizon_s = horizon_s;

    struct VehicleRow {
        double enter = 0.0;
        double exit = -1.0;
        double wait = 0.0;
        bool finished = false;
    };
    std::map<int, VehicleRow> vehicles;
    double queued_sum = 0.0;
    long tick_count = 0;
    std::vector<SignalAction> greens;

    log.for_each([&](const json &rec) {
        const std::string ev = rec.at("ev");
        if (ev == "meta") {
            rep.scenario = rec.value("scenario", "");
            rep.controller = rec.value("controller", "");
            rep.seed = rec.value("seed", 0ull);
            rep.vehicle_space_m = rec.value("vspace", 7.5);
        } else if (ev == "spawn") {
            vehicles[rec.at("veh").get<int>()].enter = rec.at("t").get<double>();
        } else if (ev == "exit") {
            auto &row = vehicles[rec.at("veh").get<int>()];
            row.exit = rec.at("t").get<double>();
            row.wait = rec.at("wait").get<double>();
            row.finished = true;
        } else if (ev == "resid") {
            auto &row = vehicles[rec.at("veh").get<int>()];
            row.enter = rec.at("enter").get<double>();
            row.wait = rec.at("wait").get<double>();
        } else if (ev == "tick") {
            double t = rec.at("t").get<double>();
            if (t <= horizon_s) {
                queued_sum += rec.at("q").get<double>();
                tick_count += 1;
            }
        } else if (ev == "signal") {
            if (rec.at("mode").get<std::string>() == "green") {
                auto phase = phase_from_name(rec.at("ph").get<std::string>());
                if (phase) greens.push_back({*phase, rec.at("dur").get<double>()});
            }
        } else if (ev == "llm") {
            rep.decisions += 1;
            if (!rec.at("flags").empty()) rep.hallucinations += 1;
        }
    });

    rep.vehicles_spawned = static_cast<long>(vehicles.size());
    rep.zero_vehicles = vehicles.empty();

    double att_sum = 0.0, awt_sum = 0.0;
    for (const auto &[id, row] : vehicles) {
        if (row.finished) {
            att_sum += row.exit - row.enter;
            rep.vehicles_finished += 1;
        } else {
            att_sum += horizon_s - row.enter; // censored at the horizon
            rep.vehicles_unfinished += 1;
        }
        awt_sum += row.wait;
    }
    if (!vehicles.empty()) {
        att_sum /= static_cast<double>(vehicles.size());
        awt_sum /= static_cast<double>(vehicles.size());
        rep.att_s = att_sum;
        rep.awt_s = awt_sum;
    }
    if (tick_count > 0) rep.aql_veh = queued_sum / static_cast<double>(tick_count);
    rep.aql_m = rep.aql_veh * rep.vehicle_space_m;

    for (const SignalAction &a : greens) rep.phase_counts[phase_index(a.phase)] += 1;
    rep.duration_ecdf = duration_ecdf(greens);
    rep.hallucination_rate = hallucination_rate(rep.hallucinations, rep.decisions);
    return rep;
}

double hallucination_rate(long flagged, long total) {
    if (total <= 0) return 0.0;
    return static_cast<double>(flagged) / static_cast<double>(total);
}

double hallucination_rate(const std::vector<DecisionRecord> &records) {
    long flagged = 0;
    for (const DecisionRecord &rec : records)
        if (rec.flagged()) ++flagged;
    return hallucination_rate(flagged, static_cast<long>(records.size()));
}

std::vector<std::pair<double, double>> duration_ecdf(const std::vector<SignalAction> &actions) {
    std::vector<std::pair<double, double>> out;
    if (actions.empty()) return out;
    std::vector<double> durations;
    durations.reserve(actions.size());
    for (const SignalAction &a : actions) durations.push_back(a.duration_s);
    std::sort(durations.begin(), durations.end());
    const double n = static_cast<double>(durations.size());
    for (size_t i = 0; i < durations.size(); ++i) {
        bool last_of_value = i + 1 == durations.size() || durations[i + 1] != durations[i];
        if (last_of_value) out.emplace_back(durations[i], static_cast<double>(i + 1) / n);
    }
    return out;
}

} // namespace herald
