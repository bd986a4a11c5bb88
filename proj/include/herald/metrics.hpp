#pragma once

#include "herald/critic.hpp"
#include "herald/events.hpp"
#include "herald/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace herald {

// Travel-time, queue and waiting metrics plus the action distribution for
// one run. AQL is reported both in vehicles and in meters (vehicles times
// the vehicle-space constant).
struct MetricsReport {
    std::string scenario;
    std::string controller;
    uint64_t seed = 0;
    double horizon_s = 0.0;

    long vehicles_spawned = 0;
    long vehicles_finished = 0;
    long vehicles_unfinished = 0;
    bool zero_vehicles = false;

    double att_s = 0.0;
    double aql_veh = 0.0;
    double aql_m = 0.0;
    double awt_s = 0.0;
    double vehicle_space_m = 7.5;

    std::array<long, 4> phase_counts{};
    std::vector<std::pair<double, double>> duration_ecdf;

    long decisions = 0;
    long hallucinations = 0;
    double hallucination_rate = 0.0;

    json to_json() const;
    std::string csv_row() const;
    static std::string csv_header();
};

// Computes the report from an event log. ATT averages (exit - enter) per
// vehicle, counting unfinished trips as (horizon - enter); AQL is the
// time-average of the network-wide queued count; AWT averages the per-vehicle
// total time spent below the stop threshold. Scenario name, controller, seed
// and the vehicle-space constant come from the log's meta record.
MetricsReport compute_metrics(const EventLog &log, double horizon_s);

// Fraction of flagged interactions; zero when there are none at all.
double hallucination_rate(long flagged, long total);
double hallucination_rate(const std::vector<DecisionRecord> &records);

// Standard ECDF over action durations: sorted ascending, one point per
// distinct duration, final cumulative fraction exactly 1.
std::vector<std::pair<double, double>> duration_ecdf(const std::vector<SignalAction> &actions);

} // namespace herald
