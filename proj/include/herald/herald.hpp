#pragma once

#include "herald/events.hpp"
#include "herald/obs.hpp"
#include "herald/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace herald {

// One ordered adjustment rule applied to a reference duration: when the
// condition on the threshold holds the gain is added. Rules form an ordered
// list; the first match wins.
struct AdjustRule {
    enum class Kind { GreaterEqual, Equal };
    Kind kind = Kind::GreaterEqual;
    double threshold_s = 0.0;
    double gain_s = 0.0;
};

// Scenario-specific knowledge learned from release episodes: a monotone
// piecewise-linear queue-length -> release-time map, the mean per-vehicle
// egress time tau, a tail speed-up correction delta, and the duration
// adjustment rules.
struct HeraldTable {
    // (queue length, release time) knots, strictly increasing in queue
    // length, non-decreasing in release time.
    std::vector<std::pair<double, double>> knots;
    double tau_s = 2.0;
    double delta_s = 1.0;
    std::vector<AdjustRule> rules = default_rules();
    double v_max_observed_mps = 0.0;

    static std::vector<AdjustRule> default_rules();

    json to_json() const;
    static HeraldTable from_json(const json &j);
    void save(const std::string &path) const;
    static HeraldTable load(const std::string &path);
};

struct CalibrationOptions {
    double delta_s = 1.0;
    std::vector<AdjustRule> rules = HeraldTable::default_rules();
};

// Builds a HeraldTable from the release episodes recorded in an event log.
// Each episode spans the departure of the first queued vehicle to the moment
// the last queued vehicle is entirely outside the incoming lane. Throws
// CalibrationError when the log holds no complete episode.
HeraldTable calibrate(const EventLog &log, const CalibrationOptions &options = {});

// Piecewise-linear release time for a queue of the given length. Zero at 0;
// single-knot tables extrapolate through the origin, longer tables carry the
// last segment's slope beyond the final knot.
double release_time(const HeraldTable &table, double queue_length);

// Reference green duration for a phase with lane queues (q1, q2):
// max(q1, q2) * tau + delta. Both lanes empty maps to the 1 s minimum
// duration so the result is always a valid green.
double reference_duration(double q1, double q2, const HeraldTable &table);

// Applies the table's first matching adjustment rule, unclamped. Feeds the
// plausibility fallback, which needs to see values beyond 40 s.
double piecewise_adjust_raw(double t_ref_s, const HeraldTable &table);

// Same, clamped to (0, 40].
double piecewise_adjust(double t_ref_s, const HeraldTable &table);

// Estimated time for a running vehicle to reach the stop line; speeds below
// 1 m/s are floored to keep the estimate finite.
double time_to_line(double distance_m, double speed_mps);

// Indices of the running vehicles whose estimated time-to-line fits within
// the reference duration.
std::vector<size_t> admitted_set(const std::vector<RunningVehicle> &running, double t_ref_s);

enum class QueueSource { Herald, Original };

std::string_view queue_source_name(QueueSource s);

// Per-phase queue-pair forecast up to `horizon_s` ahead. Horizon 0 is the
// raw measurement (source Original).
struct Forecast {
    std::array<std::array<double, 2>, 4> queues{}; // [phase][lane slot]
    double horizon_s = 0.0;
    QueueSource source = QueueSource::Herald;
};

// Predicts each lane's queue as current queued + running vehicles arriving
// within the horizon, assuming no discharge on red approaches. Horizon must
// lie in [0, 40].
Forecast forecast_queues(const Observation &obs, double horizon_s);

// Full duration pipeline for one phase: reference duration from the current
// queues, piecewise adjustment, then extension to cover the admitted set
// (max tau_v + tau). Result clamped to (0, 40].
double herald_duration(const Observation &obs, Phase phase, const HeraldTable &table);

// Candidate durations shown to the agent, one per queue source.
struct DurationCandidates {
    double herald_s = 0.0;          // from forecast queues, clamped
    double herald_unclamped_s = 0.0; // same before clamping (fallback trigger)
    double original_s = 0.0;        // from measured queues, clamped
};

std::array<DurationCandidates, 4> duration_candidates(const Observation &obs,
                                                      const Forecast &forecast,
                                                      const HeraldTable &table);

} // namespace herald
