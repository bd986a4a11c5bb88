#pragma once

#include "herald/net.hpp"
#include "herald/types.hpp"

#include <array>
#include <optional>
#include <vector>

namespace herald {

enum class SignalMode { Green, Yellow, AllRed };

std::string_view signal_mode_name(SignalMode m);

// Signal controller state of one intersection. Yellow always lasts 3 s and
// all-red 2 s; a fresh intersection idles in all-red with mode_end at
// infinity until its first decision.
struct SignalState {
    Phase active_phase = Phase::P1;
    SignalMode mode = SignalMode::AllRed;
    double mode_end_s = 0.0;
    double decision_due_s = 0.0;
};

// A vehicle approaching the stop line: remaining distance and current speed.
struct RunningVehicle {
    double distance_m = 0.0;
    double speed_mps = 0.0;
};

struct LaneObservation {
    LaneId lane = 0;
    Direction approach = Direction::North;
    Movement movement = Movement::Straight;
    std::optional<Phase> phase; // nullopt for permissive right-turn lanes
    double length_m = 0.0;
    int queued = 0;
    std::vector<RunningVehicle> running; // nearest to the line first
};

// Immutable per-intersection snapshot handed to controllers. `lanes` holds
// the 12 incoming lanes in fixed (N,E,S,W) x (L,S,R) order; queued + running
// partition the vehicles present on each lane.
struct Observation {
    IntersectionId intersection = 0;
    double sim_time_s = 0.0;
    SignalState signal;
    std::vector<LaneObservation> lanes;

    // Measured queue pair (lane 1, lane 2) for a phase.
    std::array<double, 2> phase_queues(Phase p) const;
    // Running vehicles on both lanes of a phase, order preserved.
    std::vector<RunningVehicle> phase_running(Phase p) const;
};

} // namespace herald
