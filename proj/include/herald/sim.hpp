#pragma once

#include "herald/events.hpp"
#include "herald/net.hpp"
#include "herald/obs.hpp"
#include "herald/rng.hpp"
#include "herald/types.hpp"

#include <array>
#include <deque>
#include <map>
#include <vector>

namespace herald {

// A boundary stub of the grid: side N/S with a column index, side E/W with a
// row index.
struct Boundary {
    Direction side = Direction::West;
    int index = 0;
};

struct FlowDestination {
    Boundary exit;
    double weight = 1.0;
};

// Deterministic arrival process at one boundary entry: one vehicle every
// `period_s` starting at `start_s`, arrivals strictly before `end_s`
// (end_s <= 0 means the scenario horizon). Destination per arrival is drawn
// from `dests` by the seeded spawn stream.
struct FlowEntry {
    Boundary entry;
    std::vector<FlowDestination> dests;
    double period_s = 10.0;
    double start_s = 0.0;
    double end_s = 0.0;
};

// Shortest lane route from a boundary entry to a boundary exit; movements at
// each intersection fix the lane on every segment. Throws ConfigError for
// unknown boundaries or unroutable pairs.
std::vector<LaneId> build_route(const Network &net, const Boundary &entry, const Boundary &exit);

struct EngineOptions {
    double v_stop_mps = 0.1;    // below this a vehicle counts as queued
    double line_margin_m = 0.5; // stopping offset before the stop line
    double horizon_s = 3600.0;
    std::string scenario_name = "scenario";
    std::string controller_name;
    std::string weather_name = "base";
    double vehicle_space_m = 7.5;
    bool emit_meta = true;
};

// Deterministic 1 s-step microsimulation over a grid network. Single lane
// per movement, no lane changes; a vehicle follows its spawn-time route.
// Signals run green -> 3 s yellow -> 2 s all-red, after which the
// intersection is due for its next decision.
class Engine {
public:
    Engine(Network net, const VehicleParams &params, std::vector<FlowEntry> flows, uint64_t seed,
           EngineOptions options = {});

    double time() const { return tick_; }

    // Intersections whose decision is due now, ascending id.
    std::vector<IntersectionId> due_intersections() const;

    Observation observe(IntersectionId id) const;

    // Starts a green for the action's phase. Rejects invalid actions and
    // intersections that are not at a decision epoch; state is untouched on
    // rejection.
    ActionCheck apply_signal(IntersectionId id, const SignalAction &action);

    // Advances one 1 s tick: signal transitions, arrivals, vehicle motion,
    // accounting.
    void step();

    // Emits resid records for vehicles still en route. Call once, after the
    // final step.
    void finalize();

    const SignalState &signal_state(IntersectionId id) const { return signals_.at(id); }

    // Per-phase pressure: sum over the phase's lanes of upstream queued
    // count minus mean queued count per lane on the downstream segment.
    std::array<double, 4> phase_pressures(IntersectionId id) const;

    long spawned_total() const { return spawned_; }
    long exited_count() const { return exited_; }
    long active_count() const { return spawned_ - exited_; }

    const Network &network() const { return net_; }
    const VehicleParams &params() const { return params_; }
    EventLog &log() { return log_; }
    const EventLog &log() const { return log_; }

private:
    struct Vehicle {
        int id = 0;
        int route_id = 0;
        int route_idx = 0;
        double pos_m = 0.0;
        double speed_mps = 0.0;
        int enter_tick = 0;
        long wait_ticks = 0;
        int hold_ticks = 0;
        int moved_tick = -1;
        int watch_idx = -1;
        bool exited = false;
    };

    struct ReleaseWatch {
        IntersectionId intersection = 0;
        LaneId lane = 0;
        int size = 0;
        int pending = 0;
        double t_first = -1.0;
        double t_last = -1.0;
        bool active = false;
    };

    struct PendingSpawn {
        int route_id = 0;
    };

    struct FlowRuntime {
        FlowEntry entry;
        std::vector<int> route_ids; // parallel to entry.dests
        std::vector<double> weights;
        double next_arrival_s = 0.0;
        Rng rng{0};
    };

    enum class LineStatus { Go, Stop, YellowGate, Permissive, ExitFree };

    LaneId lane_of_vehicle(const Vehicle &v) const { return routes_[v.route_id][v.route_idx]; }
    LineStatus line_status(LaneId lane) const;
    int queued_on_lane(LaneId lane) const;
    void advance_signals();
    void inject_arrivals();
    void move_vehicles();
    void move_one(Vehicle &veh, LaneId lane, size_t index_in_lane);
    void notify_clear(Vehicle &veh);
    void record_tick();

    Network net_;
    VehicleParams params_;
    EngineOptions options_;
    EventLog log_;

    double tick_ = 0.0;
    int startup_ticks_ = 1;

    std::vector<SignalState> signals_;
    std::vector<int> lane_watch_; // latest watch per lane, -1 when none
    std::vector<ReleaseWatch> watches_;

    std::vector<std::optional<Phase>> lane_phase_;
    std::vector<int32_t> lane_inter_; // downstream intersection, -1 at sinks

    std::vector<std::vector<LaneId>> routes_;
    std::vector<FlowRuntime> flows_;
    std::map<LaneId, std::deque<PendingSpawn>> pending_;

    std::vector<Vehicle> vehicles_;
    std::vector<std::vector<int>> lane_vehicles_; // front of lane first

    long spawned_ = 0;
    long exited_ = 0;
};

} // namespace herald
