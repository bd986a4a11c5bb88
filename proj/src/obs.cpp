#include "herald/obs.hpp"

namespace herald {

std::string_view signal_mode_name(SignalMode m) {
    switch (m) {
    case SignalMode::Green: return "green";
    case SignalMode::Yellow: return "yellow";
    case SignalMode::AllRed: return "allred";
    }
    return "allred";
}

std::array<double, 2> Observation::phase_queues(Phase p) const {
    std::array<double, 2> out{0.0, 0.0};
    int slot = 0;
    for (const LaneObservation &lane : lanes) {
        if (lane.phase == p && slot < 2) out[slot++] = lane.queued;
    }
    return out;
}

std::vector<RunningVehicle> Observation::phase_running(Phase p) const {
    std::vector<RunningVehicle> out;
    for (const LaneObservation &lane : lanes) {
        if (lane.phase != p) continue;
        out.insert(out.end(), lane.running.begin(), lane.running.end());
    }
    return out;
}

} // namespace herald
