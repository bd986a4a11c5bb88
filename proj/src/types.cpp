#include "herald/types.hpp"

#include <stdexcept>

namespace herald {

Phase phase_from_index(int idx) {
    if (idx < 0 || idx > 3) throw std::invalid_argument("phase index out of range");
    return static_cast<Phase>(idx);
}

std::string_view phase_token(Phase p) {
    switch (p) {
    case Phase::P1: return "NTST";
    case Phase::P2: return "NLSL";
    case Phase::P3: return "ETWT";
    case Phase::P4: return "ELWL";
    }
    return "NTST";
}

std::string_view phase_name(Phase p) {
    switch (p) {
    case Phase::P1: return "P1";
    case Phase::P2: return "P2";
    case Phase::P3: return "P3";
    case Phase::P4: return "P4";
    }
    return "P1";
}

std::optional<Phase> phase_from_token(std::string_view token) {
    for (Phase p : kAllPhases)
        if (phase_token(p) == token) return p;
    return std::nullopt;
}

std::optional<Phase> phase_from_name(std::string_view name) {
    for (Phase p : kAllPhases)
        if (phase_name(p) == name) return p;
    return std::nullopt;
}

ActionCheck validate_action(const SignalAction &action) {
    int idx = static_cast<int>(action.phase);
    if (idx < 0 || idx > 3) return {false, "phase outside P1..P4"};
    if (!(action.duration_s > 0.0)) return {false, "duration not > 0"};
    if (action.duration_s > kMaxDurationS) return {false, "duration > 40"};
    return {true, ""};
}

std::string_view direction_name(Direction d) {
    switch (d) {
    case Direction::North: return "N";
    case Direction::East: return "E";
    case Direction::South: return "S";
    case Direction::West: return "W";
    }
    return "N";
}

std::optional<Direction> direction_from_name(std::string_view name) {
    for (Direction d : kAllDirections)
        if (direction_name(d) == name) return d;
    return std::nullopt;
}

std::string_view movement_name(Movement m) {
    switch (m) {
    case Movement::Left: return "L";
    case Movement::Straight: return "S";
    case Movement::Right: return "R";
    }
    return "S";
}

WeatherProfile WeatherProfile::base() { return WeatherProfile{}; }

WeatherProfile WeatherProfile::extreme() { return {"extreme", 0.5, 0.7, 0.7}; }

std::optional<WeatherProfile> WeatherProfile::named(std::string_view name) {
    if (name == "base") return base();
    if (name == "extreme") return extreme();
    return std::nullopt;
}

VehicleParams apply_weather(const VehicleParams &params, const WeatherProfile &profile) {
    if (profile.a_max_mult <= 0.0 || profile.b_max_mult <= 0.0 || profile.v_max_mult <= 0.0)
        throw std::invalid_argument("weather multipliers must be positive");
    VehicleParams out = params;
    out.a_max_mps2 = params.a_max_mps2 * profile.a_max_mult;
    out.b_max_mps2 = params.b_max_mps2 * profile.b_max_mult;
    out.v_max_mps = params.v_max_mps * profile.v_max_mult;
    return out;
}

} // namespace herald
