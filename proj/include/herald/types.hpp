#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace herald {

// The four signal phases. P1/P2 serve the north-south approaches
// (straight/left), P3/P4 the east-west approaches. Right turns are always
// permissive and belong to no phase.
enum class Phase : int { P1 = 0, P2 = 1, P3 = 2, P4 = 3 };

inline constexpr std::array<Phase, 4> kAllPhases = {Phase::P1, Phase::P2, Phase::P3, Phase::P4};

inline constexpr int phase_index(Phase p) { return static_cast<int>(p); }
Phase phase_from_index(int idx);

// Token names used on the wire and in prompts: NTST = N-S straight,
// NLSL = N-S left, ETWT = E-W straight, ELWL = E-W left.
std::string_view phase_token(Phase p);
std::string_view phase_name(Phase p);
std::optional<Phase> phase_from_token(std::string_view token);
std::optional<Phase> phase_from_name(std::string_view name);

inline constexpr double kMaxDurationS = 40.0;
inline constexpr double kMinDurationS = 1.0;
inline constexpr double kYellowS = 3.0;
inline constexpr double kAllRedS = 2.0;
inline constexpr double kSafetyIntervalS = kYellowS + kAllRedS;

// One decision: a phase and its green duration in seconds. Valid durations
// lie in (0, 40]; the 3 s yellow + 2 s all-red that follow each green are
// fixed and not part of the action.
struct SignalAction {
    Phase phase = Phase::P1;
    double duration_s = 0.0;
};

struct ActionCheck {
    bool ok = false;
    std::string reason;
};

ActionCheck validate_action(const SignalAction &action);

enum class Direction : int { North = 0, East = 1, South = 2, West = 3 };
enum class Movement : int { Left = 0, Straight = 1, Right = 2 };

inline constexpr std::array<Direction, 4> kAllDirections = {Direction::North, Direction::East,
                                                            Direction::South, Direction::West};
inline constexpr std::array<Movement, 3> kAllMovements = {Movement::Left, Movement::Straight,
                                                          Movement::Right};

std::string_view direction_name(Direction d);
std::optional<Direction> direction_from_name(std::string_view name);
std::string_view movement_name(Movement m);

inline Direction opposite(Direction d) {
    return static_cast<Direction>((static_cast<int>(d) + 2) % 4);
}

// New travel heading after performing `m` while heading `h`.
// Directions are ordered clockwise, so a right turn is +1.
inline Direction turn(Direction h, Movement m) {
    switch (m) {
    case Movement::Straight: return h;
    case Movement::Right: return static_cast<Direction>((static_cast<int>(h) + 1) % 4);
    case Movement::Left: return static_cast<Direction>((static_cast<int>(h) + 3) % 4);
    }
    return h;
}

// Kinematic limits shared by all vehicles in a scenario.
struct VehicleParams {
    double v_max_mps = 11.0;
    double a_max_mps2 = 2.0;
    double b_max_mps2 = 4.5;
    double length_m = 5.0;
    double min_gap_m = 2.5;
    double startup_loss_s = 1.0;
};

// Element-wise multipliers applied to the kinematic limits; the extreme
// profile halves acceleration and cuts braking and top speed by 30%.
struct WeatherProfile {
    std::string name = "base";
    double a_max_mult = 1.0;
    double b_max_mult = 1.0;
    double v_max_mult = 1.0;

    static WeatherProfile base();
    static WeatherProfile extreme();
    static std::optional<WeatherProfile> named(std::string_view name);
};

VehicleParams apply_weather(const VehicleParams &params, const WeatherProfile &profile);

} // namespace herald
