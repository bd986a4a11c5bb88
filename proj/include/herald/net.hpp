#pragma once

#include "herald/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace herald {

// Lanes are addressed as segment_id * 3 + movement. Lane 0 of a segment is
// the left-turn lane, 1 straight, 2 right.
using LaneId = int32_t;
using SegmentId = int32_t;
using IntersectionId = int32_t;

inline constexpr int kLanesPerSegment = 3;
inline constexpr int32_t kNoNeighbor = -1;

enum class NodeKind { Intersection, Source, Sink };

struct NodeRef {
    NodeKind kind = NodeKind::Intersection;
    int32_t id = 0; // intersection id, or boundary stub index
};

// A directed road with three incoming lanes at its downstream end.
struct RoadSegment {
    SegmentId id = 0;
    NodeRef from;
    NodeRef to;
    double length_m = 0.0;
    // Side of the downstream intersection this segment attaches to
    // (meaningful when `to` is an intersection): traffic on it approaches
    // from that compass side.
    Direction approach_side = Direction::North;
    // Side of the upstream intersection it leaves through (when `from` is an
    // intersection).
    Direction exit_side = Direction::South;
};

struct Intersection {
    IntersectionId id = 0;
    int row = 0;
    int col = 0;
    // Incoming segment per approach side, outgoing segment per exit side;
    // grid interiors connect to neighbors, boundaries to source/sink stubs.
    std::array<SegmentId, 4> in_segment{};
    std::array<SegmentId, 4> out_segment{};
};

struct Network {
    int rows = 0;
    int cols = 0;
    double segment_length_m = 0.0;
    VehicleParams vehicle_defaults;
    std::vector<Intersection> intersections;
    std::vector<RoadSegment> segments;

    int lane_count() const { return static_cast<int>(segments.size()) * kLanesPerSegment; }
    SegmentId segment_of(LaneId lane) const { return lane / kLanesPerSegment; }
    Movement movement_of(LaneId lane) const {
        return static_cast<Movement>(lane % kLanesPerSegment);
    }
    LaneId lane_of(SegmentId seg, Movement m) const {
        return seg * kLanesPerSegment + static_cast<int>(m);
    }
    double lane_length(LaneId lane) const { return segments[segment_of(lane)].length_m; }

    const Intersection &intersection(IntersectionId id) const;
    bool has_intersection(IntersectionId id) const {
        return id >= 0 && id < static_cast<int32_t>(intersections.size());
    }

    // Intersection id at (row, col), or kNoNeighbor when outside the grid.
    int32_t at(int row, int col) const {
        if (row < 0 || row >= rows || col < 0 || col >= cols) return kNoNeighbor;
        return row * cols + col;
    }

    // The 12 incoming lanes of an intersection in fixed (N,E,S,W) x (L,S,R)
    // order.
    std::array<LaneId, 12> incoming_lanes(IntersectionId id) const;

    // The two signalized lanes a phase controls at an intersection.
    std::array<LaneId, 2> phase_lanes(IntersectionId id, Phase phase) const;

    // Phase controlling a lane at its downstream intersection; nullopt for
    // right-turn lanes (permissive) and for lanes that end at a sink.
    std::optional<Phase> lane_phase(LaneId lane) const;

    // Segment a vehicle leaves through after performing the lane's movement
    // at the lane's downstream intersection.
    SegmentId downstream_segment(LaneId lane) const;

    // True when the segment's downstream end is a real intersection (its
    // lanes face a stop line).
    bool ends_at_intersection(SegmentId seg) const {
        return segments[seg].to.kind == NodeKind::Intersection;
    }

    void validate() const;
};

// Phase serving (approach side, movement) at any intersection; nullopt for
// right turns.
std::optional<Phase> phase_for(Direction approach, Movement movement);

Network build_grid_network(int rows, int cols, double segment_length_m,
                           const VehicleParams &vehicle_params);

} // namespace herald
