#include "herald/net.hpp"

#include "herald/util.hpp"

#include <stdexcept>
#include <string>

namespace herald {

namespace {

// Grid offsets: row 0 is the north edge, col 0 the west edge.
void neighbor_offset(Direction d, int &dr, int &dc) {
    switch (d) {
    case Direction::North: dr = -1; dc = 0; break;
    case Direction::South: dr = 1; dc = 0; break;
    case Direction::East: dr = 0; dc = 1; break;
    case Direction::West: dr = 0; dc = -1; break;
    }
}

} // namespace

std::optional<Phase> phase_for(Direction approach, Movement movement) {
    if (movement == Movement::Right) return std::nullopt;
    bool north_south = approach == Direction::North || approach == Direction::South;
    if (movement == Movement::Straight) return north_south ? Phase::P1 : Phase::P3;
    return north_south ? Phase::P2 : Phase::P4;
}

const Intersection &Network::intersection(IntersectionId id) const {
    if (!has_intersection(id)) throw NotFoundError("unknown intersection id " + std::to_string(id));
    return intersections[id];
}

std::array<LaneId, 12> Network::incoming_lanes(IntersectionId id) const {
    const Intersection &inter = intersection(id);
    std::array<LaneId, 12> out{};
    int k = 0;
    for (Direction d : kAllDirections)
        for (Movement m : kAllMovements)
            out[k++] = lane_of(inter.in_segment[static_cast<int>(d)], m);
    return out;
}

std::array<LaneId, 2> Network::phase_lanes(IntersectionId id, Phase phase) const {
    const Intersection &inter = intersection(id);
    Movement mov = (phase == Phase::P1 || phase == Phase::P3) ? Movement::Straight : Movement::Left;
    Direction a = (phase == Phase::P1 || phase == Phase::P2) ? Direction::North : Direction::East;
    Direction b = opposite(a);
    return {lane_of(inter.in_segment[static_cast<int>(a)], mov),
            lane_of(inter.in_segment[static_cast<int>(b)], mov)};
}

std::optional<Phase> Network::lane_phase(LaneId lane) const {
    const RoadSegment &seg = segments[segment_of(lane)];
    if (seg.to.kind != NodeKind::Intersection) return std::nullopt;
    return phase_for(seg.approach_side, movement_of(lane));
}

SegmentId Network::downstream_segment(LaneId lane) const {
    const RoadSegment &seg = segments[segment_of(lane)];
    if (seg.to.kind != NodeKind::Intersection)
        throw NotFoundError("lane ends at a sink; no downstream segment");
    const Intersection &inter = intersections[seg.to.id];
    Direction heading = opposite(seg.approach_side);
    Direction out_side = turn(heading, movement_of(lane));
    return inter.out_segment[static_cast<int>(out_side)];
}

void Network::validate() const {
    if (rows < 1 || cols < 1) throw std::invalid_argument("grid dims must be positive");
    if (static_cast<int>(intersections.size()) != rows * cols)
        throw std::runtime_error("intersection count mismatch");
    for (const Intersection &inter : intersections) {
        for (int s = 0; s < 4; ++s) {
            const RoadSegment &in = segments.at(inter.in_segment[s]);
            if (in.to.kind != NodeKind::Intersection || in.to.id != inter.id)
                throw std::runtime_error("incoming segment endpoint mismatch");
            const RoadSegment &out = segments.at(inter.out_segment[s]);
            if (out.from.kind != NodeKind::Intersection || out.from.id != inter.id)
                throw std::runtime_error("outgoing segment endpoint mismatch");
        }
    }
    for (const RoadSegment &seg : segments)
        if (!(seg.length_m > 0.0)) throw std::runtime_error("segment length must be > 0");
}

Network build_grid_network(int rows, int cols, double segment_length_m,
                           const VehicleParams &vehicle_params) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("grid dims must be positive");
    if (!(segment_length_m > 0.0)) throw std::invalid_argument("segment length must be > 0");

    Network net;
    net.rows = rows;
    net.cols = cols;
    net.segment_length_m = segment_length_m;
    net.vehicle_defaults = vehicle_params;
    net.intersections.resize(static_cast<size_t>(rows) * cols);

    int32_t next_stub = 0;

    // Every segment that ends at an intersection is created while visiting
    // that intersection, so ids are a pure function of the grid shape.
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            IntersectionId id = r * cols + c;
            Intersection &inter = net.intersections[id];
            inter.id = id;
            inter.row = r;
            inter.col = c;
            for (Direction d : kAllDirections) {
                int dr = 0, dc = 0;
                neighbor_offset(d, dr, dc);
                int32_t nb = net.at(r + dr, c + dc);
                RoadSegment seg;
                seg.id = static_cast<SegmentId>(net.segments.size());
                seg.length_m = segment_length_m;
                seg.to = {NodeKind::Intersection, id};
                seg.approach_side = d;
                if (nb != kNoNeighbor) {
                    seg.from = {NodeKind::Intersection, nb};
                    seg.exit_side = opposite(d);
                } else {
                    seg.from = {NodeKind::Source, next_stub++};
                    seg.exit_side = opposite(d);
                }
                inter.in_segment[static_cast<int>(d)] = seg.id;
                net.segments.push_back(seg);
            }
        }
    }

    // Interior outgoing segments are the neighbor's incoming ones; boundary
    // sides get a sink-bound stub each.
    for (Intersection &inter : net.intersections) {
        for (Direction d : kAllDirections) {
            int dr = 0, dc = 0;
            neighbor_offset(d, dr, dc);
            int32_t nb = net.at(inter.row + dr, inter.col + dc);
            if (nb != kNoNeighbor) {
                inter.out_segment[static_cast<int>(d)] =
                    net.intersections[nb].in_segment[static_cast<int>(opposite(d))];
            } else {
                RoadSegment seg;
                seg.id = static_cast<SegmentId>(net.segments.size());
                seg.length_m = segment_length_m;
                seg.from = {NodeKind::Intersection, inter.id};
                seg.to = {NodeKind::Sink, next_stub++};
                seg.approach_side = opposite(d);
                seg.exit_side = d;
                inter.out_segment[static_cast<int>(d)] = seg.id;
                net.segments.push_back(seg);
            }
        }
    }

    net.validate();
    return net;
}

} // namespace herald
