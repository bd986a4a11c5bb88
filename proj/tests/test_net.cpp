#include "herald/net.hpp"

#include "herald/rng.hpp"

#include <doctest.h>

#include <set>

using namespace herald;

TEST_CASE("grid dimensions and id order") {
    Network net = build_grid_network(7, 28, 300.0, {});
    CHECK(net.intersections.size() == 196);
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 28; ++c) {
            const Intersection &inter = net.intersections[net.at(r, c)];
            CHECK(inter.id == r * 28 + c);
            CHECK(inter.row == r);
            CHECK(inter.col == c);
        }

    CHECK(build_grid_network(3, 4, 300.0, {}).intersections.size() == 12);
    CHECK(build_grid_network(1, 1, 300.0, {}).intersections.size() == 1);
}

TEST_CASE("invalid grid arguments") {
    CHECK_THROWS_AS(build_grid_network(0, 4, 300.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(build_grid_network(3, -1, 300.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(build_grid_network(3, 4, 0.0, {}), std::invalid_argument);
}

TEST_CASE("boundary stubs on a 1x1 grid") {
    Network net = build_grid_network(1, 1, 250.0, {});
    const Intersection &inter = net.intersections[0];
    for (int s = 0; s < 4; ++s) {
        CHECK(net.segments[inter.in_segment[s]].from.kind == NodeKind::Source);
        CHECK(net.segments[inter.out_segment[s]].to.kind == NodeKind::Sink);
    }
    CHECK(net.incoming_lanes(0).size() == 12);
}

TEST_CASE("phase lanes serve opposing approaches") {
    Network net = build_grid_network(2, 2, 300.0, {});
    auto p1 = net.phase_lanes(0, Phase::P1);
    for (LaneId lane : p1) {
        CHECK(net.movement_of(lane) == Movement::Straight);
        Direction side = net.segments[net.segment_of(lane)].approach_side;
        CHECK((side == Direction::North || side == Direction::South));
    }
    auto p3 = net.phase_lanes(0, Phase::P3);
    for (LaneId lane : p3) {
        CHECK(net.movement_of(lane) == Movement::Straight);
        Direction side = net.segments[net.segment_of(lane)].approach_side;
        CHECK((side == Direction::East || side == Direction::West));
    }
}

TEST_CASE("phase lane sets are disjoint pairs covering 8 lanes") {
    Network net = build_grid_network(3, 4, 300.0, {});
    for (const Intersection &inter : net.intersections) {
        std::set<LaneId> all;
        for (Phase p : kAllPhases) {
            auto lanes = net.phase_lanes(inter.id, p);
            CHECK(lanes[0] != lanes[1]);
            all.insert(lanes.begin(), lanes.end());
        }
        CHECK(all.size() == 8);
        // Right-turn lanes belong to no phase.
        for (LaneId lane : net.incoming_lanes(inter.id)) {
            if (net.movement_of(lane) == Movement::Right) {
                CHECK(!net.lane_phase(lane).has_value());
                CHECK(all.count(lane) == 0);
            } else {
                CHECK(net.lane_phase(lane).has_value());
            }
        }
    }
}

TEST_CASE("phase token mapping is a bijection") {
    std::set<std::string_view> tokens;
    for (Phase p : kAllPhases) {
        tokens.insert(phase_token(p));
        CHECK(phase_from_token(phase_token(p)) == p);
    }
    CHECK(tokens.size() == 4);
    CHECK(phase_token(Phase::P1) == "NTST");
    CHECK(phase_token(Phase::P2) == "NLSL");
    CHECK(phase_token(Phase::P3) == "ETWT");
    CHECK(phase_token(Phase::P4) == "ELWL");
    CHECK(!phase_from_token("XXXX").has_value());
}

TEST_CASE("unknown intersection id is not found") {
    Network net = build_grid_network(2, 2, 300.0, {});
    CHECK_THROWS_AS(net.phase_lanes(99, Phase::P1), NotFoundError);
    CHECK_THROWS_AS(net.intersection(-1), NotFoundError);
}

TEST_CASE("validate_action accepts exactly (0, 40]") {
    CHECK(validate_action({Phase::P2, 15.0}).ok);
    CHECK(validate_action({Phase::P2, 40.0}).ok);
    CHECK_FALSE(validate_action({Phase::P2, 0.0}).ok);
    CHECK(validate_action({Phase::P2, 0.0}).reason == "duration not > 0");
    CHECK_FALSE(validate_action({Phase::P2, 45.0}).ok);
    CHECK(validate_action({Phase::P2, 45.0}).reason == "duration > 40");

    Rng rng(42);
    for (int i = 0; i < 2000; ++i) {
        double d = rng.uniform(-10.0, 90.0);
        bool expect = d > 0.0 && d <= 40.0;
        CHECK(validate_action({Phase::P3, d}).ok == expect);
    }
}

TEST_CASE("downstream segments follow the turn geometry") {
    Network net = build_grid_network(3, 3, 300.0, {});
    IntersectionId center = net.at(1, 1);
    const Intersection &inter = net.intersections[center];
    // Straight from the north approach leaves through the south side.
    LaneId north_straight = net.lane_of(inter.in_segment[static_cast<int>(Direction::North)],
                                        Movement::Straight);
    CHECK(net.downstream_segment(north_straight) ==
          inter.out_segment[static_cast<int>(Direction::South)]);
    // Left from the north approach (heading south) exits east.
    LaneId north_left =
        net.lane_of(inter.in_segment[static_cast<int>(Direction::North)], Movement::Left);
    CHECK(net.downstream_segment(north_left) ==
          inter.out_segment[static_cast<int>(Direction::East)]);
    // Right from the north approach exits west.
    LaneId north_right =
        net.lane_of(inter.in_segment[static_cast<int>(Direction::North)], Movement::Right);
    CHECK(net.downstream_segment(north_right) ==
          inter.out_segment[static_cast<int>(Direction::West)]);
}
