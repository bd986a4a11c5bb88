#include "herald/sim.hpp"

#include "herald/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace herald {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Total distance covered while shedding `b` of speed per second until rest.
double brake_distance(double speed, double b) {
    double dist = 0.0;
    for (double v = speed - b; v > 0.0; v -= b) dist += v;
    return dist;
}

// Largest speed u such that traveling u this second still leaves room to
// stop within `gap` using deceleration b. Solves u + brake_distance(u) = gap
// piecewise.
double max_speed_for_gap(double gap, double b) {
    if (gap <= 0.0) return 0.0;
    for (int q = 0; q < 512; ++q) {
        double u = (gap + b * q * (q + 1) / 2.0) / (q + 1);
        if (u >= q * b - 1e-12 && u <= (q + 1) * b + 1e-12) return u;
        if (b * q * (q + 1) / 2.0 > gap) break;
    }
    return gap; // unreachable for sane b
}

struct BoundaryInfo {
    IntersectionId intersection;
    Direction heading; // travel direction entering (for entries) or leaving
};

BoundaryInfo resolve_entry(const Network &net, const Boundary &b) {
    switch (b.side) {
    case Direction::North:
        if (b.index < 0 || b.index >= net.cols) throw ConfigError("entry index out of range");
        return {net.at(0, b.index), Direction::South};
    case Direction::South:
        if (b.index < 0 || b.index >= net.cols) throw ConfigError("entry index out of range");
        return {net.at(net.rows - 1, b.index), Direction::North};
    case Direction::West:
        if (b.index < 0 || b.index >= net.rows) throw ConfigError("entry index out of range");
        return {net.at(b.index, 0), Direction::East};
    case Direction::East:
        if (b.index < 0 || b.index >= net.rows) throw ConfigError("entry index out of range");
        return {net.at(b.index, net.cols - 1), Direction::West};
    }
    throw ConfigError("bad entry side");
}

BoundaryInfo resolve_exit(const Network &net, const Boundary &b) {
    switch (b.side) {
    case Direction::North:
        if (b.index < 0 || b.index >= net.cols) throw ConfigError("exit index out of range");
        return {net.at(0, b.index), Direction::North};
    case Direction::South:
        if (b.index < 0 || b.index >= net.cols) throw ConfigError("exit index out of range");
        return {net.at(net.rows - 1, b.index), Direction::South};
    case Direction::West:
        if (b.index < 0 || b.index >= net.rows) throw ConfigError("exit index out of range");
        return {net.at(b.index, 0), Direction::West};
    case Direction::East:
        if (b.index < 0 || b.index >= net.rows) throw ConfigError("exit index out of range");
        return {net.at(b.index, net.cols - 1), Direction::East};
    }
    throw ConfigError("bad exit side");
}

} // namespace

std::vector<LaneId> build_route(const Network &net, const Boundary &entry, const Boundary &exit) {
    BoundaryInfo from = resolve_entry(net, entry);
    BoundaryInfo to = resolve_exit(net, exit);

    // BFS over (intersection, travel heading) states; a movement either
    // continues to the neighbor or leaves the grid when none exists.
    struct State {
        IntersectionId inter;
        Direction heading;
    };
    auto key = [&](const State &s) {
        return static_cast<size_t>(s.inter) * 4 + static_cast<int>(s.heading);
    };
    const size_t nstates = net.intersections.size() * 4;
    std::vector<int> parent(nstates, -2); // -2 unvisited, -1 root
    std::vector<Movement> via(nstates, Movement::Straight);

    State start{from.intersection, from.heading};
    std::queue<State> frontier;
    parent[key(start)] = -1;
    frontier.push(start);

    std::vector<Movement> movements;
    bool found = false;
    while (!frontier.empty() && !found) {
        State cur = frontier.front();
        frontier.pop();
        const Intersection &inter = net.intersections[cur.inter];
        for (Movement m : {Movement::Straight, Movement::Right, Movement::Left}) {
            Direction out = turn(cur.heading, m);
            int dr = out == Direction::South ? 1 : out == Direction::North ? -1 : 0;
            int dc = out == Direction::East ? 1 : out == Direction::West ? -1 : 0;
            int32_t nb = net.at(inter.row + dr, inter.col + dc);
            if (nb == kNoNeighbor) {
                if (cur.inter == to.intersection && out == to.heading) {
                    // Reconstruct: exit movement last.
                    movements.push_back(m);
                    size_t k = key(cur);
                    std::vector<Movement> rev;
                    State s = cur;
                    while (parent[k] != -1) {
                        rev.push_back(via[k]);
                        int pk = parent[k];
                        s = {static_cast<IntersectionId>(pk / 4),
                             static_cast<Direction>(pk % 4)};
                        k = static_cast<size_t>(pk);
                    }
                    movements.insert(movements.begin(), rev.rbegin(), rev.rend());
                    found = true;
                    break;
                }
                continue;
            }
            State nxt{nb, out};
            size_t nk = key(nxt);
            if (parent[nk] != -2) continue;
            parent[nk] = static_cast<int>(key(cur));
            via[nk] = m;
            frontier.push(nxt);
        }
    }
    if (!found) throw ConfigError("no route between the given boundaries");

    // Walk the movement list to collect lanes.
    std::vector<LaneId> lanes;
    State cur = start;
    for (size_t i = 0; i < movements.size(); ++i) {
        const Intersection &inter = net.intersections[cur.inter];
        SegmentId in_seg = inter.in_segment[static_cast<int>(opposite(cur.heading))];
        lanes.push_back(net.lane_of(in_seg, movements[i]));
        Direction out = turn(cur.heading, movements[i]);
        if (i + 1 == movements.size()) {
            SegmentId out_seg = inter.out_segment[static_cast<int>(out)];
            lanes.push_back(net.lane_of(out_seg, Movement::Straight));
        } else {
            int dr = out == Direction::South ? 1 : out == Direction::North ? -1 : 0;
            int dc = out == Direction::East ? 1 : out == Direction::West ? -1 : 0;
            cur = {net.at(inter.row + dr, inter.col + dc), out};
        }
    }
    return lanes;
}

Engine::Engine(Network net, const VehicleParams &params, std::vector<FlowEntry> flows,
               uint64_t seed, EngineOptions options)
    : net_(std::move(net)), params_(params), options_(std::move(options)) {
    startup_ticks_ = static_cast<int>(std::lround(params_.startup_loss_s));

    signals_.resize(net_.intersections.size());
    for (auto &st : signals_) {
        st.mode = SignalMode::AllRed;
        st.mode_end_s = kInf;
        st.decision_due_s = 0.0;
    }

    lane_phase_.resize(net_.lane_count());
    lane_inter_.assign(net_.lane_count(), -1);
    for (LaneId lane = 0; lane < net_.lane_count(); ++lane) {
        lane_phase_[lane] = net_.lane_phase(lane);
        const RoadSegment &seg = net_.segments[net_.segment_of(lane)];
        if (seg.to.kind == NodeKind::Intersection) lane_inter_[lane] = seg.to.id;
    }
    lane_vehicles_.resize(net_.lane_count());
    lane_watch_.assign(net_.lane_count(), -1);

    int flow_idx = 0;
    for (FlowEntry &entry : flows) {
        if (entry.period_s <= 0.0) throw ConfigError("flow period must be > 0");
        if (entry.dests.empty()) throw ConfigError("flow entry needs at least one destination");
        if (entry.end_s <= 0.0) entry.end_s = options_.horizon_s;
        FlowRuntime rt;
        rt.entry = entry;
        for (const FlowDestination &dest : entry.dests) {
            if (dest.weight <= 0.0) throw ConfigError("destination weight must be > 0");
            routes_.push_back(build_route(net_, entry.entry, dest.exit));
            rt.route_ids.push_back(static_cast<int>(routes_.size()) - 1);
            rt.weights.push_back(dest.weight);
        }
        rt.next_arrival_s = entry.start_s;
        rt.rng = Rng::stream(seed, "spawn/" + std::to_string(flow_idx));
        flows_.push_back(std::move(rt));
        ++flow_idx;
    }

    if (options_.emit_meta) {
        log_.emit({{"ev", "meta"},
                   {"schema", 1},
                   {"scenario", options_.scenario_name},
                   {"controller", options_.controller_name},
                   {"weather", options_.weather_name},
                   {"seed", seed},
                   {"horizon", options_.horizon_s},
                   {"vspace", options_.vehicle_space_m}});
    }
}

std::vector<IntersectionId> Engine::due_intersections() const {
    std::vector<IntersectionId> due;
    for (size_t i = 0; i < signals_.size(); ++i)
        if (signals_[i].decision_due_s <= tick_) due.push_back(static_cast<IntersectionId>(i));
    return due;
}

int Engine::queued_on_lane(LaneId lane) const {
    int n = 0;
    for (int vid : lane_vehicles_[lane])
        if (vehicles_[vid].speed_mps < options_.v_stop_mps) ++n;
    return n;
}

Observation Engine::observe(IntersectionId id) const {
    if (!net_.has_intersection(id)) throw NotFoundError("unknown intersection id");
    Observation obs;
    obs.intersection = id;
    obs.sim_time_s = tick_;
    obs.signal = signals_[id];
    for (LaneId lane : net_.incoming_lanes(id)) {
        LaneObservation lo;
        lo.lane = lane;
        const RoadSegment &seg = net_.segments[net_.segment_of(lane)];
        lo.approach = seg.approach_side;
        lo.movement = net_.movement_of(lane);
        lo.phase = lane_phase_[lane];
        lo.length_m = seg.length_m;
        for (int vid : lane_vehicles_[lane]) {
            const Vehicle &veh = vehicles_[vid];
            if (veh.speed_mps < options_.v_stop_mps) {
                lo.queued += 1;
            } else {
                lo.running.push_back({seg.length_m - veh.pos_m, veh.speed_mps});
            }
        }
        obs.lanes.push_back(std::move(lo));
    }
    return obs;
}

ActionCheck Engine::apply_signal(IntersectionId id, const SignalAction &action) {
    if (!net_.has_intersection(id)) throw NotFoundError("unknown intersection id");
    ActionCheck check = validate_action(action);
    if (!check.ok) return check;
    SignalState &st = signals_[id];
    if (st.decision_due_s > tick_) return {false, "intersection not at a decision epoch"};

    st.active_phase = action.phase;
    st.mode = SignalMode::Green;
    st.mode_end_s = tick_ + action.duration_s;
    st.decision_due_s = tick_ + action.duration_s + kSafetyIntervalS;

    log_.emit({{"ev", "signal"},
               {"t", static_cast<long>(tick_)},
               {"int", id},
               {"ph", std::string(phase_name(action.phase))},
               {"mode", "green"},
               {"dur", round3(action.duration_s)}});

    // Release-episode watches on the two lanes the green serves. A lane's
    // previous watch is censored here: members still queued never finished
    // discharging, so that episode is unusable for calibration.
    for (LaneId lane : net_.phase_lanes(id, action.phase)) {
        if (lane_watch_[lane] >= 0) watches_[lane_watch_[lane]].active = false;
        lane_watch_[lane] = -1;
        std::vector<int> members;
        for (int vid : lane_vehicles_[lane])
            if (vehicles_[vid].speed_mps < options_.v_stop_mps) members.push_back(vid);
        if (members.empty()) continue;
        ReleaseWatch watch;
        watch.intersection = id;
        watch.lane = lane;
        watch.size = static_cast<int>(members.size());
        watch.pending = watch.size;
        watch.active = true;
        watches_.push_back(watch);
        int widx = static_cast<int>(watches_.size()) - 1;
        for (int vid : members) vehicles_[vid].watch_idx = widx;
        lane_watch_[lane] = widx;
    }
    return check;
}

Engine::LineStatus Engine::line_status(LaneId lane) const {
    if (lane_inter_[lane] < 0) return LineStatus::ExitFree;
    if (net_.movement_of(lane) == Movement::Right) return LineStatus::Permissive;
    const SignalState &st = signals_[lane_inter_[lane]];
    if (lane_phase_[lane] && st.active_phase == *lane_phase_[lane]) {
        if (st.mode == SignalMode::Green) return LineStatus::Go;
        if (st.mode == SignalMode::Yellow) return LineStatus::YellowGate;
    }
    return LineStatus::Stop;
}

void Engine::advance_signals() {
    for (size_t i = 0; i < signals_.size(); ++i) {
        SignalState &st = signals_[i];
        if (st.mode == SignalMode::Green && tick_ >= st.mode_end_s) {
            st.mode = SignalMode::Yellow;
            st.mode_end_s += kYellowS;
            log_.emit({{"ev", "signal"},
                       {"t", static_cast<long>(tick_)},
                       {"int", static_cast<int>(i)},
                       {"ph", std::string(phase_name(st.active_phase))},
                       {"mode", "yellow"}});
        }
        if (st.mode == SignalMode::Yellow && tick_ >= st.mode_end_s) {
            st.mode = SignalMode::AllRed;
            st.mode_end_s += kAllRedS;
            log_.emit({{"ev", "signal"},
                       {"t", static_cast<long>(tick_)},
                       {"int", static_cast<int>(i)},
                       {"ph", std::string(phase_name(st.active_phase))},
                       {"mode", "allred"}});
        }
        if (st.mode == SignalMode::AllRed && tick_ >= st.mode_end_s) {
            st.mode_end_s = kInf; // idle red until the next decision
        }
    }
}

void Engine::inject_arrivals() {
    for (FlowRuntime &flow : flows_) {
        while (flow.next_arrival_s < tick_ + 1.0 && flow.next_arrival_s < flow.entry.end_s) {
            size_t pick = flow.route_ids.size() == 1 ? 0 : flow.rng.pick_weighted(flow.weights);
            int route_id = flow.route_ids[pick];
            pending_[routes_[route_id].front()].push_back({route_id});
            flow.next_arrival_s += flow.entry.period_s;
        }
    }
    for (auto &[lane, queue] : pending_) {
        if (queue.empty()) continue;
        const auto &occupants = lane_vehicles_[lane];
        if (!occupants.empty()) {
            // Entry needs only the physical slot clear; the car-following
            // rule keeps the entrant parked until the full gap opens.
            const Vehicle &last = vehicles_[occupants.back()];
            if (last.pos_m - params_.length_m < options_.line_margin_m) continue;
        }
        PendingSpawn spawn = queue.front();
        queue.pop_front();
        Vehicle veh;
        veh.id = static_cast<int>(vehicles_.size());
        veh.route_id = spawn.route_id;
        veh.enter_tick = static_cast<int>(tick_);
        vehicles_.push_back(veh);
        lane_vehicles_[lane].push_back(veh.id);
        ++spawned_;
        log_.emit({{"ev", "spawn"},
                   {"t", static_cast<long>(tick_)},
                   {"veh", veh.id},
                   {"lane", lane}});
    }
}

void Engine::notify_clear(Vehicle &veh) {
    if (veh.watch_idx < 0) return;
    ReleaseWatch &watch = watches_[veh.watch_idx];
    veh.watch_idx = -1;
    if (!watch.active) return;
    watch.pending -= 1;
    watch.t_last = tick_;
    if (watch.pending == 0) {
        watch.active = false;
        if (watch.t_first >= 0.0) {
            log_.emit({{"ev", "release"},
                       {"t", static_cast<long>(tick_)},
                       {"int", watch.intersection},
                       {"lane", watch.lane},
                       {"q", watch.size},
                       {"rel", round3(watch.t_last - watch.t_first)}});
        }
    }
}

void Engine::move_one(Vehicle &veh, LaneId lane, size_t index_in_lane) {
    const double lane_len = net_.lane_length(lane);
    const double dist_line = lane_len - veh.pos_m;
    const double prev_speed = veh.speed_mps;

    LineStatus status = line_status(lane);
    bool may_cross = false;
    double free;

    auto go_free = [&]() -> double {
        const auto &route = routes_[veh.route_id];
        if (static_cast<size_t>(veh.route_idx) + 1 >= route.size())
            return dist_line + 1e9; // defensive; sink lanes use ExitFree
        LaneId next = route[veh.route_idx + 1];
        const double next_len = net_.lane_length(next);
        double room;
        const auto &occupants = lane_vehicles_[next];
        if (occupants.empty()) {
            room = next_len - options_.line_margin_m;
        } else {
            const Vehicle &last = vehicles_[occupants.back()];
            room = last.pos_m - params_.length_m - params_.min_gap_m;
        }
        if (room <= 0.0) return dist_line - options_.line_margin_m;
        may_cross = true;
        return dist_line + room;
    };

    switch (status) {
    case LineStatus::ExitFree:
        may_cross = true;
        free = dist_line + 1e9;
        break;
    case LineStatus::Go:
    case LineStatus::Permissive:
        free = go_free();
        break;
    case LineStatus::YellowGate: {
        bool can_stop =
            brake_distance(prev_speed, params_.b_max_mps2) <= dist_line - options_.line_margin_m;
        free = can_stop ? dist_line - options_.line_margin_m : go_free();
        break;
    }
    case LineStatus::Stop:
    default:
        free = dist_line - options_.line_margin_m;
        break;
    }

    if (index_in_lane > 0) {
        const Vehicle &leader = vehicles_[lane_vehicles_[lane][index_in_lane - 1]];
        free = std::min(free, leader.pos_m - params_.length_m - veh.pos_m - params_.min_gap_m);
    }
    free = std::max(free, 0.0);

    double v_new = std::min(prev_speed + params_.a_max_mps2, params_.v_max_mps);
    if (v_new + brake_distance(v_new, params_.b_max_mps2) > free)
        v_new = max_speed_for_gap(free, params_.b_max_mps2);

    // Startup loss: a vehicle that came to rest waits before pulling away.
    if (prev_speed <= 0.0 && v_new > 0.0 && veh.hold_ticks > 0) {
        veh.hold_ticks -= 1;
        v_new = 0.0;
    }
    if (prev_speed > 0.0 && v_new <= 0.0) veh.hold_ticks = startup_ticks_;

    veh.speed_mps = v_new;
    veh.pos_m += v_new;
    veh.moved_tick = static_cast<int>(tick_);

    if (veh.pos_m >= lane_len - 1e-9 && may_cross) {
        auto &lst = lane_vehicles_[lane];
        lst.erase(lst.begin() + static_cast<long>(index_in_lane));
        if (status == LineStatus::ExitFree) {
            veh.exited = true;
            ++exited_;
            notify_clear(veh);
            log_.emit({{"ev", "exit"},
                       {"t", static_cast<long>(tick_)},
                       {"veh", veh.id},
                       {"wait", veh.wait_ticks}});
            return;
        }
        IntersectionId inter = lane_inter_[lane];
        const SignalState &st = signals_[inter];
        std::string sig = "red";
        if (net_.movement_of(lane) == Movement::Right) {
            sig = "perm";
        } else if (lane_phase_[lane] && st.active_phase == *lane_phase_[lane]) {
            if (st.mode == SignalMode::Green) sig = "green";
            else if (st.mode == SignalMode::Yellow) sig = "yellow";
        }
        log_.emit({{"ev", "cross"},
                   {"t", static_cast<long>(tick_)},
                   {"veh", veh.id},
                   {"int", inter},
                   {"lane", lane},
                   {"mov", std::string(movement_name(net_.movement_of(lane)))},
                   {"sig", sig},
                   {"v", round3(prev_speed)},
                   {"d", round3(dist_line)}});
        if (veh.watch_idx >= 0) {
            ReleaseWatch &watch = watches_[veh.watch_idx];
            if (watch.active && watch.lane == lane && watch.t_first < 0.0) watch.t_first = tick_;
        }
        veh.route_idx += 1;
        veh.pos_m -= lane_len;
        lane_vehicles_[routes_[veh.route_id][veh.route_idx]].push_back(veh.id);
    }
}

void Engine::move_vehicles() {
    const int now = static_cast<int>(tick_);
    for (LaneId lane = 0; lane < net_.lane_count(); ++lane) {
        auto &lst = lane_vehicles_[lane];
        size_t i = 0;
        while (i < lst.size()) {
            Vehicle &veh = vehicles_[lst[i]];
            if (veh.moved_tick == now) {
                ++i;
                continue;
            }
            size_t before = lst.size();
            move_one(veh, lane, i);
            if (lst.size() == before) ++i; // vehicle stayed on this lane
        }
    }
    // Rear-clear checks for release watches, then waiting accrual.
    for (Vehicle &veh : vehicles_) {
        if (veh.watch_idx >= 0 && !veh.exited) {
            const ReleaseWatch &watch = watches_[veh.watch_idx];
            if (!watch.active) {
                veh.watch_idx = -1;
            } else if (lane_of_vehicle(veh) != watch.lane && veh.pos_m >= params_.length_m) {
                notify_clear(veh);
            }
        }
        if (!veh.exited && veh.speed_mps < options_.v_stop_mps) veh.wait_ticks += 1;
    }
}

void Engine::record_tick() {
    int queued = 0;
    long on_road = 0;
    for (LaneId lane = 0; lane < net_.lane_count(); ++lane) {
        on_road += static_cast<long>(lane_vehicles_[lane].size());
        if (lane_inter_[lane] >= 0) queued += queued_on_lane(lane);
    }
    log_.emit({{"ev", "tick"},
               {"t", static_cast<long>(tick_) + 1},
               {"q", queued},
               {"act", on_road},
               {"sp", spawned_},
               {"ex", exited_}});
}

void Engine::step() {
    advance_signals();
    inject_arrivals();
    move_vehicles();
    record_tick();
    tick_ += 1.0;
}

void Engine::finalize() {
    for (const Vehicle &veh : vehicles_) {
        if (veh.exited) continue;
        log_.emit({{"ev", "resid"},
                   {"veh", veh.id},
                   {"enter", veh.enter_tick},
                   {"wait", veh.wait_ticks}});
    }
}

std::array<double, 4> Engine::phase_pressures(IntersectionId id) const {
    if (!net_.has_intersection(id)) throw NotFoundError("unknown intersection id");
    std::array<double, 4> out{};
    for (Phase p : kAllPhases) {
        double pressure = 0.0;
        for (LaneId lane : net_.phase_lanes(id, p)) {
            double up = queued_on_lane(lane);
            SegmentId down = net_.downstream_segment(lane);
            double down_q = 0.0;
            for (Movement m : kAllMovements) down_q += queued_on_lane(net_.lane_of(down, m));
            pressure += up - down_q / kLanesPerSegment;
        }
        out[phase_index(p)] = pressure;
    }
    return out;
}

} // namespace herald
