#include "herald/controllers.hpp"

#include "herald/config.hpp"
#include "herald/runner.hpp"
#include "herald/util.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace herald;

namespace {

Observation obs_with_queues(std::array<std::array<double, 2>, 4> queues) {
    Observation obs;
    obs.intersection = 0;
    for (Phase p : kAllPhases) {
        int i = phase_index(p);
        for (int slot = 0; slot < 2; ++slot) {
            LaneObservation lane;
            lane.lane = i * 2 + slot;
            lane.phase = p;
            lane.length_m = 300.0;
            lane.queued = static_cast<int>(queues[i][slot]);
            obs.lanes.push_back(std::move(lane));
        }
    }
    return obs;
}

HeraldTable plain_table() {
    HeraldTable t;
    t.tau_s = 2.0;
    t.delta_s = 1.0;
    return t;
}

} // namespace

TEST_CASE("fixed cycle order and wraparound") {
    CHECK(fixed_time_next(std::nullopt, 30.0).phase == Phase::P1);
    CHECK(fixed_time_next(Phase::P1, 30.0).phase == Phase::P2);
    CHECK(fixed_time_next(Phase::P4, 30.0).phase == Phase::P1);
    CHECK(fixed_time_next(Phase::P2, 30.0).duration_s == doctest::Approx(30.0));
}

TEST_CASE("fixed controller keeps an independent cursor per intersection") {
    FixedTimeController controller(30.0);
    Observation a = obs_with_queues({});
    Observation b = obs_with_queues({});
    b.intersection = 3;
    DecisionInput ia, ib;
    ia.obs = &a;
    ib.obs = &b;
    CHECK(controller.decide(ia).phase == Phase::P1);
    CHECK(controller.decide(ib).phase == Phase::P1);
    CHECK(controller.decide(ia).phase == Phase::P2);
    CHECK(controller.decide(ib).phase == Phase::P2);
}

TEST_CASE("max pressure takes the argmax with lowest-index ties") {
    CHECK(max_pressure_decide({3, 5, 2, 5}, 20.0).phase == Phase::P2);
    CHECK(max_pressure_decide({0, 0, 0, 0}, 20.0).phase == Phase::P1);
    CHECK(max_pressure_decide({1, 2, 9, 2}, 20.0).phase == Phase::P3);

    // Brute-force argmax oracle on random instances.
    Rng rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        std::array<double, 4> pressures;
        for (double &p : pressures) p = rng.uniform_int(-10, 10);
        int best = 0;
        for (int i = 1; i < 4; ++i)
            if (pressures[i] > pressures[best]) best = i;
        CHECK(phase_index(max_pressure_decide(pressures, 20.0).phase) == best);
    }
}

TEST_CASE("herald rule picks the demand argmax with the stated tie-breaks") {
    HeraldTable table = plain_table();

    auto decide = [&](std::array<std::array<double, 2>, 4> queues) {
        Observation obs = obs_with_queues(queues);
        Forecast fc = forecast_queues(obs, 0.0); // measurements only
        auto cands = duration_candidates(obs, fc, table);
        return herald_rule_decide(obs, fc, cands, table);
    };

    // Unique argmax.
    CHECK(decide({{{6, 2}, {1, 1}, {3, 2}, {0, 0}}}).phase == Phase::P1);
    // Tie on Q, larger imbalance wins: P1 (3,3) vs P3 (5,1).
    CHECK(decide({{{3, 3}, {0, 0}, {5, 1}, {0, 0}}}).phase == Phase::P3);
    // Full tie falls to the lower index.
    CHECK(decide({{{2, 2}, {0, 0}, {2, 2}, {0, 0}}}).phase == Phase::P1);

    // Duration equals the herald pipeline for the chosen phase.
    auto act = decide({{{6, 4}, {0, 0}, {0, 0}, {0, 0}}});
    CHECK(act.phase == Phase::P1);
    CHECK(act.duration_s == doctest::Approx(13.0));
}

TEST_CASE("herald rule matches an independent priority oracle") {
    HeraldTable table = plain_table();
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        std::array<std::array<double, 2>, 4> queues;
        for (auto &pair : queues)
            pair = {static_cast<double>(rng.uniform_int(0, 12)),
                    static_cast<double>(rng.uniform_int(0, 12))};
        Observation obs = obs_with_queues(queues);
        Forecast fc = forecast_queues(obs, 0.0);
        auto cands = duration_candidates(obs, fc, table);

        // Reimplement the priority independently.
        int best = 0;
        double best_q = -1.0, best_i = -1.0;
        for (int i = 0; i < 4; ++i) {
            double q1 = queues[i][0], q2 = queues[i][1];
            double q = q1 > 0 && q2 > 0 ? q1 + q2 : std::max(q1, q2);
            double imb = std::abs(q1 - q2);
            if (q > best_q || (q == best_q && imb > best_i)) {
                best = i;
                best_q = q;
                best_i = imb;
            }
        }
        CHECK(phase_index(herald_rule_decide(obs, fc, cands, table).phase) == best);
    }
}

TEST_CASE("herald rule phase choice is invariant under uniform queue scaling") {
    HeraldTable table = plain_table();
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        std::array<std::array<double, 2>, 4> queues;
        for (auto &pair : queues)
            pair = {static_cast<double>(rng.uniform_int(0, 9)),
                    static_cast<double>(rng.uniform_int(0, 9))};
        auto scaled = queues;
        int k = rng.uniform_int(2, 5);
        for (auto &pair : scaled) {
            pair[0] *= k;
            pair[1] *= k;
        }
        Observation a = obs_with_queues(queues);
        Observation b = obs_with_queues(scaled);
        Forecast fa = forecast_queues(a, 0.0);
        Forecast fb = forecast_queues(b, 0.0);
        auto ca = duration_candidates(a, fa, table);
        auto cb = duration_candidates(b, fb, table);
        CHECK(herald_rule_decide(a, fa, ca, table).phase ==
              herald_rule_decide(b, fb, cb, table).phase);
    }
}

TEST_CASE("every controller output passes validate_action under fuzzing") {
    HeraldTable table = plain_table();
    Rng rng(31);

    RandomController random_c(1234);
    FixedTimeController fixed_c;
    MaxPressureController mp_c;
    HeraldRuleController herald_c;

    // Scripted llm: every third response invalid, exercising the fallback.
    const std::string replay_path = "controller_fuzz_replay.jsonl";
    {
        std::ofstream out(replay_path);
        out << json{{"default", true},
                    {"response", "<signal>NTST</signal><duration>12</duration>"}}
                   .dump()
            << "\n";
    }
    EndpointConfig ep;
    ep.mode = EndpointConfig::Mode::Replay;
    ep.replay_path = replay_path;
    std::vector<DecisionRecord> sink;
    LlmController llm_c(std::make_shared<LlmClient>(ep), PromptConfig{}, &sink);

    for (int trial = 0; trial < 10000; ++trial) {
        std::array<std::array<double, 2>, 4> queues;
        for (auto &pair : queues)
            pair = {static_cast<double>(rng.uniform_int(0, 25)),
                    static_cast<double>(rng.uniform_int(0, 25))};
        Observation obs = obs_with_queues(queues);
        obs.intersection = rng.uniform_int(0, 11);
        Forecast fc = forecast_queues(obs, 40.0);
        auto cands = duration_candidates(obs, fc, table);
        DecisionInput input;
        input.time_s = trial;
        input.obs = &obs;
        input.forecast = &fc;
        input.candidates = &cands;
        input.table = &table;
        for (double &p : input.pressures) p = rng.uniform(-5.0, 15.0);

        CHECK(validate_action(random_c.decide(input)).ok);
        CHECK(validate_action(fixed_c.decide(input)).ok);
        CHECK(validate_action(mp_c.decide(input)).ok);
        CHECK(validate_action(herald_c.decide(input)).ok);
        if (trial % 100 == 0) CHECK(validate_action(llm_c.decide(input)).ok);
    }
    std::filesystem::remove(replay_path);
}

TEST_CASE("llm controller records the triple and falls back on bad output") {
    HeraldTable table = plain_table();
    const std::string replay_path = "llm_record_replay.jsonl";
    {
        std::ofstream out(replay_path);
        out << json{{"seq", 0}, {"response", "<signal>NTST</signal><duration>9</duration>"}}
                   .dump()
            << "\n";
        out << json{{"seq", 1}, {"response", "garbage with no tags"}}.dump() << "\n";
    }
    EndpointConfig ep;
    ep.mode = EndpointConfig::Mode::Replay;
    ep.replay_path = replay_path;
    std::vector<DecisionRecord> sink;
    LlmController llm(std::make_shared<LlmClient>(ep), PromptConfig{}, &sink);

    Observation obs = obs_with_queues({{{5, 3}, {0, 0}, {1, 0}, {0, 0}}});
    Forecast fc = forecast_queues(obs, 40.0);
    auto cands = duration_candidates(obs, fc, table);
    DecisionInput input;
    input.obs = &obs;
    input.forecast = &fc;
    input.candidates = &cands;
    input.table = &table;

    SignalAction scripted = llm.decide(input);
    CHECK(scripted.phase == Phase::P1);
    CHECK(scripted.duration_s == doctest::Approx(9.0));
    REQUIRE(sink.size() == 1);
    CHECK(sink[0].raw_response == "<signal>NTST</signal><duration>9</duration>");
    CHECK(sink[0].flags.empty());
    CHECK_FALSE(sink[0].fallback_used);

    SignalAction fallback = llm.decide(input);
    REQUIRE(sink.size() == 2);
    CHECK(sink[1].fallback_used);
    CHECK(sink[1].flags.count(HallucinationFlag::Malformed) == 1);
    CHECK(fallback.phase == sink[1].fallback_action.phase);
    CHECK(validate_action(fallback).ok);

    // Replay exhausted: transport failure, still a valid fallback.
    SignalAction transport = llm.decide(input);
    REQUIRE(sink.size() == 3);
    CHECK(sink[2].flags.count(HallucinationFlag::TransportFailure) == 1);
    CHECK(validate_action(transport).ok);
    std::filesystem::remove(replay_path);
}

TEST_CASE("schedule_decisions returns exactly the due intersections in id order") {
    Network net = build_grid_network(2, 2, 300.0, {});
    EngineOptions opts;
    opts.horizon_s = 600.0;
    Engine engine(std::move(net), {}, {}, 1, opts);

    auto due0 = schedule_decisions(engine, engine.time());
    CHECK(due0 == std::vector<IntersectionId>{0, 1, 2, 3});

    // Stagger: 10 s green at 0, 20 s at the others.
    engine.apply_signal(0, {Phase::P1, 10.0});
    engine.apply_signal(1, {Phase::P1, 20.0});
    engine.apply_signal(2, {Phase::P1, 20.0});
    engine.apply_signal(3, {Phase::P1, 20.0});
    while (engine.time() < 15.0) engine.step();
    CHECK(engine.due_intersections() == std::vector<IntersectionId>{0});

    CHECK_THROWS_AS(schedule_decisions(engine, engine.time() + 1.0), std::invalid_argument);
}

TEST_CASE("scripted replay makes an end-to-end llm run deterministic") {
    const std::string replay_path = "replay_determinism.jsonl";
    {
        std::ofstream out(replay_path);
        out << json{{"default", true},
                    {"response", "<signal>ETWT</signal><duration>14</duration>"}}
                   .dump()
            << "\n";
    }
    auto run_once = [&]() {
        ScenarioConfig config = make_preset("jn-like");
        config.grid = {1, 1, 300.0};
        config.flows.clear();
        FlowEntry f;
        f.entry = {Direction::East, 0};
        f.dests = {{{Direction::West, 0}, 1.0}};
        f.period_s = 5.0;
        config.flows.push_back(f);
        config.horizon_s = 120.0;
        config.controller.kind = "llm";
        config.llm.agent.mode = EndpointConfig::Mode::Replay;
        config.llm.agent.replay_path = replay_path;
        HeraldTable table;
        table.tau_s = 2.0;
        return run_closed_loop(config, &table);
    };
    RunResult a = run_once();
    RunResult b = run_once();
    CHECK(a.log.hash() == b.log.hash());
    CHECK(a.decisions.size() == b.decisions.size());
    CHECK(!a.decisions.empty());
    std::filesystem::remove(replay_path);
}
