#include "herald/critic.hpp"

#include "herald/metrics.hpp"
#include "herald/rng.hpp"
#include "herald/util.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace herald;

namespace {

// Direct transcription of the ranking loss, kept independent of the library
// implementation: explicit pair scan, p_j* recomputed in place.
double score_loss_oracle(const std::vector<ScoredTrajectory> &ts, double beta) {
    double acc = 0.0;
    for (size_t i = 0; i < ts.size(); ++i) {
        for (size_t j = 0; j < ts.size(); ++j) {
            if (!(ts[i].quality > ts[j].quality)) continue;
            double pjs = HUGE_VAL;
            for (const ScoredTrajectory &k : ts)
                if (k.quality > ts[j].quality && k.log_likelihood < pjs)
                    pjs = k.log_likelihood;
            acc += std::exp(ts[j].log_likelihood - ts[i].log_likelihood);
            acc += std::exp(2.0 * pjs - 2.0 * beta - ts[i].log_likelihood -
                            ts[j].log_likelihood);
        }
    }
    return std::log(1.0 + acc);
}

DemandSnapshot demand_fixture() {
    DemandSnapshot d;
    d.herald_q = {8.0, 0.0, 3.0, 0.0};
    d.original_q = {6.0, 0.0, 2.0, 0.0};
    return d;
}

DecisionRecord record_fixture() {
    DecisionRecord rec;
    rec.sim_time_s = 60.0;
    rec.intersection = 2;
    rec.prompt = "prompt text";
    rec.prompt_hash = LlmClient::prompt_hash(rec.prompt);
    rec.raw_response = "<signal>ETWT</signal><duration>99</duration>";
    rec.parsed = parse_response(rec.raw_response);
    rec.fallback_action = {Phase::P1, 13.0};
    rec.executed = rec.fallback_action;
    rec.fallback_used = true;
    rec.demand = demand_fixture();
    rec.flags = detect_hallucination(rec.demand, rec.raw_response, rec.parsed);
    return rec;
}

} // namespace

TEST_CASE("mean_log_likelihood is the arithmetic mean") {
    CHECK(mean_log_likelihood({-0.1, -0.2, -0.3, -0.4}) == doctest::Approx(-0.25));
    CHECK(mean_log_likelihood({-1.0}) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(mean_log_likelihood({}), std::invalid_argument);
}

TEST_CASE("score_loss anchors") {
    CHECK(score_loss({{1.0, -0.7}}, 0.1) == doctest::Approx(0.0));

    // Frozen value for {(q=1, p=-0.5), (q=0, p=-1.0)}, beta = 0.1.
    double frozen = score_loss({{1.0, -0.5}, {0.0, -1.0}}, 0.1);
    CHECK(frozen == doctest::Approx(1.0840).epsilon(1e-4));
    CHECK(frozen ==
          doctest::Approx(score_loss_oracle({{1.0, -0.5}, {0.0, -1.0}}, 0.1)).epsilon(1e-12));

    // Equal likelihoods with beta = 0 collapse both exponents to 1.
    for (double p : {-2.0, -0.5, 0.0})
        CHECK(score_loss({{1.0, p}, {0.0, p}}, 0.0) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("score_loss matches the independent oracle on random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = rng.uniform_int(1, 5);
        std::vector<ScoredTrajectory> ts;
        for (int k = 0; k < n; ++k)
            ts.push_back({static_cast<double>(rng.uniform_int(0, 2)), rng.uniform(-3.0, 0.0)});
        double beta = rng.uniform(0.0, 0.5);
        CHECK(score_loss(ts, beta) == doctest::Approx(score_loss_oracle(ts, beta)).epsilon(1e-9));
    }
}

TEST_CASE("score_loss properties") {
    CHECK_THROWS_AS(score_loss({}, 0.1), std::invalid_argument);

    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ScoredTrajectory> ts;
        int n = rng.uniform_int(1, 5);
        for (int k = 0; k < n; ++k)
            ts.push_back({static_cast<double>(rng.uniform_int(0, 2)), rng.uniform(-3.0, 0.0)});
        double beta = rng.uniform(0.0, 0.5);
        double loss = score_loss(ts, beta);
        CHECK(loss >= 0.0);

        bool any_pair = false;
        for (const auto &a : ts)
            for (const auto &b : ts)
                if (a.quality > b.quality) any_pair = true;
        if (!any_pair) CHECK(loss == doctest::Approx(0.0));
        else CHECK(loss > 0.0);
    }

    // Strictly decreasing in the higher-rated trajectory's likelihood with
    // p_j* held fixed: a second high-rated trajectory pins the minimum.
    auto with_pi = [](double pi) {
        return score_loss({{1.0, pi}, {1.0, -2.9}, {0.0, -1.5}}, 0.1);
    };
    CHECK(with_pi(-0.5) < with_pi(-1.0));
    CHECK(with_pi(-1.0) < with_pi(-2.0));

    // Increasing beta decreases the loss, all else fixed.
    double beta_small = score_loss({{1.0, -0.5}, {0.0, -1.0}}, 0.0);
    double beta_large = score_loss({{1.0, -0.5}, {0.0, -1.0}}, 0.4);
    CHECK(beta_large < beta_small);

    // Both term families are shift-invariant: e^(p_j - p_i) trivially, and
    // 2 p_j* - p_i - p_j because p_j* is itself one of the shifted p's.
    std::vector<ScoredTrajectory> base = {{2.0, -0.4}, {1.0, -1.2}, {0.0, -2.0}};
    std::vector<ScoredTrajectory> shifted = base;
    for (auto &t : shifted) t.log_likelihood += 0.7;
    auto first_family = [](const std::vector<ScoredTrajectory> &ts) {
        double acc = 0.0;
        for (const auto &i : ts)
            for (const auto &j : ts)
                if (i.quality > j.quality)
                    acc += std::exp(j.log_likelihood - i.log_likelihood);
        return acc;
    };
    CHECK(first_family(base) == doctest::Approx(first_family(shifted)).epsilon(1e-12));
    CHECK(score_loss(base, 0.1) == doctest::Approx(score_loss(shifted, 0.1)).epsilon(1e-12));
}

TEST_CASE("detect_hallucination maps parse failures and content rules") {
    DemandSnapshot demand = demand_fixture();

    auto clean = parse_response("<signal>NTST</signal><duration>15</duration>");
    CHECK(detect_hallucination(demand, "<signal>NTST</signal><duration>15</duration>", clean)
              .empty());

    auto zero = parse_response("<signal>ETWT</signal><duration>0</duration>");
    auto flags = detect_hallucination(demand, "<signal>ETWT</signal><duration>0</duration>", zero);
    CHECK(flags.count(HallucinationFlag::ConstraintViolation) == 1);

    auto bad_phase = parse_response("<signal>ABCD</signal><duration>15</duration>");
    CHECK(detect_hallucination(demand, "...", bad_phase).count(HallucinationFlag::InvalidPhase) ==
          1);

    auto missing = parse_response("nothing");
    CHECK(detect_hallucination(demand, "nothing", missing).count(HallucinationFlag::Malformed) ==
          1);

    // Choosing an empty phase while P1 carries demand under both sources.
    auto empty_choice = parse_response("<signal>NLSL</signal><duration>10</duration>");
    auto inc = detect_hallucination(demand, "<signal>NLSL</signal><duration>10</duration>",
                                    empty_choice);
    CHECK(inc.count(HallucinationFlag::Incoherent) == 1);

    // Repetition: a 20+ character block repeated three times.
    std::string rep;
    for (int i = 0; i < 3; ++i) rep += "the phase must be extended now ";
    rep += "<signal>NTST</signal><duration>15</duration>";
    auto rep_parse = parse_response(rep);
    CHECK(detect_hallucination(demand, rep, rep_parse).count(HallucinationFlag::Repetitive) == 1);

    // Pure function: same inputs, same flags.
    CHECK(detect_hallucination(demand, rep, rep_parse) ==
          detect_hallucination(demand, rep, rep_parse));
}

TEST_CASE("request_correction accepts a clean critic reply") {
    const std::string path = "critic_ok_replay.jsonl";
    {
        std::ofstream out(path);
        out << json{{"default", true},
                    {"response", "<signal>NTST</signal><duration>17</duration>"}}
                   .dump()
            << "\n";
    }
    EndpointConfig ep;
    ep.mode = EndpointConfig::Mode::Replay;
    ep.replay_path = path;
    LlmClient critic(ep);

    DecisionRecord rec = record_fixture();
    REQUIRE(rec.flagged());
    Correction corr = request_correction(critic, rec);
    CHECK_FALSE(corr.synthetic);
    CHECK(corr.action.phase == Phase::P1);
    CHECK(corr.action.duration_s == doctest::Approx(17.0));

    // Corrected output passes the detector end-to-end.
    auto parsed = parse_response(corr.text);
    REQUIRE(parsed.ok());
    CHECK(detect_hallucination(rec.demand, corr.text, parsed).empty());
    std::filesystem::remove(path);
}

TEST_CASE("request_correction falls back to a synthetic rule correction") {
    const std::string path = "critic_bad_replay.jsonl";
    {
        std::ofstream out(path);
        out << json{{"default", true}, {"response", "still not parseable"}}.dump() << "\n";
    }
    EndpointConfig ep;
    ep.mode = EndpointConfig::Mode::Replay;
    ep.replay_path = path;
    LlmClient critic(ep);

    DecisionRecord rec = record_fixture();
    Correction corr = request_correction(critic, rec, {3});
    CHECK(corr.synthetic);
    CHECK(corr.attempts == 3);
    CHECK(corr.action.phase == rec.fallback_action.phase);
    auto parsed = parse_response(corr.text);
    REQUIRE(parsed.ok());
    CHECK(detect_hallucination(rec.demand, corr.text, parsed).empty());
    std::filesystem::remove(path);

    // Unreachable endpoint takes the same path.
    EndpointConfig down;
    down.mode = EndpointConfig::Mode::Http;
    down.url = "http://127.0.0.1:1/v1/chat/completions";
    down.timeout_s = 1.0;
    LlmClient dead(down);
    Correction synth = request_correction(dead, rec, {1});
    CHECK(synth.synthetic);
}

TEST_CASE("emit_datasets orders rows and is deterministic") {
    std::vector<DecisionRecord> records;
    for (int i = 0; i < 4; ++i) {
        DecisionRecord rec = record_fixture();
        rec.sim_time_s = 100.0 - i * 10.0; // reversed times
        rec.intersection = i % 2;
        if (i % 2 == 0) {
            rec.raw_response = "<signal>NTST</signal><duration>15</duration>";
            rec.parsed = parse_response(rec.raw_response);
            rec.flags.clear();
            rec.fallback_used = false;
            rec.executed = rec.parsed.action;
        }
        records.push_back(rec);
    }
    std::map<size_t, Correction> corrections;
    for (size_t i = 0; i < records.size(); ++i) {
        if (!records[i].flagged()) continue;
        Correction c;
        c.text = "<signal>NTST</signal><duration>12</duration>";
        c.action = {Phase::P1, 12.0};
        corrections.emplace(i, c);
    }

    auto summary = emit_datasets(records, corrections, "corpus_a.jsonl", "prefs_a.jsonl");
    CHECK(summary.corpus_rows == 4);
    CHECK(summary.preference_rows == 2);

    std::string corpus_a = read_file("corpus_a.jsonl");
    // Rows sorted by time: first data row is the earliest decision.
    std::istringstream in(corpus_a);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(json::parse(header).at("schema") == "herald-corpus/1");
    CHECK(json::parse(first).at("time").get<double>() == doctest::Approx(70.0));

    emit_datasets(records, corrections, "corpus_b.jsonl", "prefs_b.jsonl");
    CHECK(read_file("corpus_b.jsonl") == corpus_a);
    CHECK(read_file("prefs_b.jsonl") == read_file("prefs_a.jsonl"));

    // q ordering enforced.
    DatasetOptions bad;
    bad.q_error = 1.0;
    bad.q_corrected = 1.0;
    CHECK_THROWS_AS(emit_datasets(records, corrections, "x.jsonl", "y.jsonl", bad),
                    std::invalid_argument);

    for (const char *f : {"corpus_a.jsonl", "prefs_a.jsonl", "corpus_b.jsonl", "prefs_b.jsonl"})
        std::filesystem::remove(f);
}

TEST_CASE("clean records produce an empty preference file") {
    std::vector<DecisionRecord> records;
    DecisionRecord rec = record_fixture();
    rec.raw_response = "<signal>NTST</signal><duration>15</duration>";
    rec.parsed = parse_response(rec.raw_response);
    rec.flags.clear();
    rec.fallback_used = false;
    records.push_back(rec);

    auto summary = emit_datasets(records, {}, "corpus_clean.jsonl", "prefs_clean.jsonl");
    CHECK(summary.corpus_rows == 1);
    CHECK(summary.preference_rows == 0);
    CHECK(hallucination_rate(records) == doctest::Approx(0.0));
    std::filesystem::remove("corpus_clean.jsonl");
    std::filesystem::remove("prefs_clean.jsonl");
}

TEST_CASE("decision records round-trip through JSON") {
    DecisionRecord rec = record_fixture();
    rec.logprobs = {-0.3, -0.2};
    DecisionRecord back = DecisionRecord::from_json(rec.to_json());
    CHECK(back.sim_time_s == rec.sim_time_s);
    CHECK(back.intersection == rec.intersection);
    CHECK(back.prompt == rec.prompt);
    CHECK(back.raw_response == rec.raw_response);
    CHECK(back.flags == rec.flags);
    CHECK(back.fallback_used == rec.fallback_used);
    CHECK(back.logprobs == rec.logprobs);
    CHECK(back.demand.herald_q == rec.demand.herald_q);
}
