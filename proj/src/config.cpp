#include "herald/config.hpp"

#include "herald/util.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace herald {

namespace {

void reject_unknown(const json &j, const std::set<std::string> &allowed,
                    const std::string &where) {
    for (const auto &[key, value] : j.items()) {
        if (!allowed.count(key))
            throw ConfigError("unknown field '" + key + "' in " + where);
    }
}

json boundary_to_json(const Boundary &b) {
    return {{"side", std::string(direction_name(b.side))}, {"index", b.index}};
}

Boundary boundary_from_json(const json &j, const std::string &where) {
    reject_unknown(j, {"side", "index"}, where);
    auto side = direction_from_name(j.at("side").get<std::string>());
    if (!side) throw ConfigError("bad side in " + where);
    return {*side, j.at("index").get<int>()};
}

json rules_to_json(const std::vector<AdjustRule> &rules) {
    json arr = json::array();
    for (const AdjustRule &r : rules)
        arr.push_back({{"kind", r.kind == AdjustRule::Kind::GreaterEqual ? "ge" : "eq"},
                       {"threshold_s", r.threshold_s},
                       {"gain_s", r.gain_s}});
    return arr;
}

std::vector<AdjustRule> rules_from_json(const json &arr) {
    std::vector<AdjustRule> rules;
    for (const auto &r : arr) {
        reject_unknown(r, {"kind", "threshold_s", "gain_s"}, "herald.rules[]");
        AdjustRule rule;
        std::string kind = r.at("kind");
        if (kind == "ge") rule.kind = AdjustRule::Kind::GreaterEqual;
        else if (kind == "eq") rule.kind = AdjustRule::Kind::Equal;
        else throw ConfigError("bad rule kind: " + kind);
        rule.threshold_s = r.at("threshold_s");
        rule.gain_s = r.at("gain_s");
        rules.push_back(rule);
    }
    return rules;
}

json endpoint_to_json(const EndpointConfig &e) {
    return {{"mode", e.mode == EndpointConfig::Mode::Http ? "http" : "replay"},
            {"url", e.url},
            {"model", e.model},
            {"key_env", e.key_env},
            {"timeout_s", e.timeout_s},
            {"max_inflight", e.max_inflight},
            {"temperature", e.temperature},
            {"replay_path", e.replay_path}};
}

EndpointConfig endpoint_from_json(const json &j, const std::string &where) {
    reject_unknown(j,
                   {"mode", "url", "model", "key_env", "timeout_s", "max_inflight",
                    "temperature", "replay_path"},
                   where);
    EndpointConfig e;
    std::string mode = j.value("mode", "replay");
    if (mode == "http") e.mode = EndpointConfig::Mode::Http;
    else if (mode == "replay") e.mode = EndpointConfig::Mode::Replay;
    else throw ConfigError("bad endpoint mode: " + mode);
    e.url = j.value("url", "");
    e.model = j.value("model", "default");
    e.key_env = j.value("key_env", "LLM_API_KEY");
    e.timeout_s = j.value("timeout_s", 30.0);
    e.max_inflight = j.value("max_inflight", 4);
    e.temperature = j.value("temperature", 0.0);
    e.replay_path = j.value("replay_path", "");
    return e;
}

} // namespace

json ScenarioConfig::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["name"] = name;
    j["grid"] = {{"rows", grid.rows},
                 {"cols", grid.cols},
                 {"segment_length_m", grid.segment_length_m}};
    j["vehicle"] = {{"v_max_mps", vehicle.v_max_mps},     {"a_max_mps2", vehicle.a_max_mps2},
                    {"b_max_mps2", vehicle.b_max_mps2},   {"length_m", vehicle.length_m},
                    {"min_gap_m", vehicle.min_gap_m},     {"startup_loss_s", vehicle.startup_loss_s}};
    j["weather"] = weather.name;
    j["horizon_s"] = horizon_s;
    j["seed"] = seed;
    j["vehicle_space_m"] = vehicle_space_m;
    j["flows"] = json::array();
    for (const FlowEntry &f : flows) {
        json dests = json::array();
        for (const FlowDestination &d : f.dests) {
            json dj = boundary_to_json(d.exit);
            dj["weight"] = d.weight;
            dests.push_back(dj);
        }
        j["flows"].push_back({{"entry", boundary_to_json(f.entry)},
                              {"period_s", f.period_s},
                              {"start_s", f.start_s},
                              {"end_s", f.end_s},
                              {"dests", dests}});
    }
    j["controller"] = {{"kind", controller.kind}, {"green_s", controller.green_s}};
    j["herald"] = {{"forecast_horizon_s", herald.forecast_horizon_s},
                   {"delta_s", herald.delta_s},
                   {"rules", rules_to_json(herald.rules)},
                   {"imbalance_factor", herald.imbalance_factor},
                   {"calibration_horizon_s", herald.calibration_horizon_s},
                   {"table_path", herald.table_path}};
    j["llm"] = {{"agent", endpoint_to_json(llm.agent)},
                {"critic", endpoint_to_json(llm.critic)},
                {"critic_configured", llm.critic_configured},
                {"max_correction_attempts", llm.max_correction_attempts},
                {"q_error", llm.q_error},
                {"q_corrected", llm.q_corrected},
                {"beta", llm.beta},
                {"logprob_fixture", llm.logprob_fixture}};
    return j;
}

ScenarioConfig ScenarioConfig::from_json(const json &j) {
    reject_unknown(j,
                   {"schema_version", "name", "grid", "vehicle", "weather", "horizon_s", "seed",
                    "vehicle_space_m", "flows", "controller", "herald", "llm"},
                   "config");
    ScenarioConfig c;
    c.schema_version = j.at("schema_version");
    if (c.schema_version != 1) throw ConfigError("unsupported schema_version");
    c.name = j.value("name", "scenario");

    if (j.contains("grid")) {
        const json &g = j["grid"];
        reject_unknown(g, {"rows", "cols", "segment_length_m"}, "grid");
        c.grid.rows = g.value("rows", 1);
        c.grid.cols = g.value("cols", 1);
        c.grid.segment_length_m = g.value("segment_length_m", 300.0);
    }
    if (j.contains("vehicle")) {
        const json &v = j["vehicle"];
        reject_unknown(v,
                       {"v_max_mps", "a_max_mps2", "b_max_mps2", "length_m", "min_gap_m",
                        "startup_loss_s"},
                       "vehicle");
        c.vehicle.v_max_mps = v.value("v_max_mps", 11.0);
        c.vehicle.a_max_mps2 = v.value("a_max_mps2", 2.0);
        c.vehicle.b_max_mps2 = v.value("b_max_mps2", 4.5);
        c.vehicle.length_m = v.value("length_m", 5.0);
        c.vehicle.min_gap_m = v.value("min_gap_m", 2.5);
        c.vehicle.startup_loss_s = v.value("startup_loss_s", 1.0);
    }
    if (j.contains("weather")) {
        auto profile = WeatherProfile::named(j["weather"].get<std::string>());
        if (!profile) throw ConfigError("unknown weather profile");
        c.weather = *profile;
    }
    c.horizon_s = j.value("horizon_s", 3600.0);
    c.seed = j.value("seed", 1ull);
    c.vehicle_space_m = j.value("vehicle_space_m", 7.5);

    if (j.contains("flows")) {
        for (const auto &f : j["flows"]) {
            reject_unknown(f, {"entry", "period_s", "start_s", "end_s", "dests"}, "flows[]");
            FlowEntry entry;
            entry.entry = boundary_from_json(f.at("entry"), "flows[].entry");
            entry.period_s = f.at("period_s");
            entry.start_s = f.value("start_s", 0.0);
            entry.end_s = f.value("end_s", 0.0);
            for (const auto &d : f.at("dests")) {
                reject_unknown(d, {"side", "index", "weight"}, "flows[].dests[]");
                FlowDestination dest;
                dest.exit = boundary_from_json(json{{"side", d.at("side")},
                                                    {"index", d.at("index")}},
                                               "flows[].dests[]");
                dest.weight = d.value("weight", 1.0);
                entry.dests.push_back(dest);
            }
            c.flows.push_back(std::move(entry));
        }
    }

    if (j.contains("controller")) {
        const json &k = j["controller"];
        reject_unknown(k, {"kind", "green_s"}, "controller");
        c.controller.kind = k.value("kind", "fixed");
        c.controller.green_s = k.value("green_s", 0.0);
    }
    if (j.contains("herald")) {
        const json &h = j["herald"];
        reject_unknown(h,
                       {"forecast_horizon_s", "delta_s", "rules", "imbalance_factor",
                        "calibration_horizon_s", "table_path"},
                       "herald");
        c.herald.forecast_horizon_s = h.value("forecast_horizon_s", 40.0);
        c.herald.delta_s = h.value("delta_s", 1.0);
        if (h.contains("rules")) c.herald.rules = rules_from_json(h["rules"]);
        c.herald.imbalance_factor = h.value("imbalance_factor", 2.0);
        c.herald.calibration_horizon_s = h.value("calibration_horizon_s", 600.0);
        c.herald.table_path = h.value("table_path", "");
    }
    if (j.contains("llm")) {
        const json &l = j["llm"];
        reject_unknown(l,
                       {"agent", "critic", "critic_configured", "max_correction_attempts",
                        "q_error", "q_corrected", "beta", "logprob_fixture"},
                       "llm");
        if (l.contains("agent")) c.llm.agent = endpoint_from_json(l["agent"], "llm.agent");
        if (l.contains("critic")) {
            c.llm.critic = endpoint_from_json(l["critic"], "llm.critic");
            c.llm.critic_configured = true;
        }
        if (l.contains("critic_configured"))
            c.llm.critic_configured = l["critic_configured"].get<bool>();
        c.llm.max_correction_attempts = l.value("max_correction_attempts", 2);
        c.llm.q_error = l.value("q_error", 0.0);
        c.llm.q_corrected = l.value("q_corrected", 1.0);
        c.llm.beta = l.value("beta", 0.1);
        c.llm.logprob_fixture = l.value("logprob_fixture", "");
    }
    c.validate();
    return c;
}

void ScenarioConfig::validate() const {
    if (grid.rows < 1 || grid.cols < 1) throw ConfigError("grid dims must be positive");
    if (grid.segment_length_m <= 0.0) throw ConfigError("segment length must be > 0");
    if (horizon_s <= 0.0) throw ConfigError("horizon must be > 0");
    static const std::set<std::string> kinds = {"random", "fixed", "max-pressure", "herald-rule",
                                                "llm"};
    if (!kinds.count(controller.kind))
        throw ConfigError("unknown controller kind: " + controller.kind);
    for (const FlowEntry &f : flows) {
        if (f.period_s <= 0.0) throw ConfigError("flow period must be > 0");
        if (f.dests.empty()) throw ConfigError("flow entry needs destinations");
    }
    if (herald.forecast_horizon_s < 0.0 || herald.forecast_horizon_s > kMaxDurationS)
        throw ConfigError("forecast horizon must be in [0, 40]");
    if (!(llm.q_corrected > llm.q_error))
        throw ConfigError("q_corrected must exceed q_error");
}

void ScenarioConfig::save(const std::string &path) const {
    write_file_atomic(path, to_json().dump(2) + "\n");
}

ScenarioConfig ScenarioConfig::load(const std::string &path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error &e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return from_json(j);
}

namespace {

// Boundary demand for a grid: half of each entry's traffic runs straight
// through, the rest turns off, spread evenly over every exit on the left and
// right sides so no single cross corridor is funneled. Periods are chosen so
// hourly totals land near the dataset vehicle counts the presets mirror.
void add_entry(ScenarioConfig &c, Direction side, int index, double period_s) {
    FlowEntry entry;
    entry.entry = {side, index};
    entry.period_s = period_s;

    Direction heading = opposite(side);
    Direction left_side = turn(heading, Movement::Left);
    Direction right_side = turn(heading, Movement::Right);
    auto span = [&](Direction exit_side) {
        return exit_side == Direction::North || exit_side == Direction::South ? c.grid.cols
                                                                              : c.grid.rows;
    };

    entry.dests.push_back({{opposite(side), index}, 0.5});
    int n_left = span(left_side), n_right = span(right_side);
    for (int i = 0; i < n_left; ++i)
        entry.dests.push_back({{left_side, i}, 0.2 / n_left});
    for (int i = 0; i < n_right; ++i)
        entry.dests.push_back({{right_side, i}, 0.3 / n_right});
    c.flows.push_back(std::move(entry));
}

void fill_flows(ScenarioConfig &c, double ew_period_s, double ns_period_s) {
    for (int r = 0; r < c.grid.rows; ++r) {
        add_entry(c, Direction::West, r, ew_period_s);
        add_entry(c, Direction::East, r, ew_period_s);
    }
    for (int col = 0; col < c.grid.cols; ++col) {
        add_entry(c, Direction::North, col, ns_period_s);
        add_entry(c, Direction::South, col, ns_period_s);
    }
}

} // namespace

ScenarioConfig make_preset(const std::string &name) {
    ScenarioConfig c;
    c.name = name;
    if (name == "jn-like") {
        c.grid = {3, 4, 300.0};
        fill_flows(c, 3600.0 / 600.0, 3600.0 / 330.0); // ~6240 vehicles/h
    } else if (name == "hz-like") {
        c.grid = {4, 4, 300.0};
        fill_flows(c, 3600.0 / 186.0, 3600.0 / 186.0); // ~2976 vehicles/h
    } else if (name == "ny-like") {
        c.grid = {7, 28, 300.0};
        fill_flows(c, 3600.0 / 450.0, 3600.0 / 85.0); // ~11060 vehicles/h
    } else {
        throw ConfigError("unknown preset: " + name + " (expected jn-like, hz-like, ny-like)");
    }
    return c;
}

std::vector<std::string> preset_names() { return {"jn-like", "hz-like", "ny-like"}; }

ScenarioConfig make_grid_scenario(int rows, int cols, double ew_period_s, double ns_period_s) {
    ScenarioConfig c;
    c.name = std::to_string(rows) + "x" + std::to_string(cols);
    c.grid = {rows, cols, 300.0};
    fill_flows(c, ew_period_s, ns_period_s);
    return c;
}

} // namespace herald
