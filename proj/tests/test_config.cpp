#include "herald/config.hpp"

#include "herald/net.hpp"
#include "herald/util.hpp"

#include <doctest.h>

#include <filesystem>

using namespace herald;

TEST_CASE("presets produce the expected grids") {
    CHECK(make_preset("jn-like").grid.rows * make_preset("jn-like").grid.cols == 12);
    CHECK(make_preset("hz-like").grid.rows * make_preset("hz-like").grid.cols == 16);
    CHECK(make_preset("ny-like").grid.rows * make_preset("ny-like").grid.cols == 196);
    CHECK_THROWS_AS(make_preset("nope"), ConfigError);

    for (const std::string &name : preset_names()) {
        ScenarioConfig c = make_preset(name);
        c.validate();
        Network net = build_grid_network(c.grid.rows, c.grid.cols, c.grid.segment_length_m,
                                         c.vehicle);
        // Every flow route resolves against the network.
        for (const FlowEntry &f : c.flows)
            for (const FlowDestination &d : f.dests)
                CHECK(!build_route(net, f.entry, d.exit).empty());
    }
}

TEST_CASE("config round-trips through JSON") {
    ScenarioConfig c = make_preset("jn-like");
    c.seed = 42;
    c.horizon_s = 600.0;
    c.controller = {"max-pressure", 25.0};
    c.weather = WeatherProfile::extreme();
    ScenarioConfig back = ScenarioConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.seed == 42);
    CHECK(back.weather.name == "extreme");
    CHECK(back.flows.size() == c.flows.size());
}

TEST_CASE("unknown fields are rejected with a path") {
    json j = make_preset("jn-like").to_json();
    j["grid"]["rowz"] = 3;
    try {
        ScenarioConfig::from_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError &e) {
        CHECK(std::string(e.what()).find("rowz") != std::string::npos);
        CHECK(std::string(e.what()).find("grid") != std::string::npos);
    }

    json top = make_preset("jn-like").to_json();
    top["speling_mistake"] = 1;
    CHECK_THROWS_AS(ScenarioConfig::from_json(top), ConfigError);
}

TEST_CASE("validation rejects bad values") {
    ScenarioConfig c = make_preset("jn-like");
    c.horizon_s = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = make_preset("jn-like");
    c.controller.kind = "psychic";
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = make_preset("jn-like");
    c.llm.q_corrected = c.llm.q_error;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    json j = make_preset("jn-like").to_json();
    j["schema_version"] = 9;
    CHECK_THROWS_AS(ScenarioConfig::from_json(j), ConfigError);

    j = make_preset("jn-like").to_json();
    j["weather"] = "hail";
    CHECK_THROWS_AS(ScenarioConfig::from_json(j), ConfigError);
}

TEST_CASE("config file save and load") {
    const std::string path = "config_roundtrip.json";
    ScenarioConfig c = make_preset("hz-like");
    c.save(path);
    ScenarioConfig back = ScenarioConfig::load(path);
    CHECK(back.to_json() == c.to_json());
    std::filesystem::remove(path);

    CHECK_THROWS(ScenarioConfig::load("does_not_exist.json"));
}
