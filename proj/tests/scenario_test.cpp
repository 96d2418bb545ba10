#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "flowdse/design_space.hpp"
#include "flowdse/error.hpp"
#include "flowdse/scenario.hpp"
#include "support.hpp"

using namespace flowdse;
using nlohmann::json;

namespace {

struct Row {
    const char* destination;
    int priority;  // 0 = default
    double target; // 0 = default
    double min_g, max_g, trim_g;
};

void check_rows(const Scenario& sc, const Row (&rows)[5]) {
    REQUIRE(sc.recipes.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CAPTURE(i);
        const auto& r = sc.recipes[i];
        CHECK(r.id == std::to_string(i + 1));
        CHECK(r.destination == rows[i].destination);
        if (rows[i].priority == 0) {
            CHECK(r.is_default());
            CHECK(!r.target);
        } else {
            REQUIRE(r.priority);
            CHECK(*r.priority == rows[i].priority);
            REQUIRE(r.target);
            CHECK(r.target->per_minute() == rows[i].target);
        }
        CHECK(r.min_weight == rows[i].min_g);
        CHECK(r.max_weight == rows[i].max_g);
        CHECK(r.max_trim == rows[i].trim_g);
    }
}

json base_doc() { return json::parse(testsupport::one_recipe_scenario("batching2", 20, 150, 200, 100, {{60, testsupport::uniform_weights(100, 300)}})); }

} // namespace

TEST_CASE("bundled scenarios carry the case-study recipe tables") {
    const Row s1[5] = {{"batching1", 1, 60, 100, 200, 50},
                       {"batching2", 2, 60, 150, 200, 100},
                       {"burger", 3, 30, 200, 300, 100},
                       {"schnitzel", 4, 30, 250, 350, 50},
                       {"fillet-strips", 0, 0, 0, 1000, 0}};
    const Row s2[5] = {{"batching1", 3, 30, 100, 200, 50},
                       {"batching2", 4, 30, 150, 200, 100},
                       {"burger", 1, 60, 200, 300, 100},
                       {"schnitzel", 2, 60, 250, 350, 50},
                       {"fillet-strips", 0, 0, 0, 1000, 0}};
    const auto a = load_scenario(testsupport::case_scenario(1));
    const auto b = load_scenario(testsupport::case_scenario(2));
    check_rows(a, s1);
    check_rows(b, s2);
    CHECK(a.warnings.empty());
    CHECK(a.horizon == 3600);
    CHECK(a.inflow.size() == 4);
    const auto space = load_design_space(testsupport::case_space());
    CHECK(scenario_mismatches(a, space).empty());
    CHECK(scenario_mismatches(b, space).empty());
}

TEST_CASE("priority order follows priorities, default excluded") {
    const auto b = load_scenario(testsupport::case_scenario(2));
    CHECK(b.priority_order() == std::vector<std::size_t>{2, 3, 0, 1});
    CHECK(b.default_recipe() == 4);
}

TEST_CASE("scenario JSON round-trips") {
    for (int k : {1, 2}) {
        const auto sc = load_scenario(testsupport::case_scenario(k));
        const auto again = parse_scenario(scenario_to_json(sc), "roundtrip");
        CHECK(again == sc);
    }
}

TEST_CASE("recipe invariants are enforced") {
    SUBCASE("no default recipe") {
        auto doc = base_doc();
        doc["recipes"].erase(1);
        CHECK_THROWS_WITH_AS(parse_scenario(doc.dump(), "s.json"), doctest::Contains("default"), InputError);
    }
    SUBCASE("two default recipes") {
        auto doc = base_doc();
        doc["recipes"].push_back(doc["recipes"][1]);
        CHECK_THROWS_AS(parse_scenario(doc.dump(), "s.json"), InputError);
    }
    SUBCASE("only the default recipe") {
        auto doc = base_doc();
        doc["recipes"].erase(0);
        CHECK_THROWS_AS(parse_scenario(doc.dump(), "s.json"), InputError);
    }
    SUBCASE("min above max") {
        auto doc = base_doc();
        doc["recipes"][0]["min_fillet_weight_g"] = 250;
        CHECK_THROWS_WITH_AS(parse_scenario(doc.dump(), "s.json"), doctest::Contains("recipes[0]"), InputError);
    }
    SUBCASE("non-positive target") {
        auto doc = base_doc();
        doc["recipes"][0]["target_throughput_per_min"] = 0;
        CHECK_THROWS_AS(parse_scenario(doc.dump(), "s.json"), InputError);
    }
    SUBCASE("default recipe with a target") {
        auto doc = base_doc();
        doc["recipes"][1]["target_throughput_per_min"] = 5;
        CHECK_THROWS_AS(parse_scenario(doc.dump(), "s.json"), InputError);
    }
    SUBCASE("missing field names the file") {
        auto doc = base_doc();
        doc["recipes"][0].erase("max_trim_weight_g");
        CHECK_THROWS_WITH_AS(parse_scenario(doc.dump(), "s.json"), doctest::Contains("s.json"), InputError);
    }
    SUBCASE("unknown distribution") {
        auto doc = base_doc();
        doc["inflow"][0]["weights"]["distribution"] = "gamma";
        CHECK_THROWS_AS(parse_scenario(doc.dump(), "s.json"), InputError);
    }
    SUBCASE("truncation window far in the tail") {
        auto doc = base_doc();
        doc["inflow"][0]["weights"] = testsupport::normal_weights(200, 10, 500, 600);
        CHECK_THROWS_AS(parse_scenario(doc.dump(), "s.json"), InputError);
    }
}

TEST_CASE("shared priorities load with a warning") {
    auto doc = base_doc();
    auto extra = doc["recipes"][0];
    extra["recipe"] = 3;
    extra["destination"] = "fillet-strips";
    doc["recipes"].push_back(extra);
    const auto sc = parse_scenario(doc.dump(), "s.json");
    CHECK(sc.warnings.size() == 1);
    CHECK(sc.priority_order() == std::vector<std::size_t>{0, 2});
}

TEST_CASE("empirical weight files") {
    const auto dir = std::filesystem::temp_directory_path() / "flowdse_scenario_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "weights.txt");
        f << "# grams\n210.5\n\n198\n305 # heavy\n";
    }
    auto doc = base_doc();
    doc["inflow"][0]["weights"] = {{"distribution", "empirical"}, {"file", "weights.txt"}};
    const auto sc = parse_scenario(doc.dump(), "s.json", dir);
    CHECK(sc.inflow[0].weights.samples == std::vector<double>{210.5, 198, 305});
    {
        std::ofstream f(dir / "bad.txt");
        f << "210\n-3\n";
    }
    doc["inflow"][0]["weights"]["file"] = "bad.txt";
    CHECK_THROWS_WITH_AS(parse_scenario(doc.dump(), "s.json", dir), doctest::Contains("bad.txt:2"), InputError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("scenario and design space must agree") {
    const auto space = load_design_space(testsupport::case_space());
    auto doc = base_doc();
    doc["recipes"][0]["destination"] = "kebab";
    auto sc = parse_scenario(doc.dump(), "s.json");
    auto problems = scenario_mismatches(sc, space);
    REQUIRE(problems.size() == 2);  // unknown destination and lane count
    CHECK(problems[0].find("kebab") != std::string::npos);
    CHECK(problems[1].find("lanes") != std::string::npos);
}

TEST_CASE("throughput conversions") {
    auto t = Throughput::per_minute(60);
    CHECK(t.per_second() == doctest::Approx(1.0));
    CHECK(Throughput::per_second(0.5) == Throughput::per_minute(30));
    CHECK(Throughput::per_minute(10) < Throughput::per_minute(20));
}
