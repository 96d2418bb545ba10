#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowdse/design_space.hpp"
#include "flowdse/scenario.hpp"

namespace testsupport {

inline std::filesystem::path data_path(const std::string& rel) { return std::filesystem::path(FLOWDSE_DATA_DIR) / rel; }

inline std::filesystem::path case_space() { return data_path("case_study/design_space.json"); }
inline std::filesystem::path case_scenario(int k) {
    return data_path("case_study/scenario" + std::to_string(k) + ".json");
}

/// Single lane O -> W -> A -> [T] -> D, with D.out1 to `product` and D.out2 to fillet-strips.
inline std::string single_lane_space(bool trimmer, const std::string& product = "batching2") {
    nlohmann::json doc;
    doc["name"] = trimmer ? "single-lane-trim" : "single-lane";
    nlohmann::json mods = nlohmann::json::array({
        {{"id", "O1"}, {"kind", "Origin"}},
        {{"id", "W1"}, {"kind", "Weighing"}},
        {{"id", "A1"}, {"kind", "Assignment"}},
        {{"id", "D1"}, {"kind", "Distribution"}},
        {{"id", product}, {"kind", "Destination"}},
        {{"id", "fillet-strips"}, {"kind", "Destination"}},
        {{"id", "trim"}, {"kind", "Destination"}},
    });
    nlohmann::json conns = nlohmann::json::array({
        {"O1.out", "W1.in"},
        {"W1.out", "A1.in"},
        {"D1.out1", product + ".in"},
        {"D1.out2", "fillet-strips.in"},
    });
    if (trimmer) {
        mods.push_back({{"id", "T1"}, {"kind", "Trimming"}, {"required", true}});
        conns.push_back({"A1.out", "T1.in"});
        conns.push_back({"T1.out", "D1.in"});
    } else {
        conns.push_back({"A1.out", "D1.in"});
    }
    doc["modules"] = mods;
    doc["connections"] = conns;
    return doc.dump();
}

/// Scenario with one non-default recipe and one lane per entry of `lanes`.
struct LaneSpec {
    double rate_per_min = 60;
    nlohmann::json weights;
};

inline std::string one_recipe_scenario(const std::string& destination, double target, double min_g, double max_g,
                                       double max_trim, const std::vector<LaneSpec>& lanes, double horizon = 3600) {
    nlohmann::json doc;
    doc["id"] = "test";
    doc["horizon_s"] = horizon;
    doc["controller"] = {{"N", 1000}, {"t_s", 10}, {"bin_width_g", 10}, {"warmup_s", 60}};
    doc["recipes"] = nlohmann::json::array({
        {{"recipe", 1},
         {"destination", destination},
         {"priority", 1},
         {"target_throughput_per_min", target},
         {"min_fillet_weight_g", min_g},
         {"max_fillet_weight_g", max_g},
         {"max_trim_weight_g", max_trim}},
        {{"recipe", 2},
         {"destination", "fillet-strips"},
         {"priority", "*"},
         {"target_throughput_per_min", "*"},
         {"min_fillet_weight_g", 0},
         {"max_fillet_weight_g", 1000},
         {"max_trim_weight_g", 0}},
    });
    nlohmann::json inflow = nlohmann::json::array();
    for (std::size_t i = 0; i < lanes.size(); ++i)
        inflow.push_back({{"lane", i + 1}, {"rate_per_min", lanes[i].rate_per_min}, {"weights", lanes[i].weights}});
    doc["inflow"] = inflow;
    return doc.dump();
}

inline nlohmann::json uniform_weights(double lo, double hi) {
    return {{"distribution", "uniform"}, {"min_g", lo}, {"max_g", hi}};
}

inline nlohmann::json normal_weights(double mean, double sd, double lo, double hi) {
    return {{"distribution", "truncated-normal"}, {"mean_g", mean}, {"stddev_g", sd}, {"min_g", lo}, {"max_g", hi}};
}

} // namespace testsupport
