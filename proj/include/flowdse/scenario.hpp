#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowdse/kernel.hpp"

namespace flowdse {

class DesignSpace;

/// Fillet throughput. Stored as fillets/minute, the unit of the input files.
class Throughput {
public:
    constexpr Throughput() = default;
    static constexpr Throughput per_minute(double v) { return Throughput(v); }
    static constexpr Throughput per_second(double v) { return Throughput(v * 60.0); }

    constexpr double per_minute() const noexcept { return per_minute_; }
    constexpr double per_second() const noexcept { return per_minute_ / 60.0; }

    constexpr auto operator<=>(const Throughput&) const = default;

private:
    constexpr explicit Throughput(double per_minute) : per_minute_(per_minute) {}
    double per_minute_ = 0.0;
};

/// A production order: where fillets go, how urgently, how many and how heavy (post-trim).
struct Recipe {
    std::string id;
    std::string destination;
    std::optional<int> priority;       // nullopt marks the default recipe ("*")
    std::optional<Throughput> target;  // nullopt for the default recipe
    double min_weight = 0.0;           // grams, post-trim
    double max_weight = 0.0;           // grams, post-trim
    double max_trim = 0.0;             // grams

    bool is_default() const noexcept { return !priority.has_value(); }
    bool operator==(const Recipe&) const = default;
};

struct WeightSource {
    enum class Kind { Empirical, TruncatedNormal, Uniform };
    Kind kind = Kind::TruncatedNormal;

    std::string file;               // empirical: path as written in the scenario
    std::vector<double> samples;    // empirical: loaded values
    double mean = 0.0;              // truncated normal
    double stddev = 0.0;
    double lower = 0.0;             // truncated normal / uniform bounds
    double upper = 0.0;             // may be +inf for the truncated normal

    bool operator==(const WeightSource&) const = default;
};

enum class ArrivalProcess { Deterministic, Poisson };

struct LaneInflow {
    Throughput rate;
    ArrivalProcess arrivals = ArrivalProcess::Deterministic;
    WeightSource weights;

    bool operator==(const LaneInflow&) const = default;
};

/// Production controller parameters.
struct ControllerConfig {
    std::size_t window_size = 1000;   // N
    Seconds recompute_interval = 10;  // t
    double bin_width = 10;            // grams
    Seconds warmup = 60;

    bool operator==(const ControllerConfig&) const = default;
};

struct Scenario {
    std::string id;
    std::string description;
    std::vector<Recipe> recipes;
    std::vector<LaneInflow> inflow;
    Seconds horizon = 3600;
    ControllerConfig controller;
    std::vector<std::string> warnings;  // non-fatal load findings

    /// Index of the single default recipe.
    std::size_t default_recipe() const;
    /// Non-default recipe indices by ascending priority, ties in declaration order.
    std::vector<std::size_t> priority_order() const;

    bool operator==(const Scenario& other) const {
        return id == other.id && description == other.description && recipes == other.recipes &&
               inflow == other.inflow && horizon == other.horizon && controller == other.controller;
    }
};

/// Empirical weight file: one positive weight in grams per line; blank lines and '#' comments ignored.
std::vector<double> load_weight_file(const std::filesystem::path& path);

/// Relative empirical weight files are resolved against base_dir.
Scenario parse_scenario(std::string_view json_text, std::string_view source = "<memory>",
                        const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const Scenario& scenario);

/// Cross-reference problems between a scenario and a design space.
std::vector<std::string> scenario_mismatches(const Scenario& scenario, const DesignSpace& space);

} // namespace flowdse
