#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "flowdse/controller.hpp"
#include "flowdse/design_space.hpp"
#include "flowdse/kernel.hpp"
#include "flowdse/scenario.hpp"

namespace flowdse {

struct Fillet {
    std::uint32_t id = 0;
    std::uint32_t lane = 0;
    double original_weight = 0;      // grams at injection
    double weight = 0;               // grams, current (post-trim once trimmed)
    double trimmed = 0;              // grams removed so far
    std::int32_t recipe = -1;        // scenario recipe index, set at assignment
    std::int32_t destination = -1;   // assigned destination tag index
    std::optional<double> trim_instruction;
    std::int32_t absorbed_at = -1;   // destination tag index once absorbed
    Seconds injected_at = 0;
    Seconds absorbed_time = 0;
};

struct DestinationTally {
    std::vector<std::uint64_t> count;  // per destination tag
    std::vector<double> mass;          // per destination tag, post-trim grams
    double trim_mass = 0;              // grams credited to the trim destination
    std::vector<std::uint64_t> recipe_absorbed;  // per scenario recipe
};

/// Raw counters of one replication.
struct RunTallies {
    std::uint64_t injected = 0;
    double injected_mass = 0;
    DestinationTally destinations;
    std::uint64_t in_transit = 0;
    double in_transit_mass = 0;
    std::uint64_t events = 0;
    std::uint64_t recomputations = 0;
    Seconds horizon = 0;
};

struct TraceRow {
    Seconds time;
    std::string_view module;
    std::uint32_t fillet;
    double weight;
    std::string_view action;  // inject, weigh, assign, trim, pass, distribute, absorb
};

using TraceSink = std::function<void(const TraceRow&)>;

struct PlantOptions {
    bool keep_fillets = false;
    TraceSink trace;
};

struct RunOutput {
    RunTallies tallies;
    std::vector<Fillet> fillets;  // only with keep_fillets
};

/// Removes `grams` from the fillet and returns the removed mass. Throws
/// SimulationError unless 0 < grams < current weight.
double apply_trim(Fillet& fillet, double grams);

/// Draws fillet weights for one lane.
class WeightSampler {
public:
    WeightSampler(const WeightSource& source, RandomStream stream);
    double draw();

private:
    const WeightSource* source_;
    RandomStream stream_;
};

/**
 * Executable model of one design under one scenario: module graph, route
 * tables and controller recipe rules. Construction validates that every lane
 * can reach the default destination. Immutable; run() may be called
 * concurrently.
 */
class PlantModel {
public:
    PlantModel(const DesignSpace& space, const DesignConfiguration& config, const Scenario& scenario);

    RunOutput run(std::uint64_t seed, const PlantOptions& options = {}) const;

    const RouteCatalog& routes() const noexcept { return routes_; }
    const std::vector<RecipeRule>& rules() const noexcept { return rules_; }
    const DesignSpace& space() const noexcept { return *space_; }
    const Scenario& scenario() const noexcept { return *scenario_; }

private:
    const DesignSpace* space_;
    const Scenario* scenario_;
    ConnectionGraph graph_;
    RouteCatalog routes_;
    std::vector<RecipeRule> rules_;
    std::uint32_t default_destination_ = 0;
    std::size_t default_recipe_ = 0;
    std::int32_t trim_destination_ = -1;
    // Per module: destination tag -> out-port (-1 unreachable); distributors only.
    std::vector<std::vector<std::int8_t>> route_table_;

    friend class PlantRun;
};

} // namespace flowdse
