#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowdse/plant.hpp"
#include "flowdse/scenario.hpp"

namespace flowdse {

struct RecipeOutcome {
    std::string recipe;
    std::string destination;
    bool is_default = false;
    std::uint64_t absorbed = 0;
    double achieved_per_min = 0;
    double target_per_min = 0;   // 0 for the default recipe
    double attainment = 0;       // 0 for the default recipe
};

struct SimulationResult {
    std::size_t design = 0;
    std::size_t scenario = 0;    // index into the plan's scenario list
    std::string scenario_id;
    std::uint32_t replication = 0;
    std::uint64_t seed = 0;
    std::vector<RecipeOutcome> recipes;
    std::vector<std::string> destination_tags;
    std::vector<std::uint64_t> destination_counts;
    std::vector<double> destination_mass;
    double trim_mass = 0;
    std::uint64_t injected = 0;
    std::uint64_t in_transit = 0;
    std::uint64_t events = 0;
    double kpi = 0;              // mean attainment over non-default recipes
    double wall_time_s = 0;

    bool same_outcome(const SimulationResult& other) const;
};

struct ScoreOptions {
    bool clamp = true;           // cap each attainment at 1.0
};

SimulationResult score(const RunTallies& tallies, const Scenario& scenario, const std::vector<std::string>& destination_tags,
                       const ScoreOptions& options = {});

/// One KPI per scenario, all maximised.
struct KpiVector {
    std::size_t design = 0;
    std::vector<double> values;

    bool operator==(const KpiVector&) const = default;
};

/// a >= b everywhere and a > b somewhere.
bool dominates(const KpiVector& a, const KpiVector& b);

/// Positions (ascending) of the non-dominated vectors; identical vectors are all kept.
std::vector<std::size_t> pareto_front(std::span<const KpiVector> vectors);

/// Front of the union of two fronts.
std::vector<KpiVector> merge_fronts(std::span<const KpiVector> a, std::span<const KpiVector> b);

/// Per-scenario minimum KPI; nullopt entries are unconstrained.
struct Thresholds {
    std::vector<std::optional<double>> minimum;

    bool met_by(const KpiVector& v) const;
};

/**
 * Stop-first exploration: evaluates designs 0, 1, ... in order and halts
 * after the first one meeting `thresholds` (exhaustive when none is given).
 * Returns the number of designs evaluated.
 */
std::size_t explore_until(std::size_t design_count, const std::function<KpiVector(std::size_t)>& evaluate,
                          const std::optional<Thresholds>& thresholds);

std::vector<std::size_t> filter_by_minimums(std::span<const KpiVector> vectors, const Thresholds& thresholds);

/// Positions sorted by descending weighted sum (stable).
std::vector<std::pair<std::size_t, double>> rank_by_weights(std::span<const KpiVector> vectors,
                                                            std::span<const double> weights);

} // namespace flowdse
