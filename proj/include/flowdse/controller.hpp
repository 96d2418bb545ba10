#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "flowdse/design_space.hpp"
#include "flowdse/scenario.hpp"

namespace flowdse {

struct WeightSample {
    Seconds time = 0;
    double grams = 0;
};

/// The last N weights measured on one lane and their histogram.
class LaneWindow {
public:
    LaneWindow(std::size_t capacity, double bin_width);

    void record(double grams, Seconds time);

    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    std::size_t capacity() const noexcept { return capacity_; }
    double bin_width() const noexcept { return bin_width_; }
    std::size_t bin_of(double grams) const noexcept;

    /// Count of retained samples in a bin (0 beyond the histogram).
    std::uint32_t count(std::size_t bin) const noexcept { return bin < counts_.size() ? counts_[bin] : 0; }
    std::span<const std::uint32_t> histogram() const noexcept { return counts_; }
    const std::deque<WeightSample>& samples() const noexcept { return samples_; }

    /// now - oldest retained sample, clamped below at min_span; 0 when empty.
    Seconds span(Seconds now, Seconds min_span) const noexcept;

private:
    std::size_t capacity_;
    double bin_width_;
    std::deque<WeightSample> samples_;
    std::vector<std::uint32_t> counts_;
};

/// Predicted throughput of the fillets falling in `bins`, from the window's observed rate.
Throughput predict_throughput(const LaneWindow& window, std::span<const std::size_t> bins, Seconds now,
                              Seconds min_span);

/// A non-default recipe as the controller sees it.
struct RecipeRule {
    std::size_t recipe = 0;        // index into Scenario::recipes
    std::uint32_t destination = 0; // destination tag index
    Throughput target;
    double min_weight = 0;
    double max_weight = 0;
    double max_trim = 0;
};

/// Non-default recipes in priority order (ties by declaration order), bound to tag indices.
std::vector<RecipeRule> rules_from_scenario(const Scenario& scenario, const DesignSpace& space);

struct BinAssignment {
    std::int32_t rule = -1;           // index into the rule list; -1 = default
    std::optional<double> trim;       // grams to remove

    bool operator==(const BinAssignment&) const = default;
};

struct LaneStrategy {
    Seconds computed_at = 0;
    std::vector<BinAssignment> bins;  // index = weight bin

    const BinAssignment* at(std::size_t bin) const noexcept { return bin < bins.size() ? &bins[bin] : nullptr; }
};

struct StrategySet {
    std::vector<LaneStrategy> lanes;
    std::vector<bool> unservable;     // per rule: destination unreachable from every lane
};

/**
 * Production control strategy calculation.
 *
 * Recipes are processed in priority order. For each, the lanes that reach
 * its destination are selected and a direct weight range grows one bin at
 * a time from the lower weight limit until the summed predicted throughput
 * meets the target or the upper limit is reached. If the target is still
 * unmet, a trim range grows from the upper limit on the selected lanes whose
 * route to the destination passes a trimmer, up to upper limit + max trim.
 * The available bins in both ranges are then assigned and become
 * unavailable to later recipes.
 *
 * A trimmed bin [b*w, (b+1)*w) carries the instruction (b+1)*w - max_weight,
 * so every fillet in it ends at or below the upper limit.
 */
StrategySet compute_strategies(std::span<const RecipeRule> rules, const RouteCatalog& routes,
                               std::span<const LaneWindow> windows, Seconds now, const ControllerConfig& config);

struct Assignment {
    std::int32_t rule = -1;           // -1 = default recipe
    std::uint32_t destination = 0;
    std::optional<double> trim;
};

class ProductionController {
public:
    ProductionController(ControllerConfig config, std::vector<RecipeRule> rules, std::uint32_t default_destination,
                         RouteCatalog routes);

    void record_weight(std::size_t lane, double grams, Seconds time);
    void recompute(Seconds now);
    Assignment lookup(std::size_t lane, double grams) const;

    bool has_strategy() const noexcept { return has_strategy_; }
    const StrategySet& strategies() const noexcept { return strategies_; }
    const std::vector<RecipeRule>& rules() const noexcept { return rules_; }
    const LaneWindow& window(std::size_t lane) const { return windows_.at(lane); }
    const RouteCatalog& routes() const noexcept { return routes_; }
    std::size_t recomputations() const noexcept { return recomputations_; }

private:
    ControllerConfig config_;
    std::vector<RecipeRule> rules_;
    std::uint32_t default_destination_;
    RouteCatalog routes_;
    std::vector<LaneWindow> windows_;
    StrategySet strategies_;
    bool has_strategy_ = false;
    std::size_t recomputations_ = 0;
};

} // namespace flowdse
