#include "flowdse/controller.hpp"

#include <algorithm>
#include <cmath>

namespace flowdse {

namespace {

// Guards bin-edge arithmetic against representation error in gram limits.
constexpr double kEdgeEps = 1e-9;

} // namespace

// ---------------------------------------------------------------------------
// LaneWindow

LaneWindow::LaneWindow(std::size_t capacity, double bin_width) : capacity_(capacity), bin_width_(bin_width) {
    if (capacity_ == 0) throw InputError("controller window size must be at least 1");
    if (!(bin_width_ > 0)) throw InputError("controller bin width must be positive");
}

std::size_t LaneWindow::bin_of(double grams) const noexcept {
    if (!(grams > 0)) return 0;
    return static_cast<std::size_t>(std::floor(grams / bin_width_));
}

void LaneWindow::record(double grams, Seconds time) {
    auto bin = bin_of(grams);
    if (bin >= counts_.size()) counts_.resize(bin + 1, 0);
    counts_[bin]++;
    samples_.push_back({time, grams});
    if (samples_.size() > capacity_) {
        counts_[bin_of(samples_.front().grams)]--;
        samples_.pop_front();
    }
}

Seconds LaneWindow::span(Seconds now, Seconds min_span) const noexcept {
    if (samples_.empty()) return 0;
    return std::max(now - samples_.front().time, min_span);
}

Throughput predict_throughput(const LaneWindow& window, std::span<const std::size_t> bins, Seconds now,
                              Seconds min_span) {
    if (window.empty()) return Throughput{};
    const Seconds span = window.span(now, min_span);
    if (!(span > 0)) return Throughput{};
    std::uint64_t hits = 0;
    for (auto b : bins) hits += window.count(b);
    return Throughput::per_second(static_cast<double>(hits) / span);
}

std::vector<RecipeRule> rules_from_scenario(const Scenario& scenario, const DesignSpace& space) {
    std::vector<RecipeRule> rules;
    for (auto i : scenario.priority_order()) {
        const auto& r = scenario.recipes[i];
        auto dest = space.destination_index(r.destination);
        if (!dest) throw InputError("scenario '" + scenario.id + "': unknown destination '" + r.destination + "'");
        rules.push_back(RecipeRule{i, *dest, *r.target, r.min_weight, r.max_weight, r.max_trim});
    }
    return rules;
}

// ---------------------------------------------------------------------------
// Strategy calculation

StrategySet compute_strategies(std::span<const RecipeRule> rules, const RouteCatalog& routes,
                               std::span<const LaneWindow> windows, Seconds now, const ControllerConfig& config) {
    const std::size_t lanes = routes.lanes.size();
    const double w = config.bin_width;

    std::size_t nbins = 1;
    for (const auto& r : rules)
        nbins = std::max(nbins, static_cast<std::size_t>(std::ceil((r.max_weight + r.max_trim) / w)) + 1);

    StrategySet out;
    out.unservable.assign(rules.size(), false);
    out.lanes.resize(lanes);
    for (auto& ls : out.lanes) {
        ls.computed_at = now;
        ls.bins.assign(nbins, BinAssignment{});
    }

    // Predicted fillets/minute per lane per bin.
    std::vector<std::vector<double>> rate(lanes, std::vector<double>(nbins, 0.0));
    for (std::size_t l = 0; l < lanes && l < windows.size(); ++l) {
        const Seconds span = windows[l].span(now, config.recompute_interval);
        if (!(span > 0)) continue;
        for (std::size_t b = 0; b < nbins; ++b) rate[l][b] = 60.0 * windows[l].count(b) / span;
    }
    auto available = [&](std::size_t l, std::size_t b) { return out.lanes[l].bins[b].rule < 0; };

    for (std::size_t ri = 0; ri < rules.size(); ++ri) {
        const auto& r = rules[ri];
        std::vector<std::size_t> selected;
        for (std::size_t l = 0; l < lanes; ++l)
            if (routes.lanes[l].reachable.test(r.destination)) selected.push_back(l);
        if (selected.empty()) {
            out.unservable[ri] = true;
            continue;
        }
        const double target = r.target.per_minute();

        auto bin_throughput = [&](std::span<const std::size_t> on_lanes, std::size_t b) {
            double sum = 0;
            if (b >= nbins) return sum;
            for (auto l : on_lanes)
                if (available(l, b)) sum += rate[l][b];
            return sum;
        };

        // Direct range: bins fully inside [min, max].
        const auto direct_first = static_cast<std::size_t>(std::ceil(r.min_weight / w - kEdgeEps));
        const auto direct_stop = static_cast<std::size_t>(std::floor(r.max_weight / w + kEdgeEps)); // exclusive
        double predicted = 0;
        std::size_t direct_end = direct_first;
        while (direct_end < direct_stop && predicted < target) {
            predicted += bin_throughput(selected, direct_end);
            ++direct_end;
        }

        // Trim range: bins above the upper limit, trimmed down to it.
        std::vector<std::size_t> trim_lanes;
        for (auto l : selected)
            if (routes.lanes[l].trimmed.test(r.destination)) trim_lanes.push_back(l);
        const auto trim_first = static_cast<std::size_t>(std::floor(r.max_weight / w + kEdgeEps));
        auto instruction = [&](std::size_t b) { return static_cast<double>(b + 1) * w - r.max_weight; };
        // Post-trim weights land in [max - w, max); that interval must stay inside the band.
        const bool trim_feasible = r.max_weight - w >= r.min_weight - kEdgeEps && r.max_weight - w > 0;
        std::size_t trim_end = trim_first;
        if (predicted < target && trim_feasible && !trim_lanes.empty()) {
            while (instruction(trim_end) <= r.max_trim + kEdgeEps && predicted < target) {
                predicted += bin_throughput(trim_lanes, trim_end);
                ++trim_end;
            }
        }

        const auto rule_index = static_cast<std::int32_t>(ri);
        for (auto l : selected)
            for (std::size_t b = direct_first; b < direct_end && b < nbins; ++b)
                if (available(l, b)) out.lanes[l].bins[b] = BinAssignment{rule_index, std::nullopt};
        for (auto l : trim_lanes)
            for (std::size_t b = trim_first; b < trim_end && b < nbins; ++b)
                if (available(l, b)) out.lanes[l].bins[b] = BinAssignment{rule_index, instruction(b)};
    }
    return out;
}

// ---------------------------------------------------------------------------
// ProductionController

ProductionController::ProductionController(ControllerConfig config, std::vector<RecipeRule> rules,
                                           std::uint32_t default_destination, RouteCatalog routes)
    : config_(config), rules_(std::move(rules)), default_destination_(default_destination),
      routes_(std::move(routes)) {
    windows_.reserve(routes_.lanes.size());
    for (std::size_t l = 0; l < routes_.lanes.size(); ++l) windows_.emplace_back(config_.window_size, config_.bin_width);
}

void ProductionController::record_weight(std::size_t lane, double grams, Seconds time) {
    windows_.at(lane).record(grams, time);
}

void ProductionController::recompute(Seconds now) {
    strategies_ = compute_strategies(rules_, routes_, windows_, now, config_);
    has_strategy_ = true;
    ++recomputations_;
}

Assignment ProductionController::lookup(std::size_t lane, double grams) const {
    Assignment a{-1, default_destination_, std::nullopt};
    if (!has_strategy_) return a;
    const auto* bin = strategies_.lanes.at(lane).at(windows_[lane].bin_of(grams));
    if (bin == nullptr || bin->rule < 0) return a;
    a.rule = bin->rule;
    a.destination = rules_[static_cast<std::size_t>(bin->rule)].destination;
    a.trim = bin->trim;
    return a;
}

} // namespace flowdse
