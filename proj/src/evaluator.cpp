#include "flowdse/evaluator.hpp"

#include <algorithm>
#include <numeric>

namespace flowdse {

bool SimulationResult::same_outcome(const SimulationResult& o) const {
    if (recipes.size() != o.recipes.size()) return false;
    for (std::size_t i = 0; i < recipes.size(); ++i) {
        const auto& a = recipes[i];
        const auto& b = o.recipes[i];
        if (a.recipe != b.recipe || a.absorbed != b.absorbed || a.achieved_per_min != b.achieved_per_min ||
            a.attainment != b.attainment)
            return false;
    }
    return destination_counts == o.destination_counts && destination_mass == o.destination_mass &&
           trim_mass == o.trim_mass && injected == o.injected && in_transit == o.in_transit && kpi == o.kpi;
}

SimulationResult score(const RunTallies& tallies, const Scenario& scenario, const std::vector<std::string>& destination_tags,
                       const ScoreOptions& options) {
    SimulationResult res;
    res.scenario_id = scenario.id;
    const double minutes = tallies.horizon / 60.0;
    double sum = 0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < scenario.recipes.size(); ++i) {
        const auto& r = scenario.recipes[i];
        RecipeOutcome o;
        o.recipe = r.id;
        o.destination = r.destination;
        o.is_default = r.is_default();
        o.absorbed = tallies.destinations.recipe_absorbed.at(i);
        o.achieved_per_min = minutes > 0 ? static_cast<double>(o.absorbed) / minutes : 0.0;
        if (!o.is_default) {
            o.target_per_min = r.target->per_minute();
            o.attainment = o.achieved_per_min / o.target_per_min;
            if (options.clamp) o.attainment = std::min(o.attainment, 1.0);
            sum += o.attainment;
            ++counted;
        }
        res.recipes.push_back(std::move(o));
    }
    res.kpi = counted ? sum / static_cast<double>(counted) : 0.0;
    res.destination_tags = destination_tags;
    res.destination_counts = tallies.destinations.count;
    res.destination_mass = tallies.destinations.mass;
    res.trim_mass = tallies.destinations.trim_mass;
    res.injected = tallies.injected;
    res.in_transit = tallies.in_transit;
    res.events = tallies.events;
    return res;
}

bool dominates(const KpiVector& a, const KpiVector& b) {
    bool strictly = false;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (a.values[i] < b.values[i]) return false;
        if (a.values[i] > b.values[i]) strictly = true;
    }
    return strictly;
}

std::vector<std::size_t> pareto_front(std::span<const KpiVector> vectors) {
    // Lexicographically descending order: a vector can only be dominated by
    // one sorted before it, and any dominator of a dominated vector is itself
    // dominated by a front member, so checking the front so far suffices.
    std::vector<std::size_t> order(vectors.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vectors[a].values > vectors[b].values; });
    std::vector<std::size_t> front;
    for (auto i : order) {
        bool dominated = std::any_of(front.begin(), front.end(),
                                     [&](std::size_t f) { return dominates(vectors[f], vectors[i]); });
        if (!dominated) front.push_back(i);
    }
    std::sort(front.begin(), front.end());
    return front;
}

std::vector<KpiVector> merge_fronts(std::span<const KpiVector> a, std::span<const KpiVector> b) {
    std::vector<KpiVector> all(a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    std::vector<KpiVector> out;
    for (auto i : pareto_front(all)) out.push_back(all[i]);
    return out;
}

bool Thresholds::met_by(const KpiVector& v) const {
    for (std::size_t i = 0; i < minimum.size(); ++i) {
        if (!minimum[i]) continue;
        if (i >= v.values.size() || v.values[i] < *minimum[i]) return false;
    }
    return true;
}

std::size_t explore_until(std::size_t design_count, const std::function<KpiVector(std::size_t)>& evaluate,
                          const std::optional<Thresholds>& thresholds) {
    for (std::size_t d = 0; d < design_count; ++d) {
        auto v = evaluate(d);
        if (thresholds && thresholds->met_by(v)) return d + 1;
    }
    return design_count;
}

std::vector<std::size_t> filter_by_minimums(std::span<const KpiVector> vectors, const Thresholds& thresholds) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < vectors.size(); ++i)
        if (thresholds.met_by(vectors[i])) out.push_back(i);
    return out;
}

std::vector<std::pair<std::size_t, double>> rank_by_weights(std::span<const KpiVector> vectors,
                                                            std::span<const double> weights) {
    std::vector<std::pair<std::size_t, double>> ranked;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        double s = 0;
        for (std::size_t k = 0; k < weights.size() && k < vectors[i].values.size(); ++k) s += weights[k] * vectors[i].values[k];
        ranked.emplace_back(i, s);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return ranked;
}

} // namespace flowdse
