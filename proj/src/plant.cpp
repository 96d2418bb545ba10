#include "flowdse/plant.hpp"

#include <cmath>
#include <string>

namespace flowdse {

double apply_trim(Fillet& f, double grams) {
    if (!(grams > 0) || !(grams < f.weight))
        throw SimulationError("trim instruction " + std::to_string(grams) + " g invalid for fillet " +
                              std::to_string(f.id) + " of " + std::to_string(f.weight) + " g");
    f.weight -= grams;
    f.trimmed += grams;
    return grams;
}

// ---------------------------------------------------------------------------
// WeightSampler

WeightSampler::WeightSampler(const WeightSource& source, RandomStream stream)
    : source_(&source), stream_(std::move(stream)) {}

double WeightSampler::draw() {
    const auto& src = *source_;
    switch (src.kind) {
    case WeightSource::Kind::Empirical:
        return src.samples[stream_.index(src.samples.size())];
    case WeightSource::Kind::Uniform:
        return stream_.uniform(src.lower, src.upper);
    case WeightSource::Kind::TruncatedNormal:
        for (int attempt = 0; attempt < 10'000'000; ++attempt) {
            double w = stream_.normal(src.mean, src.stddev);
            if (w >= src.lower && w <= src.upper && w > 0) return w;
        }
        throw SimulationError("truncated normal sampler failed to hit its interval");
    }
    throw SimulationError("unknown weight source");
}

// ---------------------------------------------------------------------------
// PlantModel

PlantModel::PlantModel(const DesignSpace& space, const DesignConfiguration& config, const Scenario& scenario)
    : space_(&space), scenario_(&scenario) {
    auto problems = scenario_mismatches(scenario, space);
    if (!problems.empty()) throw InputError(problems.front());

    graph_ = build_graph(space, config);
    routes_ = derive_routes(space, config);
    rules_ = rules_from_scenario(scenario, space);
    default_recipe_ = scenario.default_recipe();
    default_destination_ = *space.destination_index(scenario.recipes[default_recipe_].destination);
    if (auto trim = space.destination_index(kTrimTag)) trim_destination_ = static_cast<std::int32_t>(*trim);

    for (std::size_t l = 0; l < routes_.lanes.size(); ++l)
        if (!routes_.lanes[l].reachable.test(default_destination_))
            throw InputError("lane " + std::to_string(l + 1) + " cannot reach default destination '" +
                             scenario.recipes[default_recipe_].destination + "'");

    for (std::uint32_t m = 0; m < space.module_count(); ++m) {
        if (!graph_.connected[m]) continue;
        if (space.module(m).kind == ModuleKind::Trimming && trim_destination_ < 0)
            throw InputError("design uses trimmer '" + space.module(m).id + "' but has no trim destination");
    }

    route_table_.resize(space.module_count());
    for (std::uint32_t m = 0; m < space.module_count(); ++m) {
        if (!graph_.connected[m] || space.module(m).kind != ModuleKind::Distribution) continue;
        auto& table = route_table_[m];
        table.assign(space.destination_tags().size(), -1);
        for (std::uint32_t d = 0; d < table.size(); ++d)
            if (auto p = routes_.route(m, d)) table[d] = static_cast<std::int8_t>(*p);
    }
}

// ---------------------------------------------------------------------------
// One replication

class PlantRun {
public:
    PlantRun(const PlantModel& model, std::uint64_t seed, const PlantOptions& options)
        : model_(model), space_(*model.space_), scenario_(*model.scenario_), options_(options),
          controller_(scenario_.controller, model.rules_, model.default_destination_, model.routes_) {
        const auto lanes = space_.lane_count();
        for (std::size_t l = 0; l < lanes; ++l) {
            const auto label = "lane-" + std::to_string(l + 1);
            samplers_.emplace_back(scenario_.inflow[l].weights, RandomStream(seed, label + "/weights"));
            arrival_streams_.emplace_back(seed, label + "/arrivals");
        }
        emitted_.assign(lanes, 0);
        auto& dest = tallies_.destinations;
        dest.count.assign(space_.destination_tags().size(), 0);
        dest.mass.assign(space_.destination_tags().size(), 0.0);
        dest.recipe_absorbed.assign(scenario_.recipes.size(), 0);
        tallies_.horizon = scenario_.horizon;
        fillets_.reserve(static_cast<std::size_t>(expected_fillets()) + 16);
    }

    RunOutput run() {
        for (std::uint32_t l = 0; l < space_.lane_count(); ++l) schedule_arrival(l);
        kernel_.schedule_at(scenario_.controller.warmup, EventKind::Recompute, 0);
        tallies_.events = kernel_.run(scenario_.horizon, [this](const Event& ev) { dispatch(ev); });
        tallies_.recomputations = controller_.recomputations();
        for (const auto& f : fillets_) {
            if (f.absorbed_at >= 0) continue;
            tallies_.in_transit++;
            tallies_.in_transit_mass += f.weight;
        }
        RunOutput out;
        out.tallies = std::move(tallies_);
        if (options_.keep_fillets) out.fillets = std::move(fillets_);
        return out;
    }

private:
    const PlantModel& model_;
    const DesignSpace& space_;
    const Scenario& scenario_;
    const PlantOptions& options_;
    Kernel kernel_;
    ProductionController controller_;
    std::vector<WeightSampler> samplers_;
    std::vector<RandomStream> arrival_streams_;
    std::vector<std::uint64_t> emitted_;
    std::vector<Fillet> fillets_;
    RunTallies tallies_;

    double expected_fillets() const {
        double total = 0;
        for (const auto& l : scenario_.inflow) total += l.rate.per_second() * scenario_.horizon;
        return std::min(total * 1.2, 1e7);
    }

    void trace(const Fillet& f, std::uint32_t module, std::string_view action) {
        if (options_.trace) options_.trace(TraceRow{kernel_.now(), space_.module(module).id, f.id, f.weight, action});
    }

    void schedule_arrival(std::uint32_t lane) {
        const auto& inflow = scenario_.inflow[lane];
        Seconds t;
        if (inflow.arrivals == ArrivalProcess::Deterministic) {
            // k-th arrival at k * 60 / rate, computed directly to avoid drift.
            t = static_cast<double>(emitted_[lane] + 1) * 60.0 / inflow.rate.per_minute();
        } else {
            t = kernel_.now() + arrival_streams_[lane].exponential(inflow.rate.per_second());
        }
        if (t <= scenario_.horizon) kernel_.schedule_at(t, EventKind::Arrival, lane);
    }

    void forward(std::uint32_t module, std::uint32_t port, std::uint32_t fillet) {
        const auto next = model_.graph_.next[module][port];
        if (next < 0) throw SimulationError("fillet left '" + space_.module(module).id + "' through an unconnected port");
        kernel_.schedule_at(kernel_.now() + space_.module(module).latency, EventKind::Enter,
                            static_cast<std::uint32_t>(next), fillet);
    }

    void dispatch(const Event& ev) {
        switch (ev.kind) {
        case EventKind::Arrival: inject(ev.target); break;
        case EventKind::Enter: enter(ev.target, ev.entity); break;
        case EventKind::Recompute:
            controller_.recompute(kernel_.now());
            kernel_.schedule_at(kernel_.now() + scenario_.controller.recompute_interval, EventKind::Recompute, 0);
            break;
        case EventKind::User: break;
        }
    }

    void inject(std::uint32_t lane) {
        const auto origin = space_.origins()[lane];
        Fillet f;
        f.id = static_cast<std::uint32_t>(fillets_.size());
        f.lane = lane;
        f.weight = f.original_weight = samplers_[lane].draw();
        f.injected_at = kernel_.now();
        fillets_.push_back(f);
        emitted_[lane]++;
        tallies_.injected++;
        tallies_.injected_mass += f.weight;
        trace(f, origin, "inject");
        forward(origin, 0, f.id);
        schedule_arrival(lane);
    }

    void enter(std::uint32_t module, std::uint32_t id) {
        auto& f = fillets_[id];
        switch (space_.module(module).kind) {
        case ModuleKind::Origin:
            throw SimulationError("fillet routed into origin '" + space_.module(module).id + "'");
        case ModuleKind::Weighing:
            controller_.record_weight(f.lane, f.weight, kernel_.now());
            trace(f, module, "weigh");
            forward(module, 0, id);
            break;
        case ModuleKind::Assignment: {
            auto a = controller_.lookup(f.lane, f.weight);
            f.destination = static_cast<std::int32_t>(a.destination);
            f.recipe = a.rule < 0 ? static_cast<std::int32_t>(model_.default_recipe_)
                                  : static_cast<std::int32_t>(model_.rules_[static_cast<std::size_t>(a.rule)].recipe);
            f.trim_instruction = a.trim;
            trace(f, module, "assign");
            forward(module, 0, id);
            break;
        }
        case ModuleKind::Trimming:
            if (f.trim_instruction && f.trimmed == 0) {
                tallies_.destinations.trim_mass += apply_trim(f, *f.trim_instruction);
                trace(f, module, "trim");
            } else {
                trace(f, module, "pass");
            }
            forward(module, 0, id);
            break;
        case ModuleKind::Distribution: {
            if (f.destination < 0)
                throw SimulationError("unassigned fillet reached distributor '" + space_.module(module).id + "'");
            const auto port = model_.route_table_[module][static_cast<std::size_t>(f.destination)];
            if (port < 0)
                throw SimulationError("destination '" + space_.destination_tags()[f.destination] +
                                      "' unreachable from distributor '" + space_.module(module).id + "'");
            trace(f, module, "distribute");
            forward(module, static_cast<std::uint32_t>(port), id);
            break;
        }
        case ModuleKind::Destination: {
            const auto d = space_.destination_of(module);
            f.absorbed_at = d;
            f.absorbed_time = kernel_.now();
            auto& tally = tallies_.destinations;
            tally.count[d]++;
            tally.mass[d] += f.weight;
            if (f.recipe >= 0) tally.recipe_absorbed[static_cast<std::size_t>(f.recipe)]++;
            trace(f, module, "absorb");
            break;
        }
        }
    }
};

RunOutput PlantModel::run(std::uint64_t seed, const PlantOptions& options) const {
    PlantRun run(*this, seed, options);
    return run.run();
}

} // namespace flowdse
