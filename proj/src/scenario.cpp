#include "flowdse/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "flowdse/design_space.hpp"

namespace flowdse {

using nlohmann::json;

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// "*" or a number.
std::optional<double> star_or_number(const json& j, const std::string& field) {
    if (j.is_string()) {
        if (j.get<std::string>() == "*") return std::nullopt;
        throw InputError(field + ": expected a number or \"*\"");
    }
    return j.get<double>();
}

WeightSource parse_weights(const json& j, const std::string& field, const std::filesystem::path& base_dir) {
    WeightSource ws;
    const auto dist = j.at("distribution").get<std::string>();
    if (dist == "empirical") {
        ws.kind = WeightSource::Kind::Empirical;
        ws.file = j.at("file").get<std::string>();
        std::filesystem::path p(ws.file);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        try {
            ws.samples = load_weight_file(p);
        } catch (const InputError& e) {
            throw InputError(field + ".file: " + e.what());
        }
    } else if (dist == "truncated-normal") {
        ws.kind = WeightSource::Kind::TruncatedNormal;
        ws.mean = j.at("mean_g").get<double>();
        ws.stddev = j.at("stddev_g").get<double>();
        ws.lower = j.value("min_g", 0.0);
        ws.upper = j.contains("max_g") ? j.at("max_g").get<double>() : std::numeric_limits<double>::infinity();
        if (!(ws.stddev > 0)) throw InputError(field + ".stddev_g: must be positive");
        if (!(ws.lower >= 0)) throw InputError(field + ".min_g: must be non-negative");
        if (!(ws.lower < ws.upper)) throw InputError(field + ": min_g must be below max_g");
        double mass = normal_cdf((ws.upper - ws.mean) / ws.stddev) - normal_cdf((ws.lower - ws.mean) / ws.stddev);
        if (!(mass > 1e-4)) throw InputError(field + ": truncation interval has negligible probability");
    } else if (dist == "uniform") {
        ws.kind = WeightSource::Kind::Uniform;
        ws.lower = j.at("min_g").get<double>();
        ws.upper = j.at("max_g").get<double>();
        if (!(ws.lower > 0)) throw InputError(field + ".min_g: must be positive");
        if (!(ws.lower < ws.upper)) throw InputError(field + ": min_g must be below max_g");
    } else {
        throw InputError(field + ".distribution: unknown distribution '" + dist + "'");
    }
    return ws;
}

json weights_to_json(const WeightSource& ws) {
    json j;
    switch (ws.kind) {
    case WeightSource::Kind::Empirical:
        j["distribution"] = "empirical";
        j["file"] = ws.file;
        break;
    case WeightSource::Kind::TruncatedNormal:
        j["distribution"] = "truncated-normal";
        j["mean_g"] = ws.mean;
        j["stddev_g"] = ws.stddev;
        j["min_g"] = ws.lower;
        if (std::isfinite(ws.upper)) j["max_g"] = ws.upper;
        break;
    case WeightSource::Kind::Uniform:
        j["distribution"] = "uniform";
        j["min_g"] = ws.lower;
        j["max_g"] = ws.upper;
        break;
    }
    return j;
}

} // namespace

std::size_t Scenario::default_recipe() const {
    for (std::size_t i = 0; i < recipes.size(); ++i)
        if (recipes[i].is_default()) return i;
    throw InputError("scenario '" + id + "' has no default recipe");
}

std::vector<std::size_t> Scenario::priority_order() const {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < recipes.size(); ++i)
        if (!recipes[i].is_default()) order.push_back(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return *recipes[a].priority < *recipes[b].priority; });
    return order;
}

std::vector<double> load_weight_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path.string() + ": cannot open weight file");
    std::vector<double> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream is(line);
        double v = 0;
        std::string rest;
        if (!(is >> v) || (is >> rest) || !(v > 0) || !std::isfinite(v))
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected a positive weight in grams");
        values.push_back(v);
    }
    if (values.empty()) throw InputError(path.string() + ": weight file is empty");
    return values;
}

Scenario parse_scenario(std::string_view json_text, std::string_view source, const std::filesystem::path& base_dir) {
    const std::string where(source);
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InputError(where + ": " + e.what());
    }
    Scenario sc;
    try {
        sc.id = doc.at("id").get<std::string>();
        sc.description = doc.value("description", std::string{});
        sc.horizon = doc.at("horizon_s").get<double>();
        if (!(sc.horizon > 0)) throw InputError(where + ": horizon_s must be positive");

        if (doc.contains("controller")) {
            const auto& c = doc.at("controller");
            const std::string f = where + ": controller";
            if (c.contains("N")) {
                auto n = c.at("N").get<long long>();
                if (n < 1) throw InputError(f + ".N: must be at least 1");
                sc.controller.window_size = static_cast<std::size_t>(n);
            }
            sc.controller.recompute_interval = c.value("t_s", sc.controller.recompute_interval);
            sc.controller.bin_width = c.value("bin_width_g", sc.controller.bin_width);
            sc.controller.warmup = c.value("warmup_s", sc.controller.warmup);
            if (!(sc.controller.recompute_interval > 0)) throw InputError(f + ".t_s: must be positive");
            if (!(sc.controller.bin_width > 0)) throw InputError(f + ".bin_width_g: must be positive");
            if (!(sc.controller.warmup >= 0)) throw InputError(f + ".warmup_s: must be non-negative");
        }

        const auto& recipes = doc.at("recipes");
        if (!recipes.is_array() || recipes.empty()) throw InputError(where + ": recipes: list is empty");
        std::map<int, std::string> seen_priorities;
        std::size_t defaults = 0;
        for (std::size_t i = 0; i < recipes.size(); ++i) {
            const auto& r = recipes[i];
            const std::string f = where + ": recipes[" + std::to_string(i) + "]";
            Recipe rec;
            rec.id = r.contains("recipe") ? (r.at("recipe").is_string() ? r.at("recipe").get<std::string>()
                                                                         : r.at("recipe").dump())
                                          : std::to_string(i + 1);
            rec.destination = r.at("destination").get<std::string>();
            auto prio = star_or_number(r.at("priority"), f + ".priority");
            auto target = star_or_number(r.at("target_throughput_per_min"), f + ".target_throughput_per_min");
            rec.min_weight = r.at("min_fillet_weight_g").get<double>();
            rec.max_weight = r.at("max_fillet_weight_g").get<double>();
            rec.max_trim = r.at("max_trim_weight_g").get<double>();
            if (prio) {
                if (*prio != std::floor(*prio) || *prio < 1) throw InputError(f + ".priority: must be a positive integer");
                rec.priority = static_cast<int>(*prio);
                if (!target) throw InputError(f + ".target_throughput_per_min: only the default recipe may use \"*\"");
                if (!(*target > 0)) throw InputError(f + ".target_throughput_per_min: must be positive");
                rec.target = Throughput::per_minute(*target);
                auto [it, inserted] = seen_priorities.emplace(*rec.priority, rec.id);
                if (!inserted)
                    sc.warnings.push_back(f + ": priority " + std::to_string(*rec.priority) + " shared with recipe " +
                                          it->second + "; declaration order breaks the tie");
            } else {
                ++defaults;
                if (target) throw InputError(f + ".target_throughput_per_min: the default recipe takes \"*\"");
                if (rec.max_trim != 0) throw InputError(f + ".max_trim_weight_g: the default recipe cannot trim");
            }
            if (!(rec.min_weight >= 0)) throw InputError(f + ".min_fillet_weight_g: must be non-negative");
            if (!(rec.min_weight < rec.max_weight)) throw InputError(f + ": min_fillet_weight_g must be below max_fillet_weight_g");
            if (!(rec.max_trim >= 0)) throw InputError(f + ".max_trim_weight_g: must be non-negative");
            sc.recipes.push_back(std::move(rec));
        }
        if (defaults == 0) throw InputError(where + ": recipes: missing default recipe (priority \"*\")");
        if (defaults > 1) throw InputError(where + ": recipes: more than one default recipe");
        if (sc.recipes.size() < 2) throw InputError(where + ": recipes: at least one non-default recipe is required");

        const auto& inflow = doc.at("inflow");
        if (!inflow.is_array() || inflow.empty()) throw InputError(where + ": inflow: list is empty");
        for (std::size_t i = 0; i < inflow.size(); ++i) {
            const auto& l = inflow[i];
            const std::string f = where + ": inflow[" + std::to_string(i) + "]";
            if (l.contains("lane") && l.at("lane").get<std::size_t>() != i + 1)
                throw InputError(f + ".lane: lanes must be listed in order starting at 1");
            LaneInflow lane;
            double rate = l.at("rate_per_min").get<double>();
            if (!(rate > 0)) throw InputError(f + ".rate_per_min: must be positive");
            lane.rate = Throughput::per_minute(rate);
            auto arrivals = l.value("arrivals", std::string("deterministic"));
            if (arrivals == "deterministic") lane.arrivals = ArrivalProcess::Deterministic;
            else if (arrivals == "poisson") lane.arrivals = ArrivalProcess::Poisson;
            else throw InputError(f + ".arrivals: expected \"deterministic\" or \"poisson\"");
            lane.weights = parse_weights(l.at("weights"), f + ".weights", base_dir);
            sc.inflow.push_back(std::move(lane));
        }
    } catch (const json::exception& e) {
        throw InputError(where + ": " + e.what());
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path.string() + ": cannot open scenario file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string(), path.parent_path());
}

std::string scenario_to_json(const Scenario& sc) {
    json doc;
    doc["id"] = sc.id;
    if (!sc.description.empty()) doc["description"] = sc.description;
    doc["horizon_s"] = sc.horizon;
    doc["controller"] = {{"N", sc.controller.window_size},
                         {"t_s", sc.controller.recompute_interval},
                         {"bin_width_g", sc.controller.bin_width},
                         {"warmup_s", sc.controller.warmup}};
    json recipes = json::array();
    for (const auto& r : sc.recipes) {
        json j;
        // Keep numeric recipe ids numeric.
        json id = r.id;
        try {
            std::size_t pos = 0;
            long long v = std::stoll(r.id, &pos);
            if (pos == r.id.size()) id = v;
        } catch (const std::exception&) {
        }
        j["recipe"] = id;
        j["destination"] = r.destination;
        j["priority"] = r.priority ? json(*r.priority) : json("*");
        j["target_throughput_per_min"] = r.target ? json(r.target->per_minute()) : json("*");
        j["min_fillet_weight_g"] = r.min_weight;
        j["max_fillet_weight_g"] = r.max_weight;
        j["max_trim_weight_g"] = r.max_trim;
        recipes.push_back(std::move(j));
    }
    doc["recipes"] = std::move(recipes);
    json inflow = json::array();
    for (std::size_t i = 0; i < sc.inflow.size(); ++i) {
        const auto& l = sc.inflow[i];
        inflow.push_back({{"lane", i + 1},
                          {"rate_per_min", l.rate.per_minute()},
                          {"arrivals", l.arrivals == ArrivalProcess::Poisson ? "poisson" : "deterministic"},
                          {"weights", weights_to_json(l.weights)}});
    }
    doc["inflow"] = std::move(inflow);
    return doc.dump(2);
}

std::vector<std::string> scenario_mismatches(const Scenario& sc, const DesignSpace& space) {
    std::vector<std::string> problems;
    for (const auto& r : sc.recipes) {
        if (r.destination == kTrimTag)
            problems.push_back("scenario '" + sc.id + "': recipe " + r.id + " targets the trim destination");
        else if (!space.destination_index(r.destination))
            problems.push_back("scenario '" + sc.id + "': recipe " + r.id + " references unknown destination '" +
                               r.destination + "'");
    }
    if (sc.inflow.size() != space.lane_count())
        problems.push_back("scenario '" + sc.id + "': " + std::to_string(sc.inflow.size()) + " inflow lanes but design space has " +
                           std::to_string(space.lane_count()) + " origins");
    return problems;
}

} // namespace flowdse
