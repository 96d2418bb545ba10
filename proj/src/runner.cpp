#include "flowdse/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "flowdse/error.hpp"

namespace flowdse {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::string read_file(const fs::path& path, std::string_view what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path.string() + ": cannot open " + std::string(what));
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct CellKey {
    std::size_t design;
    std::size_t scenario;
    std::uint32_t replication;
    auto operator<=>(const CellKey&) const = default;
};

CellKey key_of(const SimulationResult& r) { return {r.design, r.scenario, r.replication}; }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(path.string() + ": cannot write");
    out << text;
    if (!out) throw SimulationError(path.string() + ": write failed");
}

std::string fingerprint(const RunPlan& plan) {
    std::string blob = read_file(plan.space_file, "design-space file");
    for (const auto& s : plan.scenario_files) blob += '\x1f' + read_file(s, "scenario file");
    blob += "|seed=" + std::to_string(plan.base_seed) + "|reps=" + std::to_string(plan.replications) +
            "|dedup=" + std::to_string(plan.dedup) + "|clamp=" + std::to_string(plan.clamp);
    return hex64(hash_label(blob));
}

// Journal: header line then one JSON object per completed cell, append-only.
class Journal {
public:
    Journal(fs::path path, const std::string& print, bool resume, std::map<CellKey, SimulationResult>& done)
        : path_(std::move(path)) {
        std::vector<std::string> keep;
        const json header = {{"flowdse_journal", 1}, {"fingerprint", print}};
        if (resume && fs::exists(path_)) {
            std::ifstream in(path_);
            std::string line;
            bool first = true;
            while (std::getline(in, line)) {
                if (first) {
                    first = false;
                    json h;
                    try {
                        h = json::parse(line);
                    } catch (const json::exception&) {
                        throw InputError(path_.string() + ": unreadable journal header");
                    }
                    if (h.value("fingerprint", std::string{}) != print)
                        throw InputError(path_.string() + ": journal belongs to different inputs or settings");
                    continue;
                }
                try {
                    auto r = result_from_json_line(line);
                    done.insert_or_assign(key_of(r), std::move(r));
                    keep.push_back(line);
                } catch (const std::exception&) {
                    // A torn final line from an interrupted run; the cell is recomputed.
                }
            }
        }
        // Rewrite without torn lines, then append from here on.
        std::ofstream fresh(path_, std::ios::trunc);
        if (!fresh) throw InputError(path_.string() + ": cannot write journal");
        fresh << header.dump() << '\n';
        for (const auto& l : keep) fresh << l << '\n';
        fresh.close();
        out_.open(path_, std::ios::app);
    }

    void append(const SimulationResult& r) {
        std::lock_guard lock(mutex_);
        out_ << result_to_json_line(r) << '\n';
        out_.flush();
    }

private:
    fs::path path_;
    std::ofstream out_;
    std::mutex mutex_;
};

SimulationResult run_cell(const Workload& w, const CellKey& cell, std::uint64_t base_seed, const ScoreOptions& options) {
    const auto start = Clock::now();
    const auto& scenario = w.scenarios[cell.scenario];
    const auto seed = derive_seed(base_seed, cell.scenario, cell.replication);
    PlantModel model(w.space, w.configurations[cell.design], scenario);
    auto out = model.run(seed);
    auto res = score(out.tallies, scenario, w.space.destination_tags(), options);
    res.design = cell.design;
    res.scenario = cell.scenario;
    res.replication = cell.replication;
    res.seed = seed;
    res.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
    return res;
}

std::size_t resolve_jobs(std::size_t requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs the cells on a fixed pool; the first failure cancels the rest and is rethrown.
std::vector<SimulationResult> run_cells(const Workload& w, const std::vector<CellKey>& cells, const RunPlan& plan,
                                        Journal* journal) {
    std::vector<SimulationResult> out(cells.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    const ScoreOptions options{plan.clamp};

    auto worker = [&] {
        while (!failed.load()) {
            const auto i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                out[i] = run_cell(w, cells[i], plan.base_seed, options);
                if (journal) journal->append(out[i]);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    const auto jobs = std::min(resolve_jobs(plan.jobs), std::max<std::size_t>(cells.size(), 1));
    {
        std::vector<std::jthread> pool;
        for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
        worker();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

json wiring_json(const DesignSpace& space, const DesignConfiguration& c) {
    json arr = json::array();
    for (std::uint32_t o = 0; o < c.chosen.size(); ++o)
        if (c.chosen[o] >= 0)
            arr.push_back({space.out_port_name(o), space.in_port_name(static_cast<std::uint32_t>(c.chosen[o]))});
    return arr;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t scenario, std::uint32_t replication) {
    std::uint64_t h = mix64(base_seed);
    h = mix64(h ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(scenario) + 1)));
    h = mix64(h ^ (0xC2B2AE3D27D4EB4FULL * (static_cast<std::uint64_t>(replication) + 1)));
    return h;
}

Workload load_workload(const fs::path& space_file, const std::vector<fs::path>& scenario_files, bool dedup) {
    if (scenario_files.empty()) throw InputError("no scenario files given");
    Workload w{load_design_space(space_file), {}, {}, {}, {}, {}, {}};
    if (auto problems = check_design_space(w.space); !problems.empty())
        throw InputError(space_file.string() + ": " + problems.front());
    for (const auto& f : scenario_files) {
        auto sc = load_scenario(f);
        if (auto problems = scenario_mismatches(sc, w.space); !problems.empty())
            throw InputError(f.string() + ": " + problems.front());
        for (const auto& other : w.scenarios)
            if (other.id == sc.id) throw InputError(f.string() + ": id: duplicate scenario id '" + sc.id + "'");
        w.scenarios.push_back(std::move(sc));
    }
    w.configurations = enumerate_all(w.space);
    if (w.configurations.empty()) throw InputError(space_file.string() + ": design space admits no valid configuration");
    w.classes = deduplicate(w.space, w.configurations);
    w.class_of.assign(w.configurations.size(), 0);
    for (std::size_t c = 0; c < w.classes.size(); ++c)
        for (auto m : w.classes[c].members) w.class_of[m] = c;
    if (dedup) {
        for (const auto& cls : w.classes) {
            w.designs.push_back(cls.index);
            w.multiplicity.push_back(cls.multiplicity);
        }
    } else {
        for (std::size_t i = 0; i < w.configurations.size(); ++i) {
            w.designs.push_back(i);
            w.multiplicity.push_back(1);
        }
    }
    return w;
}

std::vector<std::optional<double>> resolve_per_scenario(const std::vector<Scenario>& scenarios,
                                                        const std::vector<std::pair<std::string, double>>& entries) {
    std::vector<std::optional<double>> out(scenarios.size());
    for (const auto& [name, value] : entries) {
        std::optional<std::size_t> hit;
        for (std::size_t s = 0; s < scenarios.size(); ++s)
            if (scenarios[s].id == name) hit = s;
        if (!hit && !name.empty() && std::all_of(name.begin(), name.end(), ::isdigit)) {
            auto n = std::stoull(name);
            if (n >= 1 && n <= scenarios.size()) hit = n - 1;
        }
        if (!hit) throw InputError("unknown scenario '" + name + "' (use a scenario id or a 1-based index)");
        out[*hit] = value;
    }
    return out;
}

ExploreSummary explore(const RunPlan& plan, std::ostream* log) {
    const auto start = Clock::now();
    if (plan.replications < 1) throw InputError("replications must be at least 1");
    const Workload w = load_workload(plan.space_file, plan.scenario_files, plan.dedup);
    const auto minimums = resolve_per_scenario(w.scenarios, plan.min_attainment);
    const auto weights = resolve_per_scenario(w.scenarios, plan.weights);
    if (plan.stop_first && std::none_of(minimums.begin(), minimums.end(), [](auto& m) { return m.has_value(); }) && log)
        *log << "note: --stop-first without --min-attainment evaluates every design\n";

    std::map<CellKey, SimulationResult> done;
    std::unique_ptr<Journal> journal;
    if (!plan.out_dir.empty()) {
        fs::create_directories(plan.out_dir);
        journal = std::make_unique<Journal>(plan.out_dir / "journal.jsonl", fingerprint(plan), plan.resume, done);
    }

    ExploreSummary summary;
    summary.designs_total = w.designs.size();
    const Thresholds thresholds{minimums};
    const std::size_t wave = plan.stop_first ? std::max<std::size_t>(16, resolve_jobs(plan.jobs) * 4) : w.designs.size();
    const std::size_t scenarios = w.scenarios.size();

    std::size_t evaluated = 0;
    for (std::size_t begin = 0; begin < w.designs.size() && !summary.qualifying_design; begin += wave) {
        const auto end = std::min(begin + wave, w.designs.size());
        std::vector<CellKey> todo;
        for (auto d = begin; d < end; ++d)
            for (std::size_t s = 0; s < scenarios; ++s)
                for (std::uint32_t r = 0; r < plan.replications; ++r) {
                    CellKey k{w.designs[d], s, r};
                    if (done.count(k)) ++summary.resumed_cells;
                    else todo.push_back(k);
                }
        for (auto& r : run_cells(w, todo, plan, journal.get())) done.insert_or_assign(key_of(r), std::move(r));

        for (auto d = begin; d < end; ++d) {
            KpiVector v{w.designs[d], std::vector<double>(scenarios, 0.0)};
            for (std::size_t s = 0; s < scenarios; ++s) {
                double sum = 0;
                for (std::uint32_t r = 0; r < plan.replications; ++r) sum += done.at({w.designs[d], s, r}).kpi;
                v.values[s] = sum / plan.replications;
            }
            summary.kpis.push_back(std::move(v));
            summary.multiplicity.push_back(w.multiplicity[d]);
            ++evaluated;
            if (plan.stop_first && thresholds.met_by(summary.kpis.back())) {
                summary.qualifying_design = w.designs[d];
                break;
            }
        }
        if (log) *log << "evaluated " << evaluated << "/" << w.designs.size() << " designs\n";
    }
    summary.designs_evaluated = evaluated;

    std::size_t last_design = summary.kpis.empty() ? 0 : summary.kpis.back().design;
    for (auto& [k, r] : done)
        if (k.design <= last_design && k.replication < plan.replications &&
            std::binary_search(w.designs.begin(), w.designs.end(), k.design))
            summary.results.push_back(std::move(r));
    summary.front = pareto_front(summary.kpis);
    summary.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();

    if (plan.out_dir.empty()) return summary;

    write_text(plan.out_dir / "results.csv", results_csv(summary.results));

    std::string timings = "design,scenario,replication,wall_time_s\n";
    for (const auto& r : summary.results)
        timings += std::to_string(r.design) + "," + r.scenario_id + "," + std::to_string(r.replication) + "," +
                   fmt(r.wall_time_s) + "\n";
    write_text(plan.out_dir / "timings.csv", timings);

    std::vector<bool> on_front(summary.kpis.size(), false);
    for (auto i : summary.front) on_front[i] = true;

    std::string plot = "design,multiplicity,canonical_class";
    for (const auto& s : w.scenarios) plot += ",kpi_" + s.id;
    plot += ",pareto\n";
    for (std::size_t i = 0; i < summary.kpis.size(); ++i) {
        const auto& v = summary.kpis[i];
        plot += std::to_string(v.design) + "," + std::to_string(summary.multiplicity[i]) + "," +
                std::to_string(w.class_of[v.design]);
        for (auto x : v.values) plot += "," + fmt(x);
        plot += on_front[i] ? ",1\n" : ",0\n";
    }
    write_text(plan.out_dir / "plot.csv", plot);

    json report;
    json ids = json::array();
    for (const auto& s : w.scenarios) ids.push_back(s.id);
    report["scenarios"] = ids;
    report["dedup"] = plan.dedup;
    report["replications"] = plan.replications;
    report["base_seed"] = plan.base_seed;
    report["clamped"] = plan.clamp;
    report["designs_total"] = summary.designs_total;
    report["designs_evaluated"] = summary.designs_evaluated;
    report["qualifying_design"] = summary.qualifying_design ? json(*summary.qualifying_design) : json(nullptr);
    json front = json::array();
    std::size_t with_multiplicity = 0;
    std::vector<std::size_t> classes;
    for (auto i : summary.front) {
        const auto& v = summary.kpis[i];
        const auto cls = w.class_of[v.design];
        front.push_back({{"design", v.design},
                         {"kpi", v.values},
                         {"multiplicity", summary.multiplicity[i]},
                         {"canonical_class", cls},
                         {"wiring", wiring_json(w.space, w.configurations[v.design])}});
        with_multiplicity += summary.multiplicity[i];
        classes.push_back(cls);
    }
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    report["front"] = front;
    report["front_size"] = summary.front.size();
    report["front_size_with_multiplicity"] = with_multiplicity;
    report["front_distinct"] = classes.size();

    if (std::any_of(minimums.begin(), minimums.end(), [](auto& m) { return m.has_value(); })) {
        json mins = json::object();
        for (std::size_t s = 0; s < scenarios; ++s)
            if (minimums[s]) mins[w.scenarios[s].id] = *minimums[s];
        json meeting = json::array();
        for (auto i : filter_by_minimums(summary.kpis, thresholds)) meeting.push_back(summary.kpis[i].design);
        report["minimums"] = mins;
        report["meeting_minimums"] = meeting;
    }
    if (std::any_of(weights.begin(), weights.end(), [](auto& m) { return m.has_value(); })) {
        std::vector<double> wv(scenarios, 0.0);
        for (std::size_t s = 0; s < scenarios; ++s) wv[s] = weights[s].value_or(0.0);
        json ranking = json::array();
        for (auto [i, score] : rank_by_weights(summary.kpis, wv))
            ranking.push_back({{"design", summary.kpis[i].design}, {"score", score}});
        report["weights"] = wv;
        report["weighted_ranking"] = ranking;
    }
    write_text(plan.out_dir / "pareto.json", report.dump(2) + "\n");
    return summary;
}

SimulationResult simulate_one(const DesignSpace& space, const DesignConfiguration& config, const Scenario& scenario,
                              std::uint64_t seed, const ScoreOptions& options, const TraceSink& trace) {
    const auto start = Clock::now();
    PlantModel model(space, config, scenario);
    PlantOptions po;
    po.trace = trace;
    auto out = model.run(seed, po);
    auto res = score(out.tallies, scenario, space.destination_tags(), options);
    res.seed = seed;
    res.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
    return res;
}

std::string ValidationReport::summary() const {
    return std::to_string(configurations) + " configurations, " + std::to_string(distinct) + " distinct, " +
           std::to_string(violations.size()) + " violations";
}

ValidationReport validate(const fs::path& space_file, const std::vector<fs::path>& scenario_files) {
    ValidationReport report;
    std::optional<DesignSpace> space;
    try {
        space.emplace(load_design_space(space_file));
    } catch (const InputError& e) {
        report.violations.push_back(e.what());
    }
    if (space) {
        for (auto& p : check_design_space(*space)) report.violations.push_back(space_file.string() + ": " + p);
        auto configs = enumerate_all(*space);
        report.configurations = configs.size();
        report.distinct = deduplicate(*space, configs).size();
    }
    for (const auto& f : scenario_files) {
        try {
            auto sc = load_scenario(f);
            for (auto& wmsg : sc.warnings) report.warnings.push_back(wmsg);
            if (space)
                for (auto& p : scenario_mismatches(sc, *space)) report.violations.push_back(f.string() + ": " + p);
        } catch (const InputError& e) {
            report.violations.push_back(e.what());
        }
    }
    return report;
}

std::string results_csv(const std::vector<SimulationResult>& results) {
    std::string out = "design,scenario,scenario_index,replication,seed,injected,in_transit,events,trim_mass_g,kpi,recipes,"
                      "destinations\n";
    for (const auto& r : results) {
        out += std::to_string(r.design) + "," + r.scenario_id + "," + std::to_string(r.scenario) + "," +
               std::to_string(r.replication) + "," + std::to_string(r.seed) + "," + std::to_string(r.injected) + "," +
               std::to_string(r.in_transit) + "," + std::to_string(r.events) + "," + fmt(r.trim_mass) + "," + fmt(r.kpi) +
               ",";
        for (std::size_t i = 0; i < r.recipes.size(); ++i) {
            const auto& o = r.recipes[i];
            if (i) out += ";";
            out += o.recipe + ":" + o.destination + ":" + std::to_string(o.absorbed) + ":" + fmt(o.achieved_per_min) + ":" +
                   (o.is_default ? std::string("*") : fmt(o.target_per_min)) + ":" +
                   (o.is_default ? std::string("*") : fmt(o.attainment));
        }
        out += ",";
        for (std::size_t d = 0; d < r.destination_tags.size(); ++d) {
            if (d) out += ";";
            out += r.destination_tags[d] + ":" + std::to_string(r.destination_counts[d]) + ":" + fmt(r.destination_mass[d]);
        }
        out += "\n";
    }
    return out;
}

std::string result_to_json_line(const SimulationResult& r) {
    json recipes = json::array();
    for (const auto& o : r.recipes)
        recipes.push_back({{"recipe", o.recipe},
                           {"destination", o.destination},
                           {"default", o.is_default},
                           {"absorbed", o.absorbed},
                           {"achieved_per_min", o.achieved_per_min},
                           {"target_per_min", o.target_per_min},
                           {"attainment", o.attainment}});
    json j = {{"design", r.design},
              {"scenario", r.scenario},
              {"scenario_id", r.scenario_id},
              {"replication", r.replication},
              {"seed", r.seed},
              {"recipes", recipes},
              {"destination_tags", r.destination_tags},
              {"destination_counts", r.destination_counts},
              {"destination_mass", r.destination_mass},
              {"trim_mass", r.trim_mass},
              {"injected", r.injected},
              {"in_transit", r.in_transit},
              {"events", r.events},
              {"kpi", r.kpi},
              {"wall_time_s", r.wall_time_s}};
    return j.dump();
}

SimulationResult result_from_json_line(std::string_view line) {
    const auto j = json::parse(line);
    SimulationResult r;
    r.design = j.at("design").get<std::size_t>();
    r.scenario = j.at("scenario").get<std::size_t>();
    r.scenario_id = j.at("scenario_id").get<std::string>();
    r.replication = j.at("replication").get<std::uint32_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& o : j.at("recipes"))
        r.recipes.push_back({o.at("recipe").get<std::string>(), o.at("destination").get<std::string>(),
                             o.at("default").get<bool>(), o.at("absorbed").get<std::uint64_t>(),
                             o.at("achieved_per_min").get<double>(), o.at("target_per_min").get<double>(),
                             o.at("attainment").get<double>()});
    r.destination_tags = j.at("destination_tags").get<std::vector<std::string>>();
    r.destination_counts = j.at("destination_counts").get<std::vector<std::uint64_t>>();
    r.destination_mass = j.at("destination_mass").get<std::vector<double>>();
    r.trim_mass = j.at("trim_mass").get<double>();
    r.injected = j.at("injected").get<std::uint64_t>();
    r.in_transit = j.at("in_transit").get<std::uint64_t>();
    r.events = j.at("events").get<std::uint64_t>();
    r.kpi = j.at("kpi").get<double>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    return r;
}

} // namespace flowdse
