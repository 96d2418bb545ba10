#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <string>
#include <utility>
#include <vector>

#include "flowdse/design_space.hpp"
#include "flowdse/evaluator.hpp"
#include "flowdse/plant.hpp"
#include "flowdse/scenario.hpp"

namespace flowdse {

/// Environment variable holding the default worker count.
inline constexpr const char* kJobsEnv = "FLOWDSE_JOBS";

struct RunPlan {
    std::filesystem::path space_file;
    std::vector<std::filesystem::path> scenario_files;
    std::uint64_t base_seed = 1;
    std::uint32_t replications = 1;
    std::size_t jobs = 1;
    bool dedup = false;
    bool stop_first = false;
    std::vector<std::pair<std::string, double>> min_attainment;  // scenario id or 1-based index -> ratio
    std::vector<std::pair<std::string, double>> weights;         // optional weighted ranking
    bool clamp = true;
    bool resume = false;
    std::filesystem::path out_dir;
};

/**
 * Seed of one (scenario, replication) cell. The design index does not enter:
 * every design sees the same inflow draws (common random numbers).
 */
std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t scenario, std::uint32_t replication);

/// Design space, scenarios and the designs to evaluate.
struct Workload {
    DesignSpace space;
    std::vector<Scenario> scenarios;
    std::vector<DesignConfiguration> configurations;  // full enumeration
    std::vector<DistinctDesign> classes;              // functional-equivalence classes
    std::vector<std::size_t> designs;                 // enumeration indices to simulate
    std::vector<std::size_t> multiplicity;            // per entry of `designs`
    std::vector<std::size_t> class_of;                // per enumeration index
};

/// Loads and cross-checks the inputs; throws InputError on any problem.
Workload load_workload(const std::filesystem::path& space_file, const std::vector<std::filesystem::path>& scenario_files,
                       bool dedup);

/// Resolves "SCEN=RATIO" style entries (scenario id or 1-based index) to per-scenario values.
std::vector<std::optional<double>> resolve_per_scenario(const std::vector<Scenario>& scenarios,
                                                        const std::vector<std::pair<std::string, double>>& entries);

struct ExploreSummary {
    std::size_t designs_total = 0;       // designs eligible for evaluation
    std::size_t designs_evaluated = 0;
    std::vector<SimulationResult> results;   // sorted by (design, scenario, replication)
    std::vector<KpiVector> kpis;             // one per evaluated design, in design order
    std::vector<std::size_t> multiplicity;   // parallel to kpis
    std::vector<std::size_t> front;          // positions into kpis
    std::optional<std::size_t> qualifying_design;
    std::size_t resumed_cells = 0;
    double wall_time_s = 0;
};

/**
 * Explore -> construct -> simulate -> evaluate over every design and
 * scenario. Writes results.csv, pareto.json, plot.csv, timings.csv and
 * journal.jsonl to plan.out_dir when it is set.
 */
ExploreSummary explore(const RunPlan& plan, std::ostream* log = nullptr);

/// Single replication, optionally with a per-fillet trace.
SimulationResult simulate_one(const DesignSpace& space, const DesignConfiguration& config, const Scenario& scenario,
                              std::uint64_t seed, const ScoreOptions& options = {}, const TraceSink& trace = {});

struct ValidationReport {
    std::size_t configurations = 0;
    std::size_t distinct = 0;
    std::vector<std::string> violations;
    std::vector<std::string> warnings;  // e.g. shared recipe priorities

    std::string summary() const;
};

/// Static checks only; problems are listed rather than thrown where possible.
ValidationReport validate(const std::filesystem::path& space_file, const std::vector<std::filesystem::path>& scenario_files);

/// results.csv body for the given results.
std::string results_csv(const std::vector<SimulationResult>& results);

std::string result_to_json_line(const SimulationResult& result);
SimulationResult result_from_json_line(std::string_view line);

} // namespace flowdse
