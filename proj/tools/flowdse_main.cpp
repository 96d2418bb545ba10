// Command-line front end: explore, simulate, validate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowdse/error.hpp"
#include "flowdse/runner.hpp"

namespace {

using namespace flowdse;

std::pair<std::string, double> parse_assignment(const std::string& text, const std::string& option) {
    const auto eq = text.rfind('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
        throw InputError(option + ": expected SCEN=VALUE, got '" + text + "'");
    try {
        std::size_t pos = 0;
        double v = std::stod(text.substr(eq + 1), &pos);
        if (pos != text.size() - eq - 1) throw std::invalid_argument("trailing");
        return {text.substr(0, eq), v};
    } catch (const std::exception&) {
        throw InputError(option + ": '" + text.substr(eq + 1) + "' is not a number");
    }
}

void write_trace_header(std::ostream& out) { out << "time_s,module,fillet,weight_g,action\n"; }

int run(int argc, char** argv) {
    CLI::App app{"Design-space exploration for fillet-processing lines"};
    app.require_subcommand(1);

    // explore
    RunPlan plan;
    std::vector<std::string> scenarios;
    std::vector<std::string> minimums;
    std::vector<std::string> weights;
    bool no_clamp = false;
    std::string space_file, out_dir;
    auto* explore_cmd = app.add_subcommand("explore", "Simulate every design under every scenario and report the Pareto front");
    explore_cmd->add_option("--space", space_file, "Design-space JSON file")->required();
    explore_cmd->add_option("--scenario", scenarios, "Scenario JSON file (repeatable)")->required();
    explore_cmd->add_option("--seed", plan.base_seed, "Base seed")->default_val(1);
    explore_cmd->add_option("--jobs,-j", plan.jobs, "Worker threads (0 = all cores)")->envname(kJobsEnv)->default_val(0);
    explore_cmd->add_option("--replications", plan.replications, "Replications per (design, scenario)")->default_val(1);
    explore_cmd->add_flag("--dedup", plan.dedup, "Simulate one representative per functional-equivalence class");
    explore_cmd->add_flag("--stop-first", plan.stop_first, "Stop after the first design meeting every --min-attainment");
    explore_cmd->add_option("--min-attainment", minimums, "Minimum KPI per scenario, SCEN=RATIO (id or 1-based index)");
    explore_cmd->add_option("--weight", weights, "Weighted-sum ranking weight, SCEN=W");
    explore_cmd->add_flag("--no-clamp", no_clamp, "Do not cap per-recipe attainment at 1");
    explore_cmd->add_flag("--resume", plan.resume, "Continue from the journal in --out");
    explore_cmd->add_option("--out", out_dir, "Output directory")->required();

    // simulate
    std::string sim_space, sim_scenario, design_file, trace_out;
    std::optional<std::size_t> design_index;
    std::uint64_t sim_seed = 1;
    bool trace = false;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run one design under one scenario");
    simulate_cmd->add_option("--space", sim_space, "Design-space JSON file")->required();
    auto* by_index = simulate_cmd->add_option("--design", design_index, "Design index in enumeration order");
    auto* by_file = simulate_cmd->add_option("--design-file", design_file, "Configuration JSON file");
    by_index->excludes(by_file);
    simulate_cmd->add_option("--scenario", sim_scenario, "Scenario JSON file")->required();
    simulate_cmd->add_option("--seed", sim_seed, "Replication seed (the seed column of results.csv)")->default_val(1);
    simulate_cmd->add_flag("--trace", trace, "Emit the per-fillet event trace as CSV");
    simulate_cmd->add_option("--trace-out", trace_out, "Trace file (default: standard output)");
    simulate_cmd->add_flag("--no-clamp", no_clamp, "Do not cap per-recipe attainment at 1");

    // validate
    std::string val_space;
    std::vector<std::string> val_scenarios;
    auto* validate_cmd = app.add_subcommand("validate", "Static checks without simulating");
    validate_cmd->add_option("--space", val_space, "Design-space JSON file")->required();
    validate_cmd->add_option("--scenario", val_scenarios, "Scenario JSON file (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (*explore_cmd) {
        plan.space_file = space_file;
        for (auto& s : scenarios) plan.scenario_files.emplace_back(s);
        for (auto& m : minimums) plan.min_attainment.push_back(parse_assignment(m, "--min-attainment"));
        for (auto& w : weights) plan.weights.push_back(parse_assignment(w, "--weight"));
        plan.clamp = !no_clamp;
        plan.out_dir = out_dir;
        auto summary = flowdse::explore(plan, &std::cerr);
        std::cout << summary.designs_evaluated << " designs evaluated, " << summary.results.size() << " result rows, "
                  << summary.front.size() << " Pareto-optimal";
        if (summary.resumed_cells) std::cout << ", " << summary.resumed_cells << " cells resumed";
        if (plan.stop_first)
            std::cout << (summary.qualifying_design ? ", qualifying design " + std::to_string(*summary.qualifying_design)
                                                    : std::string(", no design met the minimums"));
        std::printf(" (%.1f s)\n", summary.wall_time_s);
        return 0;
    }

    if (*simulate_cmd) {
        const auto space = load_design_space(sim_space);
        const auto scenario = load_scenario(sim_scenario);
        DesignConfiguration config;
        if (!design_file.empty()) {
            std::ifstream in(design_file);
            if (!in) throw InputError(design_file + ": cannot open configuration file");
            std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            config = parse_configuration(space, text, design_file);
            auto problems = configuration_violations(space, config);
            if (!problems.empty()) throw InputError(design_file + ": " + problems.front());
        } else {
            if (!design_index) throw InputError("simulate: give --design or --design-file");
            auto all = enumerate_all(space);
            if (*design_index >= all.size())
                throw InputError("--design: index " + std::to_string(*design_index) + " out of range (" +
                                 std::to_string(all.size()) + " configurations)");
            config = all[*design_index];
        }

        std::ofstream trace_file;
        std::ostream* trace_stream = nullptr;
        if (trace || !trace_out.empty()) {
            if (!trace_out.empty()) {
                trace_file.open(trace_out);
                if (!trace_file) throw InputError(trace_out + ": cannot write trace");
                trace_stream = &trace_file;
            } else {
                trace_stream = &std::cout;
            }
            write_trace_header(*trace_stream);
        }
        TraceSink sink;
        if (trace_stream)
            sink = [trace_stream](const TraceRow& r) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.6f", r.time);
                *trace_stream << buf << ',' << r.module << ',' << r.fillet << ',';
                std::snprintf(buf, sizeof buf, "%.4f", r.weight);
                *trace_stream << buf << ',' << r.action << '\n';
            };
        auto result = simulate_one(space, config, scenario, sim_seed, ScoreOptions{!no_clamp}, sink);
        result.design = design_index.value_or(0);
        // The result record goes to stderr when the trace occupies stdout.
        auto& out = (trace_stream == &std::cout) ? std::cerr : std::cout;
        out << result_to_json_line(result) << '\n';
        return 0;
    }

    std::vector<std::filesystem::path> files(val_scenarios.begin(), val_scenarios.end());
    auto report = validate(val_space, files);
    std::cout << report.summary() << '\n';
    for (const auto& v : report.violations) std::cout << "violation: " << v << '\n';
    for (const auto& w : report.warnings) std::cout << "warning: " << w << '\n';
    return report.violations.empty() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const flowdse::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << '\n';
        return 2;
    }
}
