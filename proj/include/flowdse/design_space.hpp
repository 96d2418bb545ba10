#pragma once

#include <bitset>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowdse/kernel.hpp"

namespace flowdse {

enum class ModuleKind : std::uint8_t { Origin, Weighing, Assignment, Trimming, Distribution, Destination };

std::string_view to_string(ModuleKind kind) noexcept;
std::optional<ModuleKind> parse_module_kind(std::string_view name) noexcept;

/// Reserved destination tag for the trim produced by trimming modules.
inline constexpr std::string_view kTrimTag = "trim";

/// Upper bound on distinct destination tags in one design space.
inline constexpr std::size_t kMaxDestinations = 64;
using DestinationSet = std::bitset<kMaxDestinations>;

struct ModuleSpec {
    std::string id;
    ModuleKind kind = ModuleKind::Weighing;
    std::vector<std::string> in_ports;
    std::vector<std::string> out_ports;
    Seconds latency = 1.0;
    std::string destination_tag;   // Destination modules only
    bool required = false;         // must be connected in every configuration
    std::optional<int> lane;       // 0-based; lane-bound modules only
};

struct PortRef {
    std::uint32_t module = 0;
    std::uint32_t local = 0;
};

/**
 * Module library plus the allowed-connection matrix. Element (i, j) of the
 * matrix permits global out-port i to feed global in-port j.
 *
 * Immutable after construction and safe to share across threads.
 */
class DesignSpace {
public:
    DesignSpace(std::vector<ModuleSpec> modules,
                const std::vector<std::pair<std::string, std::string>>& connections,
                std::string name = {});

    const std::string& name() const noexcept { return name_; }
    const std::vector<ModuleSpec>& modules() const noexcept { return modules_; }
    const ModuleSpec& module(std::uint32_t m) const { return modules_.at(m); }
    std::size_t module_count() const noexcept { return modules_.size(); }

    const std::vector<PortRef>& out_ports() const noexcept { return out_ports_; }
    const std::vector<PortRef>& in_ports() const noexcept { return in_ports_; }
    std::span<const std::uint32_t> module_out_ports(std::uint32_t m) const;
    std::span<const std::uint32_t> module_in_ports(std::uint32_t m) const;

    /// Allowed in-ports of an out-port, ascending.
    const std::vector<std::uint32_t>& allowed(std::uint32_t out) const { return allowed_.at(out); }
    bool is_allowed(std::uint32_t out, std::uint32_t in) const;
    std::size_t allowed_count() const noexcept;

    std::optional<std::uint32_t> module_index(std::string_view id) const;
    std::optional<std::uint32_t> out_port_index(std::string_view qualified) const;
    std::optional<std::uint32_t> in_port_index(std::string_view qualified) const;
    std::string out_port_name(std::uint32_t out) const;
    std::string in_port_name(std::uint32_t in) const;

    /// Origin modules in lane order.
    const std::vector<std::uint32_t>& origins() const noexcept { return origins_; }
    std::size_t lane_count() const noexcept { return origins_.size(); }

    /// Distinct destination tags in first-declaration order.
    const std::vector<std::string>& destination_tags() const noexcept { return destination_tags_; }
    std::optional<std::uint32_t> destination_index(std::string_view tag) const;
    /// Tag index per module (-1 for non-destinations).
    int destination_of(std::uint32_t m) const { return destination_of_.at(m); }

    /**
     * Interchangeability class per module, or -1. Two modules share a class
     * when swapping them (with their ports) maps the module library and the
     * matrix onto themselves.
     */
    const std::vector<int>& interchange_class() const noexcept { return interchange_class_; }

private:
    std::string name_;
    std::vector<ModuleSpec> modules_;
    std::vector<PortRef> out_ports_;
    std::vector<PortRef> in_ports_;
    std::vector<std::vector<std::uint32_t>> module_out_;
    std::vector<std::vector<std::uint32_t>> module_in_;
    std::vector<std::vector<std::uint32_t>> allowed_;
    std::vector<std::uint32_t> origins_;
    std::vector<std::string> destination_tags_;
    std::vector<int> destination_of_;
    std::vector<int> interchange_class_;
    std::map<std::string, std::uint32_t, std::less<>> module_by_id_;

    void compute_interchange_classes();
};

DesignSpace parse_design_space(std::string_view json_text, std::string_view source = "<memory>");
DesignSpace load_design_space(const std::filesystem::path& path);
std::string design_space_to_json(const DesignSpace& space);

/// Static well-formedness problems (empty matrix rows, port counts per kind, ...).
std::vector<std::string> check_design_space(const DesignSpace& space);

/// One concrete wiring: chosen in-port per global out-port, -1 when unconnected.
struct DesignConfiguration {
    std::vector<std::int32_t> chosen;

    auto operator<=>(const DesignConfiguration&) const = default;
    bool operator==(const DesignConfiguration&) const = default;
};

std::vector<bool> connected_modules(const DesignSpace& space, const DesignConfiguration& config);

/// Problems that make a configuration invalid; empty means valid.
std::vector<std::string> configuration_violations(const DesignSpace& space, const DesignConfiguration& config);

/// Human-readable wiring, one "out -> in" entry per connection.
std::vector<std::string> describe_configuration(const DesignSpace& space, const DesignConfiguration& config);

DesignConfiguration parse_configuration(const DesignSpace& space, std::string_view json_text,
                                        std::string_view source = "<memory>");

/// Return false to stop the enumeration.
using ConfigurationVisitor = std::function<bool(const DesignConfiguration&)>;

/**
 * Depth-first frontier expansion from the origin out-ports. Every valid
 * configuration is visited exactly once, in a deterministic order.
 * Returns the number of configurations visited.
 */
std::size_t enumerate_configurations(const DesignSpace& space, const ConfigurationVisitor& visit);
std::vector<DesignConfiguration> enumerate_all(const DesignSpace& space);

using CanonicalKey = std::vector<std::int32_t>;

/// Wiring re-encoded with interchangeable modules relabelled in traversal order.
CanonicalKey canonical_key(const DesignSpace& space, const DesignConfiguration& config);

struct DistinctDesign {
    std::size_t index = 0;               // position of the representative in the input
    std::size_t multiplicity = 0;
    std::vector<std::size_t> members;    // input positions sharing the key, ascending
};

/// One representative (smallest raw encoding) per canonical key, ordered by representative index.
std::vector<DistinctDesign> deduplicate(const DesignSpace& space, std::span<const DesignConfiguration> configs);

/// Downstream module per local out-port (-1 when unconnected).
struct ConnectionGraph {
    std::vector<bool> connected;
    std::vector<std::vector<std::int32_t>> next;
};

ConnectionGraph build_graph(const DesignSpace& space, const DesignConfiguration& config);

struct LaneRoutes {
    std::uint32_t assignment = 0;  // the lane's assignment module
    DestinationSet reachable;      // destinations reachable from assignment
    DestinationSet trimmed;        // destinations whose route passes a trimmer
    bool has_trimmer = false;      // some trimmer lies downstream of assignment
};

/// Routing facts the controller and distributors need for one design.
struct RouteCatalog {
    std::vector<LaneRoutes> lanes;
    /// Per module, per local out-port: destinations reachable through it.
    std::vector<std::vector<DestinationSet>> out_reach;

    /// Out-port a distributor uses for a destination: the first whose reach contains it.
    std::optional<std::uint32_t> route(std::uint32_t module, std::uint32_t destination) const;
};

/// Throws InputError when a lane lacks a weighing-then-assignment chain.
RouteCatalog derive_routes(const DesignSpace& space, const DesignConfiguration& config);

} // namespace flowdse
