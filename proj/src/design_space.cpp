#include "flowdse/design_space.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace flowdse {

using nlohmann::json;

namespace {

struct KindName {
    ModuleKind kind;
    std::string_view name;
};

constexpr KindName kKindNames[] = {
    {ModuleKind::Origin, "Origin"},           {ModuleKind::Weighing, "Weighing"},
    {ModuleKind::Assignment, "Assignment"},   {ModuleKind::Trimming, "Trimming"},
    {ModuleKind::Distribution, "Distribution"}, {ModuleKind::Destination, "Destination"},
};

std::pair<std::string_view, std::string_view> split_port(std::string_view qualified) {
    auto dot = qualified.rfind('.');
    if (dot == std::string_view::npos) return {qualified, {}};
    return {qualified.substr(0, dot), qualified.substr(dot + 1)};
}

std::vector<std::string> default_in_ports(ModuleKind kind) {
    if (kind == ModuleKind::Origin) return {};
    return {"in"};
}

std::vector<std::string> default_out_ports(ModuleKind kind) {
    switch (kind) {
    case ModuleKind::Destination: return {};
    case ModuleKind::Distribution: return {"out1", "out2"};
    default: return {"out"};
    }
}

Seconds default_latency(ModuleKind kind) {
    return kind == ModuleKind::Destination ? 0.0 : 1.0;
}

// Union-find over module indices.
struct Partition {
    std::vector<std::uint32_t> parent;
    explicit Partition(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    std::uint32_t find(std::uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace

std::string_view to_string(ModuleKind kind) noexcept {
    for (const auto& k : kKindNames)
        if (k.kind == kind) return k.name;
    return "?";
}

std::optional<ModuleKind> parse_module_kind(std::string_view name) noexcept {
    for (const auto& k : kKindNames)
        if (k.name == name) return k.kind;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// DesignSpace

DesignSpace::DesignSpace(std::vector<ModuleSpec> modules,
                         const std::vector<std::pair<std::string, std::string>>& connections,
                         std::string name)
    : name_(std::move(name)), modules_(std::move(modules)) {
    const auto n = static_cast<std::uint32_t>(modules_.size());
    module_out_.resize(n);
    module_in_.resize(n);
    destination_of_.assign(n, -1);
    for (std::uint32_t m = 0; m < n; ++m) {
        const auto& spec = modules_[m];
        if (spec.id.empty()) throw InputError("module #" + std::to_string(m) + ": empty id");
        if (!module_by_id_.emplace(spec.id, m).second)
            throw InputError("duplicate module id '" + spec.id + "'");
        for (std::uint32_t p = 0; p < spec.out_ports.size(); ++p) {
            module_out_[m].push_back(static_cast<std::uint32_t>(out_ports_.size()));
            out_ports_.push_back({m, p});
        }
        for (std::uint32_t p = 0; p < spec.in_ports.size(); ++p) {
            module_in_[m].push_back(static_cast<std::uint32_t>(in_ports_.size()));
            in_ports_.push_back({m, p});
        }
        if (spec.kind == ModuleKind::Origin) {
            if (spec.lane && *spec.lane != static_cast<int>(origins_.size()))
                throw InputError("origin '" + spec.id + "': lane must follow origin declaration order");
            origins_.push_back(m);
        }
        if (spec.kind == ModuleKind::Destination) {
            auto it = std::find(destination_tags_.begin(), destination_tags_.end(), spec.destination_tag);
            if (it == destination_tags_.end()) {
                destination_of_[m] = static_cast<int>(destination_tags_.size());
                destination_tags_.push_back(spec.destination_tag);
            } else {
                destination_of_[m] = static_cast<int>(it - destination_tags_.begin());
            }
        }
    }
    if (destination_tags_.size() > kMaxDestinations)
        throw InputError("too many destination tags (max " + std::to_string(kMaxDestinations) + ")");

    allowed_.resize(out_ports_.size());
    for (const auto& [from, to] : connections) {
        auto out = out_port_index(from);
        if (!out) throw InputError("connection '" + from + " -> " + to + "': unknown out-port '" + from + "'");
        auto in = in_port_index(to);
        if (!in) throw InputError("connection '" + from + " -> " + to + "': unknown in-port '" + to + "'");
        allowed_[*out].push_back(*in);
    }
    for (auto& row : allowed_) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }
    compute_interchange_classes();
}

std::span<const std::uint32_t> DesignSpace::module_out_ports(std::uint32_t m) const {
    return module_out_.at(m);
}

std::span<const std::uint32_t> DesignSpace::module_in_ports(std::uint32_t m) const {
    return module_in_.at(m);
}

bool DesignSpace::is_allowed(std::uint32_t out, std::uint32_t in) const {
    const auto& row = allowed_.at(out);
    return std::binary_search(row.begin(), row.end(), in);
}

std::size_t DesignSpace::allowed_count() const noexcept {
    std::size_t total = 0;
    for (const auto& row : allowed_) total += row.size();
    return total;
}

std::optional<std::uint32_t> DesignSpace::module_index(std::string_view id) const {
    auto it = module_by_id_.find(id);
    if (it == module_by_id_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> DesignSpace::out_port_index(std::string_view qualified) const {
    auto [mod, port] = split_port(qualified);
    auto m = module_index(mod);
    if (!m) return std::nullopt;
    const auto& names = modules_[*m].out_ports;
    for (std::size_t p = 0; p < names.size(); ++p)
        if (names[p] == port) return module_out_[*m][p];
    return std::nullopt;
}

std::optional<std::uint32_t> DesignSpace::in_port_index(std::string_view qualified) const {
    auto [mod, port] = split_port(qualified);
    auto m = module_index(mod);
    if (!m) return std::nullopt;
    const auto& names = modules_[*m].in_ports;
    for (std::size_t p = 0; p < names.size(); ++p)
        if (names[p] == port) return module_in_[*m][p];
    return std::nullopt;
}

std::string DesignSpace::out_port_name(std::uint32_t out) const {
    const auto& ref = out_ports_.at(out);
    return modules_[ref.module].id + "." + modules_[ref.module].out_ports[ref.local];
}

std::string DesignSpace::in_port_name(std::uint32_t in) const {
    const auto& ref = in_ports_.at(in);
    return modules_[ref.module].id + "." + modules_[ref.module].in_ports[ref.local];
}

std::optional<std::uint32_t> DesignSpace::destination_index(std::string_view tag) const {
    for (std::size_t i = 0; i < destination_tags_.size(); ++i)
        if (destination_tags_[i] == tag) return static_cast<std::uint32_t>(i);
    return std::nullopt;
}

void DesignSpace::compute_interchange_classes() {
    const auto n = static_cast<std::uint32_t>(modules_.size());
    interchange_class_.assign(n, -1);

    auto same_spec = [&](const ModuleSpec& a, const ModuleSpec& b) {
        return a.kind == b.kind && a.in_ports == b.in_ports && a.out_ports == b.out_ports &&
               a.latency == b.latency && a.destination_tag == b.destination_tag &&
               a.required == b.required && a.lane == b.lane;
    };

    // Swapping a and b must map every allowed connection onto an allowed connection.
    auto swap_is_automorphism = [&](std::uint32_t a, std::uint32_t b) {
        auto map_out = [&](std::uint32_t o) {
            const auto& ref = out_ports_[o];
            if (ref.module == a) return module_out_[b][ref.local];
            if (ref.module == b) return module_out_[a][ref.local];
            return o;
        };
        auto map_in = [&](std::uint32_t i) {
            const auto& ref = in_ports_[i];
            if (ref.module == a) return module_in_[b][ref.local];
            if (ref.module == b) return module_in_[a][ref.local];
            return i;
        };
        for (std::uint32_t o = 0; o < allowed_.size(); ++o)
            for (auto i : allowed_[o])
                if (!is_allowed(map_out(o), map_in(i))) return false;
        return true;
    };

    Partition part(n);
    for (std::uint32_t a = 0; a < n; ++a) {
        // Origins anchor the lanes and destinations are identified by tag.
        if (modules_[a].kind == ModuleKind::Origin || modules_[a].kind == ModuleKind::Destination) continue;
        for (std::uint32_t b = a + 1; b < n; ++b) {
            if (!same_spec(modules_[a], modules_[b])) continue;
            if (swap_is_automorphism(a, b)) part.unite(a, b);
        }
    }
    std::map<std::uint32_t, int> class_of_root;
    std::map<std::uint32_t, int> size_of_root;
    for (std::uint32_t m = 0; m < n; ++m) size_of_root[part.find(m)]++;
    int next = 0;
    for (std::uint32_t m = 0; m < n; ++m) {
        auto root = part.find(m);
        if (size_of_root[root] < 2) continue;
        auto [it, inserted] = class_of_root.emplace(root, next);
        if (inserted) ++next;
        interchange_class_[m] = it->second;
    }
}

// ---------------------------------------------------------------------------
// File format

DesignSpace parse_design_space(std::string_view json_text, std::string_view source) {
    const std::string where(source);
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InputError(where + ": " + e.what());
    }
    try {
        std::map<ModuleKind, Seconds> latency_by_kind;
        if (doc.contains("default_latency_s")) {
            for (const auto& [k, v] : doc.at("default_latency_s").items()) {
                auto kind = parse_module_kind(k);
                if (!kind) throw InputError(where + ": default_latency_s: unknown module kind '" + k + "'");
                latency_by_kind[*kind] = v.get<double>();
            }
        }
        std::vector<ModuleSpec> modules;
        const auto& mods = doc.at("modules");
        for (std::size_t i = 0; i < mods.size(); ++i) {
            const auto& j = mods[i];
            const std::string field = where + ": modules[" + std::to_string(i) + "]";
            ModuleSpec spec;
            spec.id = j.at("id").get<std::string>();
            auto kind = parse_module_kind(j.at("kind").get<std::string>());
            if (!kind) throw InputError(field + ".kind: unknown module kind '" + j.at("kind").get<std::string>() + "'");
            spec.kind = *kind;
            spec.in_ports = j.contains("in") ? j.at("in").get<std::vector<std::string>>() : default_in_ports(spec.kind);
            spec.out_ports = j.contains("out") ? j.at("out").get<std::vector<std::string>>() : default_out_ports(spec.kind);
            auto lat = latency_by_kind.find(spec.kind);
            spec.latency = lat != latency_by_kind.end() ? lat->second : default_latency(spec.kind);
            if (j.contains("latency_s")) spec.latency = j.at("latency_s").get<double>();
            if (!(spec.latency >= 0.0)) throw InputError(field + ".latency_s: must be non-negative");
            if (j.contains("destination")) spec.destination_tag = j.at("destination").get<std::string>();
            if (spec.kind == ModuleKind::Destination && spec.destination_tag.empty()) spec.destination_tag = spec.id;
            spec.required = j.value("required", false);
            if (j.contains("lane")) {
                int lane = j.at("lane").get<int>();
                if (lane < 1) throw InputError(field + ".lane: lanes are numbered from 1");
                spec.lane = lane - 1;
            }
            modules.push_back(std::move(spec));
        }
        std::vector<std::pair<std::string, std::string>> connections;
        const auto& conns = doc.at("connections");
        for (std::size_t i = 0; i < conns.size(); ++i) {
            const auto& c = conns[i];
            if (!c.is_array() || c.size() != 2)
                throw InputError(where + ": connections[" + std::to_string(i) + "]: expected [out-port, in-port]");
            connections.emplace_back(c[0].get<std::string>(), c[1].get<std::string>());
        }
        try {
            return DesignSpace(std::move(modules), connections, doc.value("name", std::string{}));
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
    } catch (const json::exception& e) {
        throw InputError(where + ": " + e.what());
    }
}

DesignSpace load_design_space(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path.string() + ": cannot open design-space file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_design_space(buf.str(), path.string());
}

std::string design_space_to_json(const DesignSpace& space) {
    json doc;
    doc["name"] = space.name();
    json mods = json::array();
    for (const auto& m : space.modules()) {
        json j;
        j["id"] = m.id;
        j["kind"] = std::string(to_string(m.kind));
        j["in"] = m.in_ports;
        j["out"] = m.out_ports;
        j["latency_s"] = m.latency;
        if (m.kind == ModuleKind::Destination) j["destination"] = m.destination_tag;
        if (m.required) j["required"] = true;
        if (m.lane) j["lane"] = *m.lane + 1;
        mods.push_back(std::move(j));
    }
    doc["modules"] = std::move(mods);
    json conns = json::array();
    for (std::uint32_t o = 0; o < space.out_ports().size(); ++o)
        for (auto i : space.allowed(o)) conns.push_back({space.out_port_name(o), space.in_port_name(i)});
    doc["connections"] = std::move(conns);
    return doc.dump(2);
}

std::vector<std::string> check_design_space(const DesignSpace& space) {
    std::vector<std::string> problems;
    if (space.origins().empty()) problems.push_back("design space has no Origin module");
    bool has_trimmer = false;
    for (std::uint32_t m = 0; m < space.module_count(); ++m) {
        const auto& spec = space.module(m);
        const auto nin = spec.in_ports.size();
        const auto nout = spec.out_ports.size();
        const std::string who = "module '" + spec.id + "' (" + std::string(to_string(spec.kind)) + ")";
        switch (spec.kind) {
        case ModuleKind::Origin:
            if (nin != 0 || nout != 1) problems.push_back(who + ": needs 0 in-ports and 1 out-port");
            break;
        case ModuleKind::Weighing:
        case ModuleKind::Assignment:
        case ModuleKind::Trimming:
            if (nin != 1 || nout != 1) problems.push_back(who + ": needs 1 in-port and 1 out-port");
            has_trimmer = has_trimmer || spec.kind == ModuleKind::Trimming;
            break;
        case ModuleKind::Distribution:
            if (nin != 1 || nout != 2) problems.push_back(who + ": needs 1 in-port and 2 out-ports");
            break;
        case ModuleKind::Destination:
            if (nin < 1 || nout != 0) problems.push_back(who + ": needs at least 1 in-port and no out-ports");
            break;
        }
        if (spec.lane && (*spec.lane < 0 || *spec.lane >= static_cast<int>(space.lane_count())))
            problems.push_back(who + ": lane " + std::to_string(*spec.lane + 1) + " does not exist");
    }
    for (std::uint32_t o = 0; o < space.out_ports().size(); ++o)
        if (space.allowed(o).empty())
            problems.push_back("matrix row '" + space.out_port_name(o) + "' has no allowed connection");
    if (has_trimmer && !space.destination_index(kTrimTag))
        problems.push_back("trimming modules present but no Destination tagged '" + std::string(kTrimTag) + "'");
    return problems;
}

// ---------------------------------------------------------------------------
// Configurations

std::vector<bool> connected_modules(const DesignSpace& space, const DesignConfiguration& config) {
    std::vector<bool> connected(space.module_count(), false);
    for (auto m : space.origins()) connected[m] = true;
    for (std::uint32_t o = 0; o < config.chosen.size(); ++o) {
        if (config.chosen[o] < 0) continue;
        connected[space.out_ports()[o].module] = true;
        connected[space.in_ports()[static_cast<std::uint32_t>(config.chosen[o])].module] = true;
    }
    return connected;
}

std::vector<std::string> configuration_violations(const DesignSpace& space, const DesignConfiguration& config) {
    std::vector<std::string> problems;
    const auto nout = space.out_ports().size();
    if (config.chosen.size() != nout) {
        problems.push_back("configuration has " + std::to_string(config.chosen.size()) + " entries, expected " +
                           std::to_string(nout));
        return problems;
    }
    std::vector<int> in_uses(space.in_ports().size(), 0);
    for (std::uint32_t o = 0; o < nout; ++o) {
        auto in = config.chosen[o];
        if (in < 0) continue;
        if (static_cast<std::size_t>(in) >= space.in_ports().size()) {
            problems.push_back(space.out_port_name(o) + ": in-port index out of range");
            return problems;
        }
        if (!space.is_allowed(o, static_cast<std::uint32_t>(in)))
            problems.push_back(space.out_port_name(o) + " -> " + space.in_port_name(in) + ": not allowed by matrix");
        in_uses[in]++;
    }
    const auto connected = connected_modules(space, config);
    for (std::uint32_t m = 0; m < space.module_count(); ++m) {
        const auto& spec = space.module(m);
        if (!connected[m]) {
            if (spec.required) problems.push_back("required module '" + spec.id + "' is not connected");
            continue;
        }
        for (auto o : space.module_out_ports(m))
            if (config.chosen[o] < 0) problems.push_back("module '" + spec.id + "': out-port " + space.out_port_name(o) + " unconnected");
        if (spec.kind == ModuleKind::Destination) continue;
        for (auto i : space.module_in_ports(m)) {
            if (in_uses[i] == 0) problems.push_back("module '" + spec.id + "': in-port " + space.in_port_name(i) + " unconnected");
            if (in_uses[i] > 1) problems.push_back("flows merge into " + space.in_port_name(i));
        }
        if (spec.out_ports.empty()) problems.push_back("module '" + spec.id + "' is a dead end");
    }

    // Reachability from origins, lane propagation and cycle detection.
    const auto graph = build_graph(space, config);
    std::vector<int> lane_of(space.module_count(), -1);
    std::vector<int> state(space.module_count(), 0); // 0 new, 1 on stack, 2 done
    bool cycle = false;
    std::function<void(std::uint32_t, int)> visit = [&](std::uint32_t m, int lane) {
        const auto& spec = space.module(m);
        if (spec.kind == ModuleKind::Destination) {
            state[m] = 2;
            return;
        }
        if (spec.lane && *spec.lane != lane)
            problems.push_back("module '" + spec.id + "' (lane " + std::to_string(*spec.lane + 1) +
                               ") receives flow from lane " + std::to_string(lane + 1));
        if (state[m] == 1) {
            cycle = true;
            return;
        }
        if (state[m] == 2) return;
        state[m] = 1;
        lane_of[m] = lane;
        for (auto t : graph.next[m])
            if (t >= 0) visit(static_cast<std::uint32_t>(t), lane);
        state[m] = 2;
    };
    for (std::size_t l = 0; l < space.origins().size(); ++l) visit(space.origins()[l], static_cast<int>(l));
    if (cycle) problems.push_back("flow graph contains a cycle");
    for (std::uint32_t m = 0; m < space.module_count(); ++m)
        if (connected[m] && state[m] == 0)
            problems.push_back("module '" + space.module(m).id + "' is not reachable from any origin");
    return problems;
}

std::vector<std::string> describe_configuration(const DesignSpace& space, const DesignConfiguration& config) {
    std::vector<std::string> lines;
    for (std::uint32_t o = 0; o < config.chosen.size(); ++o)
        if (config.chosen[o] >= 0) lines.push_back(space.out_port_name(o) + " -> " + space.in_port_name(config.chosen[o]));
    return lines;
}

DesignConfiguration parse_configuration(const DesignSpace& space, std::string_view json_text, std::string_view source) {
    const std::string where(source);
    DesignConfiguration config;
    config.chosen.assign(space.out_ports().size(), -1);
    try {
        auto doc = json::parse(json_text);
        const auto& conns = doc.at("connections");
        for (std::size_t k = 0; k < conns.size(); ++k) {
            json c = conns[k];
            const std::string field = where + ": connections[" + std::to_string(k) + "]";
            if (c.is_string()) {
                // "A.out -> B.in"
                auto text = c.get<std::string>();
                auto arrow = text.find("->");
                if (arrow == std::string::npos) throw InputError(field + ": expected 'out -> in'");
                auto trim = [](std::string s) {
                    auto b = s.find_first_not_of(' ');
                    auto e = s.find_last_not_of(' ');
                    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
                };
                c = json::array({trim(text.substr(0, arrow)), trim(text.substr(arrow + 2))});
            }
            auto from = c.at(0).get<std::string>();
            auto to = c.at(1).get<std::string>();
            auto o = space.out_port_index(from);
            if (!o) throw InputError(field + ": unknown out-port '" + from + "'");
            auto i = space.in_port_index(to);
            if (!i) throw InputError(field + ": unknown in-port '" + to + "'");
            if (config.chosen[*o] >= 0) throw InputError(field + ": out-port '" + from + "' connected twice");
            config.chosen[*o] = static_cast<std::int32_t>(*i);
        }
    } catch (const json::exception& e) {
        throw InputError(where + ": " + e.what());
    }
    auto problems = configuration_violations(space, config);
    if (!problems.empty()) throw InputError(where + ": invalid configuration: " + problems.front());
    return config;
}

// ---------------------------------------------------------------------------
// Enumeration

namespace {

class Enumerator {
public:
    Enumerator(const DesignSpace& space, const ConfigurationVisitor& visit)
        : space_(space), visit_(visit) {
        const auto n = space.module_count();
        config_.chosen.assign(space.out_ports().size(), -1);
        connected_.assign(n, 0);
        lane_of_.assign(n, -1);
        in_used_.assign(space.in_ports().size(), 0);
    }

    std::size_t run() {
        for (std::size_t l = 0; l < space_.origins().size(); ++l) {
            auto m = space_.origins()[l];
            connected_[m] = 1;
            lane_of_[m] = static_cast<int>(l);
            for (auto o : space_.module_out_ports(m)) pending_.push_back(o);
        }
        expand(0);
        return count_;
    }

private:
    const DesignSpace& space_;
    const ConfigurationVisitor& visit_;
    DesignConfiguration config_;
    std::vector<char> connected_;
    std::vector<int> lane_of_;
    std::vector<char> in_used_;
    std::vector<std::uint32_t> pending_;
    std::size_t count_ = 0;
    bool stopped_ = false;

    void expand(std::size_t pos) {
        if (stopped_) return;
        if (pos == pending_.size()) {
            if (complete_is_valid()) {
                ++count_;
                if (!visit_(config_)) stopped_ = true;
            }
            return;
        }
        const auto out = pending_[pos];
        const auto src = space_.out_ports()[out].module;
        const int lane = lane_of_[src];
        for (auto in : space_.allowed(out)) {
            const auto tgt = space_.in_ports()[in].module;
            const auto& spec = space_.module(tgt);
            const bool sink = spec.kind == ModuleKind::Destination;
            if (!sink && in_used_[in]) continue; // flows may only merge at destinations
            if (!sink && spec.lane && *spec.lane != lane) continue;
            if (!sink && connected_[tgt] && lane_of_[tgt] != lane) continue;

            config_.chosen[out] = static_cast<std::int32_t>(in);
            if (!sink) in_used_[in] = 1;
            const bool newly = !connected_[tgt];
            const auto mark = pending_.size();
            if (newly) {
                connected_[tgt] = 1;
                lane_of_[tgt] = sink ? -1 : lane;
                for (auto o : space_.module_out_ports(tgt)) pending_.push_back(o);
            }
            expand(pos + 1);
            pending_.resize(mark);
            if (newly) {
                connected_[tgt] = 0;
                lane_of_[tgt] = -1;
            }
            if (!sink) in_used_[in] = 0;
            config_.chosen[out] = -1;
            if (stopped_) return;
        }
    }

    bool complete_is_valid() const {
        const auto n = static_cast<std::uint32_t>(space_.module_count());
        for (std::uint32_t m = 0; m < n; ++m) {
            const auto& spec = space_.module(m);
            if (!connected_[m]) {
                if (spec.required) return false;
                continue;
            }
            if (spec.kind == ModuleKind::Destination) continue;
            if (spec.out_ports.empty()) return false;
            for (auto i : space_.module_in_ports(m))
                if (!in_used_[i]) return false; // all-or-none
        }
        return acyclic();
    }

    bool acyclic() const {
        // Kahn's algorithm over connected non-destination modules.
        const auto n = static_cast<std::uint32_t>(space_.module_count());
        std::vector<int> indegree(n, 0);
        std::uint32_t nodes = 0;
        for (std::uint32_t m = 0; m < n; ++m) {
            if (!connected_[m] || space_.module(m).kind == ModuleKind::Destination) continue;
            ++nodes;
            for (auto o : space_.module_out_ports(m)) {
                auto t = space_.in_ports()[config_.chosen[o]].module;
                if (space_.module(t).kind != ModuleKind::Destination) indegree[t]++;
            }
        }
        std::vector<std::uint32_t> ready;
        for (std::uint32_t m = 0; m < n; ++m)
            if (connected_[m] && space_.module(m).kind != ModuleKind::Destination && indegree[m] == 0) ready.push_back(m);
        std::uint32_t seen = 0;
        while (!ready.empty()) {
            auto m = ready.back();
            ready.pop_back();
            ++seen;
            for (auto o : space_.module_out_ports(m)) {
                auto t = space_.in_ports()[config_.chosen[o]].module;
                if (space_.module(t).kind != ModuleKind::Destination && --indegree[t] == 0) ready.push_back(t);
            }
        }
        return seen == nodes;
    }
};

} // namespace

std::size_t enumerate_configurations(const DesignSpace& space, const ConfigurationVisitor& visit) {
    Enumerator e(space, visit);
    return e.run();
}

std::vector<DesignConfiguration> enumerate_all(const DesignSpace& space) {
    std::vector<DesignConfiguration> all;
    enumerate_configurations(space, [&](const DesignConfiguration& c) {
        all.push_back(c);
        return true;
    });
    return all;
}

// ---------------------------------------------------------------------------
// Functional equivalence

CanonicalKey canonical_key(const DesignSpace& space, const DesignConfiguration& config) {
    const auto n = static_cast<std::uint32_t>(space.module_count());
    const auto& cls = space.interchange_class();

    std::map<int, std::vector<std::uint32_t>> members;
    for (std::uint32_t m = 0; m < n; ++m)
        if (cls[m] >= 0) members[cls[m]].push_back(m);
    std::map<int, std::size_t> next_slot;
    std::vector<std::uint32_t> relabel(n);
    std::iota(relabel.begin(), relabel.end(), 0u);
    std::vector<char> labelled(n, 0);

    // Breadth-first from the origins; the first visited member of a class
    // takes that class's first slot, and so on.
    std::vector<char> visited(n, 0);
    std::vector<std::uint32_t> queue(space.origins().begin(), space.origins().end());
    for (auto m : queue) visited[m] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        auto m = queue[head];
        for (auto o : space.module_out_ports(m)) {
            auto in = config.chosen[o];
            if (in < 0) continue;
            auto t = space.in_ports()[in].module;
            if (visited[t]) continue;
            visited[t] = 1;
            if (cls[t] >= 0) {
                relabel[t] = members[cls[t]][next_slot[cls[t]]++];
                labelled[t] = 1;
            }
            queue.push_back(t);
        }
    }
    for (std::uint32_t m = 0; m < n; ++m)
        if (cls[m] >= 0 && !labelled[m]) relabel[m] = members[cls[m]][next_slot[cls[m]]++];

    CanonicalKey key(space.out_ports().size(), -1);
    for (std::uint32_t o = 0; o < config.chosen.size(); ++o) {
        auto in = config.chosen[o];
        if (in < 0) continue;
        const auto& src = space.out_ports()[o];
        const auto& dst = space.in_ports()[in];
        auto o2 = space.module_out_ports(relabel[src.module])[src.local];
        auto i2 = space.module_in_ports(relabel[dst.module])[dst.local];
        key[o2] = static_cast<std::int32_t>(i2);
    }
    return key;
}

std::vector<DistinctDesign> deduplicate(const DesignSpace& space, std::span<const DesignConfiguration> configs) {
    std::map<CanonicalKey, std::size_t> group_of;
    std::vector<DistinctDesign> groups;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        auto [it, inserted] = group_of.emplace(canonical_key(space, configs[i]), groups.size());
        if (inserted) groups.push_back(DistinctDesign{i, 0, {}});
        auto& g = groups[it->second];
        g.members.push_back(i);
        g.multiplicity++;
        if (configs[i] < configs[g.index]) g.index = i;
    }
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    return groups;
}

// ---------------------------------------------------------------------------
// Graph and routes

ConnectionGraph build_graph(const DesignSpace& space, const DesignConfiguration& config) {
    ConnectionGraph g;
    g.connected = connected_modules(space, config);
    g.next.resize(space.module_count());
    for (std::uint32_t m = 0; m < space.module_count(); ++m) {
        for (auto o : space.module_out_ports(m)) {
            auto in = config.chosen[o];
            g.next[m].push_back(in < 0 ? -1 : static_cast<std::int32_t>(space.in_ports()[in].module));
        }
    }
    return g;
}

std::optional<std::uint32_t> RouteCatalog::route(std::uint32_t module, std::uint32_t destination) const {
    const auto& outs = out_reach.at(module);
    for (std::uint32_t p = 0; p < outs.size(); ++p)
        if (outs[p].test(destination)) return p;
    return std::nullopt;
}

RouteCatalog derive_routes(const DesignSpace& space, const DesignConfiguration& config) {
    const auto graph = build_graph(space, config);
    const auto n = static_cast<std::uint32_t>(space.module_count());

    std::vector<DestinationSet> reach(n);
    std::vector<char> done(n, 0);
    std::function<const DestinationSet&(std::uint32_t)> reach_of = [&](std::uint32_t m) -> const DestinationSet& {
        if (done[m]) return reach[m];
        done[m] = 1; // cycles are rejected upstream; marking early keeps this finite regardless
        if (space.destination_of(m) >= 0) reach[m].set(static_cast<std::size_t>(space.destination_of(m)));
        for (auto t : graph.next[m])
            if (t >= 0) reach[m] |= reach_of(static_cast<std::uint32_t>(t));
        return reach[m];
    };

    RouteCatalog cat;
    cat.out_reach.resize(n);
    for (std::uint32_t m = 0; m < n; ++m) {
        if (!graph.connected[m]) {
            cat.out_reach[m].assign(graph.next[m].size(), DestinationSet{});
            continue;
        }
        for (auto t : graph.next[m])
            cat.out_reach[m].push_back(t >= 0 ? reach_of(static_cast<std::uint32_t>(t)) : DestinationSet{});
    }

    for (std::size_t lane = 0; lane < space.lane_count(); ++lane) {
        std::uint32_t m = space.origins()[lane];
        bool weighed = false;
        const std::string who = "lane " + std::to_string(lane + 1);
        while (space.module(m).kind != ModuleKind::Assignment) {
            const auto kind = space.module(m).kind;
            if (kind == ModuleKind::Weighing) weighed = true;
            if (kind == ModuleKind::Distribution || kind == ModuleKind::Destination || graph.next[m].size() != 1 ||
                graph.next[m][0] < 0)
                throw InputError(who + ": no Assignment module before '" + space.module(m).id + "'");
            m = static_cast<std::uint32_t>(graph.next[m][0]);
        }
        if (!weighed) throw InputError(who + ": Assignment module '" + space.module(m).id + "' is not preceded by a Weighing module");

        LaneRoutes routes;
        routes.assignment = m;
        routes.reachable = reach_of(m);

        // Any trimmer downstream of the assignment point.
        std::vector<char> seen(n, 0);
        std::vector<std::uint32_t> stack{m};
        while (!stack.empty()) {
            auto cur = stack.back();
            stack.pop_back();
            if (seen[cur]) continue;
            seen[cur] = 1;
            if (space.module(cur).kind == ModuleKind::Trimming) routes.has_trimmer = true;
            for (auto t : graph.next[cur])
                if (t >= 0) stack.push_back(static_cast<std::uint32_t>(t));
        }

        // The route actually taken towards each destination.
        for (std::uint32_t d = 0; d < space.destination_tags().size(); ++d) {
            if (!routes.reachable.test(d)) continue;
            std::uint32_t cur = m;
            bool trimmed = false;
            while (space.destination_of(cur) < 0) {
                if (space.module(cur).kind == ModuleKind::Trimming) trimmed = true;
                auto p = cat.route(cur, d);
                if (!p) throw SimulationError("route derivation lost destination at '" + space.module(cur).id + "'");
                cur = static_cast<std::uint32_t>(graph.next[cur][*p]);
            }
            if (trimmed) routes.trimmed.set(d);
        }
        cat.lanes.push_back(routes);
    }
    return cat;
}

} // namespace flowdse
