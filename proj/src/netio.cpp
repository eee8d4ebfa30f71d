#include "arotnep/netio.hpp"

#include "arotnep/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

namespace arotnep {

using nlohmann::json;

std::size_t Network::reference_bus_index() const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].is_reference) return i;
    throw ValidationError("network has no reference bus");
}

std::vector<std::size_t> Network::candidate_line_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < lines.size(); ++k)
        if (lines[k].is_candidate()) out.push_back(k);
    return out;
}

namespace {

std::string record(const char* kind, int id) {
    std::ostringstream os;
    os << kind << " " << id;
    return os.str();
}

bool finite(double v) { return std::isfinite(v); }

template <class T>
T required(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end())
        throw ParseError(where + ": missing field '" + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ParseError(where + ": field '" + key + "' has the wrong type (" + e.what() + ")");
    }
}

template <class T>
T optional_field(const json& j, const char* key, T fallback, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ParseError(where + ": field '" + key + "' has the wrong type (" + e.what() + ")");
    }
}

const json& required_array(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_array())
        throw ParseError(std::string("network: missing array '") + key + "'");
    return *it;
}

} // namespace

void validate_network(const Network& net) {
    if (!(net.budget > 0.0) || !finite(net.budget))
        throw ValidationError("network: budget must be positive");
    if (!(net.weighting_factor > 0.0) || !finite(net.weighting_factor))
        throw ValidationError("network: weighting_factor must be positive");
    if (!(net.base_mva > 0.0) || !finite(net.base_mva))
        throw ValidationError("network: base_mva must be positive");
    if (net.max_parallel_lines < 1)
        throw ValidationError("network: max_parallel_lines must be at least 1");
    if (net.buses.empty()) throw ValidationError("network: no buses");

    std::set<int> bus_ids;
    int references = 0;
    for (const auto& b : net.buses) {
        if (!bus_ids.insert(b.id).second)
            throw ValidationError(record("bus", b.id) + ": duplicate id");
        if (b.is_reference) ++references;
    }
    const int n = static_cast<int>(net.buses.size());
    if (*bus_ids.begin() != 1 || *bus_ids.rbegin() != n)
        throw ValidationError("network: bus ids must be contiguous from 1");
    if (references != 1)
        throw ValidationError("network: exactly one reference bus required, found " +
                              std::to_string(references));
    auto bus_exists = [&](int id) { return bus_ids.count(id) > 0; };

    std::set<int> line_ids;
    std::map<std::pair<int, int>, int> candidates_per_corridor;
    for (const auto& l : net.lines) {
        const auto where = record("line", l.id);
        if (!line_ids.insert(l.id).second) throw ValidationError(where + ": duplicate id");
        if (!bus_exists(l.from_bus) || !bus_exists(l.to_bus))
            throw ValidationError(where + ": unknown bus");
        if (l.from_bus == l.to_bus) throw ValidationError(where + ": from_bus equals to_bus");
        if (!(l.susceptance > 0.0) || !finite(l.susceptance))
            throw ValidationError(where + ": susceptance must be positive");
        if (!(l.capacity > 0.0) || !finite(l.capacity))
            throw ValidationError(where + ": capacity must be positive");
        if (l.is_candidate()) {
            if (!l.build_cost || !(*l.build_cost > 0.0) || !finite(*l.build_cost))
                throw ValidationError(where + ": candidate needs a positive build_cost");
            auto key = std::minmax(l.from_bus, l.to_bus);
            if (++candidates_per_corridor[key] > net.max_parallel_lines)
                throw ValidationError(where + ": corridor exceeds max_parallel_lines");
        } else if (l.build_cost) {
            throw ValidationError(where + ": existing line must not carry a build_cost");
        }
    }

    std::set<int> gen_ids;
    for (const auto& g : net.generators) {
        const auto where = record("generator", g.id);
        if (!gen_ids.insert(g.id).second) throw ValidationError(where + ": duplicate id");
        if (!bus_exists(g.bus)) throw ValidationError(where + ": unknown bus");
        if (!(g.nominal_capacity >= 0.0) || !finite(g.nominal_capacity))
            throw ValidationError(where + ": nominal_capacity must be nonnegative");
        if (!(g.marginal_cost >= 0.0) || !finite(g.marginal_cost))
            throw ValidationError(where + ": marginal_cost must be nonnegative");
    }

    std::set<int> demand_ids;
    for (const auto& d : net.demands) {
        const auto where = record("demand", d.id);
        if (!demand_ids.insert(d.id).second) throw ValidationError(where + ": duplicate id");
        if (!bus_exists(d.bus)) throw ValidationError(where + ": unknown bus");
        if (!(d.nominal_load >= 0.0) || !finite(d.nominal_load))
            throw ValidationError(where + ": nominal_load must be nonnegative");
        if (!(d.bid_price >= 0.0) || !finite(d.bid_price))
            throw ValidationError(where + ": bid_price must be nonnegative");
        if (!(d.shed_cost >= d.bid_price) || !finite(d.shed_cost))
            throw ValidationError(where + ": shed_cost must be at least bid_price");
    }
}

Network parse_network(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("network: malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("network: top level must be an object");

    Network net;
    net.name = optional_field<std::string>(doc, "name", "", "network");
    net.currency = required<std::string>(doc, "currency", "network");
    net.base_mva = optional_field<double>(doc, "base_mva", 100.0, "network");
    net.budget = required<double>(doc, "budget", "network");
    net.weighting_factor = optional_field<double>(doc, "weighting_factor", 8760.0, "network");
    net.max_parallel_lines = optional_field<int>(doc, "max_parallel_lines", 3, "network");
    net.annualized = optional_field<bool>(doc, "annualized", false, "network");

    for (const auto& jb : required_array(doc, "buses")) {
        Bus b;
        b.id = required<int>(jb, "id", "bus");
        b.is_reference = optional_field<bool>(jb, "reference", false, record("bus", b.id));
        net.buses.push_back(b);
    }
    std::sort(net.buses.begin(), net.buses.end(),
              [](const Bus& a, const Bus& b) { return a.id < b.id; });

    if (auto it = doc.find("lines"); it != doc.end()) {
        if (!it->is_array()) throw ParseError("network: 'lines' must be an array");
        for (const auto& jl : *it) {
            Line l;
            l.id = required<int>(jl, "id", "line");
            const auto where = record("line", l.id);
            l.from_bus = required<int>(jl, "from", where);
            l.to_bus = required<int>(jl, "to", where);
            l.susceptance = required<double>(jl, "susceptance", where);
            l.capacity = required<double>(jl, "capacity", where);
            const auto status = required<std::string>(jl, "status", where);
            if (status == "existing")
                l.status = LineStatus::existing;
            else if (status == "candidate")
                l.status = LineStatus::candidate;
            else
                throw ParseError(where + ": status must be 'existing' or 'candidate'");
            if (auto c = jl.find("build_cost"); c != jl.end() && !c->is_null()) {
                if (!c->is_number()) throw ParseError(where + ": build_cost must be a number");
                l.build_cost = c->get<double>();
            }
            net.lines.push_back(l);
        }
    }

    for (const auto& jg : required_array(doc, "generators")) {
        Generator g;
        g.id = required<int>(jg, "id", "generator");
        const auto where = record("generator", g.id);
        g.bus = required<int>(jg, "bus", where);
        g.nominal_capacity = required<double>(jg, "capacity", where);
        g.marginal_cost = required<double>(jg, "marginal_cost", where);
        net.generators.push_back(g);
    }

    for (const auto& jd : required_array(doc, "demands")) {
        Demand d;
        d.id = required<int>(jd, "id", "demand");
        const auto where = record("demand", d.id);
        d.bus = required<int>(jd, "bus", where);
        d.nominal_load = required<double>(jd, "load", where);
        d.bid_price = required<double>(jd, "bid_price", where);
        d.shed_cost = optional_field<double>(jd, "shed_cost", d.bid_price, where);
        net.demands.push_back(d);
    }

    validate_network(net);
    return net;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Network load_network(const std::filesystem::path& path) {
    return parse_network(read_text_file(path));
}

std::string serialize_network(const Network& net) {
    json doc;
    doc["name"] = net.name;
    doc["currency"] = net.currency;
    doc["base_mva"] = net.base_mva;
    doc["budget"] = net.budget;
    doc["weighting_factor"] = net.weighting_factor;
    doc["max_parallel_lines"] = net.max_parallel_lines;
    doc["annualized"] = net.annualized;
    doc["buses"] = json::array();
    for (const auto& b : net.buses) doc["buses"].push_back({{"id", b.id}, {"reference", b.is_reference}});
    doc["lines"] = json::array();
    for (const auto& l : net.lines) {
        json jl = {{"id", l.id},
                   {"from", l.from_bus},
                   {"to", l.to_bus},
                   {"susceptance", l.susceptance},
                   {"capacity", l.capacity},
                   {"status", l.is_candidate() ? "candidate" : "existing"}};
        if (l.build_cost) jl["build_cost"] = *l.build_cost;
        doc["lines"].push_back(jl);
    }
    doc["generators"] = json::array();
    for (const auto& g : net.generators)
        doc["generators"].push_back({{"id", g.id},
                                     {"bus", g.bus},
                                     {"capacity", g.nominal_capacity},
                                     {"marginal_cost", g.marginal_cost}});
    doc["demands"] = json::array();
    for (const auto& d : net.demands)
        doc["demands"].push_back({{"id", d.id},
                                  {"bus", d.bus},
                                  {"load", d.nominal_load},
                                  {"bid_price", d.bid_price},
                                  {"shed_cost", d.shed_cost}});
    return doc.dump(2);
}

void save_network(const Network& net, const std::filesystem::path& path) {
    write_text_file(path, serialize_network(net) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    // Write next to the target and rename, so a failed run never leaves a
    // truncated file behind.
    auto tmp = path;
    tmp += ".part";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IOError("cannot write '" + path.string() + "'");
        out << content;
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IOError("write to '" + path.string() + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IOError("cannot move output into '" + path.string() + "'");
    }
}

Network annualize_costs(const Network& net, double return_period, double discount_rate) {
    if (!(return_period > 0.0)) throw DomainError("annualize_costs: return_period must be positive");
    if (!(discount_rate > 0.0) || discount_rate > 1.0)
        throw DomainError("annualize_costs: discount_rate must lie in (0, 1]");
    if (net.annualized) throw DomainError("annualize_costs: network is already annualized");

    Network out = net;
    for (auto& l : out.lines)
        if (l.build_cost) *l.build_cost *= discount_rate;
    for (auto& g : out.generators) g.marginal_cost *= out.weighting_factor;
    for (auto& d : out.demands) {
        d.bid_price *= out.weighting_factor;
        d.shed_cost *= out.weighting_factor;
    }
    out.annualized = true;
    return out;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

std::string file_hash(const std::filesystem::path& path) { return fnv1a_hex(read_text_file(path)); }

} // namespace arotnep
