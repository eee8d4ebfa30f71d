#pragma once

// Network data model and dataset ingestion.
//
// A network file is a single JSON document; see data/README.md for the schema.
// Loading validates every record and throws ValidationError naming the
// offending one, so downstream code can assume the invariants below.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace arotnep {

enum class LineStatus { existing, candidate };

struct Bus {
    int id = 0;
    bool is_reference = false;

    bool operator==(const Bus&) const = default;
};

struct Line {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double susceptance = 0.0; // per unit
    double capacity = 0.0;    // MW
    LineStatus status = LineStatus::existing;
    std::optional<double> build_cost; // candidates only

    bool is_candidate() const { return status == LineStatus::candidate; }
    bool operator==(const Line&) const = default;
};

struct Generator {
    int id = 0;
    int bus = 0;
    double nominal_capacity = 0.0; // MW
    double marginal_cost = 0.0;    // currency/MWh, or currency/(MW·year) once annualized

    bool operator==(const Generator&) const = default;
};

struct Demand {
    int id = 0;
    int bus = 0;
    double nominal_load = 0.0; // MW
    double bid_price = 0.0;
    double shed_cost = 0.0;

    bool operator==(const Demand&) const = default;
};

struct Network {
    std::string name;
    std::string currency = "currency";
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<Demand> demands;
    double budget = 0.0;             // Π
    double weighting_factor = 8760.0; // σ, hours/year
    int max_parallel_lines = 3;
    // Set by annualize_costs; operating costs are then per MW·year.
    bool annualized = false;

    bool operator==(const Network&) const = default;

    std::size_t bus_count() const { return buses.size(); }
    std::size_t reference_bus_index() const;
    std::vector<std::size_t> candidate_line_indices() const;
    std::size_t candidate_count() const { return candidate_line_indices().size(); }
};

/// Checks every documented invariant; throws ValidationError on the first
/// violation with a message naming the record.
void validate_network(const Network& net);

Network parse_network(const std::string& json_text);
Network load_network(const std::filesystem::path& path);

std::string serialize_network(const Network& net);
void save_network(const Network& net, const std::filesystem::path& path);

/// Scales candidate build costs by the amortization rate and operating costs
/// (marginal, bid and shedding prices) by the weighting factor σ.
///
/// The amortization rate equals `discount_rate`; `return_period` must be
/// positive but does not enter the rate.
Network annualize_costs(const Network& net, double return_period, double discount_rate);

/// 64-bit FNV-1a of raw bytes, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Hash of a file's bytes; used to bind plans to the network they came from.
std::string file_hash(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& content);

} // namespace arotnep
