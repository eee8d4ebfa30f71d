#pragma once

// Monte Carlo check of an optimized quantile: sample d = d̄ + L z with z
// standard normal, solve the operational problem for each draw, and count how
// often the cost stays at or below q*.

#include "arotnep/decomp.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace arotnep {

struct SimulationStudy {
    long samples = 1000;
    std::uint64_t seed = 1;
    double target = 0.0; // q*
    double beta = 0.0;   // radius q* was optimized for; reported, not used
    int threads = 0;     // 0: hardware concurrency
};

/// Raw draws d̄ + L z in the space of `set`.
std::vector<Eigen::VectorXd> sample_points(const EllipsoidalSet& set, long n, std::uint64_t seed);

/// Draws completed with the model's fixed parameters. Negative entries are
/// left in place; the operational solve clips and counts them.
std::vector<ScenarioRealization> sample_scenarios(const UncertaintyModel& model, long n, std::uint64_t seed);

struct HistogramBin {
    double lower = 0.0;
    double upper = 0.0;
    long count = 0;

    bool operator==(const HistogramBin&) const = default;
};

struct CostSummary {
    double mean = 0.0;
    double std_dev = 0.0; // sample standard deviation (n − 1); 0 for one sample
    double min = 0.0;
    double max = 0.0;
    double p05 = 0.0, p50 = 0.0, p90 = 0.0, p95 = 0.0, p99 = 0.0;
};

struct SimulationReport {
    long samples = 0;
    long solved = 0;
    long failed = 0;
    long clipped = 0;     // draws with at least one negative entry
    long not_exceeding = 0;
    double probability = 0.0; // not_exceeding / solved
    double target = 0.0;
    double beta = 0.0;
    double expected_probability = 0.0; // Φ(β)
    CostSummary costs;
    std::vector<HistogramBin> histogram;
    std::vector<double> sample_costs; // by sample index; NaN for failed samples
};

/// Type-7 (linear interpolation) sample quantile of sorted data.
double sorted_quantile(const std::vector<double>& sorted, double p);

/// Freedman–Diaconis bins, at least 10 (one bin when all values coincide).
std::vector<HistogramBin> histogram(const std::vector<double>& values);

SimulationReport run_simulation(const Network& net, const ExpansionDecision& x, const UncertaintyModel& model,
                                const SimulationStudy& study);

enum class ReportFormat { csv, json };

/// Writes the summary block and histogram rows; throws IOError.
void emit_report(const SimulationReport& report, const std::filesystem::path& path, ReportFormat format);
std::string report_csv(const SimulationReport& report);
std::string report_json(const SimulationReport& report);

/// Reads back what report_csv writes (summary and histogram; no sample costs).
SimulationReport parse_report_csv(const std::string& text);

} // namespace arotnep
