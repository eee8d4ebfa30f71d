#pragma once

// Command-line front end: plan, validate and sweep.

#include "arotnep/study.hpp"
#include "arotnep/validate.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace arotnep {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1, // bad arguments or an unexpected solver error
    exit_iteration_limit = 2,
    exit_stalled = 3,
    exit_config = 4,
    exit_io = 5,
    exit_plan_mismatch = 6,
};

/// Environment variable that overrides the study's output directory.
inline constexpr const char* kOutputDirEnv = "AROTNEP_OUTPUT_DIR";

/// Output directory after applying the environment override.
std::filesystem::path output_directory(const StudyConfig& config);

/// Plan document: chosen lines, costs, worst case, iteration log, and the
/// hash of the network file it was computed for. Carries its own checksum.
std::string plan_document(const Network& net, const std::string& network_hash, double beta,
                          const OuterResult& result);

struct PlanRecord {
    std::string network_hash;
    double beta = 0.0;
    std::string status;
    std::vector<bool> build;
    double investment_cost = 0.0;
    double q_beta = 0.0;
    double objective = 0.0;
};

/// Parses a plan document, verifying its checksum. Throws ParseError.
PlanRecord parse_plan(const std::string& text);

std::string iteration_log_csv(const Network& net, const OuterResult& result);

int exit_code_for(OuterStatus status);

int cmd_plan(const StudyConfig& config, std::ostream& log);
int cmd_validate(const StudyConfig& config, const std::filesystem::path& plan_path, std::ostream& log);
int cmd_sweep(const StudyConfig& config, const std::vector<double>& betas, int repeats, std::ostream& log);

/// Full CLI: parses arguments, dispatches, maps errors to exit codes.
int run_cli(int argc, char** argv);

} // namespace arotnep
