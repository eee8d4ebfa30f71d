#pragma once

// Study files: which network to plan, how its parameters are uncertain, and
// solver/simulation settings. Schema in data/README.md.

#include "arotnep/decomp.hpp"
#include "arotnep/netio.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace arotnep {

struct Correlation {
    std::string a; // "G<id>" or "D<id>"
    std::string b;
    double rho = 0.0;
};

struct UncertaintySpec {
    // Full-length (one per generator, one per demand); zero means fixed.
    std::vector<double> std_generators, std_demands;
    std::vector<Correlation> correlations;
    std::optional<Eigen::MatrixXd> correlation_matrix; // over all parameters
    std::optional<Eigen::MatrixXd> covariance;         // replaces std + correlations
    std::optional<double> beta;
    std::optional<double> quantile;
    std::optional<std::vector<double>> half_generators, half_demands;
    bool sign_restricted = false;
};

struct Annualization {
    double return_period = 0.0;
    double discount_rate = 0.0;
};

struct StudyConfig {
    std::filesystem::path network_path; // resolved against the study file's directory
    std::optional<Annualization> annualization;
    UncertaintySpec uncertainty;
    double tolerance = 1e-6;
    int inner_max_iterations = 100;
    int outer_max_iterations = 50;
    int inner_starts = 3;
    std::uint64_t seed = 2017; // random inner starts
    long samples = 1000;
    std::uint64_t simulation_seed = 1;
    std::filesystem::path output_dir;

    /// β as given, or Φ⁻¹(quantile).
    double beta() const;
    DecompOptions decomp_options() const;
};

/// Parses a study document. Relative paths resolve against `base_dir`.
/// Throws ValidationError naming the offending field.
StudyConfig parse_study(const std::string& json_text, const std::filesystem::path& base_dir);
StudyConfig load_study(const std::filesystem::path& path);

/// Network named by the study, annualized if the study asks for it.
Network load_study_network(const StudyConfig& config);

/// Builds the uncertainty set over the parameters with nonzero spread.
UncertaintyModel build_uncertainty(const Network& net, const StudyConfig& config);

/// Index of "G<id>"/"D<id>" in d = (d^G, d^D); throws ValidationError.
std::size_t parameter_index(const Network& net, const std::string& name);

} // namespace arotnep
