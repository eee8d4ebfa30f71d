#pragma once

// Two-level decomposition of the robust expansion problem.
//
// Outer loop: a master MILP over build decisions holding one operating block
// per accumulated worst-case scenario, alternated with the worst-case
// subproblem. Inner loop: block-coordinate ascent that alternates the
// operational LP (for fixed d) with the worst-case update of d (for fixed
// sensitivities η).

#include "arotnep/ellipsoid.hpp"
#include "arotnep/milp.hpp"
#include "arotnep/opf.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace arotnep {

/// The uncertain subset of d = (d^G, d^D). Parameters without spread are
/// held at their nominal value; `set` lives in the space of the others.
class UncertaintyModel {
public:
    UncertaintyModel(ScenarioRealization nominal, std::vector<std::size_t> uncertain, EllipsoidalSet set);

    /// Every parameter uncertain; `set` has the full dimension of d.
    static UncertaintyModel full(const ScenarioRealization& nominal, EllipsoidalSet set);

    const ScenarioRealization& nominal() const { return nominal_; }
    const std::vector<std::size_t>& uncertain() const { return uncertain_; }
    const EllipsoidalSet& set() const { return set_; }
    std::size_t generator_count() const { return nominal_.generation.size(); }

    UncertaintyModel with_beta(double beta) const;

    /// Full scenario from a point of the reduced space.
    ScenarioRealization realize(const Eigen::VectorXd& reduced) const;
    /// Reduced-space coordinates of a full vector (scenario or gradient).
    Eigen::VectorXd restrict(const Eigen::VectorXd& full) const;

    /// Whether a full scenario lies in the set: free coordinates inside the
    /// ellipsoid and box, fixed coordinates at nominal.
    bool contains(const ScenarioRealization& d, double tol = 1e-8) const;

private:
    ScenarioRealization nominal_;
    std::vector<std::size_t> uncertain_;
    EllipsoidalSet set_;
};

struct DecompOptions {
    double tolerance = 1e-6;   // ε for both loops
    int inner_max_iterations = 100;
    int outer_max_iterations = 50;
    int inner_starts = 3;      // recommended start, d̄, then seeded random boundary points
    std::uint64_t seed = 2017;
    double duplicate_tolerance = 1e-6;
    MILPOptions milp;
};

struct InnerResult {
    double q_beta = 0.0;
    ScenarioRealization d_ml;
    OperatingPoint operating_point;
    Eigen::VectorXd eta; // full-length sensitivity at d_ml
    int iterations = 0;
    int start = 0;       // which start produced the result
    // Iterations where q decreased by more than 1e-9 relative: the ascent
    // left a local maximum.
    int descent_violations = 0;
    std::vector<double> q_history;
};

/// d̄ with generation lowered and demand raised by one standard deviation,
/// pulled back into the set.
Eigen::VectorXd recommended_start(const UncertaintyModel& model);

/// Scales then clips a reduced-space point so that it lies in the set.
Eigen::VectorXd project_into_set(const EllipsoidalSet& set, const Eigen::VectorXd& d);

/// One run of the block-coordinate ascent from `d_init` (reduced space).
/// Throws IterationLimit after `options.inner_max_iterations`.
InnerResult inner_solve(const Network& net, const ExpansionDecision& x, const UncertaintyModel& model,
                        const Eigen::VectorXd& d_init, const DecompOptions& options = {});

/// Same, with every parameter uncertain and a full-length start.
InnerResult inner_solve(const Network& net, const ExpansionDecision& x, const EllipsoidalSet& set,
                        const ScenarioRealization& d_init, double tolerance = 1e-6);

/// Best of `options.inner_starts` runs.
InnerResult inner_solve_multistart(const Network& net, const ExpansionDecision& x,
                                   const UncertaintyModel& model, const DecompOptions& options = {});

struct MasterResult {
    ExpansionDecision decision;
    double gamma = 0.0;
    double z_lo = 0.0;
    long nodes = 0;
};

/// Throws MasterInfeasible when no plan within budget serves the scenarios.
MasterResult solve_master(const Network& net, const std::vector<ScenarioRealization>& scenarios,
                          const MILPOptions& options = {});

enum class OuterStatus { converged, iteration_limit, stalled };

std::string to_string(OuterStatus s);

struct OuterIteration {
    int iteration = 0;
    double z_up = 0.0;
    double z_lo = 0.0;
    double gap = 0.0;
    ExpansionDecision decision;
    double q_beta = 0.0;
    ScenarioRealization d_ml;
    int inner_iterations = 0;
    double seconds = 0.0; // wall time of this iteration
};

struct OuterResult {
    OuterStatus status = OuterStatus::iteration_limit;
    ExpansionDecision decision;
    double q_beta = 0.0;
    double objective = 0.0; // investment + q_β
    InnerResult worst_case;
    std::vector<OuterIteration> log;
    std::vector<ScenarioRealization> scenarios;
    double seconds = 0.0;
};

/// Relative gap (z_up − z_lo)/|z_up|, absolute when |z_up| < 1e-12.
double relative_gap(double z_up, double z_lo);

/// Runs the outer loop. Hitting the iteration cap or a repeated worst case
/// is reported through `status`, leaving the log intact.
OuterResult outer_solve(const Network& net, const UncertaintyModel& model, const DecompOptions& options = {});

} // namespace arotnep
