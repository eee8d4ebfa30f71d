#pragma once

// DC operational problem for a fixed expansion plan and scenario.
//
// Operating costs are per year: marginal and shedding prices are multiplied
// by the weighting factor σ unless the network has already been annualized.

#include "arotnep/lp_builder.hpp"
#include "arotnep/netio.hpp"
#include "arotnep/simplex.hpp"

#include <numbers>
#include <vector>

namespace arotnep {

inline constexpr double kAngleLimit = std::numbers::pi;

struct ExpansionDecision {
    std::vector<bool> build;      // one flag per candidate line, in file order
    double investment_cost = 0.0;

    bool operator==(const ExpansionDecision&) const = default;
};

/// Decision with the investment cost filled in from the network.
ExpansionDecision make_decision(const Network& net, std::vector<bool> build);
ExpansionDecision no_investment(const Network& net);

/// Uncertain parameters d = (d^G, d^D).
struct ScenarioRealization {
    std::vector<double> generation; // MW per generator
    std::vector<double> demand;     // MW per demand

    std::size_t size() const { return generation.size() + demand.size(); }
    Eigen::VectorXd flat() const;
    static ScenarioRealization from_flat(const Eigen::VectorXd& v, std::size_t generators);

    bool operator==(const ScenarioRealization&) const = default;
};

ScenarioRealization nominal_scenario(const Network& net);

/// Replaces negative entries with zero; returns how many were replaced.
int clip_negative(ScenarioRealization& d);

struct OperatingPoint {
    std::vector<double> generation;
    std::vector<double> served;
    std::vector<double> shed;
    std::vector<double> flows;  // one per line (unbuilt candidates carry 0)
    std::vector<double> angles; // one per bus, radians
    double operating_cost = 0.0;
};

/// Where each operating variable and each scenario-carrying row lives inside
/// an LP (the operational LP or one block of the master problem).
struct OperatingBlock {
    std::vector<Eigen::Index> generation, consumed, shed, flow, angle; // columns
    std::vector<Eigen::Index> demand_rows;    // equality rows: consumed = d^D
    std::vector<Eigen::Index> generation_cap; // inequality rows: p ≤ d^G
    std::vector<Eigen::Index> shed_cap;       // inequality rows: shed ≤ d^D
    LpBuilder::Terms cost;                    // operating cost bᵀy of this block
};

/// How candidate lines enter a block: fixed flags, or binary columns.
struct CandidateLinks {
    const std::vector<bool>* built = nullptr;
    const std::vector<Eigen::Index>* columns = nullptr;
};

/// Cost coefficients actually used by the operational model.
double generation_cost_rate(const Network& net, std::size_t g);
double shedding_cost_rate(const Network& net, std::size_t d);

/// Appends one operating block for scenario `d`. When `in_objective` is set
/// the block's cost terms are added to the objective.
OperatingBlock append_operating_block(LpBuilder& builder, const Network& net,
                                      const ScenarioRealization& d, const CandidateLinks& links,
                                      bool in_objective);

struct OperationalLP {
    LinearProgram lp;
    OperatingBlock index;
};

OperationalLP build_operational_lp(const Network& net, const ExpansionDecision& x,
                                   const ScenarioRealization& d);

struct OperationalResult {
    double cost = 0.0;          // q = f^S(d), currency/year
    OperatingPoint point;
    Eigen::VectorXd sensitivity; // η = ∂q/∂d, ordered as ScenarioRealization::flat
    int clipped = 0;             // negative scenario entries set to zero
};

/// Minimum operating cost and its gradient with respect to d. Throws
/// InfeasibleOperation if the LP is infeasible (impossible with shedding).
OperationalResult solve_operational(const Network& net, const ExpansionDecision& x,
                                    const ScenarioRealization& d);

/// Operating point stored in `primal` for the block described by `index`.
OperatingPoint extract_operating_point(const OperatingBlock& index, const Eigen::VectorXd& primal);

} // namespace arotnep
