#pragma once

// Branch-and-bound over binary variables on top of solve_lp.
//
// Best-bound node selection (ties: creation order), branching on the most
// fractional binary (ties: lowest index). Children warm-start from the
// parent's final basis.

#include "arotnep/simplex.hpp"

#include <vector>

namespace arotnep {

struct MILPProblem {
    LinearProgram lp;
    std::vector<Eigen::Index> binaries;

    void check() const;
};

enum class MILPStatus { optimal, infeasible, unbounded };

struct MILPSolution {
    MILPStatus status = MILPStatus::infeasible;
    Eigen::VectorXd primal;
    double objective = 0.0;
    long nodes = 0;
};

struct MILPOptions {
    double absolute_gap = 1e-6;
    double integrality_tolerance = 1e-6;
    long node_limit = 200000;
    SimplexOptions lp;
};

/// Throws NodeLimitExceeded when the tree is not exhausted within
/// `options.node_limit` nodes.
MILPSolution solve_milp(const MILPProblem& problem, const MILPOptions& options = {});

} // namespace arotnep
