#pragma once

// Dense bounded-variable revised simplex.
//
// Dual sign convention (fixed for the whole library):
//   * equality_duals[i]   = ∂z*/∂b_eq[i]
//   * inequality_duals[i] ≥ 0 for every row a·x ≤ b_ineq[i], in both senses;
//     for a minimization ∂z*/∂b_ineq[i] = −inequality_duals[i],
//     for a maximization ∂z*/∂b_ineq[i] = +inequality_duals[i].

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace arotnep {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { minimize, maximize };

struct LinearProgram {
    Eigen::VectorXd objective;
    Eigen::MatrixXd eq_matrix;   // rows × n
    Eigen::VectorXd eq_rhs;
    Eigen::MatrixXd ineq_matrix; // rows × n, sense ≤
    Eigen::VectorXd ineq_rhs;
    Eigen::VectorXd lower;       // may hold -inf
    Eigen::VectorXd upper;       // may hold +inf
    Sense sense = Sense::minimize;

    /// Empty program over `n` variables bounded below by zero.
    static LinearProgram with_variables(Eigen::Index n);

    Eigen::Index variable_count() const { return objective.size(); }
    Eigen::Index eq_count() const { return eq_matrix.rows(); }
    Eigen::Index ineq_count() const { return ineq_matrix.rows(); }

    /// Throws DimensionMismatch / DomainError when the invariants fail.
    void check() const;
};

enum class LPStatus { optimal, infeasible, unbounded };

std::string to_string(LPStatus s);

enum class VarState : std::uint8_t { basic, at_lower, at_upper, free_zero };

/// Final basis, reusable as a warm start for a program with the same shape.
struct Basis {
    std::vector<VarState> structural; // one per variable
    std::vector<VarState> logical;    // one per row (equalities first)

    bool empty() const { return structural.empty(); }
};

struct LPSolution {
    LPStatus status = LPStatus::infeasible;
    Eigen::VectorXd primal;
    Eigen::VectorXd equality_duals;
    Eigen::VectorXd inequality_duals;
    double objective = 0.0;
    int iterations = 0;
    Basis basis;
};

struct SimplexOptions {
    int max_iterations = 50000;
    double primal_tolerance = 1e-9;
    double dual_tolerance = 1e-9;
    // Consecutive degenerate pivots before switching to Bland's rule.
    int degeneracy_trigger = 50;
    int refactor_interval = 64;
    const Basis* warm_start = nullptr;
};

/// Solves `lp`. Throws NumericalError if the iteration cap is reached or the
/// basis becomes singular beyond repair.
LPSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

struct KKTReport {
    double primal_feasibility = 0.0;
    double dual_feasibility = 0.0;
    double complementarity = 0.0;
    double duality_gap = 0.0;

    double max() const;
};

/// Residuals of the optimality conditions for `sol` on `lp`. Bound
/// multipliers are recovered as reduced costs from the row duals.
KKTReport check_kkt(const LinearProgram& lp, const LPSolution& sol);

} // namespace arotnep
