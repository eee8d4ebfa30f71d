#include "arotnep/milp.hpp"

#include "arotnep/errors.hpp"

#include <cmath>
#include <memory>
#include <queue>
#include <set>

namespace arotnep {

void MILPProblem::check() const {
    lp.check();
    std::set<Eigen::Index> seen;
    for (auto j : binaries) {
        if (j < 0 || j >= lp.variable_count())
            throw DimensionMismatch("milp: binary index " + std::to_string(j) + " out of range");
        if (!seen.insert(j).second)
            throw DomainError("milp: binary index " + std::to_string(j) + " listed twice");
        if (lp.lower[j] < 0.0 || lp.upper[j] > 1.0)
            throw DomainError("milp: binary variable " + std::to_string(j) + " must be bounded in [0,1]");
    }
}

namespace {

struct Node {
    long id = 0;
    double bound = 0.0; // parent relaxation value (minimization form)
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::shared_ptr<const Basis> basis;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

} // namespace

MILPSolution solve_milp(const MILPProblem& problem, const MILPOptions& options) {
    problem.check();

    // Work on the minimization form; flip back on exit.
    LinearProgram lp = problem.lp;
    const bool maximize = lp.sense == Sense::maximize;
    if (maximize) {
        lp.objective = -lp.objective;
        lp.sense = Sense::minimize;
    }
    // Integral binaries are fixed by their bounds; tighten fractional ones.
    for (auto j : problem.binaries) {
        lp.lower[j] = std::ceil(lp.lower[j] - options.integrality_tolerance);
        lp.upper[j] = std::floor(lp.upper[j] + options.integrality_tolerance);
    }

    MILPSolution result;
    double incumbent = kInf;
    Eigen::VectorXd best;
    bool unbounded = false;

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long next_id = 0;
    open.push(Node{next_id++, -kInf, lp.lower, lp.upper, nullptr});

    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        if (node.bound >= incumbent - options.absolute_gap) continue;
        if (result.nodes >= options.node_limit)
            throw NodeLimitExceeded("milp: node limit of " + std::to_string(options.node_limit) +
                                    " reached");
        ++result.nodes;

        bool empty_box = false;
        for (auto j : problem.binaries)
            if (node.lower[j] > node.upper[j]) empty_box = true;
        if (empty_box) continue;

        lp.lower = node.lower;
        lp.upper = node.upper;
        SimplexOptions lp_opts = options.lp;
        lp_opts.warm_start = node.basis.get();
        LPSolution rel = solve_lp(lp, lp_opts);

        if (rel.status == LPStatus::infeasible) continue;
        if (rel.status == LPStatus::unbounded) {
            unbounded = true;
            break;
        }
        if (rel.objective >= incumbent - options.absolute_gap) continue;

        Eigen::Index branch = -1;
        double best_frac = -1.0;
        for (auto j : problem.binaries) {
            const double v = rel.primal[j];
            const double frac = std::abs(v - std::round(v));
            if (frac <= options.integrality_tolerance) continue;
            const double closeness = 0.5 - std::abs(v - std::floor(v) - 0.5);
            if (closeness > best_frac + 1e-12 || (std::abs(closeness - best_frac) <= 1e-12 && j < branch)) {
                best_frac = closeness;
                branch = j;
            }
        }

        if (branch < 0) {
            incumbent = rel.objective;
            best = rel.primal;
            for (auto j : problem.binaries) best[j] = std::round(best[j]);
            continue;
        }

        auto basis = std::make_shared<const Basis>(std::move(rel.basis));
        Node down{next_id++, rel.objective, node.lower, node.upper, basis};
        down.upper[branch] = 0.0;
        Node up{next_id++, rel.objective, node.lower, node.upper, basis};
        up.lower[branch] = 1.0;
        open.push(std::move(down));
        open.push(std::move(up));
    }

    if (unbounded) {
        result.status = MILPStatus::unbounded;
        result.objective = maximize ? kInf : -kInf;
        return result;
    }
    if (!std::isfinite(incumbent)) {
        result.status = MILPStatus::infeasible;
        return result;
    }
    result.status = MILPStatus::optimal;
    result.primal = best;
    result.objective = problem.lp.objective.dot(best);
    return result;
}

} // namespace arotnep
