#include "arotnep/decomp.hpp"

#include "arotnep/errors.hpp"
#include "arotnep/lp_builder.hpp"
#include "arotnep/sampling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace arotnep {

UncertaintyModel::UncertaintyModel(ScenarioRealization nominal, std::vector<std::size_t> uncertain,
                                   EllipsoidalSet set)
    : nominal_(std::move(nominal)), uncertain_(std::move(uncertain)), set_(std::move(set)) {
    if (static_cast<Eigen::Index>(uncertain_.size()) != set_.dimension())
        throw DimensionMismatch("uncertainty model: set dimension does not match the uncertain parameters");
    const Eigen::VectorXd full = nominal_.flat();
    for (std::size_t k = 0; k < uncertain_.size(); ++k) {
        if (uncertain_[k] >= nominal_.size())
            throw DimensionMismatch("uncertainty model: parameter index out of range");
        if (k > 0 && uncertain_[k] <= uncertain_[k - 1])
            throw DomainError("uncertainty model: parameter indices must be strictly increasing");
        if (std::abs(full[static_cast<Eigen::Index>(uncertain_[k])] - set_.mean()[static_cast<Eigen::Index>(k)]) >
            1e-9 * (1.0 + std::abs(full[static_cast<Eigen::Index>(uncertain_[k])])))
            throw DomainError("uncertainty model: set mean differs from the nominal scenario");
    }
}

UncertaintyModel UncertaintyModel::full(const ScenarioRealization& nominal, EllipsoidalSet set) {
    std::vector<std::size_t> all(nominal.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return UncertaintyModel(nominal, std::move(all), std::move(set));
}

UncertaintyModel UncertaintyModel::with_beta(double beta) const {
    return UncertaintyModel(nominal_, uncertain_, set_.with_beta(beta));
}

ScenarioRealization UncertaintyModel::realize(const Eigen::VectorXd& reduced) const {
    if (reduced.size() != set_.dimension()) throw DimensionMismatch("realize: reduced vector has the wrong size");
    Eigen::VectorXd full = nominal_.flat();
    for (std::size_t k = 0; k < uncertain_.size(); ++k)
        full[static_cast<Eigen::Index>(uncertain_[k])] = reduced[static_cast<Eigen::Index>(k)];
    return ScenarioRealization::from_flat(full, generator_count());
}

Eigen::VectorXd UncertaintyModel::restrict(const Eigen::VectorXd& full) const {
    if (static_cast<std::size_t>(full.size()) != nominal_.size())
        throw DimensionMismatch("restrict: full vector has the wrong size");
    Eigen::VectorXd out(static_cast<Eigen::Index>(uncertain_.size()));
    for (std::size_t k = 0; k < uncertain_.size(); ++k)
        out[static_cast<Eigen::Index>(k)] = full[static_cast<Eigen::Index>(uncertain_[k])];
    return out;
}

bool UncertaintyModel::contains(const ScenarioRealization& d, double tol) const {
    if (d.size() != nominal_.size()) return false;
    const Eigen::VectorXd full = d.flat();
    const Eigen::VectorXd nominal = nominal_.flat();
    std::size_t k = 0;
    for (std::size_t i = 0; i < nominal_.size(); ++i) {
        if (k < uncertain_.size() && uncertain_[k] == i) {
            ++k;
            continue;
        }
        if (std::abs(full[static_cast<Eigen::Index>(i)] - nominal[static_cast<Eigen::Index>(i)]) > tol) return false;
    }
    return set_.contains(restrict(full), tol);
}

Eigen::VectorXd project_into_set(const EllipsoidalSet& set, const Eigen::VectorXd& d) {
    Eigen::VectorXd delta = d - set.mean();
    if (set.has_box())
        for (Eigen::Index i = 0; i < delta.size(); ++i)
            delta[i] = std::clamp(delta[i], set.box().lower[i], set.box().upper[i]);
    // Shrinking toward the mean keeps the box, since the box brackets zero.
    const double dist = set.mahalanobis(set.mean() + delta);
    if (dist > set.beta()) delta *= set.beta() / dist;
    return set.mean() + delta;
}

Eigen::VectorXd recommended_start(const UncertaintyModel& model) {
    const auto& set = model.set();
    Eigen::VectorXd d = set.mean();
    for (std::size_t k = 0; k < model.uncertain().size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        const double sd = std::sqrt(set.covariance()(i, i));
        d[i] += model.uncertain()[k] < model.generator_count() ? -sd : sd;
    }
    return project_into_set(set, d);
}

namespace {

double vec_distance(const ScenarioRealization& a, const ScenarioRealization& b) {
    return (a.flat() - b.flat()).norm();
}

} // namespace

InnerResult inner_solve(const Network& net, const ExpansionDecision& x, const UncertaintyModel& model,
                        const Eigen::VectorXd& d_init, const DecompOptions& options) {
    if (d_init.size() != model.set().dimension()) throw DimensionMismatch("inner_solve: start has the wrong size");
    if (!d_init.allFinite()) throw DomainError("inner_solve: start is not finite");
    if (x.investment_cost > net.budget * (1.0 + 1e-12))
        throw DomainError("inner_solve: expansion decision exceeds the budget");
    const double eps = options.tolerance;

    InnerResult best;
    best.q_beta = -std::numeric_limits<double>::infinity();
    InnerResult run;
    Eigen::VectorXd d = d_init;
    double q_prev = -std::numeric_limits<double>::infinity();

    for (int k = 1; k <= options.inner_max_iterations; ++k) {
        const ScenarioRealization full = model.realize(d);
        const OperationalResult op = solve_operational(net, x, full);
        run.iterations = k;
        run.q_history.push_back(op.cost);
        if (k > 1 && op.cost < q_prev - 1e-9 * std::max(1.0, std::abs(q_prev))) ++run.descent_violations;
        if (op.cost > best.q_beta) {
            best.q_beta = op.cost;
            best.d_ml = full;
            best.operating_point = op.point;
            best.eta = op.sensitivity;
        }
        if (k > 1 && std::abs(op.cost - q_prev) <= eps * std::max(1.0, std::abs(op.cost))) break;
        q_prev = op.cost;

        const Eigen::VectorXd eta = model.restrict(op.sensitivity);
        const MaxLikelihoodPoint next = worst_case_update(model.set(), eta, op.cost, d);
        const double step = (next.point - d).norm();
        d = next.point;
        if (step <= eps) break;
        if (k == options.inner_max_iterations)
            throw IterationLimit("inner loop did not converge in " + std::to_string(k) + " iterations");
    }

    best.iterations = run.iterations;
    best.descent_violations = run.descent_violations;
    best.q_history = std::move(run.q_history);
    return best;
}

InnerResult inner_solve(const Network& net, const ExpansionDecision& x, const EllipsoidalSet& set,
                        const ScenarioRealization& d_init, double tolerance) {
    const auto model = UncertaintyModel::full(ScenarioRealization::from_flat(set.mean(), net.generators.size()), set);
    DecompOptions options;
    options.tolerance = tolerance;
    return inner_solve(net, x, model, d_init.flat(), options);
}

InnerResult inner_solve_multistart(const Network& net, const ExpansionDecision& x, const UncertaintyModel& model,
                                   const DecompOptions& options) {
    const auto& set = model.set();
    std::vector<Eigen::VectorXd> starts{recommended_start(model), set.mean()};
    NormalStream normals(options.seed);
    while (static_cast<int>(starts.size()) < options.inner_starts) {
        Eigen::VectorXd z = normals.vector(set.dimension());
        const double norm = z.norm();
        if (norm > 0.0) z *= set.beta() / norm;
        starts.push_back(project_into_set(set, set.map_z_to_d(z)));
    }
    const auto count = static_cast<std::size_t>(std::max(1, options.inner_starts));

    InnerResult best;
    for (std::size_t s = 0; s < count && s < starts.size(); ++s) {
        InnerResult r = inner_solve(net, x, model, starts[s], options);
        r.start = static_cast<int>(s);
        if (s == 0 || r.q_beta > best.q_beta * (1.0 + 1e-12) + 1e-12) best = std::move(r);
    }
    return best;
}

MasterResult solve_master(const Network& net, const std::vector<ScenarioRealization>& scenarios,
                          const MILPOptions& options) {
    MasterResult out;
    if (scenarios.empty()) {
        out.decision = no_investment(net);
        return out;
    }

    const auto cand = net.candidate_line_indices();
    LpBuilder b;
    std::vector<Eigen::Index> xcols;
    LpBuilder::Terms budget;
    for (auto li : cand) {
        const double cost = *net.lines[li].build_cost;
        const auto col = b.add_variable(0.0, 1.0, cost);
        xcols.push_back(col);
        budget.emplace_back(col, cost);
    }
    const auto gamma = b.add_variable(0.0, kInf, 1.0);
    if (!cand.empty()) b.add_inequality(budget, net.budget);

    // Interchangeable candidates in one corridor are built in file order.
    for (std::size_t a = 0; a < cand.size(); ++a)
        for (std::size_t c = a + 1; c < cand.size(); ++c) {
            const Line& la = net.lines[cand[a]];
            const Line& lc = net.lines[cand[c]];
            if (la.from_bus == lc.from_bus && la.to_bus == lc.to_bus && la.susceptance == lc.susceptance &&
                la.capacity == lc.capacity && la.build_cost == lc.build_cost) {
                b.add_inequality({{xcols[c], 1.0}, {xcols[a], -1.0}}, 0.0);
                break;
            }
        }

    CandidateLinks links;
    links.columns = &xcols;
    for (const auto& d : scenarios) {
        const OperatingBlock blk = append_operating_block(b, net, d, links, false);
        LpBuilder::Terms cut{{gamma, -1.0}};
        for (const auto& [col, rate] : blk.cost) cut.emplace_back(col, rate);
        b.add_inequality(std::move(cut), 0.0);
    }

    MILPProblem problem;
    problem.lp = b.build(Sense::minimize);
    problem.binaries = xcols;
    const MILPSolution sol = solve_milp(problem, options);
    if (sol.status != MILPStatus::optimal)
        throw MasterInfeasible("master problem is not solvable with the stored scenarios");

    std::vector<bool> build;
    for (auto col : xcols) build.push_back(sol.primal[col] > 0.5);
    out.decision = make_decision(net, std::move(build));
    out.gamma = sol.primal[gamma];
    out.z_lo = sol.objective;
    out.nodes = sol.nodes;
    return out;
}

std::string to_string(OuterStatus s) {
    switch (s) {
    case OuterStatus::converged: return "converged";
    case OuterStatus::iteration_limit: return "iteration_limit";
    case OuterStatus::stalled: return "stalled";
    }
    return "unknown";
}

double relative_gap(double z_up, double z_lo) {
    const double diff = z_up - z_lo;
    return std::abs(z_up) < 1e-12 ? diff : diff / std::abs(z_up);
}

OuterResult outer_solve(const Network& net, const UncertaintyModel& model, const DecompOptions& options) {
    if (!(options.tolerance > 0.0)) throw DomainError("outer_solve: tolerance must be positive");
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();

    OuterResult out;
    for (int nu = 1; nu <= options.outer_max_iterations; ++nu) {
        const auto ti = clock::now();
        const MasterResult master = solve_master(net, out.scenarios, options.milp);
        InnerResult inner = inner_solve_multistart(net, master.decision, model, options);

        OuterIteration row;
        row.iteration = nu;
        row.z_lo = master.z_lo;
        row.z_up = master.decision.investment_cost + inner.q_beta;
        row.gap = relative_gap(row.z_up, row.z_lo);
        row.decision = master.decision;
        row.q_beta = inner.q_beta;
        row.d_ml = inner.d_ml;
        row.inner_iterations = inner.iterations;
        row.seconds = std::chrono::duration<double>(clock::now() - ti).count();
        out.log.push_back(row);

        out.decision = master.decision;
        out.q_beta = inner.q_beta;
        out.objective = row.z_up;
        out.worst_case = std::move(inner);

        if (row.gap <= options.tolerance) {
            out.status = OuterStatus::converged;
            break;
        }
        const bool repeated = std::any_of(out.scenarios.begin(), out.scenarios.end(), [&](const auto& s) {
            return vec_distance(s, row.d_ml) <= options.duplicate_tolerance;
        });
        if (repeated) {
            out.status = OuterStatus::stalled;
            break;
        }
        out.scenarios.push_back(row.d_ml);
    }
    out.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    return out;
}

} // namespace arotnep
