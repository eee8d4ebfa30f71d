#include "arotnep/simplex.hpp"

#include "arotnep/errors.hpp"

#include <algorithm>
#include <cmath>

namespace arotnep {

double KKTReport::max() const {
    return std::max({primal_feasibility, dual_feasibility, complementarity, duality_gap});
}

KKTReport check_kkt(const LinearProgram& lp, const LPSolution& sol) {
    lp.check();
    const auto n = lp.variable_count();
    if (sol.primal.size() != n || sol.equality_duals.size() != lp.eq_count() ||
        sol.inequality_duals.size() != lp.ineq_count())
        throw DimensionMismatch("check_kkt: solution dimensions do not match the program");

    // Everything is measured on the minimization form.
    const bool minimize = lp.sense == Sense::minimize;
    const Eigen::VectorXd c = minimize ? lp.objective : Eigen::VectorXd(-lp.objective);
    const Eigen::VectorXd lambda = minimize ? sol.equality_duals : Eigen::VectorXd(-sol.equality_duals);
    const Eigen::VectorXd& mu = sol.inequality_duals;
    const Eigen::VectorXd& x = sol.primal;

    KKTReport rep;

    const Eigen::VectorXd eq_res = lp.eq_matrix * x - lp.eq_rhs;
    const Eigen::VectorXd slack = lp.ineq_rhs - lp.ineq_matrix * x;
    double pf = eq_res.size() ? eq_res.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index i = 0; i < slack.size(); ++i) pf = std::max(pf, -slack[i]);
    for (Eigen::Index j = 0; j < n; ++j) {
        pf = std::max(pf, lp.lower[j] - x[j]);
        pf = std::max(pf, x[j] - lp.upper[j]);
    }
    rep.primal_feasibility = std::max(0.0, pf);

    // Bound multipliers are whatever is left of the objective after the rows.
    const Eigen::VectorXd r = c - lp.eq_matrix.transpose() * lambda + lp.ineq_matrix.transpose() * mu;

    double df = 0.0;
    double comp = 0.0;
    double dual_obj = lp.eq_rhs.dot(lambda) - lp.ineq_rhs.dot(mu);
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        df = std::max(df, -mu[i]);
        comp = std::max(comp, std::abs(mu[i] * slack[i]));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const double rj = r[j];
        if (rj > 0.0) {
            if (std::isfinite(lp.lower[j])) {
                dual_obj += rj * lp.lower[j];
                comp = std::max(comp, std::abs(rj * (x[j] - lp.lower[j])));
            } else {
                df = std::max(df, rj);
            }
        } else if (rj < 0.0) {
            if (std::isfinite(lp.upper[j])) {
                dual_obj += rj * lp.upper[j];
                comp = std::max(comp, std::abs(rj * (lp.upper[j] - x[j])));
            } else {
                df = std::max(df, -rj);
            }
        }
    }
    rep.dual_feasibility = df;
    rep.complementarity = comp;
    rep.duality_gap = std::abs(c.dot(x) - dual_obj);
    return rep;
}

} // namespace arotnep
