#pragma once

#include "arotnep/simplex.hpp"

#include <utility>
#include <vector>

namespace arotnep {

/// Row-wise accumulator for dense linear programs.
class LpBuilder {
public:
    using Terms = std::vector<std::pair<Eigen::Index, double>>;

    Eigen::Index add_variable(double lower, double upper, double cost = 0.0) {
        lower_.push_back(lower);
        upper_.push_back(upper);
        cost_.push_back(cost);
        return static_cast<Eigen::Index>(cost_.size()) - 1;
    }

    void add_cost(Eigen::Index j, double c) { cost_[static_cast<std::size_t>(j)] += c; }

    Eigen::Index add_equality(Terms terms, double rhs) {
        eq_.push_back({std::move(terms), rhs});
        return static_cast<Eigen::Index>(eq_.size()) - 1;
    }

    Eigen::Index add_inequality(Terms terms, double rhs) {
        ineq_.push_back({std::move(terms), rhs});
        return static_cast<Eigen::Index>(ineq_.size()) - 1;
    }

    Eigen::Index variable_count() const { return static_cast<Eigen::Index>(cost_.size()); }

    LinearProgram build(Sense sense = Sense::minimize) const {
        const auto n = variable_count();
        LinearProgram lp = LinearProgram::with_variables(n);
        lp.sense = sense;
        for (Eigen::Index j = 0; j < n; ++j) {
            lp.objective[j] = cost_[static_cast<std::size_t>(j)];
            lp.lower[j] = lower_[static_cast<std::size_t>(j)];
            lp.upper[j] = upper_[static_cast<std::size_t>(j)];
        }
        fill(eq_, lp.eq_matrix, lp.eq_rhs, n);
        fill(ineq_, lp.ineq_matrix, lp.ineq_rhs, n);
        return lp;
    }

private:
    struct Row {
        Terms terms;
        double rhs;
    };

    static void fill(const std::vector<Row>& rows, Eigen::MatrixXd& M, Eigen::VectorXd& rhs, Eigen::Index n) {
        const auto m = static_cast<Eigen::Index>(rows.size());
        M = Eigen::MatrixXd::Zero(m, n);
        rhs.resize(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto& row = rows[static_cast<std::size_t>(i)];
            for (const auto& [j, v] : row.terms) M(i, j) += v;
            rhs[i] = row.rhs;
        }
    }

    std::vector<double> lower_, upper_, cost_;
    std::vector<Row> eq_, ineq_;
};

} // namespace arotnep
