#include "arotnep/simplex.hpp"

#include "arotnep/errors.hpp"

#include <algorithm>
#include <cmath>

namespace arotnep {

LinearProgram LinearProgram::with_variables(Eigen::Index n) {
    LinearProgram lp;
    lp.objective = Eigen::VectorXd::Zero(n);
    lp.eq_matrix.resize(0, n);
    lp.eq_rhs.resize(0);
    lp.ineq_matrix.resize(0, n);
    lp.ineq_rhs.resize(0);
    lp.lower = Eigen::VectorXd::Zero(n);
    lp.upper = Eigen::VectorXd::Constant(n, kInf);
    return lp;
}

void LinearProgram::check() const {
    const auto n = objective.size();
    if (eq_matrix.cols() != n || ineq_matrix.cols() != n || lower.size() != n || upper.size() != n)
        throw DimensionMismatch("linear program: column dimensions disagree");
    if (eq_rhs.size() != eq_matrix.rows() || ineq_rhs.size() != ineq_matrix.rows())
        throw DimensionMismatch("linear program: rhs length disagrees with matrix rows");
    if (!objective.allFinite() || !eq_matrix.allFinite() || !ineq_matrix.allFinite() ||
        !eq_rhs.allFinite() || !ineq_rhs.allFinite())
        throw DomainError("linear program: non-finite coefficient");
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j])
            throw DomainError("linear program: variable " + std::to_string(j) +
                              " has lower bound above upper bound");
        if (lower[j] == kInf || upper[j] == -kInf)
            throw DomainError("linear program: variable " + std::to_string(j) + " has an empty range");
    }
}

std::string to_string(LPStatus s) {
    switch (s) {
    case LPStatus::optimal: return "optimal";
    case LPStatus::infeasible: return "infeasible";
    case LPStatus::unbounded: return "unbounded";
    }
    return "unknown";
}

namespace {

// Working form: A x + r = b with one logical r_i per row. Logicals of
// equality rows are fixed at zero, those of ≤ rows live in [0, +inf).
// Phase 1 minimizes the sum of bound violations of the basic variables
// (composite simplex), so any starting basis can be used.
class RevisedSimplex {
public:
    RevisedSimplex(const LinearProgram& lp, const SimplexOptions& opt)
        : opt_(opt), n_(lp.variable_count()), m_(lp.eq_count() + lp.ineq_count()),
          eq_rows_(lp.eq_count()), minimize_(lp.sense == Sense::minimize) {
        A_.resize(m_, n_);
        if (lp.eq_count() > 0) A_.topRows(lp.eq_count()) = lp.eq_matrix;
        if (lp.ineq_count() > 0) A_.bottomRows(lp.ineq_count()) = lp.ineq_matrix;
        b_.resize(m_);
        b_ << lp.eq_rhs, lp.ineq_rhs;

        const Eigen::Index total = n_ + m_;
        cost_ = Eigen::VectorXd::Zero(total);
        cost_.head(n_) = lp.sense == Sense::minimize ? lp.objective : Eigen::VectorXd(-lp.objective);
        lo_.resize(total);
        hi_.resize(total);
        lo_.head(n_) = lp.lower;
        hi_.head(n_) = lp.upper;
        for (Eigen::Index i = 0; i < m_; ++i) {
            lo_[n_ + i] = 0.0;
            hi_[n_ + i] = i < lp.eq_count() ? 0.0 : kInf;
        }
        x_ = Eigen::VectorXd::Zero(total);
        state_.assign(static_cast<std::size_t>(total), VarState::at_lower);
        head_.assign(static_cast<std::size_t>(m_), 0);
    }

    LPSolution run() {
        if (!(opt_.warm_start && install_basis(*opt_.warm_start))) install_slack_basis();

        LPSolution sol;
        int since_refactor = 0;
        int degenerate = 0;
        bool bland = false;
        bool verified = false;

        for (int iter = 0;; ++iter) {
            if (iter >= opt_.max_iterations)
                throw NumericalError("simplex: iteration limit reached (" +
                                     std::to_string(opt_.max_iterations) + ")");
            if (since_refactor >= opt_.refactor_interval) {
                refactor();
                since_refactor = 0;
            }

            const bool phase1 = basic_infeasibility() > 0.0;
            Eigen::VectorXd cb(m_);
            for (Eigen::Index i = 0; i < m_; ++i) cb[i] = phase_cost(head_[idx(i)], phase1);
            const Eigen::VectorXd pi = Binv_.transpose() * cb;

            const Eigen::Index q = choose_entering(pi, phase1, bland);
            if (q < 0) {
                if (!verified && since_refactor > 0) {
                    // Recompute from a fresh factorization before declaring
                    // a final status.
                    refactor();
                    since_refactor = 0;
                    verified = true;
                    continue;
                }
                if (phase1) {
                    sol.status = LPStatus::infeasible;
                } else {
                    sol.status = LPStatus::optimal;
                    fill_duals(sol, pi);
                }
                sol.iterations = iter;
                break;
            }
            verified = false;

            const double dq = reduced_cost(q, pi, phase1);
            const double dir = dq < 0.0 ? 1.0 : -1.0;
            const Eigen::VectorXd alpha = Binv_ * column(q);

            // Ratio test.
            double step = hi_[q] - lo_[q]; // bound flip distance (inf when free)
            Eigen::Index leave = -1;
            bool leave_to_upper = false;
            double best_pivot = 0.0;
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double a = alpha[i];
                if (std::abs(a) <= kPivotTolerance) continue;
                const Eigen::Index j = head_[idx(i)];
                const double rate = -dir * a; // d x_j / d step
                const double xj = x_[j];
                double limit = kInf;
                bool to_upper = false;
                if (rate < 0.0) {
                    if (xj > hi_[j] + ptol(hi_[j])) {
                        limit = (xj - hi_[j]) / -rate;
                        to_upper = true;
                    } else if (xj >= lo_[j] - ptol(lo_[j]) && lo_[j] > -kInf) {
                        limit = std::max(0.0, xj - lo_[j]) / -rate;
                    }
                } else {
                    if (xj < lo_[j] - ptol(lo_[j])) {
                        limit = (lo_[j] - xj) / rate;
                    } else if (xj <= hi_[j] + ptol(hi_[j]) && hi_[j] < kInf) {
                        limit = std::max(0.0, hi_[j] - xj) / rate;
                        to_upper = true;
                    }
                }
                if (limit == kInf) continue;
                if (limit < step - kRatioTie) {
                    step = limit;
                } else if (limit > step + kRatioTie || leave < 0 ||
                           !(bland ? j < head_[idx(leave)] : std::abs(a) > best_pivot)) {
                    // Ties with a bound flip keep the flip; otherwise prefer the
                    // larger pivot (or the lower index under Bland's rule).
                    continue;
                }
                leave = i;
                leave_to_upper = to_upper;
                best_pivot = std::abs(a);
            }

            if (step == kInf) {
                if (phase1) throw NumericalError("simplex: unbounded phase-1 ray");
                sol.status = LPStatus::unbounded;
                sol.iterations = iter;
                break;
            }

            if (step <= 1e-12) {
                if (++degenerate > opt_.degeneracy_trigger) bland = true;
            } else {
                degenerate = 0;
                bland = false;
            }

            // Move along the edge.
            x_[q] += dir * step;
            for (Eigen::Index i = 0; i < m_; ++i) x_[head_[idx(i)]] -= dir * step * alpha[i];

            if (leave < 0) {
                // Entering variable reached its opposite bound.
                if (dir > 0) {
                    state_[idx(q)] = VarState::at_upper;
                    x_[q] = hi_[q];
                } else {
                    state_[idx(q)] = VarState::at_lower;
                    x_[q] = lo_[q];
                }
                continue;
            }

            const Eigen::Index out = head_[idx(leave)];
            if (leave_to_upper) {
                state_[idx(out)] = VarState::at_upper;
                x_[out] = hi_[out];
            } else {
                state_[idx(out)] = VarState::at_lower;
                x_[out] = lo_[out];
            }
            if (lo_[out] == hi_[out]) state_[idx(out)] = VarState::at_lower;
            state_[idx(q)] = VarState::basic;
            head_[idx(leave)] = q;

            const Eigen::RowVectorXd pivot_row = Binv_.row(leave) / alpha[leave];
            Binv_.noalias() -= alpha * pivot_row;
            Binv_.row(leave) = pivot_row;
            ++since_refactor;
        }

        sol.primal = x_.head(n_);
        sol.basis.structural.assign(state_.begin(), state_.begin() + n_);
        sol.basis.logical.assign(state_.begin() + n_, state_.end());
        return sol;
    }

private:
    static constexpr double kPivotTolerance = 1e-9;
    static constexpr double kRatioTie = 1e-12;

    static std::size_t idx(Eigen::Index i) { return static_cast<std::size_t>(i); }

    double ptol(double bound) const {
        return opt_.primal_tolerance * (1.0 + (std::isfinite(bound) ? std::abs(bound) : 0.0));
    }

    Eigen::VectorXd column(Eigen::Index j) const {
        if (j < n_) return A_.col(j);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
        e[j - n_] = 1.0;
        return e;
    }

    double phase_cost(Eigen::Index j, bool phase1) const {
        if (!phase1) return cost_[j];
        if (x_[j] < lo_[j] - ptol(lo_[j])) return -1.0;
        if (x_[j] > hi_[j] + ptol(hi_[j])) return 1.0;
        return 0.0;
    }

    double reduced_cost(Eigen::Index j, const Eigen::VectorXd& pi, bool phase1) const {
        const double c = phase1 ? 0.0 : cost_[j];
        if (j < n_) return c - A_.col(j).dot(pi);
        return c - pi[j - n_];
    }

    double basic_infeasibility() const {
        double s = 0.0;
        for (Eigen::Index i = 0; i < m_; ++i) {
            const Eigen::Index j = head_[idx(i)];
            if (x_[j] < lo_[j] - ptol(lo_[j])) s += lo_[j] - x_[j];
            if (x_[j] > hi_[j] + ptol(hi_[j])) s += x_[j] - hi_[j];
        }
        return s;
    }

    Eigen::Index choose_entering(const Eigen::VectorXd& pi, bool phase1, bool bland) const {
        Eigen::Index best = -1;
        double best_score = 0.0;
        const Eigen::Index total = n_ + m_;
        Eigen::VectorXd dstruct;
        if (phase1)
            dstruct = -(A_.transpose() * pi);
        else
            dstruct = cost_.head(n_) - A_.transpose() * pi;
        for (Eigen::Index j = 0; j < total; ++j) {
            const VarState s = state_[idx(j)];
            if (s == VarState::basic) continue;
            if (lo_[j] == hi_[j]) continue;
            const double d = j < n_ ? dstruct[j] : (phase1 ? 0.0 : cost_[j]) - pi[j - n_];
            const double tol = opt_.dual_tolerance;
            bool eligible = false;
            if (s == VarState::at_lower)
                eligible = d < -tol;
            else if (s == VarState::at_upper)
                eligible = d > tol;
            else
                eligible = std::abs(d) > tol;
            if (!eligible) continue;
            if (bland) return j;
            if (std::abs(d) > best_score) {
                best_score = std::abs(d);
                best = j;
            }
        }
        return best;
    }

    void place_nonbasic(Eigen::Index j, VarState wanted) {
        const bool has_lo = lo_[j] > -kInf;
        const bool has_hi = hi_[j] < kInf;
        VarState s = wanted;
        if (s == VarState::at_upper && !has_hi) s = has_lo ? VarState::at_lower : VarState::free_zero;
        if (s == VarState::at_lower && !has_lo) s = has_hi ? VarState::at_upper : VarState::free_zero;
        if (s == VarState::free_zero && (has_lo || has_hi)) s = has_lo ? VarState::at_lower : VarState::at_upper;
        state_[idx(j)] = s;
        x_[j] = s == VarState::at_lower ? lo_[j] : s == VarState::at_upper ? hi_[j] : 0.0;
    }

    void install_slack_basis() {
        for (Eigen::Index j = 0; j < n_; ++j) place_nonbasic(j, VarState::at_lower);
        for (Eigen::Index i = 0; i < m_; ++i) {
            head_[idx(i)] = n_ + i;
            state_[idx(n_ + i)] = VarState::basic;
        }
        Binv_ = Eigen::MatrixXd::Identity(m_, m_);
        compute_basic_values();
    }

    bool install_basis(const Basis& basis) {
        if (static_cast<Eigen::Index>(basis.structural.size()) != n_ ||
            static_cast<Eigen::Index>(basis.logical.size()) != m_)
            return false;
        std::vector<Eigen::Index> basics;
        for (Eigen::Index j = 0; j < n_ + m_; ++j) {
            const VarState s = j < n_ ? basis.structural[idx(j)] : basis.logical[idx(j - n_)];
            if (s == VarState::basic) {
                basics.push_back(j);
                state_[idx(j)] = VarState::basic;
            } else {
                place_nonbasic(j, s);
            }
        }
        if (static_cast<Eigen::Index>(basics.size()) != m_) return false;
        for (Eigen::Index i = 0; i < m_; ++i) head_[idx(i)] = basics[idx(i)];
        if (!factor()) return false;
        compute_basic_values();
        return true;
    }

    bool factor() {
        if (m_ == 0) {
            Binv_.resize(0, 0);
            return true;
        }
        Eigen::MatrixXd B(m_, m_);
        for (Eigen::Index i = 0; i < m_; ++i) B.col(i) = column(head_[idx(i)]);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
        if (!(lu.rcond() > 1e-14)) return false;
        Binv_ = lu.inverse();
        return true;
    }

    void compute_basic_values() {
        Eigen::VectorXd rhs = b_;
        for (Eigen::Index j = 0; j < n_ + m_; ++j) {
            if (state_[idx(j)] == VarState::basic || x_[j] == 0.0) continue;
            if (j < n_)
                rhs.noalias() -= A_.col(j) * x_[j];
            else
                rhs[j - n_] -= x_[j];
        }
        const Eigen::VectorXd xb = Binv_ * rhs;
        for (Eigen::Index i = 0; i < m_; ++i) x_[head_[idx(i)]] = xb[i];
    }

    void refactor() {
        if (!factor()) throw NumericalError("simplex: basis matrix became singular");
        compute_basic_values();
    }

    void fill_duals(LPSolution& sol, const Eigen::VectorXd& pi) const {
        sol.equality_duals = minimize_ ? Eigen::VectorXd(pi.head(eq_rows_)) : Eigen::VectorXd(-pi.head(eq_rows_));
        sol.inequality_duals = -pi.tail(m_ - eq_rows_);
    }

    SimplexOptions opt_;
    Eigen::Index n_;
    Eigen::Index m_;
    Eigen::Index eq_rows_;
    bool minimize_;
    Eigen::MatrixXd A_;
    Eigen::VectorXd b_;
    Eigen::VectorXd cost_;
    Eigen::VectorXd lo_, hi_, x_;
    std::vector<VarState> state_;
    std::vector<Eigen::Index> head_;
    Eigen::MatrixXd Binv_;
};

} // namespace

LPSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
    lp.check();
    RevisedSimplex simplex(lp, options);
    LPSolution sol = simplex.run();
    if (sol.status == LPStatus::optimal) {
        sol.objective = lp.objective.dot(sol.primal);
    } else {
        sol.equality_duals = Eigen::VectorXd::Zero(lp.eq_count());
        sol.inequality_duals = Eigen::VectorXd::Zero(lp.ineq_count());
        sol.objective = sol.status == LPStatus::unbounded
                            ? (lp.sense == Sense::minimize ? -kInf : kInf)
                            : std::numeric_limits<double>::quiet_NaN();
    }
    return sol;
}

} // namespace arotnep
