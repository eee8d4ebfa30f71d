#include "arotnep/ellipsoid.hpp"

#include "arotnep/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace arotnep {

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols()) throw DimensionMismatch("cholesky_factor: matrix is not square");
    const Eigen::Index n = sigma.rows();
    const double scale = n > 0 ? sigma.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            if (std::abs(sigma(i, j) - sigma(j, i)) > 1e-12 * std::max(1.0, scale))
                throw DomainError("cholesky_factor: matrix is not symmetric");

    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double diag = sigma(j, j);
        for (Eigen::Index k = 0; k < j; ++k) diag -= L(j, k) * L(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag))
            throw NotPositiveDefinite(static_cast<std::size_t>(j),
                                      "cholesky_factor: leading minor " + std::to_string(j + 1) +
                                          " is not positive");
        L(j, j) = std::sqrt(diag);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = sigma(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            L(i, j) = s / L(j, j);
        }
    }
    return L;
}

EllipsoidalSet::EllipsoidalSet(Eigen::VectorXd mean, Eigen::MatrixXd covariance, double beta,
                               std::optional<BoxOffsets> box)
    : mean_(std::move(mean)), covariance_(std::move(covariance)), beta_(beta), box_(std::move(box)) {
    if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size())
        throw DimensionMismatch("ellipsoidal set: covariance does not match the mean");
    if (!(beta_ >= 0.0) || !std::isfinite(beta_))
        throw DomainError("ellipsoidal set: beta must be finite and nonnegative");
    chol_ = cholesky_factor(covariance_);
    if (box_) {
        if (box_->lower.size() != mean_.size() || box_->upper.size() != mean_.size())
            throw DimensionMismatch("ellipsoidal set: box offsets do not match the mean");
        for (Eigen::Index i = 0; i < mean_.size(); ++i)
            if (std::isnan(box_->lower[i]) || std::isnan(box_->upper[i]) || box_->lower[i] > 0.0 ||
                box_->upper[i] < 0.0)
                throw DomainError("ellipsoidal set: box offsets must bracket zero");
    }
}

EllipsoidalSet EllipsoidalSet::with_beta(double beta) const {
    EllipsoidalSet copy = *this;
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw DomainError("ellipsoidal set: beta must be finite and nonnegative");
    copy.beta_ = beta;
    return copy;
}

double EllipsoidalSet::mahalanobis(const Eigen::VectorXd& d) const {
    if (d.size() != mean_.size()) throw DimensionMismatch("mahalanobis: dimension mismatch");
    if (mean_.size() == 0) return 0.0;
    const Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(d - mean_);
    return w.norm();
}

bool EllipsoidalSet::in_box(const Eigen::VectorXd& d, double tol) const {
    if (!box_) return true;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double off = d[i] - mean_[i];
        if (off < box_->lower[i] - tol || off > box_->upper[i] + tol) return false;
    }
    return true;
}

bool EllipsoidalSet::contains(const Eigen::VectorXd& d, double tol) const {
    return mahalanobis(d) <= beta_ + tol && in_box(d, tol);
}

Eigen::VectorXd EllipsoidalSet::map_z_to_d(const Eigen::VectorXd& z) const {
    if (z.size() != mean_.size()) throw DimensionMismatch("map_z_to_d: dimension mismatch");
    return mean_ + chol_ * z;
}

double linearized_cost(double q, const Eigen::VectorXd& eta, const Eigen::VectorXd& d,
                       const Eigen::VectorXd& d_prev) {
    return q + eta.dot(d - d_prev);
}

MaxLikelihoodPoint analytical_worst_case(const EllipsoidalSet& set, const Eigen::VectorXd& eta) {
    if (eta.size() != set.dimension()) throw DimensionMismatch("analytical_worst_case: η has the wrong size");
    MaxLikelihoodPoint out;
    out.stage = 1;
    const Eigen::VectorXd s = set.covariance() * eta;
    const double denom = std::sqrt(std::max(0.0, eta.dot(s)));
    if (!(denom > 0.0)) {
        out.zero_gradient = true;
        out.point = set.mean();
        out.mahalanobis_distance = 0.0;
        return out;
    }
    out.point = set.mean() + set.beta() * s / denom;
    out.mahalanobis_distance = set.mahalanobis(out.point);
    return out;
}

namespace {

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

// argmax ηᵀδ − (ν/2) δᵀPδ subject to lo ≤ δ ≤ hi, P positive definite.
// Gauss–Seidel coordinate ascent followed by an exact solve on the final
// free set.
Eigen::VectorXd box_qp(const Eigen::MatrixXd& P, const Eigen::VectorXd& eta, double nu,
                       const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, Eigen::VectorXd delta) {
    const Eigen::Index n = eta.size();
    for (Eigen::Index i = 0; i < n; ++i) delta[i] = clamp(delta[i], lo[i], hi[i]);

    for (int sweep = 0; sweep < 20000; ++sweep) {
        double change = 0.0;
        double size = 1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double off = P.row(i).dot(delta) - P(i, i) * delta[i];
            const double v = clamp((eta[i] - nu * off) / (nu * P(i, i)), lo[i], hi[i]);
            change = std::max(change, std::abs(v - delta[i]));
            size = std::max(size, std::abs(v));
            delta[i] = v;
        }
        if (change <= 1e-15 * size) break;
    }

    std::vector<Eigen::Index> free_set, fixed;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double tol = 1e-12 * (1.0 + std::abs(delta[i]));
        if (delta[i] > lo[i] + tol && delta[i] < hi[i] - tol)
            free_set.push_back(i);
        else
            fixed.push_back(i);
    }
    if (free_set.empty()) return delta;
    const auto nf = static_cast<Eigen::Index>(free_set.size());
    Eigen::MatrixXd Pff(nf, nf);
    Eigen::VectorXd rhs(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
        const auto i = free_set[static_cast<std::size_t>(a)];
        rhs[a] = eta[i] / nu;
        for (auto j : fixed) rhs[a] -= P(i, j) * delta[j];
        for (Eigen::Index b = 0; b < nf; ++b) Pff(a, b) = P(i, free_set[static_cast<std::size_t>(b)]);
    }
    const Eigen::VectorXd sol = Pff.llt().solve(rhs);
    Eigen::VectorXd polished = delta;
    for (Eigen::Index a = 0; a < nf; ++a) {
        const auto i = free_set[static_cast<std::size_t>(a)];
        if (!(sol[a] >= lo[i] && sol[a] <= hi[i])) return delta;
        polished[i] = sol[a];
    }
    return polished;
}

} // namespace

MaxLikelihoodPoint bounded_worst_case(const EllipsoidalSet& set, const Eigen::VectorXd& eta, double q,
                                      const Eigen::VectorXd& d_prev) {
    (void)q;
    if (d_prev.size() != set.dimension()) throw DimensionMismatch("bounded_worst_case: d_prev has the wrong size");

    // Stage 1: the analytical point, if it already respects the box.
    MaxLikelihoodPoint first = analytical_worst_case(set, eta);
    if (first.zero_gradient || !set.has_box() || set.in_box(first.point, 1e-10)) return first;

    const Eigen::Index n = set.dimension();
    const Eigen::VectorXd& lo = set.box().lower;
    const Eigen::VectorXd& hi = set.box().upper;
    const double beta = set.beta();

    // Stage 2: maximize the linearization over the box alone.
    Eigen::VectorXd vertex = Eigen::VectorXd::Zero(n);
    bool bounded = true;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (eta[i] > 0.0)
            vertex[i] = hi[i];
        else if (eta[i] < 0.0)
            vertex[i] = lo[i];
        if (!std::isfinite(vertex[i])) bounded = false;
    }
    if (bounded) {
        const Eigen::VectorXd d = set.mean() + vertex;
        const double dist = set.mahalanobis(d);
        if (dist <= beta + 1e-12) return MaxLikelihoodPoint{d, dist, false, 2};
    }

    // Stage 3: box ∩ ellipsoid. For a multiplier ν > 0 on the ellipsoid the
    // problem becomes a box-constrained concave QP whose solution δ(ν) has a
    // Mahalanobis norm decreasing in ν; bisect for the norm to equal β.
    const Eigen::MatrixXd Linv = set.cholesky().triangularView<Eigen::Lower>().solve(
        Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd P = Linv.transpose() * Linv;
    const double beta2 = beta * beta;

    Eigen::VectorXd warm = Eigen::VectorXd::Zero(n);
    auto excess = [&](double nu, Eigen::VectorXd& delta) {
        delta = box_qp(P, eta, nu, lo, hi, warm);
        warm = delta;
        const Eigen::VectorXd w = set.cholesky().triangularView<Eigen::Lower>().solve(delta);
        return w.squaredNorm() - beta2;
    };

    const double nu0 = std::sqrt(std::max(eta.dot(set.covariance() * eta), 1e-300)) / std::max(beta, 1e-300);
    Eigen::VectorXd delta_hi, delta_lo;
    double nu_hi = nu0;
    double g = excess(nu_hi, delta_hi);
    for (int i = 0; i < 400 && g > 0.0; ++i) {
        nu_hi *= 2.0;
        g = excess(nu_hi, delta_hi);
    }
    if (g > 0.0) throw NumericalError("bounded_worst_case: could not bracket the ellipsoid multiplier");

    double nu_lo = nu_hi;
    bool bracketed = false;
    for (int i = 0; i < 400; ++i) {
        nu_lo *= 0.5;
        if (excess(nu_lo, delta_lo) > 0.0) {
            bracketed = true;
            break;
        }
        delta_hi = delta_lo;
        nu_hi = nu_lo;
    }

    if (bracketed) {
        for (int i = 0; i < 200; ++i) {
            const double mid = std::sqrt(nu_lo * nu_hi);
            if (!(mid > nu_lo && mid < nu_hi)) break;
            Eigen::VectorXd delta_mid;
            if (excess(mid, delta_mid) > 0.0) {
                nu_lo = mid;
            } else {
                nu_hi = mid;
                delta_hi = delta_mid;
            }
            if (nu_hi / nu_lo - 1.0 < 1e-15) break;
        }
    }

    MaxLikelihoodPoint out;
    out.point = set.mean() + delta_hi;
    out.mahalanobis_distance = set.mahalanobis(out.point);
    out.stage = 3;
    return out;
}

MaxLikelihoodPoint worst_case_update(const EllipsoidalSet& set, const Eigen::VectorXd& eta, double q,
                                     const Eigen::VectorXd& d_prev) {
    if (set.has_box()) return bounded_worst_case(set, eta, q, d_prev);
    return analytical_worst_case(set, eta);
}

} // namespace arotnep
