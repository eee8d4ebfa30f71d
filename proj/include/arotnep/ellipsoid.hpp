#pragma once

// Ellipsoidal uncertainty set {d : (d − d̄)ᵀ Σ⁻¹ (d − d̄) ≤ β²}, optionally
// intersected with a box  lower ≤ d − d̄ ≤ upper.
//
// Sign restrictions (generation capacities never above nominal, demands never
// below) are expressed as one-sided box offsets with the other side infinite.

#include <Eigen/Dense>

#include <optional>

namespace arotnep {

/// Lower-triangular L with L·Lᵀ = Σ. Throws NotPositiveDefinite carrying the
/// index of the first failing leading minor, DimensionMismatch if Σ is not
/// square, DomainError if it is not symmetric.
Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma);

struct BoxOffsets {
    Eigen::VectorXd lower; // ≤ 0, may be -inf
    Eigen::VectorXd upper; // ≥ 0, may be +inf
};

class EllipsoidalSet {
public:
    EllipsoidalSet(Eigen::VectorXd mean, Eigen::MatrixXd covariance, double beta,
                   std::optional<BoxOffsets> box = std::nullopt);

    Eigen::Index dimension() const { return mean_.size(); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& covariance() const { return covariance_; }
    const Eigen::MatrixXd& cholesky() const { return chol_; }
    double beta() const { return beta_; }
    bool has_box() const { return box_.has_value(); }
    const BoxOffsets& box() const { return *box_; }

    EllipsoidalSet with_beta(double beta) const;

    /// sqrt((d − d̄)ᵀ Σ⁻¹ (d − d̄)), computed through L.
    double mahalanobis(const Eigen::VectorXd& d) const;
    bool in_box(const Eigen::VectorXd& d, double tol = 1e-9) const;
    bool contains(const Eigen::VectorXd& d, double tol = 1e-8) const;

    /// d = d̄ + L z.
    Eigen::VectorXd map_z_to_d(const Eigen::VectorXd& z) const;

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd covariance_;
    Eigen::MatrixXd chol_;
    double beta_;
    std::optional<BoxOffsets> box_;
};

struct MaxLikelihoodPoint {
    Eigen::VectorXd point;
    double mahalanobis_distance = 0.0;
    // η was zero: the linearization is flat and the mean is returned.
    bool zero_gradient = false;
    // Which stage produced the point: 1 analytical, 2 box vertex, 3 box ∩ ellipsoid.
    int stage = 1;
};

/// d̄ + β Ση / sqrt(ηᵀΣη), the maximizer of ηᵀd over the ellipsoid (box ignored).
MaxLikelihoodPoint analytical_worst_case(const EllipsoidalSet& set, const Eigen::VectorXd& eta);

/// Maximizes q + ηᵀ(d − d_prev) over ellipsoid ∩ box: analytical point if it
/// lies in the box, else the box maximizer if it lies in the ellipsoid, else
/// bisection on the ellipsoid multiplier with a box-constrained inner solve.
MaxLikelihoodPoint bounded_worst_case(const EllipsoidalSet& set, const Eigen::VectorXd& eta,
                                      double q, const Eigen::VectorXd& d_prev);

/// Dispatches to bounded_worst_case when the set carries a box.
MaxLikelihoodPoint worst_case_update(const EllipsoidalSet& set, const Eigen::VectorXd& eta,
                                     double q, const Eigen::VectorXd& d_prev);

/// Linearized cost q + ηᵀ(d − d_prev).
double linearized_cost(double q, const Eigen::VectorXd& eta, const Eigen::VectorXd& d,
                       const Eigen::VectorXd& d_prev);

// Standard normal helpers.

/// Φ(x), via the complementary error function (absolute error < 1e-15).
double standard_normal_cdf(double x);

/// Φ(−β): probability that the operating cost exceeds q_β.
double prob_exceedance(double beta);

/// β with Φ(β) = p. Throws DomainError unless 0 < p < 1.
double beta_for_quantile(double p);

/// z·sqrt(n): radius at which every parameter can reach its z-limit at once.
double soyster_beta(int n, double z);

/// Standard deviation that places a half-width at `z` standard deviations.
double std_from_half_width(double half_width, double z = 2.3263);

} // namespace arotnep
