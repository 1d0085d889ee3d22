#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "mmls/point_cloud.hpp"

namespace mmls {

/// Smooth decaying weight kernel theta(t) for t >= 0.
///
/// gaussian:     theta(t) = exp(-t^2 / sigma^2)
/// compact-bump: theta(t) = exp(-t^2 / (s^2 - t^2)) for t < s, 0 for t >= s
struct WeightFunction {
  enum class Kind { gaussian, compact_bump };

  Kind kind = Kind::gaussian;
  double bandwidth = 1.0;  // sigma for gaussian, support radius s for compact-bump

  static WeightFunction gaussian(double sigma);
  static WeightFunction compact_bump(double support);

  double operator()(double t) const;
};

/// eval_weight(theta, t): kernel value at distance t. Negative t is a domain error.
double eval_weight(const WeightFunction& theta, double t);

/// Inner-product norm ||x||_A = sqrt(x^T A x). euclidean is A = I.
/// spd-form validates symmetry and positive definiteness at construction and
/// caches the Cholesky factor L (A = L L^T), so that y = L^T x maps the
/// A-metric isometrically onto the Euclidean one.
class MetricForm {
 public:
  enum class Kind { euclidean, spd_form };

  MetricForm() = default;
  static MetricForm euclidean();
  static MetricForm spd_form(const Eigen::MatrixXd& A);

  Kind kind() const { return kind_; }
  const Eigen::MatrixXd& matrix() const { return A_; }

  double distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  /// x -> L^T x. Identity for euclidean. The _cols variants map a matrix
  /// column by column (distinct names, so fixed-size vectors don't strand
  /// overload resolution between the two).
  Eigen::VectorXd to_iso(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd to_iso_cols(const Eigen::MatrixXd& cols) const;
  /// Inverse map L^-T y.
  Eigen::VectorXd from_iso(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd from_iso_cols(const Eigen::MatrixXd& cols) const;

 private:
  Kind kind_ = Kind::euclidean;
  Eigen::MatrixXd A_;
  Eigen::MatrixXd L_;  // lower Cholesky factor, spd-form only
};

/// Data-driven bandwidth for the gaussian kernel.
///
/// Draws `trials` sample points (uniform with replacement, mt19937_64 seeded
/// with rng_seed, one uniform_int draw per trial), takes each trial point's
/// k = oversample * dim(Pi_m^d) nearest neighbors (the point itself included),
/// and measures the radius that encloses them: half the largest pairwise
/// distance within the neighbor set. Returns the maximum radius over trials.
double estimate_sigma(const PointCloud& cloud, int d, int m, int trials,
                      int oversample, std::uint64_t rng_seed);

}  // namespace mmls
