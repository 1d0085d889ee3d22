#pragma once

#include <Eigen/Core>
#include <optional>

namespace mmls {

using Index = Eigen::Index;

/// Scattered sample points in R^n, one point per column. Experiment drivers
/// keep the pre-noise samples in `truth` (same shape, same column order).
struct PointCloud {
  Eigen::MatrixXd points;                  // n x I
  std::optional<Eigen::MatrixXd> truth;    // n x I, never mutated by noise

  Index ambient_dim() const { return points.rows(); }
  Index size() const { return points.cols(); }

  /// Largest single-coordinate range. Cheap deterministic lower bound on the
  /// diameter; all relative tolerances in the library scale by this.
  double extent() const {
    if (points.cols() == 0) return 0.0;
    return (points.rowwise().maxCoeff() - points.rowwise().minCoeff()).maxCoeff();
  }
};

}  // namespace mmls
