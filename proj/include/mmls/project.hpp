#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmls/frame.hpp"
#include "mmls/point_cloud.hpp"
#include "mmls/polynomial.hpp"
#include "mmls/weights.hpp"

namespace mmls {

struct MmlsConfig {
  Index d = 1;
  int m = 2;
  WeightFunction theta = WeightFunction::gaussian(1.0);
  MetricForm metric = MetricForm::euclidean();
  double eps = 0.0;         // <= 0 resolves to 1e-10 x cloud extent
  int max_iters = 10;
  bool fixed_iters = false;  // run exactly max_iters frame passes, no early stop
  /// Optional orthonormal n x R basis; when set, all kernel distances are
  /// evaluated on coordinates in this basis (cheap surrogate for very high
  /// ambient dimension). Fits remain full-dimensional.
  std::optional<Eigen::MatrixXd> weight_distance_basis;
};

struct ProjectionResult {
  Eigen::VectorXd projected;
  AffineFrame frame;
  PolynomialMap local_fit;  // constant row holds the projected point
  Index effective_points = 0;
  bool frame_converged = false;
  int frame_iterations = 0;
  int degree_used = 0;    // < requested m when the sample was too thin
  bool degraded = false;  // a lower degree had to step in
  // batch bookkeeping: ok=false rows carry the error instead of a projection
  bool ok = true;
  std::string error_code;
  std::string error_message;
};

/// Two-step projection of r onto the moving least-squares manifold: solve the
/// local frame, then fit a degree-m polynomial over it and evaluate at the
/// frame origin.
ProjectionResult project_point(const PointCloud& cloud, const Eigen::VectorXd& r,
                               const MmlsConfig& config);

/// Step 2 alone, over a caller-supplied frame (any orthonormal basis of the
/// same plane gives the same projected point). The frame's convergence state
/// is taken from `frame_converged`.
ProjectionResult project_with_frame(const PointCloud& cloud, const AffineFrame& frame,
                                    const MmlsConfig& config,
                                    bool frame_converged = true, int frame_iterations = 0);

/// Element-wise project_point, order preserving; per-query failures are
/// returned as flagged rows instead of aborting the batch. threads = 0 picks
/// the MMLS_THREADS environment cap (or the hardware count).
std::vector<ProjectionResult> project_cloud(const PointCloud& cloud,
                                            const Eigen::MatrixXd& queries,
                                            const MmlsConfig& config,
                                            int threads = 0);

/// Classic moving least-squares value approximation: fit a degree-m
/// polynomial to scalar samples around x, weighted by theta(||x - x_i||),
/// and evaluate it at x.
double mls_function_approx(const Eigen::MatrixXd& sample_coords,
                           const Eigen::VectorXd& sample_values,
                           const Eigen::VectorXd& x, int m,
                           const WeightFunction& theta);

/// Orthonormal basis of the dominant `rank` directions of the centered cloud
/// (seeded randomized sketch); feed to MmlsConfig::weight_distance_basis.
Eigen::MatrixXd distance_reduction_basis(const PointCloud& cloud, Index rank,
                                         std::uint64_t seed);

/// Thread cap honoured by batch operations: MMLS_THREADS when set, else the
/// hardware concurrency, at least 1.
int thread_budget();

}  // namespace mmls
