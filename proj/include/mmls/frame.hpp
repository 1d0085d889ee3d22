#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "mmls/point_cloud.hpp"
#include "mmls/weights.hpp"
#include "mmls/wpca.hpp"

namespace mmls {

/// Local affine coordinate system: origin q plus an orthonormal basis of the
/// moving d-plane H - q. Solutions keep the query r orthogonal to H relative
/// to q; constraint_residual records max_k |<r - q, e_k>| at return.
struct AffineFrame {
  Eigen::VectorXd q;
  OrthonormalBasis basis;
  double constraint_residual = 0.0;
};

struct FrameSolveReport {
  int iterations_used = 0;
  std::vector<double> cost_history;  // J after init and after each update
  bool converged = false;
  double final_step = 0.0;  // ||q_j - q_{j-1}|| at stop
};

/// J(r; q, H) = sum_i d(r_i, H)^2 theta(dist(r_i, q)), distances taken in the
/// given metric; d(r_i,H)^2 = ||r_i-q||^2 - sum_k <r_i-q, e_k>^2.
double cost_J(const PointCloud& cloud, const WeightFunction& theta,
              const MetricForm& metric, const AffineFrame& frame);

/// Iteratively solves for the local frame at query r: init from weighted PCA
/// about r with q_0 = r, then per pass (weights frozen at the current q)
///  - local coordinates x_i = U^T (r_i - q)
///  - weighted affine least-squares l(x) = a + Bx against the sample points
///  - provisional origin q~ = l(0), new basis from the QR of B's columns
///  - q <- q~ + U U^T (r - q~), restoring r - q perpendicular to H
/// until the origin moves less than eps or max_iters passes run. Pass eps = 0
/// to force exactly max_iters passes. init, when given, replaces the PCA
/// seed (used for warm restarts and fixed-point checks).
/// Trust the result only for queries within a kernel-width or so of the
/// samples: far outside that tube the r-centered PCA seed can hand the
/// iteration a normal-leaning plane, which is its own (spurious) fixed point.
/// weight_distance_basis, when given, is an orthonormal n x R matrix; kernel
/// distances are then taken between coordinates in that basis instead of the
/// full ambient space (the fit itself stays full-dimensional).
std::pair<AffineFrame, FrameSolveReport> find_local_frame(
    const PointCloud& cloud, const Eigen::VectorXd& r, Index d,
    const WeightFunction& theta, const MetricForm& metric, double eps,
    int max_iters, const AffineFrame* init = nullptr,
    const Eigen::MatrixXd* weight_distance_basis = nullptr);

/// Closed-form frame for a fixed origin: project r_i - q onto the complement
/// of span(r - q) and take the top-d weighted-PCA directions of those
/// projections with weights theta(dist(r_i, q)). Analytic oracle for the
/// H-given-q subproblem; reduces to plain weighted PCA when r = q.
AffineFrame frame_given_q(const PointCloud& cloud, const Eigen::VectorXd& r,
                          const Eigen::VectorXd& q, Index d,
                          const WeightFunction& theta, const MetricForm& metric);

}  // namespace mmls
