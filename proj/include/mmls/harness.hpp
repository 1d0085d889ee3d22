#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmls/point_cloud.hpp"
#include "mmls/project.hpp"

namespace mmls {

/// Family of test manifolds with known parametrizations. Curves/surfaces use
/// closed-form point-to-set distance where one exists; helix and the image
/// manifold fall back to a dense parameter-grid oracle with local refinement.
struct SyntheticManifold {
  enum class Kind { helix, circle, sphere, torus, plane, ellipse_images };

  Kind kind = Kind::circle;
  double radius = 1.0;       // circle / sphere
  double major = 2.0;        // torus ring radius
  double minor = 0.5;        // torus tube radius
  Index plane_d = 2;         // plane intrinsic dim
  Index plane_n = 3;         // plane ambient dim
  std::optional<Eigen::MatrixXd> plane_basis;   // n x d, orthonormal; default first d axes
  std::optional<Eigen::VectorXd> plane_offset;  // default origin
  int image_side = 32;       // ellipse-images raster size (ambient = side^2)
  int image_grid = 12;       // semi-axis grid per axis (grid^2 images cover the family)

  static SyntheticManifold helix();
  static SyntheticManifold circle(double radius = 1.0);
  static SyntheticManifold sphere(double radius = 1.0);
  static SyntheticManifold torus(double major = 2.0, double minor = 0.5);
  static SyntheticManifold plane(Index d, Index n);
  static SyntheticManifold plane_through(const Eigen::MatrixXd& basis,
                                         const Eigen::VectorXd& offset);
  static SyntheticManifold ellipse_images(int side = 32, int grid = 12);

  Index ambient_dim() const;
  Index intrinsic_dim() const;
  Index parameter_dim() const;
  /// Point on the manifold at the given parameter vector.
  Eigen::VectorXd at(const Eigen::VectorXd& params) const;
};

struct NoiseModel {
  enum class Kind { uniform_box, gaussian_iid };

  Kind kind = Kind::uniform_box;
  double amplitude = 0.0;  // box half-width, or gaussian standard deviation
  std::uint64_t seed = 0;

  static NoiseModel uniform_box(double half_width, std::uint64_t seed);
  static NoiseModel gaussian_iid(double sigma, std::uint64_t seed);
};

struct ErrorReport {
  double rmse_before = 0.0;  // noisy input vs ground truth
  double rmse_after = 0.0;   // projected output vs ground truth
  double mean_before = 0.0;  // arithmetic mean of per-point distances to truth
  double mean_after = 0.0;
  double hausdorff_to_truth = 0.0;    // one-sided, output -> truth
  double hausdorff_from_truth = 0.0;  // one-sided, truth -> output
  std::vector<double> per_point;      // output-to-truth distances, input order
  std::vector<double> h_levels;       // convergence studies: measured fill distances
  std::vector<double> max_errors;     // worst projected-probe distance per level
  double slope = 0.0;                 // log-log fit of max_errors vs h_levels
  bool slope_valid = false;           // false when errors sit at the numeric floor
  std::vector<std::string> flags;     // per-level / per-point anomalies
};

/// Knobs shared by the experiment drivers. Bandwidth: sigma_auto replaces the
/// kernel bandwidth with the Monte-Carlo estimate (scaled by sigma_factor)
/// for each generated cloud.
struct ExperimentConfig {
  MmlsConfig mmls;
  bool sigma_auto = true;
  double sigma_factor = 1.0;
  bool reduce_distances = false;  // weight distances through a low-rank basis
  Index reduce_rank_factor = 50;  // basis rank = factor * intrinsic dim
  std::uint64_t seed = 7102u;
  int threads = 0;
};

/// I samples with quasi-uniform parameters; noise (when given) perturbs every
/// coordinate. The returned cloud keeps the pre-noise points in its truth twin.
PointCloud sample_manifold(const SyntheticManifold& spec, Index I,
                           const NoiseModel* noise, std::uint64_t seed);

/// Euclidean distance from a point to the manifold (closed form, or dense
/// two-stage parameter search for helix / ellipse-images).
double distance_to_manifold(const Eigen::VectorXd& point, const SyntheticManifold& spec);

/// sup over probe columns of the distance to the nearest sample column (the
/// fill-distance functional measured on an explicit probe set).
double fill_distance(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& probes);

/// max over columns of a of the distance to the nearest column of b.
double hausdorff_one_sided(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Clean samples at each count level; projects held-out on-manifold probes;
/// reports measured fill distances, per-level max errors, and the log-log
/// slope. Levels should roughly double the sample count.
ErrorReport run_convergence_study(const SyntheticManifold& spec, int m,
                                  const std::vector<Index>& counts,
                                  const ExperimentConfig& config);

/// Samples I points, applies noise, projects every noisy point, and reports
/// rmse to ground truth before and after plus one-sided Hausdorff distances.
ErrorReport run_denoise_experiment(const SyntheticManifold& spec, Index I,
                                   const NoiseModel& noise,
                                   const ExperimentConfig& config);

struct ScalingRow {
  Index n = 0;                      // ambient dimension of the embedded copy
  double seconds_per_point = 0.0;   // mean wall time of one projection
  double equivariance_gap = 0.0;    // max mismatch vs the base-level projections
  double mean_iterations = 0.0;     // frame passes per query, for timing sanity
};

/// Embeds one d-dim curve isometrically into each requested ambient dimension
/// (zero padding followed by a seeded random rotation), times project_point,
/// and checks that the projections agree across embeddings after undoing the
/// rotation.
std::vector<ScalingRow> measure_linear_scaling(Index d, int m,
                                               const std::vector<Index>& n_levels,
                                               Index sample_count, Index query_count,
                                               const ExperimentConfig& config);

}  // namespace mmls
