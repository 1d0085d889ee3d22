#include "mmls/project.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <atomic>
#include <cstdlib>
#include <random>
#include <thread>

#include "mmls/errors.hpp"
#include "mmls/wpca.hpp"

namespace mmls {

namespace {

constexpr double kWeightCutoff = 1e-14;

void validate_config(const PointCloud& cloud, const MmlsConfig& cfg) {
  if (cfg.d < 1 || cfg.d >= cloud.ambient_dim())
    throw ConfigError("need 1 <= d < ambient dimension");
  if (cfg.m < 1) throw ConfigError("polynomial degree must be at least 1");
  if (cfg.max_iters < 1) throw ConfigError("need at least one frame pass");
}

double resolve_eps(const PointCloud& cloud, const MmlsConfig& cfg) {
  if (cfg.fixed_iters) return 0.0;
  if (cfg.eps > 0.0) return cfg.eps;
  return 1e-10 * cloud.extent();
}

}  // namespace

ProjectionResult project_point(const PointCloud& cloud, const Eigen::VectorXd& r,
                               const MmlsConfig& cfg) {
  validate_config(cloud, cfg);
  const Eigen::MatrixXd* dist_basis =
      cfg.weight_distance_basis ? &*cfg.weight_distance_basis : nullptr;

  auto [frame, report] =
      find_local_frame(cloud, r, cfg.d, cfg.theta, cfg.metric, resolve_eps(cloud, cfg),
                       cfg.max_iters, nullptr, dist_basis);
  return project_with_frame(cloud, frame, cfg, report.converged, report.iterations_used);
}

ProjectionResult project_with_frame(const PointCloud& cloud, const AffineFrame& frame_in,
                                    const MmlsConfig& cfg, bool frame_converged,
                                    int frame_iterations) {
  validate_config(cloud, cfg);
  const Eigen::MatrixXd* dist_basis =
      cfg.weight_distance_basis ? &*cfg.weight_distance_basis : nullptr;
  AffineFrame frame = frame_in;
  if (frame.q.size() != cloud.ambient_dim() ||
      frame.basis.vectors.rows() != cloud.ambient_dim() ||
      frame.basis.vectors.cols() != cfg.d)
    throw DomainError("projection frame does not fit the cloud/config");

  const Index n = cloud.ambient_dim();
  const bool iso = cfg.metric.kind() != MetricForm::Kind::euclidean;
  Eigen::MatrixXd pts_iso;
  if (iso) pts_iso = cfg.metric.to_iso_cols(cloud.points);
  const Eigen::MatrixXd& pts = iso ? pts_iso : cloud.points;
  const Eigen::VectorXd q = iso ? cfg.metric.to_iso(frame.q) : frame.q;
  const Eigen::MatrixXd U = iso ? cfg.metric.to_iso_cols(frame.basis.vectors) : frame.basis.vectors;

  // step-2 weights: ambient-metric distance to the frame origin
  Eigen::VectorXd w(pts.cols());
  if (dist_basis) {
    Eigen::VectorXd qc = dist_basis->transpose() * q;
    for (Index i = 0; i < pts.cols(); ++i)
      w(i) = cfg.theta((dist_basis->transpose() * pts.col(i) - qc).norm());
  } else {
    for (Index i = 0; i < pts.cols(); ++i) w(i) = cfg.theta((pts.col(i) - q).norm());
  }
  const double wmax = w.size() ? w.maxCoeff() : 0.0;
  if (!(wmax > 0.0))
    throw DegenerateNeighborhoodError("no points carry weight near the query", 0);

  std::vector<Index> act;
  for (Index i = 0; i < w.size(); ++i)
    if (w(i) > kWeightCutoff * wmax) act.push_back(i);

  const Index A = static_cast<Index>(act.size());
  Eigen::MatrixXd coords(cfg.d, A);
  Eigen::MatrixXd values(n, A);
  Eigen::VectorXd weights(A);
  for (Index k = 0; k < A; ++k) {
    Eigen::VectorXd y = pts.col(act[static_cast<std::size_t>(k)]) - q;
    coords.col(k) = U.transpose() * y;
    values.col(k) = y;
    weights(k) = w(act[static_cast<std::size_t>(k)]);
  }

  PolynomialMap fit;
  int degree = cfg.m;
  for (;;) {
    try {
      fit = weighted_poly_fit(coords, values, weights, degree);
      break;
    } catch (const DegenerateNeighborhoodError&) {
      if (degree <= 1) throw;
      --degree;  // thin sample: degrade gracefully instead of failing
    }
  }
  fit.coefficients.row(0) += q.transpose();

  ProjectionResult res;
  if (iso) {
    const Eigen::MatrixXd iso_coeffs = fit.coefficients.transpose();
    fit.coefficients = cfg.metric.from_iso_cols(iso_coeffs).transpose();
  }
  res.projected = fit.coefficients.row(0).transpose();
  res.local_fit = std::move(fit);
  res.frame = std::move(frame);
  res.effective_points = A;
  res.frame_converged = frame_converged;
  res.frame_iterations = frame_iterations;
  res.degree_used = degree;
  res.degraded = degree < cfg.m;
  return res;
}

std::vector<ProjectionResult> project_cloud(const PointCloud& cloud,
                                            const Eigen::MatrixXd& queries,
                                            const MmlsConfig& cfg, int threads) {
  validate_config(cloud, cfg);
  if (queries.cols() > 0 && queries.rows() != cloud.ambient_dim())
    throw DomainError("project_cloud: query dimension mismatch");

  const Index Q = queries.cols();
  std::vector<ProjectionResult> out(static_cast<std::size_t>(Q));
  if (Q == 0) return out;

  int nthreads = threads > 0 ? threads : thread_budget();
  nthreads = static_cast<int>(std::min<Index>(nthreads, Q));

  std::atomic<Index> next{0};
  auto worker = [&]() {
    for (;;) {
      const Index i = next.fetch_add(1);
      if (i >= Q) return;
      auto& slot = out[static_cast<std::size_t>(i)];
      try {
        slot = project_point(cloud, queries.col(i), cfg);
      } catch (const Error& e) {
        slot.ok = false;
        slot.error_code = e.code();
        slot.error_message = e.what();
      } catch (const std::exception& e) {
        slot.ok = false;
        slot.error_code = "internal";
        slot.error_message = e.what();
      }
    }
  };

  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

double mls_function_approx(const Eigen::MatrixXd& sample_coords,
                           const Eigen::VectorXd& sample_values,
                           const Eigen::VectorXd& x, int m,
                           const WeightFunction& theta) {
  const Index d = sample_coords.rows();
  const Index I = sample_coords.cols();
  if (sample_values.size() != I)
    throw DomainError("mls_function_approx: sample count mismatch");
  if (x.size() != d) throw DomainError("mls_function_approx: evaluation point dimension mismatch");
  if (m < 0) throw DomainError("mls_function_approx: negative degree");
  if (I == 0)
    throw InsufficientDataError("mls_function_approx: empty sample set", 1, 0);

  Eigen::VectorXd w(I);
  for (Index i = 0; i < I; ++i) w(i) = theta((sample_coords.col(i) - x).norm());
  const double wmax = w.maxCoeff();
  if (!(wmax > 0.0))
    throw DegenerateNeighborhoodError("no samples carry weight at the evaluation point", 0);

  std::vector<Index> act;
  for (Index i = 0; i < I; ++i)
    if (w(i) > kWeightCutoff * wmax) act.push_back(i);

  const Index A = static_cast<Index>(act.size());
  Eigen::MatrixXd coords(d, A);
  Eigen::MatrixXd values(1, A);
  Eigen::VectorXd weights(A);
  for (Index k = 0; k < A; ++k) {
    const Index i = act[static_cast<std::size_t>(k)];
    coords.col(k) = sample_coords.col(i) - x;
    values(0, k) = sample_values(i);
    weights(k) = w(i);
  }

  for (int degree = m;; --degree) {
    try {
      return weighted_poly_fit(coords, values, weights, degree).coefficients(0, 0);
    } catch (const DegenerateNeighborhoodError&) {
      if (degree == 0) throw;
    }
  }
}

Eigen::MatrixXd distance_reduction_basis(const PointCloud& cloud, Index rank,
                                         std::uint64_t seed) {
  const Index n = cloud.ambient_dim();
  const Index I = cloud.size();
  if (I < 1) throw InsufficientDataError("distance reduction needs data", 1, 0);
  const Index R = std::min({rank, n, I});
  if (R < 1) throw DomainError("distance reduction rank must be positive");

  Eigen::VectorXd center = cloud.points.rowwise().mean();
  Eigen::MatrixXd Y = cloud.points.colwise() - center;

  const Index p = std::min<Index>(I, R + 8);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd G(I, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < I; ++i) G(i, j) = gauss(rng);

  auto thin_q = [](const Eigen::MatrixXd& M) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    return Eigen::MatrixXd(qr.householderQ() *
                           Eigen::MatrixXd::Identity(M.rows(), std::min(M.rows(), M.cols())));
  };
  Eigen::MatrixXd Qb = thin_q(Y * G);
  for (int t = 0; t < 2; ++t) Qb = thin_q(Y * (Y.transpose() * Qb));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Qb.transpose() * Y, Eigen::ComputeThinU);
  Eigen::MatrixXd V = Qb * svd.matrixU().leftCols(std::min<Index>(R, svd.matrixU().cols()));
  apply_sign_convention(V);
  return V;
}

int thread_budget() {
  if (const char* env = std::getenv("MMLS_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace mmls
