#include "mmls/frame.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "mmls/errors.hpp"

namespace mmls {

namespace {

constexpr double kWeightCutoff = 1e-14;  // relative to the max weight in view

Eigen::VectorXd query_weights(const Eigen::MatrixXd& pts, const Eigen::VectorXd& q,
                              const WeightFunction& theta,
                              const Eigen::MatrixXd* dist_basis = nullptr) {
  Eigen::VectorXd w(pts.cols());
  if (dist_basis) {
    Eigen::VectorXd qc = dist_basis->transpose() * q;
    for (Index i = 0; i < pts.cols(); ++i)
      w(i) = theta((dist_basis->transpose() * pts.col(i) - qc).norm());
  } else {
    for (Index i = 0; i < pts.cols(); ++i) w(i) = theta((pts.col(i) - q).norm());
  }
  return w;
}

std::vector<Index> active_set(const Eigen::VectorXd& w) {
  double wmax = w.size() ? w.maxCoeff() : 0.0;
  std::vector<Index> act;
  if (!(wmax > 0.0)) return act;
  for (Index i = 0; i < w.size(); ++i)
    if (w(i) > kWeightCutoff * wmax) act.push_back(i);
  return act;
}

double constraint_residual_of(const Eigen::VectorXd& r, const Eigen::VectorXd& q,
                              const Eigen::MatrixXd& U) {
  if (U.cols() == 0) return 0.0;
  return (U.transpose() * (r - q)).cwiseAbs().maxCoeff();
}

double cost_at(const Eigen::MatrixXd& pts, const WeightFunction& theta,
               const Eigen::VectorXd& q, const Eigen::MatrixXd& U) {
  double J = 0.0;
  for (Index i = 0; i < pts.cols(); ++i) {
    Eigen::VectorXd y = pts.col(i) - q;
    double t = y.norm();
    double w = theta(t);
    if (w == 0.0) continue;
    double d2 = y.squaredNorm() - (U.transpose() * y).squaredNorm();
    J += std::max(d2, 0.0) * w;
  }
  return J;
}

}  // namespace

double cost_J(const PointCloud& cloud, const WeightFunction& theta,
              const MetricForm& metric, const AffineFrame& frame) {
  if (frame.q.size() != cloud.ambient_dim())
    throw DomainError("cost_J: frame does not match the cloud's ambient space");
  if (metric.kind() == MetricForm::Kind::euclidean)
    return cost_at(cloud.points, theta, frame.q, frame.basis.vectors);
  return cost_at(metric.to_iso_cols(cloud.points), theta, metric.to_iso(frame.q),
                 metric.to_iso_cols(frame.basis.vectors));
}

std::pair<AffineFrame, FrameSolveReport> find_local_frame(
    const PointCloud& cloud, const Eigen::VectorXd& r, Index d,
    const WeightFunction& theta, const MetricForm& metric, double eps,
    int max_iters, const AffineFrame* init,
    const Eigen::MatrixXd* weight_distance_basis) {
  const Index n = cloud.ambient_dim();
  if (r.size() != n) throw DomainError("find_local_frame: query dimension mismatch");
  if (d < 1 || d >= n) throw DomainError("find_local_frame: need 1 <= d < ambient dim");
  if (max_iters < 1) throw DomainError("find_local_frame: need at least one pass");
  if (eps < 0.0) throw DomainError("find_local_frame: negative tolerance");

  const bool iso = metric.kind() != MetricForm::Kind::euclidean;
  Eigen::MatrixXd pts_iso;
  if (iso) pts_iso = metric.to_iso_cols(cloud.points);
  const Eigen::MatrixXd& pts = iso ? pts_iso : cloud.points;
  const Eigen::VectorXd rq = iso ? metric.to_iso(r) : r;

  Eigen::VectorXd q;
  Eigen::MatrixXd U;
  if (init) {
    q = iso ? metric.to_iso(init->q) : init->q;
    U = iso ? metric.to_iso_cols(init->basis.vectors) : init->basis.vectors;
    if (q.size() != n || U.rows() != n || U.cols() != d)
      throw DomainError("find_local_frame: seed frame has the wrong shape");
  } else {
    q = rq;
    try {
      U = weighted_pca(pts, rq, query_weights(pts, rq, theta, weight_distance_basis), d)
              .vectors;
    } catch (const DegenerateDataError& e) {
      throw DegenerateNeighborhoodError(e.what(), e.rank_achieved());
    }
  }

  FrameSolveReport report;
  report.cost_history.push_back(cost_at(pts, theta, q, U));

  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd w = query_weights(pts, q, theta, weight_distance_basis);
    std::vector<Index> act = active_set(w);
    if (act.size() < static_cast<std::size_t>(d) + 1)
      throw DegenerateNeighborhoodError("too few points carry weight near the query",
                                        static_cast<long>(act.size()));

    // weighted affine fit l(x) = a + Bx of the samples over the current frame;
    // targets centered at q so the solve deals in small numbers
    const Index A = static_cast<Index>(act.size());
    Eigen::MatrixXd D(A, d + 1);
    Eigen::MatrixXd T(A, n);
    for (Index k = 0; k < A; ++k) {
      const Index i = act[k];
      const double s = std::sqrt(w(i));
      Eigen::VectorXd y = pts.col(i) - q;
      D(k, 0) = s;
      D.block(k, 1, 1, d) = s * (U.transpose() * y).transpose();
      T.row(k) = s * y.transpose();
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> ls(D);
    if (ls.rank() < d + 1)
      throw DegenerateNeighborhoodError("weighted linear fit is rank deficient",
                                        ls.rank());
    Eigen::MatrixXd C = ls.solve(T);  // (d+1) x n

    Eigen::VectorXd q_tilde = q + C.row(0).transpose();
    Eigen::MatrixXd B = C.bottomRows(d).transpose();  // n x d, columns l(u_k) - l(0)
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> bqr(B);
    if (bqr.rank() < d)
      throw DegenerateNeighborhoodError("fitted plane collapsed below the requested dimension",
                                        bqr.rank());
    Eigen::MatrixXd Unew =
        bqr.householderQ() * Eigen::MatrixXd::Identity(n, d);

    Eigen::VectorXd q_new = q_tilde + Unew * (Unew.transpose() * (rq - q_tilde));

    report.final_step = (q_new - q).norm();
    q = q_new;
    U = Unew;
    report.iterations_used = it + 1;
    report.cost_history.push_back(cost_at(pts, theta, q, U));
    if (eps > 0.0 && report.final_step < eps) {
      report.converged = true;
      break;
    }
  }

  apply_sign_convention(U);
  AffineFrame frame;
  frame.constraint_residual = constraint_residual_of(rq, q, U);
  if (iso) {
    frame.q = metric.from_iso(q);
    Eigen::MatrixXd Ub = metric.from_iso_cols(U);
    apply_sign_convention(Ub);
    frame.basis = OrthonormalBasis{std::move(Ub)};
  } else {
    frame.q = std::move(q);
    frame.basis = OrthonormalBasis{std::move(U)};
  }
  return {std::move(frame), std::move(report)};
}

AffineFrame frame_given_q(const PointCloud& cloud, const Eigen::VectorXd& r,
                          const Eigen::VectorXd& q, Index d,
                          const WeightFunction& theta, const MetricForm& metric) {
  const Index n = cloud.ambient_dim();
  if (r.size() != n || q.size() != n)
    throw DomainError("frame_given_q: dimension mismatch");
  if (d < 1 || d >= n) throw DomainError("frame_given_q: need 1 <= d < ambient dim");

  const bool iso = metric.kind() != MetricForm::Kind::euclidean;
  Eigen::MatrixXd pts_iso;
  if (iso) pts_iso = metric.to_iso_cols(cloud.points);
  const Eigen::MatrixXd& pts = iso ? pts_iso : cloud.points;
  const Eigen::VectorXd ri = iso ? metric.to_iso(r) : r;
  const Eigen::VectorXd qi = iso ? metric.to_iso(q) : q;

  Eigen::VectorXd w = query_weights(pts, qi, theta);
  Eigen::VectorXd v = ri - qi;
  Eigen::MatrixXd Y = pts.colwise() - qi;
  double vn2 = v.squaredNorm();
  if (vn2 > 0.0) {
    // strip the span(r - q) component so the fitted plane stays orthogonal to it
    Y -= v * ((v.transpose() * Y) / vn2);
  }
  OrthonormalBasis basis;
  try {
    basis = weighted_pca(Y, Eigen::VectorXd::Zero(n), w, d);
  } catch (const DegenerateDataError& e) {
    throw DegenerateNeighborhoodError(e.what(), e.rank_achieved());
  }

  AffineFrame frame;
  frame.constraint_residual = constraint_residual_of(ri, qi, basis.vectors);
  if (iso) {
    frame.q = q;
    Eigen::MatrixXd Ub = metric.from_iso_cols(basis.vectors);
    apply_sign_convention(Ub);
    frame.basis = OrthonormalBasis{std::move(Ub)};
  } else {
    frame.q = q;
    frame.basis = std::move(basis);
  }
  return frame;
}

}  // namespace mmls
