#include "mmls/weights.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mmls/errors.hpp"

namespace mmls {

WeightFunction WeightFunction::gaussian(double sigma) {
  if (!(sigma > 0.0)) throw DomainError("gaussian bandwidth must be positive");
  return WeightFunction{Kind::gaussian, sigma};
}

WeightFunction WeightFunction::compact_bump(double support) {
  if (!(support > 0.0)) throw DomainError("bump support radius must be positive");
  return WeightFunction{Kind::compact_bump, support};
}

double WeightFunction::operator()(double t) const {
  if (kind == Kind::gaussian) {
    double u = t / bandwidth;
    return std::exp(-u * u);
  }
  // compact bump: support [0, s), infinitely smooth at the boundary
  if (t >= bandwidth) return 0.0;
  double t2 = t * t;
  return std::exp(-t2 / (bandwidth * bandwidth - t2));
}

double eval_weight(const WeightFunction& theta, double t) {
  if (t < 0.0 || !std::isfinite(t)) throw DomainError("weight argument must be a finite distance");
  return theta(t);
}

MetricForm MetricForm::euclidean() { return MetricForm{}; }

MetricForm MetricForm::spd_form(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw DomainError("metric matrix must be square");
  double scale = A.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !A.allFinite())
    throw DomainError("metric matrix must be finite and nonzero");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("metric matrix must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw DomainError("metric matrix must be positive definite");
  MetricForm g;
  g.kind_ = Kind::spd_form;
  g.A_ = A;
  g.L_ = llt.matrixL();
  return g;
}

double MetricForm::distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  if (kind_ == Kind::euclidean) return (x - y).norm();
  return (L_.transpose() * (x - y)).norm();
}

Eigen::VectorXd MetricForm::to_iso(const Eigen::VectorXd& x) const {
  if (kind_ == Kind::euclidean) return x;
  return L_.transpose() * x;
}

Eigen::MatrixXd MetricForm::to_iso_cols(const Eigen::MatrixXd& cols) const {
  if (kind_ == Kind::euclidean) return cols;
  return L_.transpose() * cols;
}

Eigen::VectorXd MetricForm::from_iso(const Eigen::VectorXd& y) const {
  if (kind_ == Kind::euclidean) return y;
  return L_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd MetricForm::from_iso_cols(const Eigen::MatrixXd& cols) const {
  if (kind_ == Kind::euclidean) return cols;
  return L_.transpose().triangularView<Eigen::Upper>().solve(cols);
}

namespace {

long long poly_dim(int d, int m) {
  // dim Pi_m^d = C(m+d, d)
  long long v = 1;
  for (int i = 1; i <= d; ++i) v = v * (m + i) / i;
  return v;
}

}  // namespace

double estimate_sigma(const PointCloud& cloud, int d, int m, int trials,
                      int oversample, std::uint64_t rng_seed) {
  if (d < 1) throw DomainError("intrinsic dimension must be at least 1");
  if (m < 1) throw DomainError("polynomial degree must be at least 1");
  if (trials < 1 || oversample < 1)
    throw DomainError("trials and oversample must be positive");

  const Index n = cloud.size();
  const long long k_ll = static_cast<long long>(oversample) * poly_dim(d, m);
  if (n < k_ll)
    throw InsufficientDataError("bandwidth estimate needs oversample * C(m+d,d) points",
                                k_ll, static_cast<long>(n));
  const Index k = static_cast<Index>(k_ll);

  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<Index> pick(0, n - 1);

  std::vector<Index> order(n);
  Eigen::VectorXd dist(n);
  double sigma = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Index c = pick(rng);
    for (Index i = 0; i < n; ++i)
      dist(i) = (cloud.points.col(i) - cloud.points.col(c)).norm();
    for (Index i = 0; i < n; ++i) order[i] = i;
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end(),
                     [&](Index a, Index b) { return dist(a) < dist(b); });
    // radius of the neighbor set: half its diameter
    double diam = 0.0;
    for (Index a = 0; a < k; ++a)
      for (Index b = a + 1; b < k; ++b)
        diam = std::max(diam,
                        (cloud.points.col(order[a]) - cloud.points.col(order[b])).norm());
    sigma = std::max(sigma, 0.5 * diam);
  }
  if (!(sigma > 0.0))
    throw DegenerateDataError("bandwidth estimate collapsed: sampled neighborhoods have zero extent", 0);
  return sigma;
}

}  // namespace mmls
