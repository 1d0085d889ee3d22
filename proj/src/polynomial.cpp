#include "mmls/polynomial.hpp"

#include <Eigen/QR>
#include <cmath>

#include "mmls/errors.hpp"

namespace mmls {

Index poly_space_dim(int d, int m) {
  if (d < 1 || m < 0) throw DomainError("polynomial space needs d >= 1, m >= 0");
  long long v = 1;
  for (int i = 1; i <= d; ++i) v = v * (m + i) / i;
  return static_cast<Index>(v);
}

namespace {

void enumerate_degree(int remaining, int pos, Eigen::VectorXi& alpha,
                      std::vector<Eigen::VectorXi>& out) {
  if (pos == alpha.size() - 1) {
    alpha(pos) = remaining;
    out.push_back(alpha);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    alpha(pos) = e;
    enumerate_degree(remaining - e, pos + 1, alpha, out);
  }
}

double eval_monomial(const Eigen::VectorXi& alpha, const Eigen::VectorXd& x) {
  double v = 1.0;
  for (Index k = 0; k < alpha.size(); ++k)
    for (int e = 0; e < alpha(k); ++e) v *= x(k);
  return v;
}

}  // namespace

std::vector<Eigen::VectorXi> monomial_exponents(int d, int m) {
  if (d < 1 || m < 0) throw DomainError("polynomial space needs d >= 1, m >= 0");
  std::vector<Eigen::VectorXi> out;
  out.reserve(static_cast<std::size_t>(poly_space_dim(d, m)));
  Eigen::VectorXi alpha(d);
  for (int t = 0; t <= m; ++t) enumerate_degree(t, 0, alpha, out);
  return out;
}

Eigen::VectorXd PolynomialMap::eval(const Eigen::VectorXd& x) const {
  if (x.size() != d) throw DomainError("polynomial evaluated at a point of the wrong dimension");
  auto exps = monomial_exponents(d, m);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(coefficients.cols());
  for (std::size_t j = 0; j < exps.size(); ++j)
    y += eval_monomial(exps[j], x) * coefficients.row(static_cast<Index>(j)).transpose();
  return y;
}

PolynomialMap weighted_poly_fit(const Eigen::MatrixXd& coords,
                                const Eigen::MatrixXd& values,
                                const Eigen::VectorXd& weights, int m) {
  const Index d = coords.rows();
  const Index I = coords.cols();
  if (values.cols() != I || weights.size() != I)
    throw DomainError("weighted_poly_fit: inconsistent sample counts");
  if (I == 0) throw InsufficientDataError("weighted_poly_fit: empty sample set",
                                          poly_space_dim(static_cast<int>(d), m), 0);
  if ((weights.array() < 0.0).any())
    throw DomainError("weighted_poly_fit: negative weight");

  const auto exps = monomial_exponents(static_cast<int>(d), m);
  const Index dim = static_cast<Index>(exps.size());

  double scale = coords.size() ? coords.cwiseAbs().maxCoeff() : 0.0;
  if (!(scale > 0.0)) scale = 1.0;

  Eigen::VectorXd sqw = weights.array().sqrt();
  Eigen::MatrixXd Phi(I, dim);
  for (Index i = 0; i < I; ++i) {
    Eigen::VectorXd xs = coords.col(i) / scale;
    for (Index j = 0; j < dim; ++j)
      Phi(i, j) = sqw(i) * eval_monomial(exps[static_cast<std::size_t>(j)], xs);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Phi);
  if (qr.rank() < dim)
    throw DegenerateNeighborhoodError("polynomial design matrix is rank deficient",
                                      qr.rank());
  // one factorization serves every output coordinate
  Eigen::MatrixXd C = qr.solve(sqw.asDiagonal() * values.transpose());  // dim x n
  for (Index j = 0; j < dim; ++j) {
    const int total = exps[static_cast<std::size_t>(j)].sum();
    C.row(j) /= std::pow(scale, total);
  }

  PolynomialMap p;
  p.d = static_cast<int>(d);
  p.m = m;
  p.coefficients = std::move(C);
  return p;
}

}  // namespace mmls
