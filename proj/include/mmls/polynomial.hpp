#pragma once

#include <Eigen/Core>
#include <vector>

#include "mmls/point_cloud.hpp"

namespace mmls {

/// Dimension of the space of d-variate polynomials of total degree <= m:
/// C(m+d, d).
Index poly_space_dim(int d, int m);

/// Exponent vectors of the monomial basis of that space in graded-lex order:
/// total degree ascending, ties ordered lexicographically (first variable's
/// exponent descending). The constant monomial is always row 0.
std::vector<Eigen::VectorXi> monomial_exponents(int d, int m);

/// Vector-valued d-variate polynomial of total degree <= m with codomain R^n.
/// coefficients has one row per monomial (graded-lex order) and one column
/// per output coordinate, so eval(0) is row 0.
struct PolynomialMap {
  int d = 0;
  int m = 0;
  Eigen::MatrixXd coefficients;  // poly_space_dim(d, m) x n

  Index codomain_dim() const { return coefficients.cols(); }
  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;
};

/// Weighted least-squares fit of a PolynomialMap: minimizes
/// sum_i w_i ||p(x_i) - f_i||^2. coords holds the x_i as d x I columns,
/// values the f_i as n x I columns. The design matrix is factorized once and
/// shared by all n output coordinates. Coordinates are internally rescaled
/// for conditioning; returned coefficients are in the caller's units.
PolynomialMap weighted_poly_fit(const Eigen::MatrixXd& coords,
                                const Eigen::MatrixXd& values,
                                const Eigen::VectorXd& weights, int m);

}  // namespace mmls
