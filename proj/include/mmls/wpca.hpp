#pragma once

#include <Eigen/Core>

#include "mmls/point_cloud.hpp"

namespace mmls {

/// Ordered orthonormal vectors spanning a d-dim subspace of R^n, one per
/// column. Deterministic sign convention: in each column the entry of largest
/// absolute value is positive.
struct OrthonormalBasis {
  Eigen::MatrixXd vectors;  // n x d

  Index ambient_dim() const { return vectors.rows(); }
  Index dim() const { return vectors.cols(); }
};

/// Flip column signs so the largest-|entry| coordinate of each is positive.
void apply_sign_convention(Eigen::MatrixXd& U);

/// Largest canonical angle (radians) between the column spans of U1 and U2.
double max_principal_angle(const Eigen::MatrixXd& U1, const Eigen::MatrixXd& U2);
double max_principal_angle(const OrthonormalBasis& a, const OrthonormalBasis& b);

/// Top-d left singular subspace of the matrix with columns sqrt(w_i)(x_i - q):
/// the rank-d orthogonal projection P minimizing sum_i w_i ||P(x_i-q)-(x_i-q)||^2.
/// Ambient dimension above 512 switches to a seeded randomized range finder
/// (oversampling 8, two power iterations); exact SVD otherwise.
OrthonormalBasis weighted_pca(const Eigen::MatrixXd& points, const Eigen::VectorXd& q,
                              const Eigen::VectorXd& weights, Index d);

/// k steps of U <- Q(qr(R R^T U)) from U0; converges to the dominant d-dim
/// left singular subspace of R.
OrthonormalBasis subspace_iteration(const Eigen::MatrixXd& R, const OrthonormalBasis& U0,
                                    int iterations);

/// Same fixed point reached through the explicit alternating least-squares
/// route: X_k = U_k^T R, A_{k+1} = argmin_A ||R - A X_k||_F, U_{k+1} from the
/// QR of A_{k+1}. Span agrees with subspace_iteration at every step.
OrthonormalBasis iterative_ls_subspace(const Eigen::MatrixXd& R, const OrthonormalBasis& U0,
                                       int iterations);

}  // namespace mmls
