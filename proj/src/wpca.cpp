#include "mmls/wpca.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <random>

#include "mmls/errors.hpp"

namespace mmls {

namespace {

constexpr double kRankTol = 1e-12;
constexpr Index kRandomizedThreshold = 512;  // ambient dims above this use the sketch path
constexpr int kOversample = 8;
constexpr int kPowerIters = 2;
constexpr std::uint64_t kSketchSeed = 0x6d6d6c7370636155ULL;

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& A) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  return qr.householderQ() * Eigen::MatrixXd::Identity(A.rows(), std::min(A.rows(), A.cols()));
}

long count_rank(const Eigen::VectorXd& sv) {
  if (sv.size() == 0 || !(sv(0) > 0.0)) return 0;
  long r = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > kRankTol * sv(0)) ++r;
  return r;
}

}  // namespace

void apply_sign_convention(Eigen::MatrixXd& U) {
  for (Index j = 0; j < U.cols(); ++j) {
    Index imax = 0;
    U.col(j).cwiseAbs().maxCoeff(&imax);
    if (U(imax, j) < 0.0) U.col(j) = -U.col(j);
  }
}

double max_principal_angle(const Eigen::MatrixXd& U1, const Eigen::MatrixXd& U2) {
  if (U1.rows() != U2.rows())
    throw DomainError("principal angles need subspaces of the same ambient space");
  if (U1.cols() == 0 || U2.cols() == 0) return 0.0;
  const Eigen::MatrixXd C = U1.transpose() * U2;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
  const double c = std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
  // acos alone loses half the digits near zero angle; switch to the sine of
  // the residual component once the cosine is large
  if (c * c <= 0.5) return std::acos(c);
  const Eigen::MatrixXd resid = U2 - U1 * C;
  Eigen::JacobiSVD<Eigen::MatrixXd> rsvd(resid);
  const double s = std::clamp(rsvd.singularValues().maxCoeff(), 0.0, 1.0);
  return std::asin(s);
}

double max_principal_angle(const OrthonormalBasis& a, const OrthonormalBasis& b) {
  return max_principal_angle(a.vectors, b.vectors);
}

OrthonormalBasis weighted_pca(const Eigen::MatrixXd& points, const Eigen::VectorXd& q,
                              const Eigen::VectorXd& weights, Index d) {
  const Index n = points.rows();
  const Index I = points.cols();
  if (q.size() != n || weights.size() != I)
    throw DomainError("weighted_pca: inconsistent shapes");
  if (d < 1 || d > n) throw DomainError("weighted_pca: rank must be in [1, ambient dim]");
  if ((weights.array() < 0.0).any()) throw DomainError("weighted_pca: negative weight");

  Eigen::MatrixXd Y = (points.colwise() - q) * weights.array().sqrt().matrix().asDiagonal();

  Eigen::MatrixXd U;
  Eigen::VectorXd sv;
  if (n <= kRandomizedThreshold) {
    if (n > I) {
      // tall and skinny: thin QR first, exact SVD of the small R factor
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
      const Eigen::MatrixXd R =
          qr.matrixQR().topRows(I).triangularView<Eigen::Upper>();
      Eigen::BDCSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeThinU);
      sv = svd.singularValues();
      if (count_rank(sv) < d)
        throw DegenerateDataError("weighted point set does not span the requested rank",
                                  count_rank(sv));
      // apply the reflectors to just the d columns we keep
      Eigen::MatrixXd tall = Eigen::MatrixXd::Zero(n, d);
      tall.topRows(I) = svd.matrixU().leftCols(d);
      U = qr.householderQ() * tall;
    } else {
      Eigen::BDCSVD<Eigen::MatrixXd> svd(Y, Eigen::ComputeThinU);
      sv = svd.singularValues();
      if (count_rank(sv) < d)
        throw DegenerateDataError("weighted point set does not span the requested rank",
                                  count_rank(sv));
      U = svd.matrixU().leftCols(d);
    }
  } else {
    // seeded gaussian sketch; cost stays linear in the ambient dimension
    const Index p = std::min<Index>(I, d + kOversample);
    std::mt19937_64 rng(kSketchSeed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd G(I, p);
    for (Index j = 0; j < p; ++j)
      for (Index i = 0; i < I; ++i) G(i, j) = gauss(rng);
    Eigen::MatrixXd Q = thin_q(Y * G);
    for (int t = 0; t < kPowerIters; ++t) {
      Q = thin_q(Y * (Y.transpose() * Q));
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Q.transpose() * Y, Eigen::ComputeThinU);
    sv = svd.singularValues();
    if (count_rank(sv) < d)
      throw DegenerateDataError("weighted point set does not span the requested rank",
                                count_rank(sv));
    U = Q * svd.matrixU().leftCols(d);
  }
  apply_sign_convention(U);
  return OrthonormalBasis{std::move(U)};
}

OrthonormalBasis subspace_iteration(const Eigen::MatrixXd& R, const OrthonormalBasis& U0,
                                    int iterations) {
  if (U0.vectors.rows() != R.rows())
    throw DomainError("subspace_iteration: basis does not match the matrix's row space");
  if (iterations < 0) throw DomainError("subspace_iteration: negative iteration count");
  if (R.size() == 0 || !(R.cwiseAbs().maxCoeff() > 0.0))
    throw DegenerateDataError("subspace iteration on a zero matrix", 0);
  if (iterations == 0) return U0;  // empty iteration leaves the seed untouched

  Eigen::MatrixXd U = U0.vectors;
  for (int k = 0; k < iterations; ++k) {
    U = thin_q(R * (R.transpose() * U));
  }
  apply_sign_convention(U);
  return OrthonormalBasis{std::move(U)};
}

OrthonormalBasis iterative_ls_subspace(const Eigen::MatrixXd& R, const OrthonormalBasis& U0,
                                       int iterations) {
  if (U0.vectors.rows() != R.rows())
    throw DomainError("iterative_ls_subspace: basis does not match the matrix's row space");
  if (iterations < 0) throw DomainError("iterative_ls_subspace: negative iteration count");
  if (R.size() == 0 || !(R.cwiseAbs().maxCoeff() > 0.0))
    throw DegenerateDataError("least-squares subspace iteration on a zero matrix", 0);
  if (iterations == 0) return U0;

  const Index d = U0.dim();
  Eigen::MatrixXd U = U0.vectors;
  for (int k = 0; k < iterations; ++k) {
    // coordinates of the columns of R in the current frame, then the best
    // rank-d factor A with R ~= A X in least squares
    Eigen::MatrixXd Xt = (U.transpose() * R).transpose();  // I x d
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> ls(Xt);
    if (ls.rank() < d)
      throw DegenerateDataError("coordinate Gram matrix is singular", ls.rank());
    Eigen::MatrixXd A = ls.solve(R.transpose()).transpose();  // n x d
    U = thin_q(A);
  }
  apply_sign_convention(U);
  return OrthonormalBasis{std::move(U)};
}

}  // namespace mmls
