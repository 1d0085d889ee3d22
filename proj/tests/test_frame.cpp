#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "mmls/errors.hpp"
#include "mmls/frame.hpp"
#include "mmls/weights.hpp"

using namespace mmls;

namespace {

double span_angle(const Eigen::MatrixXd& U1, const Eigen::MatrixXd& U2) {
  Eigen::MatrixXd C = U1.transpose() * U2;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
  double c = std::min(1.0, std::max(-1.0, svd.singularValues().minCoeff()));
  if (c * c <= 0.5) return std::acos(c);
  // sine route keeps full precision for small angles
  Eigen::JacobiSVD<Eigen::MatrixXd> rsvd(Eigen::MatrixXd(U2 - U1 * C));
  return std::asin(std::min(1.0, rsvd.singularValues().maxCoeff()));
}

Eigen::MatrixXd random_orthonormal(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd G(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
}

PointCloud circle_cloud(Index count, double radius = 1.0) {
  PointCloud c;
  c.points.resize(2, count);
  for (Index i = 0; i < count; ++i) {
    double t = 2.0 * M_PI * double(i) / double(count);
    c.points.col(i) << radius * std::cos(t), radius * std::sin(t);
  }
  return c;
}

PointCloud noisy_helix(Index count, double amp, std::uint64_t seed) {
  PointCloud c;
  c.points.resize(3, count);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-amp, amp);
  for (Index i = 0; i < count; ++i) {
    double t = -M_PI + 2.0 * M_PI * double(i) / double(count - 1);
    c.points.col(i) << std::sin(t) + box(rng), std::cos(t) + box(rng), t + box(rng);
  }
  return c;
}

double diameter(const PointCloud& c) {
  double d = 0.0;
  for (Index a = 0; a < c.size(); ++a)
    for (Index b = a + 1; b < c.size(); ++b)
      d = std::max(d, (c.points.col(a) - c.points.col(b)).norm());
  return d;
}

}  // namespace

TEST_CASE("cost vanishes when every point lies on the frame") {
  PointCloud c;
  c.points.resize(3, 9);
  Index k = 0;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b) c.points.col(k++) << double(a), double(b), 0.0;
  AffineFrame frame;
  frame.q = Eigen::Vector3d::Zero();
  frame.basis.vectors = Eigen::MatrixXd::Identity(3, 2);
  CHECK(cost_J(c, WeightFunction::gaussian(1.0), MetricForm::euclidean(), frame) < 1e-12);
}

TEST_CASE("single off-frame point contributes its weighted squared distance") {
  PointCloud c;
  c.points.resize(3, 1);
  c.points.col(0) << 0.0, 0.0, 1.0;  // unit distance from the x-y frame at the origin
  AffineFrame frame;
  frame.q = Eigen::Vector3d::Zero();
  frame.basis.vectors = Eigen::MatrixXd::Identity(3, 2);

  auto th = WeightFunction::gaussian(1.0);
  CHECK(cost_J(c, th, MetricForm::euclidean(), frame) ==
        doctest::Approx(eval_weight(th, 1.0)));
  // a near-flat kernel makes the weight 1 and the cost exactly the distance
  CHECK(cost_J(c, WeightFunction::gaussian(1e8), MetricForm::euclidean(), frame) ==
        doctest::Approx(1.0));
}

TEST_CASE("cost matches an explicit complement-projection sum") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  PointCloud c;
  c.points.resize(3, 10);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 10; ++j) c.points(i, j) = gauss(rng);

  AffineFrame frame;
  frame.q = Eigen::Vector3d(0.3, -0.2, 0.1);
  frame.basis.vectors = random_orthonormal(3, 1, 44);
  auto th = WeightFunction::gaussian(1.3);

  double expect = 0.0;
  Eigen::VectorXd e = frame.basis.vectors.col(0);
  for (Index j = 0; j < 10; ++j) {
    Eigen::VectorXd y = c.points.col(j) - frame.q;
    double resid2 = (y - e * e.dot(y)).squaredNorm();
    expect += resid2 * eval_weight(th, y.norm());
  }
  CHECK(cost_J(c, th, MetricForm::euclidean(), frame) == doctest::Approx(expect));
}

TEST_CASE("cost under a quadratic form equals the hand-transformed sum") {
  Eigen::Matrix2d A;
  A << 2.0, 0.4, 0.4, 1.5;
  auto g = MetricForm::spd_form(A);
  Eigen::LLT<Eigen::Matrix2d> llt(A);
  Eigen::Matrix2d Lt = Eigen::Matrix2d(llt.matrixL()).transpose();

  PointCloud c = circle_cloud(12);
  // build the frame A-orthonormal by mapping a unit iso vector back
  Eigen::Vector2d e_iso(std::cos(0.3), std::sin(0.3));
  AffineFrame frame;
  frame.q = Eigen::Vector2d(0.2, -0.1);
  frame.basis.vectors = Lt.triangularView<Eigen::Upper>().solve(e_iso);

  auto th = WeightFunction::gaussian(0.9);
  double expect = 0.0;
  Eigen::Vector2d q_iso = Lt * frame.q;
  for (Index j = 0; j < c.size(); ++j) {
    Eigen::Vector2d y = Lt * c.points.col(j) - q_iso;
    expect += (y.squaredNorm() - std::pow(e_iso.dot(y), 2)) * eval_weight(th, y.norm());
  }
  CHECK(cost_J(c, th, g, frame) == doctest::Approx(expect));
}

TEST_CASE("query on a sampled line recovers the line through itself") {
  Eigen::Vector3d dir = Eigen::Vector3d(2.0, -1.0, 0.5).normalized();
  PointCloud c;
  c.points.resize(3, 41);
  for (Index i = 0; i < 41; ++i) c.points.col(i) = (0.05 * double(i - 20)) * dir;
  Eigen::Vector3d r = 0.12 * dir;

  auto [frame, report] = find_local_frame(c, r, 1, WeightFunction::gaussian(0.5),
                                          MetricForm::euclidean(), 1e-12, 10);
  CHECK(report.converged);
  CHECK((frame.q - r).norm() < 1e-8);
  CHECK(span_angle(frame.basis.vectors, dir) < 1e-8);
  CHECK(frame.constraint_residual < 1e-10);
}

TEST_CASE("off-plane query lands on its euclidean projection") {
  Eigen::MatrixXd P = random_orthonormal(5, 2, 7);
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(5);
  offset << 0.3, -0.2, 0.1, 0.0, 0.4;

  PointCloud c;
  c.points.resize(5, 121);
  Index k = 0;
  for (int a = 0; a < 11; ++a)
    for (int b = 0; b < 11; ++b) {
      Eigen::Vector2d uv(-1.0 + 0.2 * a, -1.0 + 0.2 * b);
      c.points.col(k++) = offset + P * uv;
    }

  // normal direction: anything left after removing the plane components
  Eigen::VectorXd raw = Eigen::VectorXd::Unit(5, 3);
  Eigen::VectorXd nrm = (raw - P * (P.transpose() * raw)).normalized();
  Eigen::VectorXd on_plane = offset + P * Eigen::Vector2d(0.15, -0.3);
  Eigen::VectorXd r = on_plane + 0.1 * nrm;

  auto [frame, report] = find_local_frame(c, r, 2, WeightFunction::gaussian(0.8),
                                          MetricForm::euclidean(), 1e-12, 10);
  CHECK(report.converged);
  CHECK((frame.q - on_plane).norm() < 1e-8);
  CHECK(span_angle(frame.basis.vectors, P) < 1e-8);
  CHECK(frame.constraint_residual < 1e-8 * diameter(c));
  // the whole history is sensible
  for (double J : report.cost_history) {
    CHECK(std::isfinite(J));
    CHECK(J >= 0.0);
  }
}

TEST_CASE("converged frames are fixed points and match the fixed-origin oracle") {
  PointCloud c = noisy_helix(400, 0.2, 2024);
  auto th = WeightFunction::gaussian(0.6);
  auto metric = MetricForm::euclidean();
  const double eps = 1e-9;

  for (Index qi : {25, 140, 300}) {
    Eigen::VectorXd r = c.points.col(qi);
    auto [frame, report] = find_local_frame(c, r, 1, th, metric, eps, 50);
    REQUIRE(report.converged);

    // restarting at the answer stays put
    auto [again, rep2] = find_local_frame(c, r, 1, th, metric, eps, 50, &frame);
    CHECK((again.q - frame.q).norm() < 1e-8);

    // the analytic frame for the converged origin carries the same cost
    AffineFrame oracle = frame_given_q(c, r, frame.q, 1, th, metric);
    double Ja = cost_J(c, th, metric, frame);
    double Jb = cost_J(c, th, metric, oracle);
    CHECK(Ja == doctest::Approx(Jb).epsilon(1e-6));
    CHECK(frame.constraint_residual <= 1e-8 * diameter(c));
  }
}

TEST_CASE("rigid motions carry the frame along") {
  PointCloud c = noisy_helix(150, 0.1, 5);
  Eigen::VectorXd r = c.points.col(60);
  auto th = WeightFunction::gaussian(0.7);

  auto [frame, rep] = find_local_frame(c, r, 1, th, MetricForm::euclidean(), 1e-11, 30);

  Eigen::MatrixXd Q = random_orthonormal(3, 3, 92);
  Eigen::Vector3d t(1.0, -2.0, 0.5);
  PointCloud moved;
  moved.points = Q * c.points;
  moved.points.colwise() += t;

  auto [mframe, mrep] =
      find_local_frame(moved, Q * r + t, 1, th, MetricForm::euclidean(), 1e-11, 30);
  CHECK((mframe.q - (Q * frame.q + t)).norm() < 1e-8);
  CHECK(span_angle(mframe.basis.vectors, Q * frame.basis.vectors) < 1e-8);
}

TEST_CASE("cost history settles at the fixed point") {
  // the pass refreezes weights and re-centers the origin, so J is not a
  // descent sequence -- but it must flatten out fast and stay in a tight
  // band around the settled value
  PointCloud c = circle_cloud(256);
  Eigen::Vector2d r(1.05, 0.02);
  // eps = 0 runs every pass, so the whole trajectory is on record
  auto [frame, report] =
      find_local_frame(c, r, 1, WeightFunction::gaussian(0.4), MetricForm::euclidean(),
                       0.0, 6);
  REQUIRE(report.cost_history.size() == 7);
  const double settled = report.cost_history.back();
  CHECK(settled > 0.0);
  for (double j : report.cost_history) CHECK(std::isfinite(j));
  // entry 0 is the PCA seed, well above the fixed point; one pass later the
  // trajectory must already be inside a narrow band around the settled cost
  CHECK(report.cost_history.front() > settled);
  for (std::size_t i = 1; i < report.cost_history.size(); ++i)
    CHECK(std::abs(report.cost_history[i] - settled) <= 0.02 * settled);
  const double first_move = std::abs(report.cost_history[1] - report.cost_history[0]);
  const double last_move =
      std::abs(report.cost_history[6] - report.cost_history[5]);
  CHECK(last_move <= 1e-6 * (first_move + 1e-30) + 1e-14 * settled);
}

TEST_CASE("tangent residuals shrink quadratically with the fill distance") {
  std::vector<double> hs, errs;
  for (Index count : {64, 128, 256, 512}) {
    double h = 2.0 * M_PI / double(count);
    PointCloud c = circle_cloud(count);
    Eigen::Vector2d r(1.0, 0.0);
    auto th = WeightFunction::compact_bump(10.0 * h);
    auto [frame, report] =
        find_local_frame(c, r, 1, th, MetricForm::euclidean(), 1e-13, 30);

    double worst = 0.0;
    Eigen::VectorXd e = frame.basis.vectors.col(0);
    for (Index i = 0; i < c.size(); ++i) {
      Eigen::VectorXd y = c.points.col(i) - frame.q;
      if (eval_weight(th, (c.points.col(i) - frame.q).norm()) == 0.0) continue;
      worst = std::max(worst, (y - e * e.dot(y)).norm());
    }
    hs.push_back(std::log(h));
    errs.push_back(std::log(worst));
  }
  // least-squares slope of log err vs log h
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    mx += hs[i];
    my += errs[i];
  }
  mx /= hs.size();
  my /= errs.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    num += (hs[i] - mx) * (errs[i] - my);
    den += (hs[i] - mx) * (hs[i] - mx);
  }
  CHECK(num / den >= 1.7);
}

TEST_CASE("fixed origin with a normal offset recovers the plane") {
  PointCloud c;
  c.points.resize(3, 25);
  Index k = 0;
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b) c.points.col(k++) << 0.3 * a, 0.3 * b, 0.0;
  Eigen::Vector3d q = Eigen::Vector3d::Zero();
  Eigen::Vector3d r(0.0, 0.0, 0.5);  // r - q along the plane normal

  AffineFrame frame =
      frame_given_q(c, r, q, 2, WeightFunction::gaussian(1.0), MetricForm::euclidean());
  CHECK(span_angle(frame.basis.vectors, Eigen::MatrixXd::Identity(3, 2)) < 1e-10);
  CHECK(frame.constraint_residual < 1e-12);
}

TEST_CASE("fixed origin equal to the query reduces to weighted PCA") {
  PointCloud c = noisy_helix(80, 0.05, 12);
  Eigen::VectorXd r = c.points.col(30);
  auto th = WeightFunction::gaussian(0.8);

  AffineFrame frame = frame_given_q(c, r, r, 1, th, MetricForm::euclidean());

  Eigen::VectorXd w(c.size());
  for (Index i = 0; i < c.size(); ++i)
    w(i) = eval_weight(th, (c.points.col(i) - r).norm());
  auto pca = weighted_pca(c.points, r, w, 1);
  CHECK(span_angle(frame.basis.vectors, pca.vectors) < 1e-10);
}

TEST_CASE("no random admissible frame beats the fixed-origin construction") {
  std::mt19937_64 rng(64);
  std::normal_distribution<double> gauss;
  PointCloud c;
  c.points.resize(4, 10);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 10; ++j) c.points(i, j) = gauss(rng);
  Eigen::VectorXd q = 0.1 * Eigen::VectorXd::Ones(4);
  Eigen::VectorXd r = q + Eigen::VectorXd::Unit(4, 0);
  auto th = WeightFunction::gaussian(1.5);
  auto metric = MetricForm::euclidean();

  AffineFrame best = frame_given_q(c, r, q, 1, th, metric);
  double Jbest = cost_J(c, th, metric, best);

  Eigen::VectorXd v = (r - q).normalized();
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::VectorXd g(4);
    for (Index i = 0; i < 4; ++i) g(i) = gauss(rng);
    g -= v * v.dot(g);  // keep the candidate orthogonal to r - q
    if (g.norm() < 1e-8) continue;
    AffineFrame cand;
    cand.q = q;
    cand.basis.vectors = g.normalized();
    CHECK(Jbest <= cost_J(c, th, metric, cand) + 1e-9);
  }
}

TEST_CASE("running out of passes reports non-convergence") {
  PointCloud c = noisy_helix(200, 0.2, 31);
  Eigen::VectorXd r = c.points.col(100);
  auto [frame, report] = find_local_frame(c, r, 1, WeightFunction::gaussian(0.5),
                                          MetricForm::euclidean(), 1e-16, 1);
  CHECK_FALSE(report.converged);
  CHECK(report.iterations_used == 1);
  CHECK(report.final_step > 1e-16);
  // the orthogonality constraint holds by construction even without convergence
  CHECK(frame.constraint_residual < 1e-8 * diameter(c));
}

TEST_CASE("queries outside every support are refused") {
  PointCloud c = circle_cloud(50);
  Eigen::Vector2d far(100.0, 100.0);
  try {
    find_local_frame(c, far, 1, WeightFunction::compact_bump(1.0),
                     MetricForm::euclidean(), 1e-10, 10);
    FAIL("expected a degenerate-neighborhood error");
  } catch (const DegenerateNeighborhoodError& e) {
    CHECK(std::string(e.code()) == "degenerate-neighborhood");
  }
  // gaussian weights underflow to zero far away: same refusal
  Eigen::Vector2d very_far(1e6, 0.0);
  CHECK_THROWS_AS(find_local_frame(c, very_far, 1, WeightFunction::gaussian(0.5),
                                   MetricForm::euclidean(), 1e-10, 10),
                  DegenerateNeighborhoodError);
}

TEST_CASE("dimension bounds are enforced") {
  PointCloud c = circle_cloud(20);
  Eigen::Vector2d r(1.0, 0.0);
  auto th = WeightFunction::gaussian(1.0);
  CHECK_THROWS_AS(find_local_frame(c, r, 2, th, MetricForm::euclidean(), 1e-10, 10),
                  DomainError);
  CHECK_THROWS_AS(find_local_frame(c, r, 0, th, MetricForm::euclidean(), 1e-10, 10),
                  DomainError);
  CHECK_THROWS_AS(frame_given_q(c, r, r, 2, th, MetricForm::euclidean()), DomainError);
  Eigen::Vector3d wrong(0, 0, 0);
  CHECK_THROWS_AS(find_local_frame(c, wrong, 1, th, MetricForm::euclidean(), 1e-10, 10),
                  DomainError);
}

TEST_CASE("quadratic-form search equals the euclidean search in iso coordinates") {
  Eigen::Matrix3d A;
  A << 1.8, 0.2, 0.0, 0.2, 1.1, -0.1, 0.0, -0.1, 0.9;
  auto g = MetricForm::spd_form(A);
  Eigen::LLT<Eigen::Matrix3d> llt(A);
  Eigen::Matrix3d Lt = Eigen::Matrix3d(llt.matrixL()).transpose();

  PointCloud c = noisy_helix(150, 0.05, 77);
  PointCloud iso;
  iso.points = Lt * c.points;
  Eigen::VectorXd r = c.points.col(70);
  auto th = WeightFunction::gaussian(0.6);

  auto [f_form, rep_a] = find_local_frame(c, r, 1, th, g, 1e-11, 30);
  auto [f_iso, rep_b] =
      find_local_frame(iso, Lt * r, 1, th, MetricForm::euclidean(), 1e-11, 30);

  CHECK((Lt * f_form.q - f_iso.q).norm() < 1e-8);
  CHECK(span_angle(Lt * f_form.basis.vectors, f_iso.basis.vectors) < 1e-7);
  // returned basis is orthonormal in the form's inner product
  Eigen::MatrixXd gram = f_form.basis.vectors.transpose() * A * f_form.basis.vectors;
  CHECK((gram - Eigen::MatrixXd::Identity(1, 1)).cwiseAbs().maxCoeff() < 1e-10);
}
