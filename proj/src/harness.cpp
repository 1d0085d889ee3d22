#include "mmls/harness.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "mmls/errors.hpp"
#include "mmls/weights.hpp"

namespace mmls {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kGolden = 0.6180339887498949;  // 1/phi, drives quasi-uniform angles

double frac(double x) { return x - std::floor(x); }

// ellipse-images raster: smooth sigmoid of the ellipse's implicit function,
// so the image family varies smoothly with the semi-axes
double ellipse_pixel(double dx, double dy, double a, double b) {
  const double f = 1.0 - (dx / a) * (dx / a) - (dy / b) * (dy / b);
  return 1.0 / (1.0 + std::exp(-12.0 * f));
}

void ellipse_range(const SyntheticManifold& spec, double& lo, double& hi) {
  lo = 0.15 * spec.image_side;
  hi = 0.40 * spec.image_side;
}

Eigen::VectorXd render_ellipse(const SyntheticManifold& spec, double a, double b) {
  const int S = spec.image_side;
  const double c = 0.5 * (S - 1);
  Eigen::VectorXd img(static_cast<Index>(S) * S);
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j)
      img(static_cast<Index>(i) * S + j) = ellipse_pixel(j - c, i - c, a, b);
  return img;
}

// Halton low-discrepancy sequence on [-1,1]^d for plane sampling
double halton(long index, int base) {
  double f = 1.0, r = 0.0;
  long i = index;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

Eigen::VectorXd plane_param(const SyntheticManifold& spec, long index) {
  Eigen::VectorXd x(spec.plane_d);
  for (Index k = 0; k < spec.plane_d; ++k)
    x(k) = 2.0 * halton(index + 1, kPrimes[k]) - 1.0;
  return x;
}

}  // namespace

SyntheticManifold SyntheticManifold::helix() {
  SyntheticManifold s;
  s.kind = Kind::helix;
  return s;
}

SyntheticManifold SyntheticManifold::circle(double radius) {
  SyntheticManifold s;
  s.kind = Kind::circle;
  s.radius = radius;
  return s;
}

SyntheticManifold SyntheticManifold::sphere(double radius) {
  SyntheticManifold s;
  s.kind = Kind::sphere;
  s.radius = radius;
  return s;
}

SyntheticManifold SyntheticManifold::torus(double major, double minor) {
  SyntheticManifold s;
  s.kind = Kind::torus;
  s.major = major;
  s.minor = minor;
  return s;
}

SyntheticManifold SyntheticManifold::plane(Index d, Index n) {
  if (d < 1 || d >= n) throw DomainError("plane needs 1 <= d < n");
  SyntheticManifold s;
  s.kind = Kind::plane;
  s.plane_d = d;
  s.plane_n = n;
  return s;
}

SyntheticManifold SyntheticManifold::plane_through(const Eigen::MatrixXd& basis,
                                                   const Eigen::VectorXd& offset) {
  SyntheticManifold s = plane(basis.cols(), basis.rows());
  if (offset.size() != basis.rows()) throw DomainError("plane offset dimension mismatch");
  s.plane_basis = basis;
  s.plane_offset = offset;
  return s;
}

SyntheticManifold SyntheticManifold::ellipse_images(int side, int grid) {
  if (side < 4 || grid < 2) throw DomainError("image manifold needs side >= 4, grid >= 2");
  SyntheticManifold s;
  s.kind = Kind::ellipse_images;
  s.image_side = side;
  s.image_grid = grid;
  return s;
}

Index SyntheticManifold::ambient_dim() const {
  switch (kind) {
    case Kind::helix: return 3;
    case Kind::circle: return 2;
    case Kind::sphere: return 3;
    case Kind::torus: return 3;
    case Kind::plane: return plane_n;
    case Kind::ellipse_images: return static_cast<Index>(image_side) * image_side;
  }
  throw DomainError("unknown manifold kind");
}

Index SyntheticManifold::intrinsic_dim() const {
  switch (kind) {
    case Kind::helix: return 1;
    case Kind::circle: return 1;
    case Kind::sphere: return 2;
    case Kind::torus: return 2;
    case Kind::plane: return plane_d;
    case Kind::ellipse_images: return 2;
  }
  throw DomainError("unknown manifold kind");
}

Index SyntheticManifold::parameter_dim() const {
  return kind == Kind::plane ? plane_d : intrinsic_dim();
}

Eigen::VectorXd SyntheticManifold::at(const Eigen::VectorXd& p) const {
  if (p.size() != parameter_dim()) throw DomainError("manifold parameter dimension mismatch");
  switch (kind) {
    case Kind::helix:
      return Eigen::Vector3d(std::sin(p(0)), std::cos(p(0)), p(0));
    case Kind::circle:
      return Eigen::Vector2d(radius * std::cos(p(0)), radius * std::sin(p(0)));
    case Kind::sphere:
      return Eigen::Vector3d(radius * std::sin(p(1)) * std::cos(p(0)),
                             radius * std::sin(p(1)) * std::sin(p(0)),
                             radius * std::cos(p(1)));
    case Kind::torus: {
      const double w = major + minor * std::cos(p(1));
      return Eigen::Vector3d(w * std::cos(p(0)), w * std::sin(p(0)),
                             minor * std::sin(p(1)));
    }
    case Kind::plane: {
      Eigen::VectorXd q = plane_offset ? *plane_offset : Eigen::VectorXd::Zero(plane_n);
      if (plane_basis) return q + *plane_basis * p;
      Eigen::VectorXd out = q;
      out.head(plane_d) += p;
      return out;
    }
    case Kind::ellipse_images:
      return render_ellipse(*this, p(0), p(1));
  }
  throw DomainError("unknown manifold kind");
}

NoiseModel NoiseModel::uniform_box(double half_width, std::uint64_t seed) {
  if (half_width < 0.0) throw DomainError("noise amplitude must be nonnegative");
  return NoiseModel{Kind::uniform_box, half_width, seed};
}

NoiseModel NoiseModel::gaussian_iid(double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw DomainError("noise amplitude must be nonnegative");
  return NoiseModel{Kind::gaussian_iid, sigma, seed};
}

namespace {

// quasi-uniform parameter schedules; `phase` in [0,1) shifts every schedule so
// probe sets interleave the sample sets instead of repeating them
Eigen::MatrixXd manifold_points(const SyntheticManifold& spec, Index I, double phase) {
  const Index n = spec.ambient_dim();
  Eigen::MatrixXd P(n, I);
  switch (spec.kind) {
    case SyntheticManifold::Kind::helix:
      for (Index i = 0; i < I; ++i) {
        const double t = I == 1 ? 0.0
                                : -kPi + 2.0 * kPi * (i + phase) / (I - 1 + 2.0 * phase);
        P.col(i) = spec.at(Eigen::VectorXd::Constant(1, t));
      }
      break;
    case SyntheticManifold::Kind::circle:
      for (Index i = 0; i < I; ++i) {
        const double t = 2.0 * kPi * (i + phase) / I;
        P.col(i) = spec.at(Eigen::VectorXd::Constant(1, t));
      }
      break;
    case SyntheticManifold::Kind::sphere:
      // Fibonacci lattice
      for (Index i = 0; i < I; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5 + phase) / I;
        const double zc = std::clamp(z, -1.0, 1.0);
        const double rho = std::sqrt(1.0 - zc * zc);
        const double az = 2.0 * kPi * frac((i + phase) * kGolden);
        P.col(i) = spec.radius * Eigen::Vector3d(rho * std::cos(az), rho * std::sin(az), zc);
      }
      break;
    case SyntheticManifold::Kind::torus:
      for (Index i = 0; i < I; ++i) {
        Eigen::VectorXd prm(2);
        prm << 2.0 * kPi * (i + phase) / I, 2.0 * kPi * frac((i + phase) * kGolden);
        P.col(i) = spec.at(prm);
      }
      break;
    case SyntheticManifold::Kind::plane:
      for (Index i = 0; i < I; ++i)
        P.col(i) = spec.at(plane_param(spec, i + static_cast<long>(phase * 4099)));
      break;
    case SyntheticManifold::Kind::ellipse_images: {
      double lo, hi;
      ellipse_range(spec, lo, hi);
      const Index g = std::max<Index>(
          2, static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(I)))));
      for (Index i = 0; i < I; ++i) {
        const Index ia = i / g, ib = i % g;
        const double step = (hi - lo) / (g - 1 + (phase > 0.0 ? 1.0 : 0.0));
        Eigen::VectorXd prm(2);
        prm << lo + step * (ia + phase), lo + step * (ib + phase);
        P.col(i) = spec.at(prm);
      }
      break;
    }
  }
  return P;
}

}  // namespace

PointCloud sample_manifold(const SyntheticManifold& spec, Index I,
                           const NoiseModel* noise, std::uint64_t seed) {
  if (I < 1) throw DomainError("sample count must be positive");
  PointCloud cloud;
  cloud.points = manifold_points(spec, I, 0.0);
  cloud.truth = cloud.points;
  if (noise && noise->amplitude > 0.0) {
    std::mt19937_64 rng(noise->seed ^ seed);
    if (noise->kind == NoiseModel::Kind::uniform_box) {
      std::uniform_real_distribution<double> u(-noise->amplitude, noise->amplitude);
      for (Index i = 0; i < cloud.points.cols(); ++i)
        for (Index k = 0; k < cloud.points.rows(); ++k) cloud.points(k, i) += u(rng);
    } else {
      std::normal_distribution<double> gdist(0.0, noise->amplitude);
      for (Index i = 0; i < cloud.points.cols(); ++i)
        for (Index k = 0; k < cloud.points.rows(); ++k) cloud.points(k, i) += gdist(rng);
    }
  }
  return cloud;
}

double distance_to_manifold(const Eigen::VectorXd& p, const SyntheticManifold& spec) {
  if (p.size() != spec.ambient_dim())
    throw DomainError("distance query has the wrong ambient dimension");
  switch (spec.kind) {
    case SyntheticManifold::Kind::circle:
      return std::abs(p.norm() - spec.radius);
    case SyntheticManifold::Kind::sphere:
      return std::abs(p.norm() - spec.radius);
    case SyntheticManifold::Kind::torus: {
      const double dxy = std::hypot(p(0), p(1));
      return std::abs(std::hypot(dxy - spec.major, p(2)) - spec.minor);
    }
    case SyntheticManifold::Kind::plane: {
      Eigen::VectorXd y = p;
      if (spec.plane_offset) y -= *spec.plane_offset;
      if (spec.plane_basis) {
        const Eigen::MatrixXd& B = *spec.plane_basis;
        return (y - B * (B.transpose() * y)).norm();
      }
      return y.tail(spec.plane_n - spec.plane_d).norm();
    }
    case SyntheticManifold::Kind::helix: {
      // coarse scan of the parameter range, then nested local refinement
      auto dist_at = [&](double t) {
        return (p - spec.at(Eigen::VectorXd::Constant(1, t))).norm();
      };
      const int N = 2048;
      double best_t = -kPi, best = dist_at(-kPi);
      for (int i = 1; i <= N; ++i) {
        const double t = -kPi + 2.0 * kPi * i / N;
        const double v = dist_at(t);
        if (v < best) {
          best = v;
          best_t = t;
        }
      }
      double gap = 2.0 * kPi / N;
      for (int round = 0; round < 4; ++round) {
        const double t0 = std::max(-kPi, best_t - gap);
        const double t1 = std::min(kPi, best_t + gap);
        const int M = 32;
        for (int i = 0; i <= M; ++i) {
          const double t = t0 + (t1 - t0) * i / M;
          const double v = dist_at(t);
          if (v < best) {
            best = v;
            best_t = t;
          }
        }
        gap = (t1 - t0) / M;
      }
      return best;
    }
    case SyntheticManifold::Kind::ellipse_images: {
      double lo, hi;
      ellipse_range(spec, lo, hi);
      auto dist_at = [&](double a, double b) {
        return (p - render_ellipse(spec, a, b)).norm();
      };
      const int N = 48;
      double best = -1.0, ba = lo, bb = lo;
      for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j) {
          const double a = lo + (hi - lo) * i / N;
          const double b = lo + (hi - lo) * j / N;
          const double v = dist_at(a, b);
          if (best < 0.0 || v < best) {
            best = v;
            ba = a;
            bb = b;
          }
        }
      double gap = (hi - lo) / N;
      for (int round = 0; round < 3; ++round) {
        const double a0 = std::max(lo, ba - gap), a1 = std::min(hi, ba + gap);
        const double b0 = std::max(lo, bb - gap), b1 = std::min(hi, bb + gap);
        const int M = 8;
        for (int i = 0; i <= M; ++i)
          for (int j = 0; j <= M; ++j) {
            const double a = a0 + (a1 - a0) * i / M;
            const double b = b0 + (b1 - b0) * j / M;
            const double v = dist_at(a, b);
            if (v < best) {
              best = v;
              ba = a;
              bb = b;
            }
          }
        gap = std::max(a1 - a0, b1 - b0) / M;
      }
      return best;
    }
  }
  throw DomainError("unknown manifold kind");
}

double fill_distance(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& probes) {
  if (samples.cols() == 0 || probes.cols() == 0)
    throw DomainError("fill distance needs nonempty point sets");
  if (samples.rows() != probes.rows())
    throw DomainError("fill distance: ambient dimension mismatch");
  double worst = 0.0;
  for (Index j = 0; j < probes.cols(); ++j) {
    double best = (samples.col(0) - probes.col(j)).squaredNorm();
    for (Index i = 1; i < samples.cols(); ++i) {
      const double v = (samples.col(i) - probes.col(j)).squaredNorm();
      if (v < best) best = v;
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

double hausdorff_one_sided(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return fill_distance(b, a);  // sup over a of the distance to b
}

namespace {

double rmse_to(const Eigen::MatrixXd& pts, const Eigen::MatrixXd& truth) {
  double acc = 0.0;
  for (Index i = 0; i < pts.cols(); ++i) acc += (pts.col(i) - truth.col(i)).squaredNorm();
  return std::sqrt(acc / static_cast<double>(pts.cols()));
}

MmlsConfig study_config(const ExperimentConfig& cfg, const PointCloud& cloud, Index d,
                        int m) {
  MmlsConfig mc = cfg.mmls;
  mc.d = d;
  mc.m = m;
  if (cfg.sigma_auto) {
    const double s =
        estimate_sigma(cloud, static_cast<int>(d), m, 100, 10, cfg.seed);
    mc.theta = mc.theta.kind == WeightFunction::Kind::gaussian
                   ? WeightFunction::gaussian(cfg.sigma_factor * s)
                   : WeightFunction::compact_bump(cfg.sigma_factor * s);
  }
  if (cfg.reduce_distances) {
    mc.weight_distance_basis =
        distance_reduction_basis(cloud, cfg.reduce_rank_factor * d, cfg.seed);
  }
  return mc;
}

}  // namespace

ErrorReport run_convergence_study(const SyntheticManifold& spec, int m,
                                  const std::vector<Index>& counts,
                                  const ExperimentConfig& cfg) {
  if (counts.size() < 3)
    throw DomainError("convergence study needs at least three levels");
  const Index d = spec.intrinsic_dim();
  ErrorReport rep;

  const Index dense = d == 1 ? 4096 : 8192;
  for (std::size_t lvl = 0; lvl < counts.size(); ++lvl) {
    PointCloud clean = sample_manifold(spec, counts[lvl], nullptr, cfg.seed);
    MmlsConfig mc = study_config(cfg, clean, d, m);

    const Index P = std::min<Index>(256, 2 * counts[lvl]);
    Eigen::MatrixXd probes = manifold_points(spec, P, 0.5);
    auto results = project_cloud(clean, probes, mc, cfg.threads);

    double max_err = 0.0;
    bool flagged = false;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (!results[i].ok) {
        rep.flags.push_back("level " + std::to_string(lvl) + " probe " +
                            std::to_string(i) + ": " + results[i].error_code);
        flagged = true;
        continue;
      }
      max_err = std::max(max_err, distance_to_manifold(results[i].projected, spec));
    }

    rep.h_levels.push_back(
        fill_distance(clean.points, manifold_points(spec, dense, 0.25)));
    rep.max_errors.push_back(flagged ? std::nan("") : max_err);
  }

  // slope of log(err) against log(h) over the usable levels
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < rep.h_levels.size(); ++i) {
    if (std::isnan(rep.max_errors[i]) || !(rep.max_errors[i] > 1e-14)) continue;
    lx.push_back(std::log(rep.h_levels[i]));
    ly.push_back(std::log(rep.max_errors[i]));
  }
  if (lx.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= lx.size();
    my /= ly.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      num += (lx[i] - mx) * (ly[i] - my);
      den += (lx[i] - mx) * (lx[i] - mx);
    }
    if (den > 0.0) {
      rep.slope = num / den;
      rep.slope_valid = lx.size() == rep.h_levels.size();
    }
  }
  if (!rep.slope_valid && lx.size() < rep.h_levels.size())
    rep.flags.push_back("errors at the numeric floor; slope not meaningful");
  return rep;
}

ErrorReport run_denoise_experiment(const SyntheticManifold& spec, Index I,
                                   const NoiseModel& noise,
                                   const ExperimentConfig& cfg) {
  PointCloud cloud = sample_manifold(spec, I, &noise, cfg.seed);
  const Index d = spec.intrinsic_dim();
  MmlsConfig mc = study_config(cfg, cloud, d, cfg.mmls.m);

  auto results = project_cloud(cloud, cloud.points, mc, cfg.threads);

  Eigen::MatrixXd projected = cloud.points;  // failed rows keep the noisy point
  ErrorReport rep;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].ok) {
      projected.col(static_cast<Index>(i)) = results[i].projected;
    } else {
      rep.flags.push_back("point " + std::to_string(i) + ": " + results[i].error_code);
    }
  }

  const Eigen::MatrixXd& truth = *cloud.truth;
  rep.rmse_before = rmse_to(cloud.points, truth);
  rep.rmse_after = rmse_to(projected, truth);
  rep.per_point.resize(results.size());
  for (Index i = 0; i < projected.cols(); ++i) {
    rep.per_point[static_cast<std::size_t>(i)] = (projected.col(i) - truth.col(i)).norm();
    rep.mean_before += (cloud.points.col(i) - truth.col(i)).norm();
    rep.mean_after += rep.per_point[static_cast<std::size_t>(i)];
  }
  if (projected.cols() > 0) {
    rep.mean_before /= static_cast<double>(projected.cols());
    rep.mean_after /= static_cast<double>(projected.cols());
  }
  rep.hausdorff_to_truth = hausdorff_one_sided(projected, truth);
  rep.hausdorff_from_truth = hausdorff_one_sided(truth, projected);
  return rep;
}

std::vector<ScalingRow> measure_linear_scaling(Index d, int m,
                                               const std::vector<Index>& n_levels,
                                               Index sample_count, Index query_count,
                                               const ExperimentConfig& cfg) {
  if (n_levels.empty()) throw DomainError("scaling study needs ambient levels");
  if (d != 1 && d != 2) throw DomainError("scaling study supports d = 1 or 2");

  const SyntheticManifold base =
      d == 1 ? SyntheticManifold::helix() : SyntheticManifold::torus();
  PointCloud cloud0 = sample_manifold(base, sample_count, nullptr, cfg.seed);
  Eigen::MatrixXd queries0 = manifold_points(base, query_count, 0.5);
  MmlsConfig mc0 = study_config(cfg, cloud0, d, m);
  const Index n0 = cloud0.ambient_dim();

  std::vector<ScalingRow> table;
  Eigen::MatrixXd reference;  // first level's projections pulled back to R^{n0}

  for (std::size_t lvl = 0; lvl < n_levels.size(); ++lvl) {
    const Index n = n_levels[lvl];
    if (n < n0) throw DomainError("ambient level smaller than the base dimension");

    // seeded Haar-ish rotation: QR of a gaussian matrix, sign-normalized
    std::mt19937_64 rng(cfg.seed + 0x51ab5 * (lvl + 1));
    std::normal_distribution<double> gdist(0.0, 1.0);
    Eigen::MatrixXd G(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) G(i, j) = gdist(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ();
    Eigen::MatrixXd Rm = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < n; ++j)
      if (Rm(j, j) < 0.0) Q.col(j) = -Q.col(j);

    PointCloud cloud;
    cloud.points = Eigen::MatrixXd::Zero(n, cloud0.size());
    cloud.points.topRows(n0) = cloud0.points;
    cloud.points = Q * cloud.points;
    Eigen::MatrixXd queries = Eigen::MatrixXd::Zero(n, queries0.cols());
    queries.topRows(n0) = queries0;
    queries = Q * queries;

    MmlsConfig mc = mc0;
    project_point(cloud, queries.col(0), mc);  // warm-up, outside the clock

    Eigen::MatrixXd projected(n, queries.cols());
    long iter_total = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (Index i = 0; i < queries.cols(); ++i) {
      auto res = project_point(cloud, queries.col(i), mc);
      projected.col(i) = res.projected;
      iter_total += res.frame_iterations;
    }
    const auto t1 = std::chrono::steady_clock::now();
    Eigen::MatrixXd back = (Q.transpose() * projected).topRows(n0);

    ScalingRow row;
    row.n = n;
    row.seconds_per_point =
        std::chrono::duration<double>(t1 - t0).count() / queries.cols();
    row.mean_iterations = static_cast<double>(iter_total) / queries.cols();
    if (lvl == 0) {
      reference = back;
      row.equivariance_gap = 0.0;
    } else {
      row.equivariance_gap = (back - reference).colwise().norm().maxCoeff();
    }
    table.push_back(row);
  }
  return table;
}

}  // namespace mmls
