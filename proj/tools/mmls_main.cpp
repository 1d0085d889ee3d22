// command-line front end: denoise / project / sigma / study
#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mmls/errors.hpp"
#include "mmls/harness.hpp"
#include "mmls/io.hpp"
#include "mmls/polynomial.hpp"
#include "mmls/project.hpp"
#include "mmls/weights.hpp"

namespace {

using namespace mmls;

struct Flags {
  long d = 0;  // 0 = take from the file header
  int m = 2;
  std::string weight = "gaussian";
  std::string sigma = "auto";
  double eps = 0.0;  // 0 = 1e-10 x cloud extent
  std::string iters = "10";
  std::string metric = "euclid";
  std::uint64_t seed = 7102;
  std::string out;
  std::string truth;  // optional reference cloud for summary rmse
};

void add_common(CLI::App* cmd, Flags& f, bool with_truth) {
  cmd->add_option("--d", f.d, "intrinsic dimension (default: file header)");
  cmd->add_option("--m", f.m, "polynomial degree (default 2)");
  cmd->add_option("--weight", f.weight, "kernel: gaussian|bump (default gaussian)");
  cmd->add_option("--sigma", f.sigma, "bandwidth value, or 'auto' (default)");
  cmd->add_option("--eps", f.eps, "frame stop tolerance (default 1e-10 x extent)");
  cmd->add_option("--iters", f.iters, "max frame passes, or fixed:<k> to run exactly k");
  cmd->add_option("--metric", f.metric, "euclid (default) or spd:<matrix.csv>");
  cmd->add_option("--seed", f.seed, "seed for every randomized step (default 7102)");
  cmd->add_option("--out", f.out, "output CSV path");
  if (with_truth)
    cmd->add_option("--truth", f.truth, "reference cloud CSV; adds rmse lines to the summary");
}

// the studies pick their own geometry and bandwidth; only these three apply
void add_study_opts(CLI::App* cmd, Flags& f) {
  cmd->add_option("--m", f.m, "polynomial degree (default 2)");
  cmd->add_option("--seed", f.seed, "seed for every randomized step (default 7102)");
  cmd->add_option("--out", f.out, "output CSV path");
}

Index resolve_d(const Flags& f, const std::string& cloud_path) {
  if (f.d > 0) return static_cast<Index>(f.d);
  if (auto hd = read_cloud_header_d(cloud_path)) return *hd;
  throw ConfigError("intrinsic dimension unknown: pass --d or use a '# n=.. d=..' header");
}

MetricForm resolve_metric(const Flags& f) {
  if (f.metric == "euclid") return MetricForm::euclidean();
  if (f.metric.rfind("spd:", 0) == 0) {
    PointCloud m = read_cloud_csv(f.metric.substr(4));
    return MetricForm::spd_form(m.points.transpose());  // rows of the file = rows of A
  }
  throw ConfigError("unknown metric '" + f.metric + "' (want euclid or spd:<file>)");
}

MmlsConfig make_config(const Flags& f, const PointCloud& cloud, Index d) {
  MmlsConfig cfg;
  cfg.d = d;
  cfg.m = f.m;
  if (cfg.d < 1 || cfg.d >= cloud.ambient_dim())
    throw ConfigError("need 1 <= d < ambient dimension (d=" + std::to_string(cfg.d) +
                      ", n=" + std::to_string(cloud.ambient_dim()) + ")");
  if (cfg.m < 1) throw ConfigError("degree must be at least 1");
  cfg.metric = resolve_metric(f);
  cfg.eps = f.eps;

  cfg.fixed_iters = f.iters.rfind("fixed:", 0) == 0;
  const std::string pass_count = cfg.fixed_iters ? f.iters.substr(6) : f.iters;
  try {
    cfg.max_iters = std::stoi(pass_count);
  } catch (...) {
    throw ConfigError("unreadable --iters '" + f.iters + "'");
  }
  if (cfg.max_iters < 1) throw ConfigError("--iters must be positive");

  double bw;
  if (f.sigma == "auto") {
    bw = estimate_sigma(cloud, static_cast<int>(cfg.d), cfg.m, 100, 10, f.seed);
    if (f.weight == "bump") bw *= 2.0;  // keep the estimated neighbor set inside the support
  } else {
    try {
      bw = std::stod(f.sigma);
    } catch (...) {
      throw ConfigError("unreadable --sigma '" + f.sigma + "'");
    }
  }
  if (f.weight == "gaussian")
    cfg.theta = WeightFunction::gaussian(bw);
  else if (f.weight == "bump")
    cfg.theta = WeightFunction::compact_bump(bw);
  else
    throw ConfigError("unknown weight kind '" + f.weight + "'");
  return cfg;
}

void write_table(const std::string& path, const std::vector<std::string>& cols,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!path.empty()) {
    file.open(path, std::ios::trunc);
    if (!file) throw DomainError("cannot write '" + path + "'");
    os = &file;
  }
  for (std::size_t i = 0; i < cols.size(); ++i)
    *os << (i ? "," : "") << cols[i];
  *os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      *os << (i ? "," : "") << row[i];
    *os << "\n";
  }
}

void write_batch_report(const std::string& path,
                        const std::vector<ProjectionResult>& results,
                        const Eigen::MatrixXd& inputs) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const double disp = r.ok ? (r.projected - inputs.col(static_cast<Index>(i))).norm() : 0.0;
    rows.push_back({std::to_string(i), r.ok ? "1" : "0", format_g17(disp),
                    r.ok && r.frame_converged ? "1" : "0",
                    std::to_string(r.frame_iterations), std::to_string(r.effective_points),
                    std::to_string(r.degree_used), r.error_code});
  }
  write_table(path, {"index", "ok", "displacement", "converged", "iterations",
                     "effective_points", "degree", "error"},
              rows);
}

Eigen::MatrixXd collect_projected(const std::vector<ProjectionResult>& results,
                                  const Eigen::MatrixXd& fallback, long& failed) {
  Eigen::MatrixXd out = fallback;
  failed = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].ok)
      out.col(static_cast<Index>(i)) = results[i].projected;
    else
      ++failed;
  }
  return out;
}

double rmse_between(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ConfigError("reference cloud shape does not match");
  double acc = 0.0;
  for (Index i = 0; i < a.cols(); ++i) acc += (a.col(i) - b.col(i)).squaredNorm();
  return std::sqrt(acc / static_cast<double>(a.cols()));
}

int cmd_denoise(const std::string& cloud_path, const Flags& f) {
  PointCloud cloud = read_cloud_csv(cloud_path);
  const Index d = resolve_d(f, cloud_path);
  MmlsConfig cfg = make_config(f, cloud, d);
  const std::string out = f.out.empty() ? cloud_path + ".denoised.csv" : f.out;

  auto results = project_cloud(cloud, cloud.points, cfg);
  long failed = 0;
  Eigen::MatrixXd projected = collect_projected(results, cloud.points, failed);

  PointCloud out_cloud;
  out_cloud.points = projected;
  write_cloud_csv(out, out_cloud, d);
  write_batch_report(out + ".report.csv", results, cloud.points);

  double mean_disp = 0.0;
  for (Index i = 0; i < projected.cols(); ++i)
    mean_disp += (projected.col(i) - cloud.points.col(i)).norm();
  mean_disp /= static_cast<double>(projected.cols());

  std::cout << "denoise: points=" << cloud.size() << " failed=" << failed
            << " sigma=" << format_g17(cfg.theta.bandwidth)
            << " mean_displacement=" << format_g17(mean_disp) << " out=" << out << "\n";
  if (!f.truth.empty()) {
    PointCloud truth = read_cloud_csv(f.truth);
    std::cout << "rmse_before=" << format_g17(rmse_between(cloud.points, truth.points))
              << " rmse_after=" << format_g17(rmse_between(projected, truth.points))
              << "\n";
  }
  return 0;
}

int cmd_project(const std::string& cloud_path, const std::string& query_path,
                const Flags& f) {
  PointCloud cloud = read_cloud_csv(cloud_path);
  PointCloud queries = read_cloud_csv(query_path);
  if (queries.ambient_dim() != cloud.ambient_dim())
    throw ConfigError("query and cloud ambient dimensions differ");
  const Index d = resolve_d(f, cloud_path);
  MmlsConfig cfg = make_config(f, cloud, d);
  const std::string out = f.out.empty() ? query_path + ".projected.csv" : f.out;

  auto results = project_cloud(cloud, queries.points, cfg);
  long failed = 0;
  Eigen::MatrixXd projected = collect_projected(results, queries.points, failed);

  PointCloud out_cloud;
  out_cloud.points = projected;
  write_cloud_csv(out, out_cloud, d);
  write_batch_report(out + ".report.csv", results, queries.points);

  std::cout << "project: queries=" << queries.size() << " failed=" << failed
            << " out=" << out << "\n";
  if (failed > 0) {
    std::cout << "flagged rows:";
    for (std::size_t i = 0; i < results.size(); ++i)
      if (!results[i].ok) std::cout << " " << i << "(" << results[i].error_code << ")";
    std::cout << "\n";
  }
  return 0;
}

int cmd_sigma(const std::string& cloud_path, const Flags& f) {
  PointCloud cloud = read_cloud_csv(cloud_path);
  const Index d = resolve_d(f, cloud_path);
  if (f.m < 1) throw ConfigError("degree must be at least 1");
  const double s = estimate_sigma(cloud, static_cast<int>(d), f.m, 100, 10, f.seed);
  std::cout << "sigma=" << format_g17(s)
            << " neighbors=" << 10 * poly_space_dim(static_cast<int>(d), f.m)
            << " trials=100 oversample=10 points=" << cloud.size() << "\n";
  return 0;
}

SyntheticManifold manifold_by_name(const std::string& kind) {
  if (kind == "helix") return SyntheticManifold::helix();
  if (kind == "circle") return SyntheticManifold::circle();
  if (kind == "sphere") return SyntheticManifold::sphere();
  if (kind == "torus") return SyntheticManifold::torus();
  if (kind == "plane") return SyntheticManifold::plane(2, 3);
  if (kind == "ellipse") return SyntheticManifold::ellipse_images();
  throw ConfigError("unknown manifold kind '" + kind + "'");
}

int cmd_study_convergence(const std::string& kind, int m, int levels, Index base,
                          const Flags& f) {
  if (levels < 3) throw ConfigError("need at least 3 levels");
  SyntheticManifold spec = manifold_by_name(kind);
  ExperimentConfig cfg;
  cfg.seed = f.seed;
  std::vector<Index> counts;
  for (int l = 0; l < levels; ++l) counts.push_back(base << l);
  ErrorReport rep = run_convergence_study(spec, m, counts, cfg);

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < rep.h_levels.size(); ++i)
    rows.push_back({std::to_string(counts[i]), format_g17(rep.h_levels[i]),
                    format_g17(rep.max_errors[i]),
                    rep.slope_valid ? format_g17(rep.slope) : "n/a"});
  write_table(f.out, {"count", "h", "max_error", "slope"}, rows);
  for (const auto& fl : rep.flags) std::cout << "note: " << fl << "\n";
  return 0;
}

int cmd_study_scaling(const std::string& n_list, Index d, int m, Index count,
                      Index queries, const Flags& f) {
  std::vector<Index> levels;
  std::size_t start = 0;
  while (start <= n_list.size()) {
    const std::size_t comma = n_list.find(',', start);
    const std::string tok =
        n_list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      levels.push_back(static_cast<Index>(std::stol(tok)));
    } catch (...) {
      throw ConfigError("unreadable --n entry '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  ExperimentConfig cfg;
  cfg.seed = f.seed;
  auto table = measure_linear_scaling(d, m, levels, count, queries, cfg);

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double ratio =
        i ? table[i].seconds_per_point / table[i - 1].seconds_per_point : 1.0;
    rows.push_back({std::to_string(table[i].n), format_g17(table[i].seconds_per_point),
                    format_g17(ratio), format_g17(table[i].equivariance_gap),
                    format_g17(table[i].mean_iterations)});
  }
  write_table(f.out, {"n", "seconds_per_point", "ratio", "equivariance_gap", "iterations"},
              rows);
  return 0;
}

int cmd_study_denoise(const std::string& kind, const Flags& f) {
  ExperimentConfig cfg;
  cfg.seed = f.seed;
  ErrorReport rep;
  if (kind == "helix") {
    cfg.mmls.m = f.m;
    cfg.mmls.fixed_iters = true;  // three passes, like the reference runs
    cfg.mmls.max_iters = 3;
    rep = run_denoise_experiment(SyntheticManifold::helix(), 400,
                                 NoiseModel::uniform_box(0.2, f.seed), cfg);
  } else if (kind == "ellipse") {
    cfg.mmls.m = f.m;
    cfg.reduce_distances = true;
    rep = run_denoise_experiment(SyntheticManifold::ellipse_images(), 144,
                                 NoiseModel::gaussian_iid(0.05, f.seed), cfg);
  } else {
    cfg.mmls.m = f.m;
    rep = run_denoise_experiment(manifold_by_name(kind), 400,
                                 NoiseModel::uniform_box(0.1, f.seed), cfg);
  }

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < rep.per_point.size(); ++i)
    rows.push_back({std::to_string(i), format_g17(rep.per_point[i])});
  write_table(f.out, {"index", "distance_to_truth"}, rows);
  std::cout << "rmse_before=" << format_g17(rep.rmse_before)
            << " rmse_after=" << format_g17(rep.rmse_after) << " ratio="
            << format_g17(rep.rmse_before / std::max(rep.rmse_after, 1e-300)) << "\n";
  for (const auto& fl : rep.flags) std::cout << "note: " << fl << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moving least-squares manifold projection"};
  app.require_subcommand(1);

  Flags f;
  std::string cloud_path, query_path;

  auto* denoise = app.add_subcommand("denoise", "project every cloud point onto its surface");
  denoise->add_option("cloud", cloud_path, "input cloud CSV")->required();
  add_common(denoise, f, true);

  auto* project = app.add_subcommand("project", "project query points onto the cloud's surface");
  project->add_option("cloud", cloud_path, "input cloud CSV")->required();
  project->add_option("queries", query_path, "query points CSV")->required();
  add_common(project, f, false);

  auto* sigma = app.add_subcommand("sigma", "estimate the kernel bandwidth");
  sigma->add_option("cloud", cloud_path, "input cloud CSV")->required();
  sigma->add_option("--d", f.d, "intrinsic dimension (default: file header)");
  sigma->add_option("--m", f.m, "polynomial degree (default 2)");
  sigma->add_option("--seed", f.seed, "seed for every randomized step (default 7102)");

  auto* study = app.add_subcommand("study", "built-in experiments");
  study->require_subcommand(1);

  std::string conv_kind = "circle", sden_kind = "helix", n_list = "256,512,1024";
  int levels = 4;
  Index base = 64, count = 48, queries = 24, sd = 1;

  auto* conv = study->add_subcommand("convergence", "error order under h refinement");
  conv->add_option("--kind", conv_kind, "circle|helix|sphere|torus|plane (default circle)");
  conv->add_option("--levels", levels, "number of halvings (default 4)");
  conv->add_option("--base", base, "coarsest sample count (default 64)");
  add_study_opts(conv, f);

  auto* scal = study->add_subcommand("scaling", "per-point cost as ambient dimension grows");
  scal->add_option("--n", n_list, "comma list of ambient dims (default 256,512,1024)");
  scal->add_option("--count", count, "curve sample count (default 48)");
  scal->add_option("--queries", queries, "timed queries per level (default 24)");
  scal->add_option("--sd", sd, "intrinsic dimension of the test curve (default 1)");
  add_study_opts(scal, f);

  auto* sden = study->add_subcommand("denoise", "noise-reduction experiment");
  sden->add_option("--kind", sden_kind, "helix|ellipse|circle|... (default helix)");
  add_study_opts(sden, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 1;
  }

  try {
    if (denoise->parsed()) return cmd_denoise(cloud_path, f);
    if (project->parsed()) return cmd_project(cloud_path, query_path, f);
    if (sigma->parsed()) return cmd_sigma(cloud_path, f);
    if (conv->parsed()) return cmd_study_convergence(conv_kind, f.m, levels, base, f);
    if (scal->parsed()) return cmd_study_scaling(n_list, sd, f.m, count, queries, f);
    if (sden->parsed()) return cmd_study_denoise(sden_kind, f);
  } catch (const mmls::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: config: no subcommand\n";
  return 1;
}
