// Command-line driver for the spectral correspondence pipeline:
//   precompute  cache Laplace-Beltrami bases and descriptors per shape
//   train       optimize the descriptor network on a shape collection
//   match       compute a functional map and pointwise correspondence
//   refine      match with ICP refinement
//   eval        score a pointwise map against ground truth

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "specmatch/descnet.h"
#include "specmatch/descriptors.h"
#include "specmatch/eval.h"
#include "specmatch/fmap.h"
#include "specmatch/pointwise.h"
#include "specmatch/spectral.h"
#include "specmatch/trainer.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace specmatch;

namespace {

struct PipelineConfig {
  std::vector<std::string> shapes;
  int k = 120;
  std::string descriptor = "shot";  // shot | hks | file
  double shot_radius = 0.0;         // 0 => 5% of bbox diagonal
  int hks_times = 16;
  std::vector<std::string> descriptor_files;
  std::vector<std::pair<int, int>> pairs;
  TrainConfig train;
  std::string out = "out";
  bool auto_precompute = true;
};

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void load_config_file(const std::string& path, PipelineConfig& config) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw_data("config '" + path + "': " + e.what());
  }
  if (j.contains("shapes")) config.shapes = j["shapes"].get<std::vector<std::string>>();
  if (j.contains("k")) config.k = j["k"].get<int>();
  if (j.contains("descriptor")) config.descriptor = j["descriptor"].get<std::string>();
  if (j.contains("shot_radius")) config.shot_radius = j["shot_radius"].get<double>();
  if (j.contains("hks_times")) config.hks_times = j["hks_times"].get<int>();
  if (j.contains("descriptor_files"))
    config.descriptor_files = j["descriptor_files"].get<std::vector<std::string>>();
  if (j.contains("out")) config.out = j["out"].get<std::string>();
  if (j.contains("pairs"))
    for (const auto& p : j["pairs"]) config.pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  if (j.contains("train")) {
    const auto& t = j["train"];
    if (t.contains("learning_rate")) config.train.learning_rate = t["learning_rate"].get<double>();
    if (t.contains("batch_pairs")) config.train.batch_pairs = t["batch_pairs"].get<int>();
    if (t.contains("iterations")) config.train.iterations = t["iterations"].get<int>();
    if (t.contains("points_per_shape"))
      config.train.points_per_shape = t["points_per_shape"].get<int>();
    if (t.contains("e4_descriptor_fraction"))
      config.train.e4_descriptor_fraction = t["e4_descriptor_fraction"].get<double>();
    if (t.contains("layers")) config.train.layers = t["layers"].get<int>();
    if (t.contains("weights")) {
      const auto& w = t["weights"];
      config.train.weights = {w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>(),
                              w.at(3).get<double>()};
    }
  }
}

fs::path cache_dir(const PipelineConfig& config) { return fs::path(config.out) / "cache"; }

std::string shape_stem(const std::string& path) { return fs::path(path).stem().string(); }

struct CachedShape {
  TriangleMesh mesh;
  LaplaceBasis basis;
  DescriptorField descriptors;
};

json descriptor_meta(const PipelineConfig& config, const TriangleMesh& mesh) {
  json meta;
  meta["mesh_hash"] = mesh.content_hash();
  meta["kind"] = config.descriptor;
  if (config.descriptor == "shot") {
    meta["radius"] = config.shot_radius;
  } else if (config.descriptor == "hks") {
    meta["times"] = config.hks_times;
    meta["k"] = config.k;
  }
  return meta;
}

// Returns true when the cache was reused.
bool ensure_basis(const PipelineConfig& config, const TriangleMesh& mesh, LaplaceBasis& basis) {
  fs::path path = cache_dir(config) / (mesh.name + ".basis");
  if (fs::exists(path)) {
    try {
      basis = load_basis(path.string(), mesh.content_hash());
      if (basis.k == config.k) return true;
    } catch (const Error&) {
      // stale or foreign cache; fall through and rebuild
    }
  }
  basis = compute_basis(mesh, config.k);
  save_basis(path.string(), basis);
  return false;
}

bool ensure_descriptors(const PipelineConfig& config, const TriangleMesh& mesh, int shape_index,
                        const LaplaceBasis& basis, DescriptorField& field) {
  fs::path csv = cache_dir(config) / (mesh.name + ".desc.csv");
  fs::path meta_path = cache_dir(config) / (mesh.name + ".desc.meta.json");
  json want = descriptor_meta(config, mesh);
  if (fs::exists(csv) && fs::exists(meta_path)) {
    try {
      json have;
      std::ifstream(meta_path) >> have;
      if (have == want) {
        field = load_descriptors(csv.string(), mesh.num_vertices());
        return true;
      }
    } catch (const std::exception&) {
    }
  }
  if (config.descriptor == "shot") {
    ShotParams params;
    params.radius = config.shot_radius;
    field = compute_shot(mesh, params);
  } else if (config.descriptor == "hks") {
    field = compute_hks(basis, config.hks_times);
  } else if (config.descriptor == "file") {
    if (shape_index < 0 || shape_index >= int(config.descriptor_files.size()))
      throw_usage("descriptor=file needs a descriptor_files entry per shape");
    field = load_descriptors(config.descriptor_files[size_t(shape_index)], mesh.num_vertices());
  } else {
    throw_usage("unknown descriptor kind '" + config.descriptor + "'");
  }
  save_descriptors(csv.string(), field);
  write_file_atomic(meta_path.string(), [&](std::ostream& out) { out << want.dump(2) << '\n'; });
  return false;
}

CachedShape load_shape(const PipelineConfig& config, const std::string& path, int shape_index,
                       bool allow_compute) {
  CachedShape shape;
  shape.mesh = load_mesh(path);
  if (!allow_compute) {
    fs::path basis_path = cache_dir(config) / (shape.mesh.name + ".basis");
    fs::path csv = cache_dir(config) / (shape.mesh.name + ".desc.csv");
    if (!fs::exists(basis_path) || !fs::exists(csv))
      throw_data("missing cache for shape '" + shape.mesh.name +
                 "'; run `specmatch precompute` first or drop --no-auto-precompute");
  }
  ensure_basis(config, shape.mesh, shape.basis);
  ensure_descriptors(config, shape.mesh, shape_index, shape.basis, shape.descriptors);
  return shape;
}

int cmd_precompute(const PipelineConfig& config) {
  if (config.shapes.empty()) throw_usage("precompute: no shapes given (flag or config file)");
  for (size_t i = 0; i < config.shapes.size(); ++i) {
    auto t0 = std::chrono::steady_clock::now();
    TriangleMesh mesh;
    LaplaceBasis basis;
    DescriptorField field;
    try {
      mesh = load_mesh(config.shapes[i]);
      bool basis_cached = ensure_basis(config, mesh, basis);
      bool desc_cached = ensure_descriptors(config, mesh, int(i), basis, field);
      std::printf("%-24s %s  k=%d d=%d  %.0f ms\n", mesh.name.c_str(),
                  basis_cached && desc_cached ? "cached  " : "computed", basis.k, field.dim(),
                  ms_since(t0));
    } catch (const Error&) {
      std::fprintf(stderr, "precompute failed for shape '%s'\n", config.shapes[i].c_str());
      throw;
    }
  }
  return 0;
}

int cmd_train(const PipelineConfig& config_in) {
  PipelineConfig config = config_in;
  config.train.k = config.k;
  config.train.validate();
  if (config.shapes.size() < 2) throw_usage("train: need at least two shapes");

  const auto& w = config.train.weights;
  std::printf("train: w=(%g,%g,%g,%g) lr=%g iterations=%d batch=%d points=%d e4_fraction=%g k=%d "
              "layers=%d seed=%llu\n",
              w.w1, w.w2, w.w3, w.w4, config.train.learning_rate, config.train.iterations,
              config.train.batch_pairs, config.train.points_per_shape,
              config.train.e4_descriptor_fraction, config.k, config.train.layers,
              (unsigned long long)config.train.seed);

  std::vector<CachedShape> cached;
  cached.reserve(config.shapes.size());
  for (size_t i = 0; i < config.shapes.size(); ++i)
    cached.push_back(load_shape(config, config.shapes[i], int(i), config.auto_precompute));

  // The production trainer runs in single precision; geometry stays double.
  std::vector<TrainShape<float>> shapes;
  shapes.reserve(cached.size());
  for (auto& c : cached)
    shapes.push_back({&c.basis, c.descriptors.values.cast<float>(), c.mesh.name});

  std::vector<std::array<double, 5>> log_rows;  // loss, E1..E4
  log_rows.reserve(size_t(config.train.iterations));
  std::vector<double> wall_ms;
  wall_ms.reserve(size_t(config.train.iterations));
  auto t0 = std::chrono::steady_clock::now();
  StepCallback<float> logger = [&](int, const StepStats<float>& stats, const Mlp<float>&) {
    log_rows.push_back({double(stats.loss), double(stats.energies[0]), double(stats.energies[1]),
                        double(stats.energies[2]), double(stats.energies[3])});
    wall_ms.push_back(ms_since(t0));
  };

  TrainResult<float> result = train<float>(shapes, config.pairs, config.train, logger);

  fs::path out_dir(config.out);
  fs::create_directories(out_dir);
  save_checkpoint((out_dir / "checkpoint.bin").string(), cast_mlp<double>(result.params),
                  config.train.hash());
  write_file_atomic((out_dir / "train_log.csv").string(), [&](std::ostream& out) {
    out << "step,loss,E1,E2,E3,E4,wall_ms\n";
    out.precision(10);
    for (size_t s = 0; s < log_rows.size(); ++s) {
      out << s;
      for (double v : log_rows[s]) out << ',' << v;
      out << ',' << wall_ms[s] << '\n';
    }
  });

  const auto& back = log_rows.back();
  std::printf("final: loss=%.6g E1=%.6g E2=%.6g E3=%.6g E4=%.6g (%d steps, %.1f s)\n", back[0],
              back[1], back[2], back[3], back[4], config.train.iterations,
              ms_since(t0) / 1000.0);
  std::printf("wrote %s and %s\n", (out_dir / "checkpoint.bin").c_str(),
              (out_dir / "train_log.csv").c_str());
  return 0;
}

struct MatchOpts {
  std::string source, target, checkpoint;
  bool axiomatic = false;
  bool refine = false;
  bool reverse = false;
  double alpha = -1.0;  // <0 => 1e-3 for the axiomatic solve, 0 with a checkpoint
};

int cmd_match(const PipelineConfig& config, const MatchOpts& opts) {
  if (opts.axiomatic == !opts.checkpoint.empty())
    throw_usage("match: pass exactly one of --checkpoint or --axiomatic");
  std::string source_path = opts.reverse ? opts.target : opts.source;
  std::string target_path = opts.reverse ? opts.source : opts.target;

  CachedShape src = load_shape(config, source_path, 0, config.auto_precompute);
  CachedShape tgt = load_shape(config, target_path, 1, config.auto_precompute);
  if (src.descriptors.dim() != tgt.descriptors.dim())
    throw_data("match: descriptor dimensions differ between the shapes");

  Eigen::MatrixXd x1 = src.descriptors.values;
  Eigen::MatrixXd x2 = tgt.descriptors.values;
  if (!opts.checkpoint.empty()) {
    Mlp<double> net = load_checkpoint(opts.checkpoint);
    if (net.dim() != x1.cols())
      throw_data("checkpoint dimension " + std::to_string(net.dim()) +
                 " does not match descriptors (" + std::to_string(x1.cols()) + ")");
    x1 = mlp_forward(net, x1);
    x2 = mlp_forward(net, x2);
  }
  Eigen::MatrixXd a1 = project_columns(src.basis, x1);
  Eigen::MatrixXd a2 = project_columns(tgt.basis, x2);

  double alpha = opts.alpha >= 0.0 ? opts.alpha : (opts.axiomatic ? 1e-3 : 0.0);
  FunctionalMap fmap;
  fmap.source = src.mesh.name;
  fmap.target = tgt.mesh.name;
  if (alpha > 0.0)
    fmap.C = solve_fmap_regularized<double>(a1, a2, src.basis.eigenvalues, tgt.basis.eigenvalues,
                                            alpha);
  else
    fmap.C = solve_fmap<double>(a1, a2);

  PointMap map;
  if (opts.refine) {
    IcpResult icp = icp_refine(fmap.C, src.basis, tgt.basis);
    fmap.C = icp.c12;
    map = std::move(icp.map);
    std::printf("ICP: %d iterations, residual %.6g -> %.6g\n", icp.iterations,
                icp.residual_trace.front(), icp.residual_trace.back());
  } else {
    map = fmap_to_p2p(fmap.C, src.basis, tgt.basis);
  }
  map.source = src.mesh.name;
  map.target = tgt.mesh.name;

  fs::path out_dir(config.out);
  std::string stem = src.mesh.name + "__" + tgt.mesh.name;
  save_fmap_csv((out_dir / (stem + ".fmap.csv")).string(), fmap);
  save_point_map((out_dir / (stem + ".map.txt")).string(), map);
  std::printf("wrote %s and %s\n", (out_dir / (stem + ".fmap.csv")).c_str(),
              (out_dir / (stem + ".map.txt")).c_str());
  return 0;
}

int cmd_eval(const PipelineConfig& config, const std::string& map_path, const std::string& gt_path,
             const std::string& source_mesh_path) {
  TriangleMesh source_mesh = load_mesh(source_mesh_path);
  PointMap map = load_point_map(map_path, -1, source_mesh.num_vertices());
  PointMap gt = load_point_map(gt_path, map.size(), source_mesh.num_vertices());
  ErrorReport report = geodesic_error(map, gt, source_mesh);

  fs::path out_dir(config.out);
  std::string stem = fs::path(map_path).stem().string();
  save_error_report_json((out_dir / (stem + ".report.json")).string(), report);
  save_error_curve_csv((out_dir / (stem + ".curve.csv")).string(), report);
  std::printf("mean=%.6g percentile95=%.6g max=%.6g (n=%zu)\n", report.mean, report.percentile95,
              report.max, report.errors.size());
  std::printf("wrote %s and %s\n", (out_dir / (stem + ".report.json")).c_str(),
              (out_dir / (stem + ".curve.csv")).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral shape correspondence: functional maps with unsupervised descriptor "
               "optimization"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags (--out, --seed, ...) may follow the subcommand

  PipelineConfig config;
  std::string config_path;
  app.add_option("--config", config_path, "JSON pipeline configuration")->check(CLI::ExistingFile);
  app.add_option("--out", config.out, "output directory");
  app.add_option("--seed", config.train.seed, "random seed");
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = hardware default)");

  auto add_shape_opts = [&](CLI::App* cmd) {
    cmd->add_option("--k", config.k, "spectral basis size");
    cmd->add_option("--descriptor", config.descriptor, "descriptor kind: shot|hks|file");
    cmd->add_option("--shot-radius", config.shot_radius,
                    "SHOT support radius (0 = 5% of bbox diagonal)");
    cmd->add_option("--hks-times", config.hks_times, "number of HKS time samples");
  };

  auto* precompute = app.add_subcommand("precompute", "cache bases and descriptors per shape");
  precompute->add_option("shapes", config.shapes, "mesh files (.off/.obj)");
  add_shape_opts(precompute);

  auto* train_cmd = app.add_subcommand("train", "optimize the descriptor network");
  train_cmd->add_option("shapes", config.shapes, "mesh files (.off/.obj)");
  add_shape_opts(train_cmd);
  train_cmd->add_option("--iterations", config.train.iterations, "optimization steps");
  train_cmd->add_option("--batch", config.train.batch_pairs, "shape pairs per step");
  train_cmd->add_option("--lr", config.train.learning_rate, "ADAM learning rate");
  train_cmd->add_option("--points", config.train.points_per_shape, "sampled points per shape");
  train_cmd->add_option("--e4-fraction", config.train.e4_descriptor_fraction,
                        "descriptor-column fraction for the commutativity penalty");
  train_cmd->add_option("--layers", config.train.layers, "residual layers in the network");
  train_cmd->add_flag("--no-auto-precompute", [&](int64_t) { config.auto_precompute = false; },
                      "fail instead of computing missing caches");

  MatchOpts match_opts;
  auto add_match_opts = [&](CLI::App* cmd, bool force_refine) {
    cmd->add_option("source", match_opts.source, "source mesh")->required();
    cmd->add_option("target", match_opts.target, "target mesh")->required();
    add_shape_opts(cmd);
    cmd->add_option("--checkpoint", match_opts.checkpoint, "trained network checkpoint");
    cmd->add_flag("--axiomatic", match_opts.axiomatic,
                  "solve on the raw descriptors (no learned transform)");
    cmd->add_option("--alpha", match_opts.alpha,
                    "Laplacian-commutativity weight for the regularized solve");
    cmd->add_flag("--direction", match_opts.reverse, "flip the pair (match target to source)");
    if (!force_refine) cmd->add_flag("--refine", match_opts.refine, "ICP refinement");
    cmd->add_flag("--no-auto-precompute", [&](int64_t) { config.auto_precompute = false; },
                  "fail instead of computing missing caches");
  };
  auto* match_cmd = app.add_subcommand("match", "compute a functional map and pointwise map");
  add_match_opts(match_cmd, false);
  auto* refine_cmd = app.add_subcommand("refine", "match with ICP refinement");
  add_match_opts(refine_cmd, true);

  std::string eval_map, eval_gt, eval_mesh;
  auto* eval_cmd = app.add_subcommand("eval", "geodesic-error report for a pointwise map");
  eval_cmd->add_option("--map", eval_map, "computed point map")->required();
  eval_cmd->add_option("--gt", eval_gt, "ground-truth point map")->required();
  eval_cmd->add_option("--source-mesh", eval_mesh, "mesh the map points into")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!config_path.empty()) {
      PipelineConfig from_file;
      from_file.train.seed = config.train.seed;
      load_config_file(config_path, from_file);
      // Command-line shape lists take precedence over the config file.
      if (config.shapes.empty()) config.shapes = from_file.shapes;
      if (!precompute->count("--k") && !train_cmd->count("--k")) config.k = from_file.k;
      if (config.descriptor == "shot") config.descriptor = from_file.descriptor;
      if (config.shot_radius == 0.0) config.shot_radius = from_file.shot_radius;
      config.hks_times = from_file.hks_times;
      config.descriptor_files = from_file.descriptor_files;
      config.pairs = from_file.pairs;
      if (!app.count("--out")) config.out = from_file.out;
      uint64_t seed = config.train.seed;
      auto auto_pre = config.auto_precompute;
      TrainConfig merged = from_file.train;
      if (train_cmd->count("--iterations")) merged.iterations = config.train.iterations;
      if (train_cmd->count("--batch")) merged.batch_pairs = config.train.batch_pairs;
      if (train_cmd->count("--lr")) merged.learning_rate = config.train.learning_rate;
      if (train_cmd->count("--points")) merged.points_per_shape = config.train.points_per_shape;
      if (train_cmd->count("--e4-fraction"))
        merged.e4_descriptor_fraction = config.train.e4_descriptor_fraction;
      if (train_cmd->count("--layers")) merged.layers = config.train.layers;
      config.train = merged;
      config.train.seed = seed;
      config.auto_precompute = auto_pre;
    }
    if (threads > 0) Eigen::setNbThreads(threads);

    if (precompute->parsed()) return cmd_precompute(config);
    if (train_cmd->parsed()) return cmd_train(config);
    if (match_cmd->parsed()) return cmd_match(config, match_opts);
    if (refine_cmd->parsed()) {
      match_opts.refine = true;
      return cmd_match(config, match_opts);
    }
    if (eval_cmd->parsed()) return cmd_eval(config, eval_map, eval_gt, eval_mesh);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.kind()) {
      case ErrorKind::usage: return 2;
      case ErrorKind::data: return 3;
      case ErrorKind::numerical: return 4;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
