// radiant-sweep: depth-map reconstruction from multi-view normal and
// reflectance maps via radiance re-parametrization and surface sweeping.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>

#include "rsweep/experiments.hpp"
#include "rsweep/io.hpp"
#include "rsweep/metrics.hpp"
#include "rsweep/parallel.hpp"
#include "rsweep/reparam.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rsweep;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitDegraded = 4;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::IoFailure:
    case ErrorCode::TruncatedData:
    case ErrorCode::MalformedHeader:
    case ErrorCode::UnsupportedScale:
    case ErrorCode::FiniteRequired:
      return kExitIo;
    default:
      return kExitUsage;
  }
}

struct CommonOptions {
  int threads = -1;  // <= 0: RADIANT_SWEEP_THREADS or 1
  std::string kernel = "auto";
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--threads", opts.threads,
                  "Worker threads (default: RADIANT_SWEEP_THREADS or 1)");
  cmd->add_option("--kernel", opts.kernel, "Cost kernel: auto|scalar|avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
}

BenchmarkConfig select_config(const std::string& profile, const std::string& config_path,
                              uint64_t seed_override, bool has_seed) {
  BenchmarkConfig config;
  if (!config_path.empty())
    config = read_benchmark_config(config_path);
  else if (profile == "small")
    config = small_benchmark_config();
  else
    config = default_benchmark_config();
  if (has_seed) config.seed = seed_override;
  return config;
}

int cmd_synth(const std::string& profile, const std::string& config_path,
              uint64_t seed_override, bool has_seed, const std::string& out_dir,
              const CommonOptions& common) {
  const BenchmarkConfig config = select_config(profile, config_path, seed_override, has_seed);
  const Benchmark bench = generate_benchmark(config, resolve_thread_count(common.threads));
  write_benchmark(out_dir, bench);
  std::printf("wrote %d views to %s\n", config.view_count, out_dir.c_str());
  return kExitOk;
}

std::pair<double, double> parse_zrange(const std::string& text) {
  const size_t colon = text.find(':');
  if (colon == std::string::npos)
    throw Error(ErrorCode::ConfigError, "zrange must be min:max");
  try {
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "zrange must be min:max");
  }
}

void require_normal_maps(const BenchmarkManifest& manifest) {
  for (const std::string& f : manifest.files)
    if (f.rfind("normals_", 0) == 0) return;
  throw Error(ErrorCode::ConfigError, "benchmark lacks normal maps");
}

json summary_to_json(const ErrorSummary& e) {
  return json{{"mean", e.mean},
              {"median", e.median},
              {"std", e.std_dev},
              {"count", e.count},
              {"excluded", e.excluded},
              {"units", e.units}};
}

int cmd_reconstruct(const std::string& benchmark_dir, const std::string& out_dir,
                    const std::string& model, const std::string& loss, double mu, bool has_mu,
                    int patch_radius, const std::string& zrange, int coarse_samples,
                    double refine_tol, size_t ref_index, const CommonOptions& common) {
  if (loss == "combined" && !has_mu)
    throw Error(ErrorCode::ConfigError, "--loss combined requires --mu");

  const BenchmarkManifest manifest = read_manifest(benchmark_dir);
  require_normal_maps(manifest);
  const LoadedBenchmark loaded = read_benchmark(benchmark_dir);
  if (ref_index >= loaded.views.size())
    throw Error(ErrorCode::ConfigError, "reference view index out of range");

  SweepConfig config;
  config.model = parse_patch_model(model);
  config.loss = loss == "combined" ? LossKind::Combined : LossKind::Reparam;
  config.mu = mu;
  config.patch_radius = patch_radius;
  config.coarse_samples = coarse_samples;
  config.refine_tol = refine_tol;
  config.threads = resolve_thread_count(common.threads);
  config.isa = kernels::parse_isa(common.kernel);
  if (!zrange.empty()) {
    std::tie(config.z_min, config.z_max) = parse_zrange(zrange);
  } else {
    std::tie(config.z_min, config.z_max) =
        default_z_range(manifest.camera_distance, manifest.height_span);
  }

  std::vector<View> views;
  for (size_t i = 0; i < loaded.views.size(); ++i)
    views.push_back(View{loaded.views[i], loaded.poses[i], loaded.intrinsics});

  const auto start = std::chrono::steady_clock::now();
  const DepthResult result = reconstruct_depth_map(ref_index, views, config);
  const double runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();

  fs::create_directories(out_dir);
  write_pfm(fs::path(out_dir) / "depth.pfm", to_pfm(result.depth));
  write_pfm(fs::path(out_dir) / "cost.pfm", to_pfm(result.cost));

  // Back-project valid pixels into a world-frame cloud.
  const View& ref = views[ref_index];
  std::vector<Vec3> points;
  std::vector<double> quality;
  size_t masked = 0, valid = 0;
  for (int y = 0; y < result.depth.height; ++y) {
    for (int x = 0; x < result.depth.width; ++x) {
      const size_t i = static_cast<size_t>(y) * result.depth.width + x;
      if (ref.maps.mask[i]) ++masked;
      if (!result.valid[i]) continue;
      ++valid;
      const double z = result.depth.at(x, y);
      points.push_back(ref.pose.to_world(backproject_fronto(
          ref.intrinsics, {static_cast<double>(x), static_cast<double>(y)}, z)));
      quality.push_back(result.cost.at(x, y));
    }
  }
  write_ply_points(fs::path(out_dir) / "points.ply", points, &quality);

  json summary;
  summary["model"] = model;
  summary["loss"] = loss;
  if (loss == "combined") summary["mu"] = mu;
  summary["z_range"] = {config.z_min, config.z_max};
  summary["patch_radius"] = config.patch_radius;
  summary["coarse_samples"] = config.coarse_samples;
  summary["refine_tol"] = config.refine_tol;
  summary["kernel"] = kernels::select(config.isa).name;
  summary["threads"] = config.threads;
  summary["masked_pixels"] = masked;
  summary["valid_pixels"] = valid;
  summary["valid_frac"] = masked > 0 ? double(valid) / double(masked) : 0.0;
  summary["runtime_ms"] = runtime_ms;
  if (loaded.views[ref_index].gt_depth) {
    const ErrorSummary err =
        mean_depth_error(result, *loaded.views[ref_index].gt_depth, ref.maps.mask);
    summary["mean_depth_err"] = summary_to_json(err);
  }
  std::ofstream(fs::path(out_dir) / "summary.json") << summary.dump(2) << "\n";
  std::printf("valid %zu/%zu pixels, %.1f ms\n", valid, masked, runtime_ms);

  if (masked > 0 && valid * 2 < masked) {
    std::fprintf(stderr, "reconstruction degraded: fewer than 50%% of pixels valid\n");
    return kExitDegraded;
  }
  return kExitOk;
}

int cmd_evaluate(const std::string& est_dir, const std::string& benchmark_dir,
                 size_t ref_index, const std::string& out_path) {
  const LoadedBenchmark loaded = read_benchmark(benchmark_dir);
  if (ref_index >= loaded.views.size())
    throw Error(ErrorCode::ConfigError, "reference view index out of range");
  const ViewMaps& ref = loaded.views[ref_index];
  if (!ref.gt_depth) throw Error(ErrorCode::ConfigError, "benchmark has no ground truth");

  DepthResult est;
  est.depth = from_pfm(read_pfm(fs::path(est_dir) / "depth.pfm"));
  est.cost = Image(est.depth.width, est.depth.height, 1, 0.0f);
  est.valid.resize(est.depth.pixel_count());
  for (int y = 0; y < est.depth.height; ++y)
    for (int x = 0; x < est.depth.width; ++x)
      est.valid[static_cast<size_t>(y) * est.depth.width + x] =
          std::isfinite(est.depth.at(x, y)) ? 1 : 0;

  const ErrorSummary err = mean_depth_error(est, *ref.gt_depth, ref.mask);
  json out;
  out["mean_depth_err"] = summary_to_json(err);
  out["valid_frac"] =
      static_cast<double>(err.count) / static_cast<double>(err.count + err.excluded);
  const std::string text = out.dump(2);
  std::printf("%s\n", text.c_str());
  if (!out_path.empty()) std::ofstream(out_path) << text << "\n";
  return kExitOk;
}

ExperimentPlan plan_from_json(const json& j) {
  ExperimentPlan plan;
  if (!j.contains("noise_sigmas_deg"))
    throw Error(ErrorCode::ConfigError, "plan is missing noise_sigmas_deg");
  plan.noise_sigmas_deg = j.at("noise_sigmas_deg").get<std::vector<double>>();
  plan.reflectance_sigma_frac = j.value("reflectance_sigma_frac", 0.0);
  for (const std::string& name :
       j.value("models", std::vector<std::string>{"fronto", "slanted", "surface"}))
    plan.models.push_back(parse_patch_model(name));
  if (j.contains("losses")) {
    for (const json& loss : j.at("losses")) {
      const std::string type = loss.value("type", "reparam");
      if (type == "reparam") {
        plan.losses.push_back(LossVariant{LossKind::Reparam, 0.0});
      } else if (type == "combined") {
        if (!loss.contains("mus"))
          throw Error(ErrorCode::ConfigError, "combined loss requires a mu grid");
        for (double mu : loss.at("mus").get<std::vector<double>>())
          plan.losses.push_back(LossVariant{LossKind::Combined, mu});
      } else {
        throw Error(ErrorCode::ConfigError, "unknown loss type '" + type + "'");
      }
    }
  } else {
    plan.losses.push_back(LossVariant{LossKind::Reparam, 0.0});
  }
  plan.seeds = j.value("seeds", std::vector<uint64_t>{1});
  return plan;
}

int cmd_noise_sweep(const std::string& plan_path, const std::string& out_dir, bool timing,
                    const CommonOptions& common) {
  std::ifstream in(plan_path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + plan_path);
  json plan_json;
  try {
    in >> plan_json;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("invalid plan json: ") + e.what());
  }

  ExperimentPlan plan = plan_from_json(plan_json);
  plan.output_dir = out_dir;
  validate_plan(plan);

  const int threads = resolve_thread_count(common.threads);
  Benchmark bench;
  if (plan_json.contains("benchmark") && plan_json.at("benchmark").contains("dir")) {
    bench = to_benchmark(read_benchmark(plan_json.at("benchmark").at("dir").get<std::string>()));
  } else if (plan_json.contains("benchmark") && plan_json.at("benchmark").contains("config")) {
    bench = generate_benchmark(
        read_benchmark_config(plan_json.at("benchmark").at("config").get<std::string>()),
        threads);
  } else if (plan_json.contains("benchmark") && plan_json.at("benchmark").contains("profile")) {
    const std::string profile = plan_json.at("benchmark").at("profile").get<std::string>();
    bench = generate_benchmark(
        profile == "small" ? small_benchmark_config() : default_benchmark_config(), threads);
  } else {
    bench = generate_benchmark(small_benchmark_config(), threads);
  }

  SweepConfig config;
  std::tie(config.z_min, config.z_max) =
      default_z_range(bench.camera_distance, bench.height_span);
  if (plan_json.contains("sweep")) {
    const json s = plan_json.at("sweep");
    config.patch_radius = s.value("patch_radius", config.patch_radius);
    config.coarse_samples = s.value("coarse_samples", config.coarse_samples);
    config.refine_tol = s.value("refine_tol", config.refine_tol);
    config.min_valid_views = s.value("min_valid_views", config.min_valid_views);
  }
  config.threads = threads;
  config.isa = kernels::parse_isa(common.kernel);
  validate_sweep_config(config);

  const std::vector<SweepRow> rows = run_noise_sweep(plan, bench, config, timing);
  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / "results.csv") << sweep_rows_csv(rows);
  std::printf("wrote %zu rows to %s/results.csv\n", rows.size(), out_dir.c_str());
  return kExitOk;
}

struct PropertyResult {
  std::string name;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

int cmd_reparam_check(int trials, uint64_t seed, bool inject_singular) {
  if (trials < 1) throw Error(ErrorCode::ConfigError, "--trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);

  auto random_unit = [&]() {
    Vec3 v;
    do {
      v = Vec3(unit(rng), unit(rng), unit(rng));
    } while (v.norm() < 1e-3);
    return Vec3(v.normalized());
  };
  auto random_triplet = [&]() {
    while (true) {
      Mat3 rows;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rows(r, c) = unit(rng);
      if (std::abs(rows.determinant()) > 1e-2) return make_light_triplet(rows, 1.0);
    }
  };

  std::vector<PropertyResult> results;

  {
    PropertyResult p{"bijectivity-q1", 0.0, 1e-9, false};
    for (int t = 0; t < trials; ++t) {
      double r_val;
      do {
        r_val = unit01(rng);
      } while (r_val < 0.01);
      const Vec3 n = random_unit();
      LightTriplet L = (t % 2 == 0) ? random_triplet() : optimal_triplet(n);
      if (inject_singular && t == trials / 2) {
        L.matrix.row(2) = L.matrix.row(0) + L.matrix.row(1);
      }
      try {
        const RadianceVec v = render_pbr(ReflectanceVec::gray(r_val), n, L);
        const auto [r_rec, n_rec] = invert_reparam_q1(v, L);
        p.max_residual = std::max(p.max_residual, std::abs(r_rec.values[0] - r_val));
        p.max_residual = std::max(p.max_residual, (n_rec - n).cwiseAbs().maxCoeff());
      } catch (const Error& e) {
        p.max_residual = std::numeric_limits<double>::infinity();
      }
    }
    p.passed = p.max_residual <= p.tolerance;
    results.push_back(p);
  }

  {
    PropertyResult p{"bijectivity-q3", 0.0, 1e-9, false};
    for (int t = 0; t < trials; ++t) {
      ReflectanceVec r = ReflectanceVec::rgb(unit01(rng), unit01(rng), unit01(rng));
      if (r.norm() < 0.01) {
        --t;
        continue;
      }
      const Vec3 n = random_unit();
      const LightTriplet L = (t % 2 == 0) ? random_triplet() : optimal_triplet(n);
      try {
        const RadianceVec v = render_pbr(r, n, L);
        const auto [r_rec, n_rec] = invert_reparam_q3(v, L);
        p.max_residual =
            std::max(p.max_residual, (r_rec.values - r.values).cwiseAbs().maxCoeff());
        p.max_residual = std::max(p.max_residual, (n_rec - n).cwiseAbs().maxCoeff());
      } catch (const Error&) {
        p.max_residual = std::numeric_limits<double>::infinity();
      }
    }
    p.passed = p.max_residual <= p.tolerance;
    results.push_back(p);
  }

  {
    PropertyResult p{"optimal-triplet-orthogonality", 0.0, 1e-10, false};
    const int count = std::min(trials, 1000);
    for (int t = 0; t < count; ++t) {
      const Vec3 n = random_unit();
      const LightTriplet L = optimal_triplet(n, 1.0 + unit01(rng));
      const Mat3 gram = L.matrix * L.matrix.transpose();
      const Mat3 expected = L.intensity * L.intensity * Mat3::Identity();
      p.max_residual = std::max(p.max_residual, (gram - expected).cwiseAbs().maxCoeff());
      for (int k = 0; k < 3; ++k)
        p.max_residual = std::max(
            p.max_residual,
            std::abs(L.matrix.row(k).dot(n) - L.intensity / std::sqrt(3.0)));
    }
    p.passed = p.max_residual <= p.tolerance;
    results.push_back(p);
  }

  {
    PropertyResult p{"supernormal-reduction", 0.0, 0.0, false};
    const int count = std::min(trials, 1000);
    for (int t = 0; t < count; ++t) {
      const Vec3 n = random_unit();
      const RadianceVec v = render_pbr(ReflectanceVec::gray(1.0), n, canonical_triplet());
      for (int k = 0; k < 3; ++k)
        if (std::memcmp(&v.values(k, 0), &n[k], sizeof(double)) != 0)
          p.max_residual = std::max(p.max_residual, std::abs(v.values(k, 0) - n[k]) + 1.0);
    }
    p.passed = p.max_residual == 0.0;
    results.push_back(p);
  }

  {
    PropertyResult p{"embedding-constant-norm", 0.0, 1e-12, false};
    for (int pnorm : {1, 2}) {
      for (int q : {1, 3}) {
        const double expected = std::pow(static_cast<double>(q), 1.0 / pnorm - 1.0);
        const int steps = 10;
        for (int a = 0; a <= steps; ++a) {
          for (int b = 0; b <= (q == 3 ? steps : 0); ++b) {
            for (int c = 0; c <= (q == 3 ? steps : 0); ++c) {
              ReflectanceVec r;
              r.q = q;
              r.values = Vec3(double(a) / steps, double(b) / steps, double(c) / steps);
              const EmbeddedReflectance e = embed_reflectance(r, pnorm);
              double norm = 0.0;
              for (int k = 0; k <= q; ++k)
                norm += pnorm == 1 ? std::abs(e.values[k]) : e.values[k] * e.values[k];
              if (pnorm == 2) norm = std::sqrt(norm);
              p.max_residual = std::max(p.max_residual, std::abs(norm - expected));
            }
          }
        }
      }
    }
    p.passed = p.max_residual <= p.tolerance;
    results.push_back(p);
  }

  bool all_passed = true;
  for (const PropertyResult& p : results) {
    std::printf("%-32s max residual %.3e (tolerance %.1e) %s\n", p.name.c_str(),
                p.max_residual, p.tolerance, p.passed ? "ok" : "FAILED");
    all_passed = all_passed && p.passed;
  }
  if (!all_passed) {
    for (const PropertyResult& p : results)
      if (!p.passed) std::fprintf(stderr, "property failed: %s\n", p.name.c_str());
    return kExitPropertyFailure;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view depth reconstruction from normal and reflectance maps"};
  app.require_subcommand(1);

  CommonOptions common;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark");
  std::string synth_profile = "default", synth_config, synth_out;
  uint64_t synth_seed = 0;
  synth->add_option("--profile", synth_profile, "Built-in config: default|small")
      ->check(CLI::IsMember({"default", "small"}));
  synth->add_option("--config", synth_config, "Generation config JSON (overrides --profile)");
  auto* seed_opt = synth->add_option("--seed", synth_seed, "Seed override");
  synth->add_option("--out", synth_out, "Output directory")->required();
  add_common(synth, common);

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct the reference-view depth map");
  std::string rec_benchmark, rec_out, rec_model = "surface", rec_loss = "reparam", rec_zrange;
  double rec_mu = 0.0, rec_refine_tol = 1e-6;
  int rec_radius = 3, rec_coarse = 256;
  size_t rec_ref = 0;
  rec->add_option("--benchmark", rec_benchmark, "Benchmark directory")->required();
  rec->add_option("--out", rec_out, "Output directory")->required();
  rec->add_option("--model", rec_model, "Patch model: fronto|slanted|surface")
      ->check(CLI::IsMember({"fronto", "slanted", "surface"}));
  rec->add_option("--loss", rec_loss, "Loss: reparam|combined")
      ->check(CLI::IsMember({"reparam", "combined"}));
  auto* mu_opt = rec->add_option("--mu", rec_mu, "Weight of the reflectance term (combined)");
  rec->add_option("--patch-radius", rec_radius, "Patch radius in pixels");
  rec->add_option("--zrange", rec_zrange, "Depth search range min:max");
  rec->add_option("--coarse-samples", rec_coarse, "Coarse depth samples");
  rec->add_option("--refine-tol", rec_refine_tol, "Relative bracket tolerance");
  rec->add_option("--ref", rec_ref, "Reference view index");
  add_common(rec, common);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Compare a reconstruction against ground truth");
  std::string eval_est, eval_benchmark, eval_out;
  size_t eval_ref = 0;
  eval->add_option("--est", eval_est, "Reconstruction output directory")->required();
  eval->add_option("--benchmark", eval_benchmark, "Benchmark directory")->required();
  eval->add_option("--ref", eval_ref, "Reference view index");
  eval->add_option("--out", eval_out, "Also write the JSON report here");

  // noise-sweep
  auto* sweep = app.add_subcommand("noise-sweep", "Run the noise-robustness grid");
  std::string sweep_plan, sweep_out;
  bool sweep_timing = false;
  sweep->add_option("--plan", sweep_plan, "Experiment plan JSON")->required();
  sweep->add_option("--out", sweep_out, "Output directory")->required();
  sweep->add_flag("--timing", sweep_timing,
                  "Record wall-clock runtimes (makes results.csv non-deterministic)");
  add_common(sweep, common);

  // reparam-check
  auto* check = app.add_subcommand("reparam-check", "Run the round-trip property suites");
  int check_trials = 10000;
  uint64_t check_seed = 7;
  bool check_inject = false;
  check->add_option("--trials", check_trials, "Round-trip trials per property");
  check->add_option("--seed", check_seed, "RNG seed");
  auto* inject = check->add_flag("--inject-singular", check_inject,
                                 "Test hook: feed a singular triplet into the suite");
  inject->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth)
      return cmd_synth(synth_profile, synth_config, synth_seed, seed_opt->count() > 0,
                       synth_out, common);
    if (*rec)
      return cmd_reconstruct(rec_benchmark, rec_out, rec_model, rec_loss, rec_mu,
                             mu_opt->count() > 0, rec_radius, rec_zrange, rec_coarse,
                             rec_refine_tol, rec_ref, common);
    if (*eval) return cmd_evaluate(eval_est, eval_benchmark, eval_ref, eval_out);
    if (*sweep) return cmd_noise_sweep(sweep_plan, sweep_out, sweep_timing, common);
    if (*check) return cmd_reparam_check(check_trials, check_seed, check_inject);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
