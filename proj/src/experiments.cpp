#include "rsweep/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "rsweep/error.hpp"
#include "rsweep/rng.hpp"

namespace rsweep {

std::string LossVariant::label() const {
  return kind == LossKind::Reparam ? "reparam" : "combined";
}

void validate_plan(const ExperimentPlan& plan) {
  if (plan.noise_sigmas_deg.empty())
    throw Error(ErrorCode::ConfigError, "noise sigma grid is empty");
  for (double s : plan.noise_sigmas_deg)
    if (!(s >= 0.0)) throw Error(ErrorCode::ConfigError, "noise sigma must be nonnegative");
  if (plan.models.empty()) throw Error(ErrorCode::ConfigError, "model list is empty");
  if (plan.losses.empty()) throw Error(ErrorCode::ConfigError, "loss list is empty");
  if (plan.seeds.empty()) throw Error(ErrorCode::ConfigError, "seed list is empty");
  if (!(plan.reflectance_sigma_frac >= 0.0))
    throw Error(ErrorCode::ConfigError, "reflectance noise must be nonnegative");
}

std::pair<double, double> default_z_range(double camera_distance, double height_span) {
  const double pad = 3.0 * height_span;
  return {std::max(1e-6, camera_distance - pad), camera_distance + pad};
}

std::vector<ViewMaps> apply_noise(const std::vector<ViewMaps>& clean, double normal_sigma_deg,
                                  double reflectance_sigma_frac, uint64_t seed) {
  std::vector<ViewMaps> noisy;
  noisy.reserve(clean.size());
  for (size_t i = 0; i < clean.size(); ++i) {
    NoiseSpec spec;
    spec.normal_sigma_deg = normal_sigma_deg;
    spec.reflectance_sigma_frac = reflectance_sigma_frac;
    spec.seed = hash_mix(seed, i);
    noisy.push_back(add_reflectance_noise(add_normal_noise(clean[i], spec), spec));
  }
  return noisy;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string sweep_rows_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "experiment_id,noise_sigma_deg,patch_model,loss,mu,mean_depth_err,median,std,"
      "valid_frac,runtime_ms,error\n";
  for (const SweepRow& r : rows) {
    out += r.experiment_id + "," + format_double(r.noise_sigma_deg) + "," + r.patch_model +
           "," + r.loss + "," + format_double(r.mu) + "," + format_double(r.mean_depth_err) +
           "," + format_double(r.median) + "," + format_double(r.std_dev) + "," +
           format_double(r.valid_frac) + "," + format_double(r.runtime_ms) + "," + r.error +
           "\n";
  }
  return out;
}

std::vector<SweepRow> run_noise_sweep(const ExperimentPlan& plan, const Benchmark& bench,
                                      const SweepConfig& base_config, bool timing) {
  validate_plan(plan);

  const size_t ref_index = 0;
  std::vector<SweepRow> rows;
  int experiment = 0;
  for (double sigma : plan.noise_sigmas_deg) {
    for (uint64_t seed : plan.seeds) {
      const std::vector<ViewMaps> noisy =
          apply_noise(bench.views, sigma, plan.reflectance_sigma_frac, seed);
      std::vector<View> views;
      views.reserve(noisy.size());
      for (size_t i = 0; i < noisy.size(); ++i)
        views.push_back(View{noisy[i], bench.poses[i], bench.intrinsics});

      for (PatchModel model : plan.models) {
        for (const LossVariant& loss : plan.losses) {
          SweepRow row;
          char id[32];
          std::snprintf(id, sizeof(id), "e%04d_s%llu", experiment++,
                        static_cast<unsigned long long>(seed));
          row.experiment_id = id;
          row.noise_sigma_deg = sigma;
          row.patch_model = patch_model_name(model);
          row.loss = loss.label();
          row.mu = loss.kind == LossKind::Combined ? loss.mu : 0.0;

          SweepConfig config = base_config;
          config.model = model;
          config.loss = loss.kind;
          config.mu = loss.mu;

          const auto start = std::chrono::steady_clock::now();
          try {
            const DepthResult result = reconstruct_depth_map(ref_index, views, config);
            const ViewMaps& ref = bench.views[ref_index];
            const ErrorSummary err = mean_depth_error(result, *ref.gt_depth, ref.mask);
            row.mean_depth_err = err.mean;
            row.median = err.median;
            row.std_dev = err.std_dev;
            row.valid_frac =
                static_cast<double>(err.count) / static_cast<double>(err.count + err.excluded);
          } catch (const Error& e) {
            row.error = error_code_name(e.code());
          }
          if (timing) {
            const auto stop = std::chrono::steady_clock::now();
            row.runtime_ms =
                std::chrono::duration<double, std::milli>(stop - start).count();
          }
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

}  // namespace rsweep
