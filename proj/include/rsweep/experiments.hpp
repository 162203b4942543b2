#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rsweep/metrics.hpp"
#include "rsweep/sweeping.hpp"
#include "rsweep/synth.hpp"

namespace rsweep {

struct LossVariant {
  LossKind kind = LossKind::Reparam;
  double mu = 0.0;  // combined only

  std::string label() const;
};

// Grid for the noise-robustness harness: every (sigma, model, loss, seed)
// combination yields one reconstruction and one CSV row.
struct ExperimentPlan {
  std::vector<double> noise_sigmas_deg;
  double reflectance_sigma_frac = 0.0;
  std::vector<PatchModel> models;
  std::vector<LossVariant> losses;
  std::vector<uint64_t> seeds;
  std::string output_dir;
};

void validate_plan(const ExperimentPlan& plan);

struct SweepRow {
  std::string experiment_id;
  double noise_sigma_deg = 0.0;
  std::string patch_model;
  std::string loss;
  double mu = 0.0;
  double mean_depth_err = 0.0;
  double median = 0.0;
  double std_dev = 0.0;
  double valid_frac = 0.0;
  double runtime_ms = 0.0;
  std::string error;  // empty on success
};

std::string sweep_rows_csv(const std::vector<SweepRow>& rows);

// Depth range derived from the benchmark: camera distance +/- 3x the
// surface height span.
std::pair<double, double> default_z_range(double camera_distance, double height_span);

// Applies per-view noise (normal rotation + reflectance) to clean views;
// stream seeds are derived from (seed, view index).
std::vector<ViewMaps> apply_noise(const std::vector<ViewMaps>& clean, double normal_sigma_deg,
                                  double reflectance_sigma_frac, uint64_t seed);

// Runs the full grid against the clean benchmark. Reconstruction errors are
// reported per-row in the `error` column instead of aborting the grid.
// Wall-clock timing is recorded only when `timing` is set, keeping the
// default output deterministic.
std::vector<SweepRow> run_noise_sweep(const ExperimentPlan& plan, const Benchmark& bench,
                                      const SweepConfig& base_config, bool timing = false);

}  // namespace rsweep
