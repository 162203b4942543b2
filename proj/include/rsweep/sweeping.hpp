#pragma once

#include <optional>
#include <vector>

#include "rsweep/geometry.hpp"
#include "rsweep/kernels.hpp"
#include "rsweep/normal_integration.hpp"

namespace rsweep {

enum class PatchModel { FrontoParallel, Slanted, Surface };

const char* patch_model_name(PatchModel model);
PatchModel parse_patch_model(const std::string& name);

enum class LossKind { Reparam, Combined };

struct SweepConfig {
  double z_min = 0.0;
  double z_max = 0.0;
  int coarse_samples = 256;
  double refine_tol = 1e-6;
  int patch_radius = 3;
  LossKind loss = LossKind::Reparam;
  double mu = 1.0;  // combined loss only
  int min_valid_views = 1;
  PatchModel model = PatchModel::Surface;
  kernels::Isa isa = kernels::Isa::Auto;
  int threads = 1;
};

void validate_sweep_config(const SweepConfig& config);

struct DepthResult {
  Image depth;  // 1 channel, NaN where invalid
  Image cost;   // 1 channel, NaN where invalid
  Mask valid;
};

struct View {
  ViewMaps maps;
  CameraPose pose;
  CameraIntrinsics intrinsics;
};

// Candidate 3D points for every patch member at centre depth z, in the
// reference camera frame. FrontoParallel puts members at constant depth z;
// Slanted intersects member rays with the plane through the centre point
// orthogonal to the centre normal; Surface scales member rays by the
// integrated alphas. Throws RayPlaneParallel / GrazingNormal.
std::vector<Vec3> patch_points(PatchModel model, double z, const Patch& patch,
                               const CameraIntrinsics& intr);

// Builds the reference patch at an integer centre pixel: masked-in members
// inside the window and raster, normals rotated into the reference camera
// frame. Returns nullopt when the centre itself is masked out.
std::optional<Patch> make_patch(const View& ref, const PixelI& center, int radius);

// Radiance-consistency cost (mean over valid terms) at depth hypothesis z.
// Control samples are re-rendered under the reference pixels' triplets.
// Throws TooFewValidViews.
double reparam_cost(double z, const Patch& patch, const View& ref,
                    const std::vector<View>& controls, PatchModel model,
                    const SweepConfig& config);

// Two-term baseline: (1 - n1.ni)^2 + mu * ||r1 - ri||^2, same validity
// handling and normalization.
double combined_cost(double z, const Patch& patch, const View& ref,
                     const std::vector<View>& controls, PatchModel model, double mu,
                     const SweepConfig& config);

struct SweepResult {
  double z = 0.0;
  double cost = 0.0;
};

// Coarse uniform scan over [z_min, z_max] followed by golden-section
// refinement in the bracket around the best sample. Ties break toward the
// smaller depth. Throws NoValidHypothesis when every coarse sample fails.
SweepResult sweep_pixel(const PixelI& center, const SweepConfig& config, const View& ref,
                        const std::vector<View>& controls);

// Runs sweep_pixel over every masked-in reference pixel. Requires >= 2
// views (InsufficientViews). Deterministic for fixed config regardless of
// the thread count.
DepthResult reconstruct_depth_map(size_t ref_index, const std::vector<View>& views,
                                  const SweepConfig& config);

}  // namespace rsweep
