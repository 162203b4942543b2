#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "rsweep/metrics.hpp"
#include "rsweep/sweeping.hpp"
#include "rsweep/synth.hpp"
#include "rsweep/experiments.hpp"
#include "test_helpers.hpp"

using namespace rsweep;
using namespace rsweep::testing;

namespace {

// Shared miniature benchmark (32x32, 3 views) for behavioural tests.
const Benchmark& mini_benchmark() {
  static const Benchmark bench = [] {
    BenchmarkConfig config = default_benchmark_config();
    config.width = 32;
    config.height = 32;
    config.fx = config.fy = 50.0;
    config.cx = config.cy = 15.5;
    config.view_count = 3;
    return generate_benchmark(config);
  }();
  return bench;
}

// Finer fixture (96x96) for accuracy-flavoured checks; interpolation error
// shrinks with resolution, so tolerances here are discretization-scaled.
// The full-resolution exactness claims run in the acceptance suite.
const Benchmark& fine_benchmark() {
  static const Benchmark bench = [] {
    BenchmarkConfig config = default_benchmark_config();
    config.width = 96;
    config.height = 96;
    config.fx = config.fy = 150.0;
    config.cx = config.cy = 47.5;
    config.view_count = 3;
    return generate_benchmark(config);
  }();
  return bench;
}

std::vector<View> benchmark_views(const Benchmark& bench) {
  std::vector<View> views;
  for (size_t i = 0; i < bench.views.size(); ++i)
    views.push_back(View{bench.views[i], bench.poses[i], bench.intrinsics});
  return views;
}

SweepConfig mini_config(const Benchmark& bench) {
  SweepConfig config;
  std::tie(config.z_min, config.z_max) =
      default_z_range(bench.camera_distance, bench.height_span);
  config.coarse_samples = 64;
  config.patch_radius = 2;
  return config;
}

// Sphere fixture shared with the integration tests.
struct SphereOracle {
  double z0 = 12.0;
  double radius = 10.0;

  double depth(const CameraIntrinsics& intr, double u, double v) const {
    const Vec3 d = intr.ray_dir({u, v});
    const Vec3 c(0, 0, z0);
    const double a = d.squaredNorm();
    const double b = d.dot(c);
    const double disc = b * b - a * (c.squaredNorm() - radius * radius);
    return (b - std::sqrt(disc)) / a;
  }
  Vec3 normal(const CameraIntrinsics& intr, double u, double v) const {
    const Vec3 d = intr.ray_dir({u, v});
    return (depth(intr, u, v) * d - Vec3(0, 0, z0)) / radius;
  }
  // Unsigned distance from a point to the sphere surface.
  double distance(const Vec3& p) const {
    return std::abs((p - Vec3(0, 0, z0)).norm() - radius);
  }
};

Patch sphere_patch(const CameraIntrinsics& intr, const SphereOracle& sphere,
                   const PixelI& center, int radius) {
  Patch patch;
  patch.center = center;
  patch.radius = radius;
  for (int y = center.y - radius; y <= center.y + radius; ++y) {
    for (int x = center.x - radius; x <= center.x + radius; ++x) {
      if (x == center.x && y == center.y)
        patch.center_index = static_cast<int>(patch.pixels.size());
      patch.pixels.push_back({x, y});
      patch.normals.push_back(sphere.normal(intr, x, y));
    }
  }
  return patch;
}

}  // namespace

TEST_CASE("patch_points: constant alpha makes Surface equal FrontoParallel") {
  const CameraIntrinsics intr = simple_intrinsics();
  Patch patch;
  patch.center = {50, 50};
  patch.radius = 1;
  for (int y = 49; y <= 51; ++y)
    for (int x = 49; x <= 51; ++x) {
      if (x == 50 && y == 50) patch.center_index = static_cast<int>(patch.pixels.size());
      patch.pixels.push_back({x, y});
      patch.normals.push_back(Vec3(0, 0, -1));  // alpha = 1 exactly
    }
  const auto fronto = patch_points(PatchModel::FrontoParallel, 2.0, patch, intr);
  const auto surface = patch_points(PatchModel::Surface, 2.0, patch, intr);
  for (size_t j = 0; j < fronto.size(); ++j)
    CHECK((fronto[j] - surface[j]).norm() == 0.0);
}

TEST_CASE("patch_points: Slanted and Surface coincide on a plane") {
  const CameraIntrinsics intr = simple_intrinsics(500.0, 200);
  const Vec3 n = Vec3(std::sin(0.3), 0.0, -std::cos(0.3)).normalized();
  Patch patch;
  patch.center = {110, 95};
  patch.radius = 3;
  for (int y = 92; y <= 98; ++y)
    for (int x = 107; x <= 113; ++x) {
      if (x == 110 && y == 95) patch.center_index = static_cast<int>(patch.pixels.size());
      patch.pixels.push_back({x, y});
      patch.normals.push_back(n);
    }
  const auto slanted = patch_points(PatchModel::Slanted, 1.0, patch, intr);
  const auto surface = patch_points(PatchModel::Surface, 1.0, patch, intr);
  const auto fronto = patch_points(PatchModel::FrontoParallel, 1.0, patch, intr);
  double max_ss = 0.0, max_sf = 0.0;
  for (size_t j = 0; j < slanted.size(); ++j) {
    max_ss = std::max(max_ss, (slanted[j] - surface[j]).norm());
    max_sf = std::max(max_sf, (slanted[j] - fronto[j]).norm());
  }
  CHECK(max_ss < 1e-9);
  CHECK(max_sf > 1e-4);  // the plane is not fronto-parallel
}

TEST_CASE("patch_points: sphere cap orders the models by fidelity") {
  const CameraIntrinsics intr = simple_intrinsics(100.0, 100);
  const SphereOracle sphere;
  const Patch patch = sphere_patch(intr, sphere, {62, 41}, 5);
  const double z = sphere.depth(intr, patch.center.x, patch.center.y);

  auto worst_distance = [&](PatchModel model) {
    double worst = 0.0;
    for (const Vec3& p : patch_points(model, z, patch, intr))
      worst = std::max(worst, sphere.distance(p));
    return worst;
  };
  const double d_surface = worst_distance(PatchModel::Surface);
  const double d_slanted = worst_distance(PatchModel::Slanted);
  const double d_fronto = worst_distance(PatchModel::FrontoParallel);
  CHECK(d_surface < d_slanted);
  CHECK(d_slanted < d_fronto);
}

TEST_CASE("reparam_cost: identical control view costs zero at any depth") {
  const Benchmark& bench = mini_benchmark();
  const std::vector<View> views = benchmark_views(bench);
  const SweepConfig config = mini_config(bench);

  const View& ref = views[0];
  const std::vector<View> controls{views[0]};  // same pose, same maps
  const std::optional<Patch> patch = make_patch(ref, {16, 16}, 2);
  REQUIRE(patch);
  for (double z : {config.z_min, 0.5 * (config.z_min + config.z_max), config.z_max}) {
    const double c =
        reparam_cost(z, *patch, ref, controls, PatchModel::FrontoParallel, config);
    CHECK(c < 1e-20);
  }
}

TEST_CASE("reparam_cost: near zero at ground truth with the Surface model") {
  const Benchmark& bench = fine_benchmark();
  const std::vector<View> views = benchmark_views(bench);
  const SweepConfig config = mini_config(bench);
  const View& ref = views[0];
  const std::vector<View> controls(views.begin() + 1, views.end());

  int tested = 0;
  for (int y = 20; y < 76 && tested < 16; y += 9) {
    for (int x = 20; x < 76 && tested < 16; x += 9) {
      if (!ref.maps.masked_in(x, y)) continue;
      const std::optional<Patch> patch = make_patch(ref, {x, y}, config.patch_radius);
      if (!patch || patch->pixels.size() < 25) continue;
      const double z_gt = ref.maps.gt_depth->at(x, y);
      const double c = reparam_cost(z_gt, *patch, ref, controls, PatchModel::Surface, config);
      CHECK(c < 5e-5);  // bilinear interpolation floor at 96x96
      // Displacing the depth by 10% must strictly increase the cost.
      const double c_off =
          reparam_cost(z_gt * 1.1, *patch, ref, controls, PatchModel::Surface, config);
      CHECK(c_off > c);
      ++tested;
    }
  }
  CHECK(tested > 0);
}

TEST_CASE("combined_cost: near zero at ground truth, affine in mu") {
  const Benchmark& bench = fine_benchmark();
  const std::vector<View> views = benchmark_views(bench);
  const SweepConfig config = mini_config(bench);
  const View& ref = views[0];
  const std::vector<View> controls(views.begin() + 1, views.end());

  const std::optional<Patch> patch = make_patch(ref, {48, 48}, 2);
  REQUIRE(patch);
  const double z_gt = ref.maps.gt_depth->at(48, 48);
  CHECK(combined_cost(z_gt, *patch, ref, controls, PatchModel::Surface, 1.0, config) < 5e-5);

  // mu = 0 ignores reflectance entirely.
  const double z = z_gt * 1.05;
  const double c0 = combined_cost(z, *patch, ref, controls, PatchModel::Slanted, 0.0, config);
  std::vector<View> recolored = controls;
  for (View& view : recolored)
    for (float& v : view.maps.reflectance.data) v = std::min(1.0f, v * 0.35f + 0.1f);
  const double c0_recolored =
      combined_cost(z, *patch, ref, recolored, PatchModel::Slanted, 0.0, config);
  CHECK(c0 == c0_recolored);

  const double c1 = combined_cost(z, *patch, ref, controls, PatchModel::Slanted, 1.0, config);
  const double c10 = combined_cost(z, *patch, ref, controls, PatchModel::Slanted, 10.0, config);
  CHECK(c10 == doctest::Approx(c0 + 10.0 * (c1 - c0)).epsilon(1e-9));
}

TEST_CASE("sweep_pixel: recovers ground truth depth on noiseless data") {
  const Benchmark& bench = mini_benchmark();
  const std::vector<View> views = benchmark_views(bench);
  SweepConfig config = mini_config(bench);
  config.model = PatchModel::Surface;

  const View& ref = views[0];
  const std::vector<View> controls(views.begin() + 1, views.end());
  const double z_gt = ref.maps.gt_depth->at(16, 16);
  const SweepResult r = sweep_pixel({16, 16}, config, ref, controls);
  CHECK(std::abs(r.z - z_gt) / z_gt < 10 * config.refine_tol);
}

TEST_CASE("sweep_pixel: ground truth outside the range clamps to the best sample") {
  const Benchmark& bench = mini_benchmark();
  const std::vector<View> views = benchmark_views(bench);
  SweepConfig config = mini_config(bench);
  config.model = PatchModel::Surface;

  const View& ref = views[0];
  const std::vector<View> controls(views.begin() + 1, views.end());
  const double z_gt = ref.maps.gt_depth->at(16, 16);
  config.z_min = z_gt * 1.05;
  config.z_max = z_gt * 1.30;
  const SweepResult r = sweep_pixel({16, 16}, config, ref, controls);
  // Cost decreases toward the lower edge; the result stays in range, near it.
  CHECK(r.z >= config.z_min);
  CHECK(r.z <= config.z_min + (config.z_max - config.z_min) / (config.coarse_samples - 1));
}

TEST_CASE("sweep_pixel: constant cost breaks ties toward the smallest depth") {
  // Constant rasters make the cost exactly flat wherever the projections
  // stay in bounds.
  const Vec3 n = Vec3(0.1, 0.0, -1.0).normalized();
  ViewMaps maps = constant_maps(64, 64, n, 0.5);
  maps.gt_depth = Image(64, 64, 1, 2.0f);

  View ref{maps, CameraPose{}, simple_intrinsics(100.0, 64)};
  CameraPose control_pose;
  control_pose.translation = Vec3(0.02, 0.0, 0.0);
  std::vector<View> controls{View{maps, control_pose, simple_intrinsics(100.0, 64)}};

  SweepConfig config;
  config.z_min = 1.9;
  config.z_max = 2.1;
  config.coarse_samples = 32;
  config.patch_radius = 1;
  config.model = PatchModel::FrontoParallel;
  const SweepResult r = sweep_pixel({32, 32}, config, ref, controls);
  CHECK(r.z == config.z_min);
}

TEST_CASE("sweep_pixel: empty depth range errors out") {
  const Benchmark& bench = mini_benchmark();
  const std::vector<View> views = benchmark_views(bench);
  SweepConfig config = mini_config(bench);
  config.z_min = 1e-4;
  config.z_max = 2e-4;  // far in front of the surface; everything projects off-raster
  const View& ref = views[0];
  const std::vector<View> controls(views.begin() + 1, views.end());
  CHECK_THROWS_AS(sweep_pixel({16, 16}, config, ref, controls), Error);
}

TEST_CASE("reconstruct_depth_map: masked pixels, validity, and errors") {
  const Benchmark& bench = mini_benchmark();
  const std::vector<View> views = benchmark_views(bench);
  SweepConfig config = mini_config(bench);
  config.model = PatchModel::Surface;

  const DepthResult result = reconstruct_depth_map(0, views, config);
  const ViewMaps& ref = bench.views[0];
  size_t valid = 0;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const size_t i = static_cast<size_t>(y) * 32 + x;
      if (!ref.mask[i]) {
        CHECK(std::isnan(result.depth.at(x, y)));
        CHECK(result.valid[i] == 0);
      }
      if (result.valid[i]) {
        ++valid;
        CHECK(result.depth.at(x, y) >= config.z_min);
        CHECK(result.depth.at(x, y) <= config.z_max);
        CHECK(std::isfinite(result.cost.at(x, y)));
      }
    }
  }
  CHECK(valid > 100);

  const ErrorSummary err = mean_depth_error(result, *ref.gt_depth, ref.mask);
  CHECK(err.mean < 1e-3);  // 32x32 mini benchmark, surface model

  CHECK_THROWS_AS(reconstruct_depth_map(0, {views[0]}, config), Error);
}

TEST_CASE("reconstruct_depth_map: deterministic across runs and thread counts") {
  const Benchmark& bench = mini_benchmark();
  const std::vector<View> views = benchmark_views(bench);
  SweepConfig config = mini_config(bench);
  config.model = PatchModel::Slanted;

  config.threads = 1;
  const DepthResult a = reconstruct_depth_map(0, views, config);
  const DepthResult b = reconstruct_depth_map(0, views, config);
  config.threads = 3;
  const DepthResult c = reconstruct_depth_map(0, views, config);

  REQUIRE(a.depth.data.size() == b.depth.data.size());
  CHECK(std::memcmp(a.depth.data.data(), b.depth.data.data(),
                    a.depth.data.size() * sizeof(float)) == 0);
  CHECK(std::memcmp(a.depth.data.data(), c.depth.data.data(),
                    a.depth.data.size() * sizeof(float)) == 0);
  CHECK(std::memcmp(a.cost.data.data(), c.cost.data.data(),
                    a.cost.data.size() * sizeof(float)) == 0);
  CHECK(a.valid == c.valid);
}

TEST_CASE("reparam cost at ground truth is zero for any triplet phase") {
  // The loss compares radiances rendered under the same per-pixel triplet,
  // so consistent data costs zero no matter how the tangent frames fall.
  // Rotating the whole world re-derives every triplet in a different frame
  // while keeping the data consistent; the cost must stay at zero.
  const Benchmark& bench = mini_benchmark();
  const SweepConfig config = mini_config(bench);
  std::mt19937_64 rng(47);

  for (int trial = 0; trial < 3; ++trial) {
    const Mat3 W = random_rotation(rng);
    std::vector<View> views = benchmark_views(bench);
    for (View& view : views) {
      view.pose.rotation = view.pose.rotation * W.transpose();
      view.pose.translation = view.pose.translation;  // camera-frame depth unchanged
      Image& normals = view.maps.normals;
      for (int y = 0; y < normals.height; ++y) {
        for (int x = 0; x < normals.width; ++x) {
          const Vec3 n(normals.at(x, y, 0), normals.at(x, y, 1), normals.at(x, y, 2));
          const Vec3 rotated = W * n;
          for (int c = 0; c < 3; ++c) normals.at(x, y, c) = static_cast<float>(rotated[c]);
        }
      }
    }
    const View& ref = views[0];
    const std::vector<View> controls(views.begin() + 1, views.end());
    const std::optional<Patch> patch = make_patch(ref, {16, 16}, 2);
    REQUIRE(patch);
    const double z_gt = ref.maps.gt_depth->at(16, 16);
    const double c = reparam_cost(z_gt, *patch, ref, controls, PatchModel::Surface, config);
    CHECK(c < 1e-6);
  }
}
