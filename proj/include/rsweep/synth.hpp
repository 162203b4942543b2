#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "rsweep/geometry.hpp"
#include "rsweep/reparam.hpp"

namespace rsweep {

struct GaussianBump {
  double amplitude = 0.0;  // world length
  double center_x = 0.0;
  double center_y = 0.0;
  double sigma = 1.0;
};

// Height field z(x, y) = base - sum_i a_i exp(-||(x,y)-c_i||^2 / (2 s_i^2))
// over a rectangular support; the bumps dip toward the cameras, which sit
// on the negative-z side looking up.
struct GaussianSurface {
  std::array<GaussianBump, 2> bumps;
  double base_depth = 0.0;
  double support_min_x = -1.0, support_min_y = -1.0;
  double support_max_x = 1.0, support_max_y = 1.0;

  bool in_support(double x, double y) const {
    return x >= support_min_x && x <= support_max_x && y >= support_min_y &&
           y <= support_max_y;
  }
  double height(double x, double y) const;
  Eigen::Vector2d height_gradient(double x, double y) const;
  double min_sigma() const;
  // Difference between the highest and lowest surface z over the support.
  double height_span(int grid = 257) const;
};

// Closed-form surface normal at (x, y): perpendicular to the height-field
// graph and oriented toward the cameras (negative z component).
Vec3 surface_normal(const GaussianSurface& surface, double x, double y);

// Continuous piecewise-linear ramp along x: 4 bands over [x0, x1] with the
// given knot values at the 5 band boundaries.
struct ReflectanceRamp {
  std::array<double, 5> knots{0.2, 0.9, 0.3, 0.75, 0.5};
  double x0 = -1.0;
  double x1 = 1.0;

  double value(double x) const;
};

ReflectanceVec piecewise_linear_reflectance(const ReflectanceRamp& ramp, double x, double y);

// Cameras on a circle around the support centroid: given radius and
// elevation, equally spaced in azimuth over a 72 degree total span, all
// looking at the centroid. Throws InsufficientViews for count < 2.
std::vector<CameraPose> turntable_cameras(int count, double radius, double elevation_deg,
                                          const GaussianSurface& surface);

// Ray-casts the height field: fixed marching steps (<= sigma_min / 4), then
// bisection of the bracketing interval to 1e-10 relative depth. Pixels whose
// rays miss the support are masked out. Threads only affect speed.
ViewMaps render_view(const GaussianSurface& surface, const ReflectanceRamp& reflectance,
                     const CameraPose& pose, const CameraIntrinsics& intr, int threads = 1);

struct NoiseSpec {
  double normal_sigma_deg = 0.0;
  double reflectance_sigma_frac = 0.0;
  uint64_t seed = 0;
};

// Rotates each masked-in normal about a uniformly random perpendicular axis
// by an angle drawn from N(0, sigma). Deterministic per (seed, pixel)
// independent of evaluation order; sigma = 0 returns the input bit-exact.
ViewMaps add_normal_noise(const ViewMaps& maps, const NoiseSpec& spec);

// Additive Gaussian reflectance noise with std = frac * max reflectance
// (max over masked-in texels), clamped to [0, 1].
ViewMaps add_reflectance_noise(const ViewMaps& maps, const NoiseSpec& spec);

// The pinned benchmark configuration. Everything downstream (file names,
// default depth range) derives from this plus a seed.
struct BenchmarkConfig {
  std::string version = "1";
  int width = 256;
  int height = 256;
  double fx = 400.0, fy = 400.0;
  double cx = 127.5, cy = 127.5;
  int view_count = 5;
  double ring_radius = 4.0;
  double elevation_deg = 65.0;
  GaussianSurface surface;
  ReflectanceRamp reflectance;
  uint64_t seed = 1;

  CameraIntrinsics intrinsics() const {
    return CameraIntrinsics{fx, fy, cx, cy, width, height};
  }
};

// The default 256x256 five-view benchmark.
BenchmarkConfig default_benchmark_config();

// Reduced-resolution profile for experiment grids.
BenchmarkConfig small_benchmark_config();

struct Benchmark {
  BenchmarkConfig config;
  CameraIntrinsics intrinsics;
  std::vector<CameraPose> poses;
  std::vector<ViewMaps> views;
  double camera_distance = 0.0;
  double height_span = 0.0;
};

Benchmark generate_benchmark(const BenchmarkConfig& config, int threads = 1);

}  // namespace rsweep
