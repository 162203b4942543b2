#include "rsweep/synth.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "rsweep/error.hpp"
#include "rsweep/parallel.hpp"
#include "rsweep/rng.hpp"

namespace rsweep {

double GaussianSurface::height(double x, double y) const {
  double z = base_depth;
  for (const GaussianBump& b : bumps) {
    const double dx = x - b.center_x;
    const double dy = y - b.center_y;
    z -= b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
  }
  return z;
}

Eigen::Vector2d GaussianSurface::height_gradient(double x, double y) const {
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (const GaussianBump& b : bumps) {
    const double dx = x - b.center_x;
    const double dy = y - b.center_y;
    const double s2 = b.sigma * b.sigma;
    const double e = b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * s2));
    g.x() += e * dx / s2;
    g.y() += e * dy / s2;
  }
  return g;
}

double GaussianSurface::min_sigma() const {
  return std::min(bumps[0].sigma, bumps[1].sigma);
}

double GaussianSurface::height_span(int grid) const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int iy = 0; iy < grid; ++iy) {
    const double y = support_min_y + (support_max_y - support_min_y) * iy / (grid - 1);
    for (int ix = 0; ix < grid; ++ix) {
      const double x = support_min_x + (support_max_x - support_min_x) * ix / (grid - 1);
      const double z = height(x, y);
      lo = std::min(lo, z);
      hi = std::max(hi, z);
    }
  }
  return hi - lo;
}

Vec3 surface_normal(const GaussianSurface& surface, double x, double y) {
  // Graph tangents are (1, 0, dz/dx) and (0, 1, dz/dy); the camera-facing
  // normal (cameras sit below the surface) is (dz/dx, dz/dy, -1) normalized.
  const Eigen::Vector2d g = surface.height_gradient(x, y);
  return Vec3(g.x(), g.y(), -1.0).normalized();
}

double ReflectanceRamp::value(double x) const {
  const double span = x1 - x0;
  double t = (x - x0) / span * 4.0;
  t = std::clamp(t, 0.0, 4.0);
  const int band = std::min(static_cast<int>(t), 3);
  const double frac = t - band;
  return knots[band] + frac * (knots[band + 1] - knots[band]);
}

ReflectanceVec piecewise_linear_reflectance(const ReflectanceRamp& ramp, double x, double y) {
  (void)y;
  return ReflectanceVec::gray(ramp.value(x));
}

std::vector<CameraPose> turntable_cameras(int count, double radius, double elevation_deg,
                                          const GaussianSurface& surface) {
  if (count < 2) throw Error(ErrorCode::InsufficientViews, "need at least 2 cameras");
  const Vec3 target(0.5 * (surface.support_min_x + surface.support_max_x),
                    0.5 * (surface.support_min_y + surface.support_max_y),
                    surface.base_depth);
  const double elev = elevation_deg * M_PI / 180.0;
  constexpr double kSpanDeg = 72.0;

  std::vector<CameraPose> poses;
  poses.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double azimuth = (kSpanDeg * i / (count - 1)) * M_PI / 180.0;
    const Vec3 offset(std::cos(elev) * std::cos(azimuth), std::cos(elev) * std::sin(azimuth),
                      -std::sin(elev));
    const Vec3 position = target + radius * offset;

    Vec3 z_cam = (target - position).normalized();
    Vec3 up_hint = std::abs(z_cam.z()) > 0.999 ? Vec3::UnitY() : Vec3::UnitZ();
    Vec3 x_cam = up_hint.cross(z_cam).normalized();
    Vec3 y_cam = z_cam.cross(x_cam);

    CameraPose pose;
    pose.rotation.row(0) = x_cam.transpose();
    pose.rotation.row(1) = y_cam.transpose();
    pose.rotation.row(2) = z_cam.transpose();
    pose.translation = -(pose.rotation * position);
    poses.push_back(pose);
  }
  return poses;
}

namespace {

// First intersection of the pixel ray with the height field, if any.
// Returns the ray parameter (world length along dir) or nullopt. The
// surface lives in the z slab [z_low, z_high]; the march is restricted to
// the parameter window where the ray crosses it.
std::optional<double> intersect_ray(const GaussianSurface& surface, const Vec3& origin,
                                    const Vec3& dir, double step, double z_low,
                                    double z_high) {
  if (std::abs(dir.z()) < 1e-12) return std::nullopt;
  double s0 = (z_low - origin.z()) / dir.z();
  double s1 = (z_high - origin.z()) / dir.z();
  if (s0 > s1) std::swap(s0, s1);
  s0 = std::max(s0, 0.0);
  if (s1 <= s0) return std::nullopt;

  auto above = [&](double s) {
    const Vec3 p = origin + s * dir;
    return p.z() - surface.height(p.x(), p.y());
  };

  double prev_s = s0;
  double prev_g = above(s0);
  if (prev_g == 0.0) return s0;
  const int steps = static_cast<int>(std::ceil((s1 - s0) / step));
  for (int i = 1; i <= steps; ++i) {
    const double s = std::min(s0 + i * step, s1);
    const double g = above(s);
    if ((prev_g < 0.0) != (g < 0.0)) {
      // Bisect to 1e-10 relative depth.
      double lo = prev_s, hi = s;
      for (int it = 0; it < 128 && (hi - lo) > 1e-10 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((above(mid) < 0.0) == (prev_g < 0.0))
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev_s = s;
    prev_g = g;
  }
  return std::nullopt;
}

}  // namespace

ViewMaps render_view(const GaussianSurface& surface, const ReflectanceRamp& reflectance,
                     const CameraPose& pose, const CameraIntrinsics& intr, int threads) {
  const int w = intr.width;
  const int h = intr.height;
  ViewMaps maps;
  maps.normals = Image(w, h, 3, 0.0f);
  maps.reflectance = Image(w, h, 1, 0.0f);
  maps.mask.assign(static_cast<size_t>(w) * h, 0);
  maps.gt_depth = Image(w, h, 1, 0.0f);

  const Vec3 origin = pose.center();
  const Mat3 cam_to_world = pose.rotation.transpose();
  const double step = surface.min_sigma() / 4.0;
  const double z_low = surface.base_depth - surface.height_span(65) - 1e-6;
  const double z_high = surface.base_depth + 1e-6;

  parallel_for(h, threads, [&](int64_t y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 dir_cam = intr.ray_dir({static_cast<double>(x), static_cast<double>(y)});
      const Vec3 dir = cam_to_world * dir_cam;
      const std::optional<double> s = intersect_ray(surface, origin, dir, step, z_low, z_high);
      if (!s) continue;
      const Vec3 hit = origin + *s * dir;
      if (!surface.in_support(hit.x(), hit.y())) continue;

      const Vec3 n = surface_normal(surface, hit.x(), hit.y());
      maps.normals.at(x, static_cast<int>(y), 0) = static_cast<float>(n.x());
      maps.normals.at(x, static_cast<int>(y), 1) = static_cast<float>(n.y());
      maps.normals.at(x, static_cast<int>(y), 2) = static_cast<float>(n.z());
      maps.reflectance.at(x, static_cast<int>(y), 0) =
          static_cast<float>(reflectance.value(hit.x()));
      maps.gt_depth->at(x, static_cast<int>(y)) =
          static_cast<float>(pose.to_camera(hit).z());
      maps.mask[static_cast<size_t>(y) * w + x] = 1;
    }
  });
  return maps;
}

ViewMaps add_normal_noise(const ViewMaps& maps, const NoiseSpec& spec) {
  if (spec.normal_sigma_deg == 0.0) return maps;
  ViewMaps out = maps;
  const double sigma_rad = spec.normal_sigma_deg * M_PI / 180.0;
  const int w = maps.width();
  const int h = maps.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!maps.masked_in(x, y)) continue;
      SplitMix64 rng(stream_seed(spec.seed, 0x6e6f726d, static_cast<uint64_t>(y) * w + x));
      const double phi = 2.0 * M_PI * rng.next_double();
      const double angle = sigma_rad * rng.next_gaussian();

      Vec3 n(maps.normals.at(x, y, 0), maps.normals.at(x, y, 1), maps.normals.at(x, y, 2));
      n.normalize();
      Vec3 t1, t2;
      tangent_frame(n, t1, t2);
      const Vec3 axis = std::cos(phi) * t1 + std::sin(phi) * t2;
      // Rodrigues rotation about an axis perpendicular to n.
      const Vec3 rotated = std::cos(angle) * n + std::sin(angle) * axis.cross(n);
      const Vec3 result = rotated.normalized();
      out.normals.at(x, y, 0) = static_cast<float>(result.x());
      out.normals.at(x, y, 1) = static_cast<float>(result.y());
      out.normals.at(x, y, 2) = static_cast<float>(result.z());
    }
  }
  return out;
}

ViewMaps add_reflectance_noise(const ViewMaps& maps, const NoiseSpec& spec) {
  if (spec.reflectance_sigma_frac == 0.0) return maps;
  ViewMaps out = maps;
  const int w = maps.width();
  const int h = maps.height();
  const int q = maps.q();

  float max_r = 0.0f;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (maps.masked_in(x, y))
        for (int c = 0; c < q; ++c) max_r = std::max(max_r, maps.reflectance.at(x, y, c));
  const double sigma = spec.reflectance_sigma_frac * max_r;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!maps.masked_in(x, y)) continue;
      SplitMix64 rng(stream_seed(spec.seed, 0x72666c63, static_cast<uint64_t>(y) * w + x));
      for (int c = 0; c < q; ++c) {
        const double noisy = maps.reflectance.at(x, y, c) + sigma * rng.next_gaussian();
        out.reflectance.at(x, y, c) = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
      }
    }
  }
  return out;
}

BenchmarkConfig default_benchmark_config() {
  BenchmarkConfig config;
  config.surface.bumps[0] = GaussianBump{0.5, -0.3, -0.25, 0.45};
  config.surface.bumps[1] = GaussianBump{0.3, 0.4, 0.3, 0.35};
  config.surface.base_depth = 0.0;
  return config;
}

BenchmarkConfig small_benchmark_config() {
  BenchmarkConfig config = default_benchmark_config();
  config.width = 64;
  config.height = 64;
  config.fx = config.fy = 100.0;
  config.cx = config.cy = 31.5;
  return config;
}

Benchmark generate_benchmark(const BenchmarkConfig& config, int threads) {
  Benchmark bench;
  bench.config = config;
  bench.intrinsics = config.intrinsics();
  validate_intrinsics(bench.intrinsics);
  bench.poses = turntable_cameras(config.view_count, config.ring_radius, config.elevation_deg,
                                  config.surface);
  bench.views.reserve(bench.poses.size());
  for (const CameraPose& pose : bench.poses)
    bench.views.push_back(
        render_view(config.surface, config.reflectance, pose, bench.intrinsics, threads));
  bench.camera_distance = config.ring_radius;
  bench.height_span = config.surface.height_span();
  return bench;
}

}  // namespace rsweep
