#pragma once

#include <Eigen/Dense>
#include <random>

#include "rsweep/geometry.hpp"

namespace rsweep::testing {

inline CameraIntrinsics simple_intrinsics(double f = 100.0, int size = 100) {
  return CameraIntrinsics{f, f, size / 2.0, size / 2.0, size, size};
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(gauss(rng), gauss(rng), gauss(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  const Vec3 axis = random_unit(rng);
  std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * M_PI);
  const double angle = angle_dist(rng);
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

// Uniform-valued maps sized w x h with everything masked in; normals all
// equal to n (must be unit), reflectance constant r.
inline ViewMaps constant_maps(int w, int h, const Vec3& n, double r) {
  ViewMaps maps;
  maps.normals = Image(w, h, 3);
  maps.reflectance = Image(w, h, 1, static_cast<float>(r));
  maps.mask.assign(static_cast<size_t>(w) * h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        maps.normals.at(x, y, c) = static_cast<float>(n[c]);
  return maps;
}

}  // namespace rsweep::testing
