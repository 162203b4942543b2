#include "rsweep/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "rsweep/kernels.hpp"

namespace rsweep {

void validate_intrinsics(const CameraIntrinsics& intr) {
  if (!(intr.fx > 0.0) || !(intr.fy > 0.0))
    throw Error(ErrorCode::SchemaError, "focal lengths must be positive");
  if (intr.width <= 0 || intr.height <= 0)
    throw Error(ErrorCode::SchemaError, "raster size must be positive");
  if (!(intr.cx >= 0.0 && intr.cx < intr.width) || !(intr.cy >= 0.0 && intr.cy < intr.height))
    throw Error(ErrorCode::SchemaError, "principal point outside raster");
}

void validate_pose(const CameraPose& pose, double tol) {
  Mat3 should_be_identity = pose.rotation.transpose() * pose.rotation;
  double dev = (should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (dev > tol || pose.rotation.determinant() < 0.0)
    throw Error(ErrorCode::NonRigidRotation, "rotation is not orthonormal with det +1");
  if (!pose.translation.allFinite())
    throw Error(ErrorCode::NonRigidRotation, "translation is not finite");
}

void validate_view_maps(const ViewMaps& maps, const CameraPose& pose,
                        const CameraIntrinsics& intr) {
  const Image& n = maps.normals;
  if (n.channels != 3) throw Error(ErrorCode::SchemaError, "normal map must have 3 channels");
  if (maps.reflectance.channels != 1 && maps.reflectance.channels != 3)
    throw Error(ErrorCode::SchemaError, "reflectance must have 1 or 3 channels");
  if (maps.reflectance.width != n.width || maps.reflectance.height != n.height)
    throw Error(ErrorCode::SchemaError, "reflectance raster shape mismatch");
  if (maps.mask.size() != n.pixel_count())
    throw Error(ErrorCode::SchemaError, "mask size mismatch");
  if (maps.gt_depth && (maps.gt_depth->width != n.width || maps.gt_depth->height != n.height ||
                        maps.gt_depth->channels != 1))
    throw Error(ErrorCode::SchemaError, "gt depth raster shape mismatch");

  for (int y = 0; y < n.height; ++y) {
    for (int x = 0; x < n.width; ++x) {
      if (!maps.masked_in(x, y)) continue;
      Vec3 normal(n.at(x, y, 0), n.at(x, y, 1), n.at(x, y, 2));
      if (std::abs(normal.norm() - 1.0) > 1e-6)
        throw Error(ErrorCode::NonUnitNormal, "masked-in normal is not unit length");
      if (maps.gt_depth) {
        // Facing check needs the surface point, available via the depth.
        Pixel p{static_cast<double>(x), static_cast<double>(y)};
        double z = maps.gt_depth->at(x, y);
        Vec3 point = pose.to_world(backproject_fronto(intr, p, z));
        if (normal.dot(point - pose.center()) >= 0.0)
          throw Error(ErrorCode::SchemaError, "masked-in normal does not face the camera");
      }
      for (int c = 0; c < maps.reflectance.channels; ++c) {
        float r = maps.reflectance.at(x, y, c);
        if (!std::isfinite(r) || r < 0.0f)
          throw Error(ErrorCode::SchemaError, "reflectance must be finite and nonnegative");
      }
    }
  }
}

Pixel project(const CameraPose& pose, const CameraIntrinsics& intr, const Vec3& x_world) {
  Vec3 x_cam = pose.to_camera(x_world);
  if (x_cam.z() <= 1e-12)
    throw Error(ErrorCode::NonPositiveDepth, "point does not map to positive depth");
  return Pixel{intr.fx * x_cam.x() / x_cam.z() + intr.cx,
               intr.fy * x_cam.y() / x_cam.z() + intr.cy};
}

Vec3 backproject_fronto(const CameraIntrinsics& intr, const Pixel& p, double z) {
  if (!(z > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "depth must be positive");
  return z * intr.ray_dir(p);
}

SampleResult bilinear_sample(const ViewMaps& maps, const Pixel& p) {
  // Route through the packed-raster sampler so the public operation and the
  // sweep kernels share one interpolation semantics. Packing per call is
  // fine here; hot paths pack once and sample many times.
  kernels::SampleRaster raster = kernels::pack_sample_raster(maps);
  SampleResult out;
  double n[3], r[3];
  if (!kernels::sample_bilinear(raster, p.u, p.v, n, r)) return out;
  out.normal = Vec3(n[0], n[1], n[2]);
  out.reflectance = Vec3(r[0], r[1], r[2]);
  out.valid = true;
  return out;
}

}  // namespace rsweep
