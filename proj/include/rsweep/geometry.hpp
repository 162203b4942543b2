#pragma once

#include <Eigen/Core>
#include <optional>

#include "rsweep/error.hpp"
#include "rsweep/image.hpp"

namespace rsweep {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

// Pinhole model with zero skew.
struct CameraIntrinsics {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;

  // K^-1 [u v 1]^T
  Vec3 ray_dir(const Pixel& p) const {
    return Vec3((p.u - cx) / fx, (p.v - cy) / fy, 1.0);
  }
};

void validate_intrinsics(const CameraIntrinsics& intr);

// World -> camera rigid transform: x_cam = R x_world + t.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 to_camera(const Vec3& x_world) const { return rotation * x_world + translation; }
  Vec3 to_world(const Vec3& x_cam) const { return rotation.transpose() * (x_cam - translation); }
  Vec3 center() const { return -(rotation.transpose() * translation); }
};

// Throws NonRigidRotation unless R is orthonormal with det +1 to `tol`.
void validate_pose(const CameraPose& pose, double tol = 1e-9);

// Per-view input rasters. Normals are outward unit vectors in world
// coordinates; reflectance has q in {1,3} channels in [0,1].
struct ViewMaps {
  Image normals;      // 3 channels
  Image reflectance;  // q channels
  Mask mask;
  std::optional<Image> gt_depth;  // 1 channel, camera-frame depth

  int width() const { return normals.width; }
  int height() const { return normals.height; }
  int q() const { return reflectance.channels; }

  bool masked_in(int x, int y) const {
    return mask[static_cast<size_t>(y) * normals.width + x] != 0;
  }
};

// Enforces the ViewMaps invariants: consistent shapes, unit normals (1e-6)
// facing the camera (checked via gt_depth when present), finite nonnegative
// reflectance. Throws SchemaError / NonUnitNormal on violation.
void validate_view_maps(const ViewMaps& maps, const CameraPose& pose,
                        const CameraIntrinsics& intr);

struct SampleResult {
  Vec3 normal = Vec3::Zero();
  Vec3 reflectance = Vec3::Zero();  // first q entries meaningful
  bool valid = false;
};

// Perspective projection into pixel coordinates; no raster-bounds clamping.
// Throws NonPositiveDepth when the camera-frame z <= 1e-12.
Pixel project(const CameraPose& pose, const CameraIntrinsics& intr, const Vec3& x_world);

// z * K^-1 [u v 1]^T in the camera frame. Throws NonPositiveDepth for z <= 0.
Vec3 backproject_fronto(const CameraIntrinsics& intr, const Pixel& p, double z);

// Bilinear blend of the four neighbouring texels; the normal is
// renormalized after blending. valid == false when p falls outside
// [0,W-1]x[0,H-1], any texel with positive weight is masked out, or the
// blended normal's length is below 0.1.
SampleResult bilinear_sample(const ViewMaps& maps, const Pixel& p);

}  // namespace rsweep
