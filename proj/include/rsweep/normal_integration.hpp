#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "rsweep/geometry.hpp"

namespace rsweep {

struct PixelI {
  int x = 0;
  int y = 0;
  bool operator==(const PixelI&) const = default;
};

// Square pixel neighbourhood around a centre, possibly with holes from
// masking. Normals are unit vectors in the owning camera's frame; `pixels`
// keeps row-major window order and always contains the centre.
struct Patch {
  PixelI center;
  int radius = 0;
  std::vector<PixelI> pixels;
  std::vector<Vec3> normals;
  int center_index = -1;
};

// Per-pixel depth scale factors relative to the patch centre (alpha = 1
// there, exactly). Same ordering as Patch::pixels.
struct ScaleField {
  std::vector<double> alphas;
  double residual = 0.0;  // L2 residual of the finite-difference system
};

// Perspective log-depth gradient at p for camera-frame normal n:
// (-n_x / (fx * (n.d)), -n_y / (fy * (n.d))) with d = K^-1 [u v 1]^T.
// Throws GrazingNormal when |n.d| < 1e-3.
Eigen::Vector2d log_depth_gradient(const CameraIntrinsics& intr, const Pixel& p, const Vec3& n);

// Integrates the patch normals into scale factors: solves the
// least-squares forward-difference system on log depth (edge gradients
// averaged symmetrically) with the centre pinned to log alpha = 0.
// Throws GrazingNormal (any member) and SingularSystem (patch disconnected
// after masking).
ScaleField integrate_patch(const CameraIntrinsics& intr, const Patch& patch);

// Stateful variant that caches the factorization of the hole-free patch
// system per radius; used by the sweeping hot path. Thread-safe only if
// each thread owns its instance.
class PatchIntegrator {
 public:
  ScaleField integrate(const CameraIntrinsics& intr, const Patch& patch);

 private:
  struct FullPatchFactor;
  std::shared_ptr<FullPatchFactor> full_;
  int full_radius_ = -1;
};

}  // namespace rsweep
