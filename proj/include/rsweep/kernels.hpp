#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rsweep {
struct ViewMaps;
}

namespace rsweep::kernels {

// Packed per-view raster for interpolation-heavy inner loops. Texels are 8
// floats wide: [nx ny nz mask r g b pad]; masked-out texels carry zeros.
struct SampleRaster {
  int width = 0;
  int height = 0;
  int q = 1;
  std::vector<float> texels;

  static constexpr int kStride = 8;
};

SampleRaster pack_sample_raster(const ViewMaps& maps);

// One bilinear tap. Returns false when (u,v) is out of bounds, a
// positive-weight texel is masked out, or the blended normal is shorter
// than 0.1 before renormalization. On success writes the renormalized
// normal and the blended reflectance (q channels).
bool sample_bilinear(const SampleRaster& raster, double u, double v, double n_out[3],
                     double r_out[3]);

// Patch geometry and pose data shared by both cost kernels; SoA arrays of
// length m. Candidate points are x_cam(z) = z * g + h in the control
// camera's frame.
struct ViewBatch {
  int m = 0;
  int q = 1;
  const double* gx = nullptr;
  const double* gy = nullptr;
  const double* gz = nullptr;
  double hx = 0, hy = 0, hz = 0;
  double fx = 1, fy = 1, cx = 0, cy = 0;
  const SampleRaster* raster = nullptr;
};

// Reference-pixel data for the radiance-consistency cost. L holds the
// per-member 3x3 lighting rows as 9 arrays of m (index (3*row+col)*m + j);
// vref holds the 3xq reference radiance as 3q arrays of m
// (index (3*c+row)*m + j).
struct ReparamTerms {
  const double* L = nullptr;
  const double* vref = nullptr;
};

// Reference-pixel data for the two-term baseline cost: n1 as 3 arrays of
// m, r1 as q arrays of m.
struct CombinedTerms {
  const double* n1 = nullptr;
  const double* r1 = nullptr;
  double mu = 0.0;
};

struct CostAccum {
  double sum = 0.0;
  int count = 0;
};

using ReparamCostFn = CostAccum (*)(const ViewBatch&, const ReparamTerms&, double z);
using CombinedCostFn = CostAccum (*)(const ViewBatch&, const CombinedTerms&, double z);

struct KernelSet {
  ReparamCostFn reparam_cost = nullptr;
  CombinedCostFn combined_cost = nullptr;
  const char* name = "";
};

enum class Isa { Auto, Scalar, Avx2 };

bool cpu_has_avx2();

// Returns the kernel set for the requested ISA; Auto picks the widest
// supported one. Requesting Avx2 on a CPU without it falls back to scalar.
const KernelSet& select(Isa isa = Isa::Auto);

// Parses "auto" / "scalar" / "avx2"; throws ConfigError otherwise.
Isa parse_isa(const std::string& name);

// Reference implementations (always available).
CostAccum reparam_cost_scalar(const ViewBatch& b, const ReparamTerms& t, double z);
CostAccum combined_cost_scalar(const ViewBatch& b, const CombinedTerms& t, double z);

#if defined(__x86_64__) || defined(_M_X64)
CostAccum reparam_cost_avx2(const ViewBatch& b, const ReparamTerms& t, double z);
CostAccum combined_cost_avx2(const ViewBatch& b, const CombinedTerms& t, double z);
#endif

}  // namespace rsweep::kernels
