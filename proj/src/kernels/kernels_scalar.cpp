#include <cmath>

#include "rsweep/geometry.hpp"
#include "rsweep/kernels.hpp"

namespace rsweep::kernels {

namespace {

constexpr double kMinSampleDepth = 1e-12;
constexpr double kMinBlendNorm = 0.1;
// Sum of mask weights must reach this for every positive-weight texel to be
// masked in (weights below ~1e-9 do not count as contributing).
constexpr double kMaskBlendMin = 1.0 - 1e-9;

}  // namespace

SampleRaster pack_sample_raster(const ViewMaps& maps) {
  SampleRaster out;
  out.width = maps.width();
  out.height = maps.height();
  out.q = maps.q();
  out.texels.assign(static_cast<size_t>(out.width) * out.height * SampleRaster::kStride, 0.0f);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      if (!maps.masked_in(x, y)) continue;
      float* t = out.texels.data() +
                 (static_cast<size_t>(y) * out.width + x) * SampleRaster::kStride;
      t[0] = maps.normals.at(x, y, 0);
      t[1] = maps.normals.at(x, y, 1);
      t[2] = maps.normals.at(x, y, 2);
      t[3] = 1.0f;
      for (int c = 0; c < out.q; ++c) t[4 + c] = maps.reflectance.at(x, y, c);
    }
  }
  return out;
}

bool sample_bilinear(const SampleRaster& raster, double u, double v, double n_out[3],
                     double r_out[3]) {
  const int w = raster.width;
  const int h = raster.height;
  if (!(u >= 0.0 && u <= w - 1 && v >= 0.0 && v <= h - 1)) return false;

  int x0 = static_cast<int>(std::floor(u));
  int y0 = static_cast<int>(std::floor(v));
  if (x0 > w - 2) x0 = w - 2;
  if (y0 > h - 2) y0 = h - 2;
  if (x0 < 0) x0 = 0;  // single-column rasters
  if (y0 < 0) y0 = 0;
  const int x1 = x0 + 1 < w ? x0 + 1 : x0;
  const int y1 = y0 + 1 < h ? y0 + 1 : y0;
  const double dx = u - x0;
  const double dy = v - y0;
  const double w00 = (1.0 - dx) * (1.0 - dy);
  const double w10 = dx * (1.0 - dy);
  const double w01 = (1.0 - dx) * dy;
  const double w11 = dx * dy;

  const int stride = SampleRaster::kStride;
  const float* t00 = raster.texels.data() + (static_cast<size_t>(y0) * w + x0) * stride;
  const float* t10 = raster.texels.data() + (static_cast<size_t>(y0) * w + x1) * stride;
  const float* t01 = raster.texels.data() + (static_cast<size_t>(y1) * w + x0) * stride;
  const float* t11 = raster.texels.data() + (static_cast<size_t>(y1) * w + x1) * stride;

  double blended[7];
  for (int c = 0; c < 4 + raster.q; ++c)
    blended[c] = w00 * t00[c] + w10 * t10[c] + w01 * t01[c] + w11 * t11[c];
  if (blended[3] < kMaskBlendMin) return false;

  const double norm = std::sqrt(blended[0] * blended[0] + blended[1] * blended[1] +
                                blended[2] * blended[2]);
  if (norm < kMinBlendNorm) return false;
  n_out[0] = blended[0] / norm;
  n_out[1] = blended[1] / norm;
  n_out[2] = blended[2] / norm;
  r_out[0] = blended[4];
  r_out[1] = raster.q > 1 ? blended[5] : 0.0;
  r_out[2] = raster.q > 2 ? blended[6] : 0.0;
  return true;
}

CostAccum reparam_cost_scalar(const ViewBatch& b, const ReparamTerms& t, double z) {
  CostAccum acc;
  const int m = b.m;
  const int q = b.q;
  for (int j = 0; j < m; ++j) {
    const double xc = z * b.gx[j] + b.hx;
    const double yc = z * b.gy[j] + b.hy;
    const double zc = z * b.gz[j] + b.hz;
    if (zc <= kMinSampleDepth) continue;
    const double inv = 1.0 / zc;
    const double u = b.fx * xc * inv + b.cx;
    const double v = b.fy * yc * inv + b.cy;

    double n[3], r[3];
    if (!sample_bilinear(*b.raster, u, v, n, r)) continue;

    // Render the control sample under the reference pixel's triplet and
    // accumulate the squared Frobenius mismatch.
    double ln[3];
    for (int row = 0; row < 3; ++row) {
      ln[row] = t.L[(3 * row + 0) * m + j] * n[0] + t.L[(3 * row + 1) * m + j] * n[1] +
                t.L[(3 * row + 2) * m + j] * n[2];
    }
    double term = 0.0;
    for (int c = 0; c < q; ++c) {
      for (int row = 0; row < 3; ++row) {
        const double d = t.vref[(3 * c + row) * m + j] - ln[row] * r[c];
        term += d * d;
      }
    }
    acc.sum += term;
    acc.count += 1;
  }
  return acc;
}

CostAccum combined_cost_scalar(const ViewBatch& b, const CombinedTerms& t, double z) {
  CostAccum acc;
  const int m = b.m;
  const int q = b.q;
  for (int j = 0; j < m; ++j) {
    const double xc = z * b.gx[j] + b.hx;
    const double yc = z * b.gy[j] + b.hy;
    const double zc = z * b.gz[j] + b.hz;
    if (zc <= kMinSampleDepth) continue;
    const double inv = 1.0 / zc;
    const double u = b.fx * xc * inv + b.cx;
    const double v = b.fy * yc * inv + b.cy;

    double n[3], r[3];
    if (!sample_bilinear(*b.raster, u, v, n, r)) continue;

    const double dot =
        t.n1[0 * m + j] * n[0] + t.n1[1 * m + j] * n[1] + t.n1[2 * m + j] * n[2];
    const double geom = (1.0 - dot) * (1.0 - dot);
    double photo = 0.0;
    for (int c = 0; c < q; ++c) {
      const double d = t.r1[c * m + j] - r[c];
      photo += d * d;
    }
    acc.sum += geom + t.mu * photo;
    acc.count += 1;
  }
  return acc;
}

}  // namespace rsweep::kernels
