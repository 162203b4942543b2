// AVX2 variants of the sweep cost kernels: 4 patch pixels per iteration,
// double precision, float gathers for the bilinear taps. Must implement the
// same validity predicates as kernels_scalar.cpp; equivalence is enforced by
// tests/test_kernels.cpp.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

#include "rsweep/kernels.hpp"

namespace rsweep::kernels {

namespace {

constexpr double kMinSampleDepth = 1e-12;
constexpr double kMinBlendNorm = 0.1;
constexpr double kMaskBlendMin = 1.0 - 1e-9;

struct Lane4 {
  __m256d u, v;        // projected pixel coordinates (junk on invalid lanes)
  __m256d valid;       // depth + bounds mask
  __m128i base00;      // float index of the top-left texel
  __m256d w00, w10, w01, w11;
};

// Projection, bounds test and bilinear weights for 4 members starting at j.
inline Lane4 project_lanes(const ViewBatch& b, double z, int j) {
  const __m256d zv = _mm256_set1_pd(z);
  const __m256d xc = _mm256_fmadd_pd(zv, _mm256_loadu_pd(b.gx + j), _mm256_set1_pd(b.hx));
  const __m256d yc = _mm256_fmadd_pd(zv, _mm256_loadu_pd(b.gy + j), _mm256_set1_pd(b.hy));
  const __m256d zc = _mm256_fmadd_pd(zv, _mm256_loadu_pd(b.gz + j), _mm256_set1_pd(b.hz));

  __m256d valid = _mm256_cmp_pd(zc, _mm256_set1_pd(kMinSampleDepth), _CMP_GT_OQ);
  const __m256d inv = _mm256_div_pd(_mm256_set1_pd(1.0), zc);
  const __m256d u = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_set1_pd(b.fx), xc), inv,
                                    _mm256_set1_pd(b.cx));
  const __m256d v = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_set1_pd(b.fy), yc), inv,
                                    _mm256_set1_pd(b.cy));

  const int w = b.raster->width;
  const int h = b.raster->height;
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(u, _mm256_setzero_pd(), _CMP_GE_OQ));
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(u, _mm256_set1_pd(double(w - 1)), _CMP_LE_OQ));
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(v, _mm256_setzero_pd(), _CMP_GE_OQ));
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(v, _mm256_set1_pd(double(h - 1)), _CMP_LE_OQ));

  // Keep gather indices in range on invalid lanes.
  const __m256d us = _mm256_blendv_pd(_mm256_setzero_pd(), u, valid);
  const __m256d vs = _mm256_blendv_pd(_mm256_setzero_pd(), v, valid);

  __m256d x0 = _mm256_floor_pd(us);
  __m256d y0 = _mm256_floor_pd(vs);
  x0 = _mm256_min_pd(x0, _mm256_set1_pd(double(w - 2)));
  y0 = _mm256_min_pd(y0, _mm256_set1_pd(double(h - 2)));
  const __m256d dx = _mm256_sub_pd(us, x0);
  const __m256d dy = _mm256_sub_pd(vs, y0);

  const __m128i xi = _mm256_cvttpd_epi32(x0);
  const __m128i yi = _mm256_cvttpd_epi32(y0);
  __m128i base = _mm_add_epi32(_mm_mullo_epi32(yi, _mm_set1_epi32(w)), xi);
  base = _mm_slli_epi32(base, 3);  // texel stride 8

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d omdx = _mm256_sub_pd(one, dx);
  const __m256d omdy = _mm256_sub_pd(one, dy);

  Lane4 lane;
  lane.u = u;
  lane.v = v;
  lane.valid = valid;
  lane.base00 = base;
  lane.w00 = _mm256_mul_pd(omdx, omdy);
  lane.w10 = _mm256_mul_pd(dx, omdy);
  lane.w01 = _mm256_mul_pd(omdx, dy);
  lane.w11 = _mm256_mul_pd(dx, dy);
  return lane;
}

// Gathers channel c from the four corners and blends.
inline __m256d blend_channel(const float* texels, int row_stride_floats, const Lane4& lane,
                             int c) {
  const float* p = texels + c;
  const __m128i i00 = lane.base00;
  const __m128i i10 = _mm_add_epi32(i00, _mm_set1_epi32(8));
  const __m128i i01 = _mm_add_epi32(i00, _mm_set1_epi32(row_stride_floats));
  const __m128i i11 = _mm_add_epi32(i01, _mm_set1_epi32(8));
  const __m256d v00 = _mm256_cvtps_pd(_mm_i32gather_ps(p, i00, 4));
  const __m256d v10 = _mm256_cvtps_pd(_mm_i32gather_ps(p, i10, 4));
  const __m256d v01 = _mm256_cvtps_pd(_mm_i32gather_ps(p, i01, 4));
  const __m256d v11 = _mm256_cvtps_pd(_mm_i32gather_ps(p, i11, 4));
  __m256d acc = _mm256_mul_pd(lane.w00, v00);
  acc = _mm256_fmadd_pd(lane.w10, v10, acc);
  acc = _mm256_fmadd_pd(lane.w01, v01, acc);
  acc = _mm256_fmadd_pd(lane.w11, v11, acc);
  return acc;
}

struct Sample4 {
  __m256d nx, ny, nz;
  __m256d r[3];
  __m256d valid;
};

inline Sample4 sample_lanes(const ViewBatch& b, const Lane4& lane) {
  const float* texels = b.raster->texels.data();
  const int row_stride = b.raster->width * SampleRaster::kStride;

  Sample4 s;
  s.nx = blend_channel(texels, row_stride, lane, 0);
  s.ny = blend_channel(texels, row_stride, lane, 1);
  s.nz = blend_channel(texels, row_stride, lane, 2);
  const __m256d mask_blend = blend_channel(texels, row_stride, lane, 3);
  for (int c = 0; c < b.q; ++c) s.r[c] = blend_channel(texels, row_stride, lane, 4 + c);
  for (int c = b.q; c < 3; ++c) s.r[c] = _mm256_setzero_pd();

  __m256d valid = _mm256_and_pd(
      lane.valid, _mm256_cmp_pd(mask_blend, _mm256_set1_pd(kMaskBlendMin), _CMP_GE_OQ));

  __m256d norm2 = _mm256_mul_pd(s.nx, s.nx);
  norm2 = _mm256_fmadd_pd(s.ny, s.ny, norm2);
  norm2 = _mm256_fmadd_pd(s.nz, s.nz, norm2);
  const __m256d norm = _mm256_sqrt_pd(norm2);
  valid = _mm256_and_pd(valid,
                        _mm256_cmp_pd(norm, _mm256_set1_pd(kMinBlendNorm), _CMP_GE_OQ));

  const __m256d inv_norm = _mm256_div_pd(_mm256_set1_pd(1.0), norm);
  s.nx = _mm256_mul_pd(s.nx, inv_norm);
  s.ny = _mm256_mul_pd(s.ny, inv_norm);
  s.nz = _mm256_mul_pd(s.nz, inv_norm);
  s.valid = valid;
  return s;
}

inline double horizontal_sum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

}  // namespace

CostAccum reparam_cost_avx2(const ViewBatch& b, const ReparamTerms& t, double z) {
  const int m = b.m;
  if (b.raster->width < 2 || b.raster->height < 2) return reparam_cost_scalar(b, t, z);

  CostAccum acc;
  __m256d sum_vec = _mm256_setzero_pd();
  int j = 0;
  for (; j + 4 <= m; j += 4) {
    const Lane4 lane = project_lanes(b, z, j);
    const Sample4 s = sample_lanes(b, lane);

    __m256d term = _mm256_setzero_pd();
    __m256d ln[3];
    for (int row = 0; row < 3; ++row) {
      ln[row] = _mm256_mul_pd(_mm256_loadu_pd(t.L + (3 * row + 0) * m + j), s.nx);
      ln[row] = _mm256_fmadd_pd(_mm256_loadu_pd(t.L + (3 * row + 1) * m + j), s.ny, ln[row]);
      ln[row] = _mm256_fmadd_pd(_mm256_loadu_pd(t.L + (3 * row + 2) * m + j), s.nz, ln[row]);
    }
    for (int c = 0; c < b.q; ++c) {
      for (int row = 0; row < 3; ++row) {
        const __m256d vref = _mm256_loadu_pd(t.vref + (3 * c + row) * m + j);
        const __m256d d = _mm256_fnmadd_pd(ln[row], s.r[c], vref);
        term = _mm256_fmadd_pd(d, d, term);
      }
    }

    sum_vec = _mm256_add_pd(sum_vec, _mm256_and_pd(term, s.valid));
    acc.count += _mm_popcnt_u32(static_cast<unsigned>(_mm256_movemask_pd(s.valid)));
  }
  acc.sum = horizontal_sum(sum_vec);

  // Remainder members run through the scalar kernel one at a time (the
  // SoA arrays are strided by the full m, so repack per member).
  {
    for (int jj = j; jj < m; ++jj) {
      ViewBatch one = b;
      one.m = 1;
      one.gx = b.gx + jj;
      one.gy = b.gy + jj;
      one.gz = b.gz + jj;
      double Lrow[9], vrefrow[9];
      for (int k = 0; k < 9; ++k) Lrow[k] = t.L[k * m + jj];
      for (int k = 0; k < 3 * b.q; ++k) vrefrow[k] = t.vref[k * m + jj];
      ReparamTerms tt{Lrow, vrefrow};
      CostAccum a = reparam_cost_scalar(one, tt, z);
      acc.sum += a.sum;
      acc.count += a.count;
    }
  }
  return acc;
}

CostAccum combined_cost_avx2(const ViewBatch& b, const CombinedTerms& t, double z) {
  const int m = b.m;
  if (b.raster->width < 2 || b.raster->height < 2) return combined_cost_scalar(b, t, z);

  CostAccum acc;
  __m256d sum_vec = _mm256_setzero_pd();
  const __m256d mu = _mm256_set1_pd(t.mu);
  const __m256d one = _mm256_set1_pd(1.0);
  int j = 0;
  for (; j + 4 <= m; j += 4) {
    const Lane4 lane = project_lanes(b, z, j);
    const Sample4 s = sample_lanes(b, lane);

    __m256d dot = _mm256_mul_pd(_mm256_loadu_pd(t.n1 + 0 * m + j), s.nx);
    dot = _mm256_fmadd_pd(_mm256_loadu_pd(t.n1 + 1 * m + j), s.ny, dot);
    dot = _mm256_fmadd_pd(_mm256_loadu_pd(t.n1 + 2 * m + j), s.nz, dot);
    const __m256d gd = _mm256_sub_pd(one, dot);
    __m256d photo = _mm256_setzero_pd();
    for (int c = 0; c < b.q; ++c) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(t.r1 + c * m + j), s.r[c]);
      photo = _mm256_fmadd_pd(d, d, photo);
    }
    const __m256d term = _mm256_fmadd_pd(mu, photo, _mm256_mul_pd(gd, gd));

    sum_vec = _mm256_add_pd(sum_vec, _mm256_and_pd(term, s.valid));
    acc.count += _mm_popcnt_u32(static_cast<unsigned>(_mm256_movemask_pd(s.valid)));
  }
  acc.sum = horizontal_sum(sum_vec);

  for (int jj = j; jj < m; ++jj) {
    ViewBatch one = b;
    one.m = 1;
    one.gx = b.gx + jj;
    one.gy = b.gy + jj;
    one.gz = b.gz + jj;
    double n1row[3] = {t.n1[0 * m + jj], t.n1[1 * m + jj], t.n1[2 * m + jj]};
    double r1row[3] = {0, 0, 0};
    for (int c = 0; c < b.q; ++c) r1row[c] = t.r1[c * m + jj];
    CombinedTerms tt{n1row, r1row, t.mu};
    CostAccum a = combined_cost_scalar(one, tt, z);
    acc.sum += a.sum;
    acc.count += a.count;
  }
  return acc;
}

}  // namespace rsweep::kernels

#endif  // x86_64
