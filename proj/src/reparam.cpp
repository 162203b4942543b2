#include "rsweep/reparam.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

namespace rsweep {

namespace {
constexpr double kDegenerate = 1e-9;
}

LightTriplet make_light_triplet(const Mat3& rows, double intensity) {
  if (!(intensity > 0.0)) throw Error(ErrorCode::SingularLighting, "intensity must be positive");
  double det = rows.determinant();
  if (std::abs(det) <= 1e-9 * intensity * intensity * intensity)
    throw Error(ErrorCode::SingularLighting, "illumination directions are linearly dependent");
  return LightTriplet{rows, intensity};
}

RadianceVec render_pbr(const ReflectanceVec& r, const Vec3& n, const LightTriplet& L) {
  if (std::abs(n.norm() - 1.0) > 1e-6)
    throw Error(ErrorCode::NonUnitNormal, "normal must be unit length");
  RadianceVec out;
  out.q = r.q;
  Vec3 ln = L.matrix * n;
  for (int c = 0; c < r.q; ++c) out.values.col(c) = ln * r.values[c];
  return out;
}

void tangent_frame(const Vec3& n, Vec3& t1, Vec3& t2) {
  Vec3 axis = std::abs(n.x()) > 0.9 ? Vec3::UnitY() : Vec3::UnitX();
  t1 = (axis - n.dot(axis) * n).normalized();
  t2 = n.cross(t1);
}

LightTriplet optimal_triplet(const Vec3& n, double intensity) {
  if (std::abs(n.norm() - 1.0) > 1e-6)
    throw Error(ErrorCode::NonUnitNormal, "normal must be unit length");
  Vec3 t1, t2;
  tangent_frame(n, t1, t2);
  const double cos_slant = 1.0 / std::sqrt(3.0);
  const double sin_slant = std::sqrt(2.0 / 3.0);
  LightTriplet out;
  out.intensity = intensity;
  for (int k = 0; k < 3; ++k) {
    const double azimuth = 2.0 * M_PI * k / 3.0;
    Vec3 dir = sin_slant * (std::cos(azimuth) * t1 + std::sin(azimuth) * t2) + cos_slant * n;
    out.matrix.row(k) = (intensity * dir).transpose();
  }
  return out;
}

LightTriplet canonical_triplet() { return LightTriplet{Mat3::Identity(), 1.0}; }

namespace {

Mat3 inverse_or_throw(const LightTriplet& L) {
  double det = L.matrix.determinant();
  if (std::abs(det) <= 1e-9 * L.intensity * L.intensity * L.intensity)
    throw Error(ErrorCode::SingularLighting, "illumination matrix is singular");
  return L.matrix.inverse();
}

}  // namespace

std::pair<ReflectanceVec, Vec3> invert_reparam_q1(const RadianceVec& v, const LightTriplet& L) {
  Vec3 x = inverse_or_throw(L) * v.col(0);
  double r = x.norm();
  if (r <= kDegenerate)
    throw Error(ErrorCode::DegenerateRadiance, "radiance maps to zero reflectance");
  return {ReflectanceVec::gray(r), x / r};
}

std::pair<ReflectanceVec, Vec3> invert_reparam_q3(const RadianceVec& v, const LightTriplet& L,
                                                  const std::optional<Vec3>& viewing_dir) {
  Mat3 M = inverse_or_throw(L) * v.values;
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  double sigma = svd.singularValues()(0);
  if (sigma <= kDegenerate)
    throw Error(ErrorCode::DegenerateRadiance, "radiance maps to zero reflectance");
  Vec3 n = svd.matrixU().col(0);
  Vec3 r = sigma * svd.matrixV().col(0);

  // Albedo is physically nonnegative: flip so the dominant reflectance
  // component is positive. In the ambiguous all-zero-sum case, fall back to
  // facing the camera.
  int dominant;
  r.cwiseAbs().maxCoeff(&dominant);
  double s = r[dominant] > 0 ? 1.0 : (r[dominant] < 0 ? -1.0 : 0.0);
  if (s == 0.0 && viewing_dir) s = n.dot(*viewing_dir) < 0.0 ? 1.0 : -1.0;
  if (s == 0.0) s = 1.0;
  return {ReflectanceVec{s * r, 3}, s * n};
}

EmbeddedReflectance embed_reflectance(const ReflectanceVec& r, int p) {
  if (p != 1 && p != 2) throw Error(ErrorCode::ConfigError, "norm order must be 1 or 2");
  const int q = r.q;
  double norm_pow = 0.0;
  for (int c = 0; c < q; ++c)
    norm_pow += p == 1 ? std::abs(r.values[c]) : r.values[c] * r.values[c];
  if (norm_pow > static_cast<double>(q))
    throw Error(ErrorCode::NormOverflow, "reflectance p-norm exceeds the channel count");

  double aux = p == 1 ? (q - norm_pow) : std::sqrt(q - norm_pow);
  EmbeddedReflectance out;
  out.q = q;
  out.p = p;
  for (int c = 0; c < q; ++c) out.values[c] = r.values[c] / q;
  out.values[q] = aux / q;
  return out;
}

}  // namespace rsweep
