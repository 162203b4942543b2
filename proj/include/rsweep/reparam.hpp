#pragma once

#include <Eigen/Core>
#include <optional>

#include "rsweep/error.hpp"
#include "rsweep/geometry.hpp"

namespace rsweep {

// Albedo vector, q in {1,3}, components in [0,1].
struct ReflectanceVec {
  Eigen::Vector3d values = Eigen::Vector3d::Zero();
  int q = 1;

  static ReflectanceVec gray(double r) { return {Eigen::Vector3d(r, 0, 0), 1}; }
  static ReflectanceVec rgb(double r, double g, double b) {
    return {Eigen::Vector3d(r, g, b), 3};
  }
  double norm() const { return values.head(q == 1 ? 1 : 3).norm(); }
};

// Three illumination vectors (intensity times direction) as matrix rows.
// Non-singular by construction: |det| > 1e-9 * intensity^3.
struct LightTriplet {
  Mat3 matrix = Mat3::Identity();
  double intensity = 1.0;
};

// Makes a triplet from explicit rows, enforcing the non-singularity
// invariant. Throws SingularLighting.
LightTriplet make_light_triplet(const Mat3& rows, double intensity);

// 3xq simulated radiance values; rank <= 1 when produced by the forward map.
struct RadianceVec {
  Eigen::Matrix3d values = Eigen::Matrix3d::Zero();  // first q columns used
  int q = 1;

  Eigen::Vector3d col(int c) const { return values.col(c); }
};

// (q+1)-vector with constant p-norm q^(1/p - 1).
struct EmbeddedReflectance {
  Eigen::Vector4d values = Eigen::Vector4d::Zero();  // first q+1 entries used
  int q = 1;
  int p = 1;
};

// F(r, n, L) = L n r^T. Requires ||n|| = 1 to 1e-6 (NonUnitNormal).
RadianceVec render_pbr(const ReflectanceVec& r, const Vec3& n, const LightTriplet& L);

// Three directions at slant arccos(1/sqrt(3)) from n, azimuths 0/120/240
// degrees in a deterministic tangent frame, each scaled by intensity. Every
// row satisfies dot(row, n) = intensity/sqrt(3) > 0.
LightTriplet optimal_triplet(const Vec3& n, double intensity = 1.0);

// Identity lighting with intensity 1; under it the forward map with r=[1]
// returns the normal itself.
LightTriplet canonical_triplet();

// Deterministic tangent frame used for the azimuth phase: t1 aligned with
// e_x unless |n.e_x| > 0.9 (then e_y), t2 = n x t1.
void tangent_frame(const Vec3& n, Vec3& t1, Vec3& t2);

// Inverse of the forward map for q=1: r = ||L^-1 v||, n = L^-1 v / r.
// Throws SingularLighting / DegenerateRadiance (||L^-1 v|| <= 1e-9).
std::pair<ReflectanceVec, Vec3> invert_reparam_q1(const RadianceVec& v, const LightTriplet& L);

// Inverse for q=3 via the best rank-1 factorization of L^-1 v (SVD). The
// sign makes the reflectance components nonnegative; when the singular
// vector has mixed signs the dominant component decides, and a supplied
// viewing direction (camera-to-point) breaks remaining ties so that n faces
// the camera. Throws SingularLighting / DegenerateRadiance.
std::pair<ReflectanceVec, Vec3> invert_reparam_q3(
    const RadianceVec& v, const LightTriplet& L,
    const std::optional<Vec3>& viewing_dir = std::nullopt);

// (1/q) [r^T, (q - ||r||_p^p)^(1/p)]^T; the p-norm of the result is
// q^(1/p - 1) exactly. Throws NormOverflow when ||r||_p^p > q.
EmbeddedReflectance embed_reflectance(const ReflectanceVec& r, int p);

}  // namespace rsweep
