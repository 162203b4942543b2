#include "rsweep/metrics.hpp"

#include <Eigen/Dense>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "rsweep/error.hpp"

namespace rsweep {

namespace {

ErrorSummary summarize(std::vector<double> samples, std::string units, size_t excluded) {
  ErrorSummary out;
  out.units = std::move(units);
  out.excluded = excluded;
  out.count = samples.size();
  if (samples.empty()) return out;
  double sum = 0.0;
  for (double s : samples) sum += s;
  out.mean = sum / samples.size();
  double var = 0.0;
  for (double s : samples) var += (s - out.mean) * (s - out.mean);
  out.std_dev = std::sqrt(var / samples.size());
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
  out.median = samples[samples.size() / 2];
  if (samples.size() % 2 == 0) {
    const double upper = samples[samples.size() / 2];
    std::nth_element(samples.begin(), samples.begin() + samples.size() / 2 - 1, samples.end());
    out.median = 0.5 * (samples[samples.size() / 2 - 1] + upper);
  }
  return out;
}

}  // namespace

ErrorSummary mean_depth_error(const DepthResult& est, const Image& gt_depth, const Mask& mask) {
  if (est.depth.width != gt_depth.width || est.depth.height != gt_depth.height)
    throw Error(ErrorCode::SchemaError, "depth raster shapes differ");
  std::vector<double> diffs;
  size_t excluded = 0;
  for (int y = 0; y < gt_depth.height; ++y) {
    for (int x = 0; x < gt_depth.width; ++x) {
      const size_t i = static_cast<size_t>(y) * gt_depth.width + x;
      if (!mask[i]) continue;
      if (!est.valid[i]) {
        ++excluded;
        continue;
      }
      diffs.push_back(std::abs(double(est.depth.at(x, y)) - double(gt_depth.at(x, y))));
    }
  }
  if (diffs.empty()) throw Error(ErrorCode::EmptyOverlap, "no pixels valid in both rasters");
  return summarize(std::move(diffs), "length", excluded);
}

ErrorSummary normal_mae(const Image& est_normals, const Image& gt_normals, const Mask& mask) {
  if (!est_normals.same_shape(gt_normals) || est_normals.channels != 3)
    throw Error(ErrorCode::SchemaError, "normal raster shapes differ");
  std::vector<double> angles;
  for (int y = 0; y < gt_normals.height; ++y) {
    for (int x = 0; x < gt_normals.width; ++x) {
      if (!mask[static_cast<size_t>(y) * gt_normals.width + x]) continue;
      Vec3 a(est_normals.at(x, y, 0), est_normals.at(x, y, 1), est_normals.at(x, y, 2));
      Vec3 b(gt_normals.at(x, y, 0), gt_normals.at(x, y, 1), gt_normals.at(x, y, 2));
      const double dot = std::clamp(a.dot(b), -1.0, 1.0);
      angles.push_back(std::acos(dot) * 180.0 / M_PI);
    }
  }
  if (angles.empty()) throw Error(ErrorCode::EmptyOverlap, "no masked pixels");
  return summarize(std::move(angles), "degrees", 0);
}

namespace {

// Uniform hash grid over one cloud. Nearest-neighbour queries scan
// Chebyshev rings of cells outward; a ring bound certifies exactness.
class PointGrid {
 public:
  explicit PointGrid(const std::vector<Vec3>& points) : points_(points) {
    Vec3 lo = points[0], hi = points[0];
    for (const Vec3& p : points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    origin_ = lo;
    const double diag = (hi - lo).norm();
    const double target = diag / std::cbrt(static_cast<double>(points.size())) + 1e-300;
    cell_ = diag > 0.0 ? std::max(target, diag * 1e-9) : 1.0;
    cmin_ = cell_index(lo);
    cmax_ = cell_index(hi);
    for (size_t i = 0; i < points.size(); ++i) cells_[key(cell_index(points[i]))].push_back(i);
  }

  double nearest_distance(const Vec3& query) const {
    const Eigen::Vector3i qc = cell_index(query);
    // Once this many rings are scanned, every occupied cell has been seen.
    int last_ring = 0;
    for (int k = 0; k < 3; ++k)
      last_ring = std::max(last_ring, std::max(std::abs(cmin_[k] - qc[k]),
                                               std::abs(cmax_[k] - qc[k])));
    double best2 = std::numeric_limits<double>::infinity();
    for (int ring = 0; ring <= last_ring; ++ring) {
      scan_ring(query, qc, ring, best2);
      // Points in cells beyond this ring are at least (ring * cell) away.
      if (best2 <= square(ring * cell_)) break;
    }
    return std::sqrt(best2);
  }

 private:
  static double square(double v) { return v * v; }

  Eigen::Vector3i cell_index(const Vec3& p) const {
    return Eigen::Vector3i(static_cast<int>(std::floor((p.x() - origin_.x()) / cell_)),
                           static_cast<int>(std::floor((p.y() - origin_.y()) / cell_)),
                           static_cast<int>(std::floor((p.z() - origin_.z()) / cell_)));
  }

  static uint64_t key(const Eigen::Vector3i& c) {
    const uint64_t x = static_cast<uint32_t>(c.x() + 0x40000);
    const uint64_t y = static_cast<uint32_t>(c.y() + 0x40000);
    const uint64_t z = static_cast<uint32_t>(c.z() + 0x40000);
    return (x << 42) ^ (y << 21) ^ z;
  }

  void scan_ring(const Vec3& query, const Eigen::Vector3i& qc, int ring, double& best2) const {
    for (int dz = -ring; dz <= ring; ++dz) {
      for (int dy = -ring; dy <= ring; ++dy) {
        for (int dx = -ring; dx <= ring; ++dx) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
          const Eigen::Vector3i c = qc + Eigen::Vector3i(dx, dy, dz);
          if ((c.array() < cmin_.array()).any() || (c.array() > cmax_.array()).any()) continue;
          const auto it = cells_.find(key(c));
          if (it == cells_.end()) continue;
          for (size_t i : it->second) best2 = std::min(best2, (points_[i] - query).squaredNorm());
        }
      }
    }
  }

  const std::vector<Vec3>& points_;
  Vec3 origin_ = Vec3::Zero();
  double cell_ = 1.0;
  Eigen::Vector3i cmin_ = Eigen::Vector3i::Zero();
  Eigen::Vector3i cmax_ = Eigen::Vector3i::Zero();
  std::unordered_map<uint64_t, std::vector<size_t>> cells_;
};

void directional_distances(const std::vector<Vec3>& from, const std::vector<Vec3>& to,
                           std::vector<double>& out) {
  PointGrid grid(to);
  for (const Vec3& p : from) out.push_back(grid.nearest_distance(p));
}

}  // namespace

ErrorSummary chamfer_distance(const std::vector<Vec3>& points_a,
                              const std::vector<Vec3>& points_b) {
  if (points_a.empty() || points_b.empty())
    throw Error(ErrorCode::EmptyCloud, "point cloud is empty");

  std::vector<double> ab, ba;
  ab.reserve(points_a.size());
  ba.reserve(points_b.size());
  directional_distances(points_a, points_b, ab);
  directional_distances(points_b, points_a, ba);

  double mean_ab = 0.0, mean_ba = 0.0;
  for (double d : ab) mean_ab += d;
  for (double d : ba) mean_ba += d;
  mean_ab /= ab.size();
  mean_ba /= ba.size();

  std::vector<double> pooled = ab;
  pooled.insert(pooled.end(), ba.begin(), ba.end());
  ErrorSummary out = summarize(std::move(pooled), "length", 0);
  out.mean = 0.5 * (mean_ab + mean_ba);
  return out;
}

double condition_number(const LightTriplet& L) {
  Eigen::JacobiSVD<Mat3> svd(L.matrix);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(2);
  if (smin <= smax * std::numeric_limits<double>::epsilon() || smin == 0.0)
    return std::numeric_limits<double>::infinity();
  return smax / smin;
}

}  // namespace rsweep
