#pragma once

#include <string>
#include <vector>

#include "rsweep/geometry.hpp"
#include "rsweep/reparam.hpp"
#include "rsweep/sweeping.hpp"

namespace rsweep {

struct ErrorSummary {
  double mean = 0.0;
  double median = 0.0;
  double std_dev = 0.0;
  size_t count = 0;     // samples entering the statistics
  size_t excluded = 0;  // pixels dropped for being invalid in the estimate
  std::string units;
};

// Mean absolute depth difference over pixels valid in both the estimate and
// the ground-truth mask. Throws EmptyOverlap.
ErrorSummary mean_depth_error(const DepthResult& est, const Image& gt_depth, const Mask& mask);

// Mean angular error between unit normal fields, in degrees, over masked
// pixels. Throws EmptyOverlap.
ErrorSummary normal_mae(const Image& est_normals, const Image& gt_normals, const Mask& mask);

// Symmetric Chamfer distance: the mean of per-point nearest-neighbour
// distances A->B and B->A, averaged (mean-of-means). Statistics other than
// the mean are over the pooled directional distances. Grid-accelerated but
// exactly equal to the brute-force result. Throws EmptyCloud.
ErrorSummary chamfer_distance(const std::vector<Vec3>& points_a,
                              const std::vector<Vec3>& points_b);

// Ratio of the largest to smallest singular value; +infinity for singular
// matrices.
double condition_number(const LightTriplet& L);

}  // namespace rsweep
