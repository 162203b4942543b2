#include <doctest.h>

#include <cmath>
#include <random>

#include "rsweep/metrics.hpp"
#include "rsweep/synth.hpp"
#include "test_helpers.hpp"

using namespace rsweep;
using namespace rsweep::testing;

namespace {

DepthResult make_estimate(const Image& depth) {
  DepthResult est;
  est.depth = depth;
  est.cost = Image(depth.width, depth.height, 1, 0.0f);
  est.valid.assign(depth.pixel_count(), 1);
  return est;
}

}  // namespace

TEST_CASE("mean_depth_error: exact, translated, and checkerboard cases") {
  Image gt(8, 8, 1, 2.0f);
  Mask mask(64, 1);

  CHECK(mean_depth_error(make_estimate(gt), gt, mask).mean == 0.0);

  Image shifted = gt;
  for (float& v : shifted.data) v += 0.5f;
  const ErrorSummary t = mean_depth_error(make_estimate(shifted), gt, mask);
  CHECK(t.mean == doctest::Approx(0.5));
  CHECK(t.std_dev == doctest::Approx(0.0));

  Image checker = gt;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) checker.at(x, y) += ((x + y) % 2 == 0) ? 1.0f : -1.0f;
  const ErrorSummary c = mean_depth_error(make_estimate(checker), gt, mask);
  CHECK(c.mean == doctest::Approx(1.0));
  CHECK(c.std_dev == doctest::Approx(0.0));
  CHECK(c.median == doctest::Approx(1.0));
}

TEST_CASE("mean_depth_error: exclusion accounting and empty overlap") {
  Image gt(4, 4, 1, 1.0f);
  Mask mask(16, 1);
  DepthResult est = make_estimate(gt);
  est.valid[0] = 0;
  est.valid[5] = 0;
  const ErrorSummary e = mean_depth_error(est, gt, mask);
  CHECK(e.count == 14);
  CHECK(e.excluded == 2);

  est.valid.assign(16, 0);
  CHECK_THROWS_AS(mean_depth_error(est, gt, mask), Error);
}

TEST_CASE("mean_depth_error is invariant to pixel permutation") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> depth(1.0, 3.0);
  Image gt(16, 16, 1), est_img(16, 16, 1);
  for (size_t i = 0; i < gt.data.size(); ++i) {
    gt.data[i] = static_cast<float>(depth(rng));
    est_img.data[i] = static_cast<float>(depth(rng));
  }
  Mask mask(256, 1);
  const double base = mean_depth_error(make_estimate(est_img), gt, mask).mean;

  // Apply the same permutation to both rasters.
  std::vector<size_t> perm(256);
  for (size_t i = 0; i < 256; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  Image gt_p = gt, est_p = est_img;
  for (size_t i = 0; i < 256; ++i) {
    gt_p.data[i] = gt.data[perm[i]];
    est_p.data[i] = est_img.data[perm[i]];
  }
  CHECK(mean_depth_error(make_estimate(est_p), gt_p, mask).mean == doctest::Approx(base));
}

TEST_CASE("normal_mae: identical, orthogonal, and noisy fields") {
  Image a(8, 8, 3), b(8, 8, 3);
  Mask mask(64, 1);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      a.at(x, y, 2) = 1.0f;
      b.at(x, y, 2) = 1.0f;
    }
  CHECK(normal_mae(a, b, mask).mean == doctest::Approx(0.0));

  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      b.at(x, y, 2) = 0.0f;
      b.at(x, y, 0) = 1.0f;
    }
  CHECK(normal_mae(a, b, mask).mean == doctest::Approx(90.0));
}

TEST_CASE("normal_mae matches the folded-Gaussian prediction") {
  const Vec3 n(0, 0, -1);
  const ViewMaps clean = constant_maps(1000, 1000, n, 0.5);
  NoiseSpec spec;
  spec.normal_sigma_deg = 4.0;
  spec.seed = 21;
  const ViewMaps noisy = add_normal_noise(clean, spec);
  const ErrorSummary mae = normal_mae(noisy.normals, clean.normals, clean.mask);
  const double expected = 4.0 * std::sqrt(2.0 / M_PI);
  CHECK(std::abs(mae.mean - expected) / expected < 0.05);
}

TEST_CASE("chamfer_distance: identities and the two-point example") {
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::vector<Vec3> cloud;
  for (int i = 0; i < 100; ++i) cloud.emplace_back(coord(rng), coord(rng), coord(rng));
  CHECK(chamfer_distance(cloud, cloud).mean == 0.0);

  const std::vector<Vec3> two{Vec3(0, 0, 0), Vec3(1, 0, 0)};
  std::vector<Vec3> shifted = two;
  for (Vec3& p : shifted) p += Vec3(0, 0.25, 0);
  CHECK(chamfer_distance(two, shifted).mean == doctest::Approx(0.25));

  CHECK_THROWS_AS(chamfer_distance({}, two), Error);
}

TEST_CASE("chamfer_distance: grid equals brute force") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  std::vector<Vec3> a, b;
  for (int i = 0; i < 1000; ++i) a.emplace_back(coord(rng), coord(rng), coord(rng));
  for (int i = 0; i < 800; ++i) b.emplace_back(coord(rng), coord(rng), coord(rng));
  // A few duplicated and far-away points to stress the grid.
  b.push_back(a[10]);
  b.emplace_back(50.0, 50.0, 50.0);

  auto brute_mean = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    double total = 0.0;
    for (const Vec3& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : to) best = std::min(best, (p - q).norm());
      total += best;
    }
    return total / from.size();
  };
  const double expected = 0.5 * (brute_mean(a, b) + brute_mean(b, a));
  CHECK(std::abs(chamfer_distance(a, b).mean - expected) < 1e-12);
}

TEST_CASE("chamfer_distance: symmetric and rigid-invariant") {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::vector<Vec3> a, b;
  for (int i = 0; i < 300; ++i) a.emplace_back(coord(rng), coord(rng), coord(rng));
  for (int i = 0; i < 200; ++i) b.emplace_back(coord(rng), coord(rng), coord(rng));

  CHECK(chamfer_distance(a, b).mean == doctest::Approx(chamfer_distance(b, a).mean));

  const Mat3 R = random_rotation(rng);
  const Vec3 t(0.3, -1.2, 0.8);
  std::vector<Vec3> a_t, b_t;
  for (const Vec3& p : a) a_t.push_back(R * p + t);
  for (const Vec3& p : b) b_t.push_back(R * p + t);
  CHECK(std::abs(chamfer_distance(a_t, b_t).mean - chamfer_distance(a, b).mean) < 1e-9);
}

TEST_CASE("condition_number: optimal, identity, and singular") {
  std::mt19937_64 rng(79);
  for (int t = 0; t < 100; ++t)
    CHECK(std::abs(condition_number(optimal_triplet(random_unit(rng))) - 1.0) < 1e-9);

  CHECK(condition_number(canonical_triplet()) == doctest::Approx(1.0));

  LightTriplet singular = canonical_triplet();
  singular.matrix.row(2) = 0.5 * (singular.matrix.row(0) + singular.matrix.row(1));
  CHECK(std::isinf(condition_number(singular)));

  // Condition number is always >= 1.
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    LightTriplet L;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) L.matrix(r, c) = coeff(rng);
    CHECK(condition_number(L) >= 1.0);
  }
}
