#include "rsweep/sweeping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rsweep/parallel.hpp"
#include "rsweep/reparam.hpp"

namespace rsweep {

const char* patch_model_name(PatchModel model) {
  switch (model) {
    case PatchModel::FrontoParallel: return "fronto";
    case PatchModel::Slanted: return "slanted";
    case PatchModel::Surface: return "surface";
  }
  return "?";
}

PatchModel parse_patch_model(const std::string& name) {
  if (name == "fronto") return PatchModel::FrontoParallel;
  if (name == "slanted") return PatchModel::Slanted;
  if (name == "surface") return PatchModel::Surface;
  throw Error(ErrorCode::ConfigError, "unknown patch model '" + name + "'");
}

void validate_sweep_config(const SweepConfig& config) {
  if (!(config.z_min > 0.0) || !(config.z_max > config.z_min))
    throw Error(ErrorCode::ConfigError, "depth range must satisfy 0 < z_min < z_max");
  if (config.coarse_samples < 16)
    throw Error(ErrorCode::ConfigError, "coarse_samples must be >= 16");
  if (!(config.refine_tol > 0.0) || config.refine_tol > 1e-2)
    throw Error(ErrorCode::ConfigError, "refine_tol must be in (0, 1e-2]");
  if (config.patch_radius < 0)
    throw Error(ErrorCode::ConfigError, "patch_radius must be nonnegative");
  if (config.min_valid_views < 1)
    throw Error(ErrorCode::ConfigError, "min_valid_views must be >= 1");
  if (config.loss == LossKind::Combined && !(config.mu >= 0.0))
    throw Error(ErrorCode::ConfigError, "mu must be nonnegative");
}

std::optional<Patch> make_patch(const View& ref, const PixelI& center, int radius) {
  const int w = ref.maps.width();
  const int h = ref.maps.height();
  if (center.x < 0 || center.x >= w || center.y < 0 || center.y >= h) return std::nullopt;
  if (!ref.maps.masked_in(center.x, center.y)) return std::nullopt;

  Patch patch;
  patch.center = center;
  patch.radius = radius;
  for (int y = center.y - radius; y <= center.y + radius; ++y) {
    for (int x = center.x - radius; x <= center.x + radius; ++x) {
      if (x < 0 || x >= w || y < 0 || y >= h) continue;
      if (!ref.maps.masked_in(x, y)) continue;
      if (x == center.x && y == center.y)
        patch.center_index = static_cast<int>(patch.pixels.size());
      patch.pixels.push_back({x, y});
      Vec3 n_world(ref.maps.normals.at(x, y, 0), ref.maps.normals.at(x, y, 1),
                   ref.maps.normals.at(x, y, 2));
      patch.normals.push_back(ref.pose.rotation * n_world);
    }
  }
  return patch;
}

namespace {

// All three patch geometries reduce to member points z * beta_j * d_j with
// d_j the member's pixel ray; beta is independent of z.
std::vector<double> member_betas(PatchModel model, const Patch& patch,
                                 const CameraIntrinsics& intr, PatchIntegrator* integrator) {
  const size_t m = patch.pixels.size();
  std::vector<double> beta(m, 1.0);
  switch (model) {
    case PatchModel::FrontoParallel:
      break;
    case PatchModel::Slanted: {
      const Vec3 n_c = patch.normals[patch.center_index];
      const PixelI c = patch.center;
      const Vec3 d_c = intr.ray_dir({static_cast<double>(c.x), static_cast<double>(c.y)});
      const double num = n_c.dot(d_c);
      for (size_t j = 0; j < m; ++j) {
        const Vec3 d = intr.ray_dir(
            {static_cast<double>(patch.pixels[j].x), static_cast<double>(patch.pixels[j].y)});
        const double denom = n_c.dot(d);
        if (std::abs(denom) / d.norm() < 1e-9)
          throw Error(ErrorCode::RayPlaneParallel, "pixel ray is parallel to the slanted plane");
        beta[j] = num / denom;
      }
      break;
    }
    case PatchModel::Surface: {
      ScaleField scales;
      if (integrator)
        scales = integrator->integrate(intr, patch);
      else
        scales = integrate_patch(intr, patch);
      beta = std::move(scales.alphas);
      break;
    }
  }
  return beta;
}

// Per-pixel, z-independent arrays consumed by the cost kernels.
struct PixelBatch {
  int m = 0;
  int q = 1;
  std::vector<double> g;  // controls * 3 * m, camera-frame ray scale
  std::vector<double> h;  // controls * 3
  std::vector<double> L;     // 9 * m
  std::vector<double> vref;  // 3q * m
  std::vector<double> n1;    // 3 * m
  std::vector<double> r1;    // q * m
};

PixelBatch build_batch(const Patch& patch, PatchModel model, LossKind loss, const View& ref,
                       const std::vector<const View*>& controls, PatchIntegrator* integrator) {
  const int m = static_cast<int>(patch.pixels.size());
  const int q = ref.maps.q();
  const std::vector<double> beta = member_betas(model, patch, ref.intrinsics, integrator);

  PixelBatch batch;
  batch.m = m;
  batch.q = q;

  // World-frame member directions: X_world(z) = z * w_j + C_ref.
  std::vector<Vec3> w(m);
  const Mat3 ref_R_t = ref.pose.rotation.transpose();
  for (int j = 0; j < m; ++j) {
    const Vec3 d = ref.intrinsics.ray_dir(
        {static_cast<double>(patch.pixels[j].x), static_cast<double>(patch.pixels[j].y)});
    w[j] = ref_R_t * (beta[j] * d);
  }
  const Vec3 c_ref = ref.pose.center();

  const size_t n_controls = controls.size();
  batch.g.resize(n_controls * 3 * m);
  batch.h.resize(n_controls * 3);
  for (size_t i = 0; i < n_controls; ++i) {
    const Mat3& R = controls[i]->pose.rotation;
    const Vec3 hv = R * c_ref + controls[i]->pose.translation;
    for (int k = 0; k < 3; ++k) batch.h[i * 3 + k] = hv[k];
    for (int j = 0; j < m; ++j) {
      const Vec3 gv = R * w[j];
      for (int k = 0; k < 3; ++k) batch.g[(i * 3 + k) * m + j] = gv[k];
    }
  }

  if (loss == LossKind::Reparam) {
    batch.L.resize(9 * m);
    batch.vref.resize(3 * q * m);
  } else {
    batch.n1.resize(3 * m);
    batch.r1.resize(static_cast<size_t>(q) * m);
  }
  for (int j = 0; j < m; ++j) {
    const PixelI px = patch.pixels[j];
    Vec3 n_world(ref.maps.normals.at(px.x, px.y, 0), ref.maps.normals.at(px.x, px.y, 1),
                 ref.maps.normals.at(px.x, px.y, 2));
    n_world.normalize();
    ReflectanceVec r;
    r.q = q;
    for (int c = 0; c < q; ++c) r.values[c] = ref.maps.reflectance.at(px.x, px.y, c);

    if (loss == LossKind::Reparam) {
      const LightTriplet triplet = optimal_triplet(n_world, 1.0);
      const RadianceVec v = render_pbr(r, n_world, triplet);
      for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col)
          batch.L[(3 * row + col) * m + j] = triplet.matrix(row, col);
      for (int c = 0; c < q; ++c)
        for (int row = 0; row < 3; ++row)
          batch.vref[(3 * c + row) * m + j] = v.values(row, c);
    } else {
      for (int k = 0; k < 3; ++k) batch.n1[k * m + j] = n_world[k];
      for (int c = 0; c < q; ++c) batch.r1[c * m + j] = r.values[c];
    }
  }
  return batch;
}

struct Session {
  const View* ref;
  std::vector<const View*> controls;
  std::vector<kernels::SampleRaster> rasters;
  SweepConfig config;
  kernels::KernelSet kernel;

  Session(const View& ref_view, const std::vector<View>& control_views,
          const SweepConfig& cfg)
      : ref(&ref_view), config(cfg), kernel(kernels::select(cfg.isa)) {
    controls.reserve(control_views.size());
    rasters.reserve(control_views.size());
    for (const View& v : control_views) {
      controls.push_back(&v);
      rasters.push_back(kernels::pack_sample_raster(v.maps));
    }
  }

  // Mean per-term cost at z, or nullopt when fewer than min_valid_views
  // control views contribute.
  std::optional<double> eval(const PixelBatch& batch, double z) const {
    double total = 0.0;
    int64_t count = 0;
    int contributing = 0;
    for (size_t i = 0; i < controls.size(); ++i) {
      kernels::ViewBatch vb;
      vb.m = batch.m;
      vb.q = batch.q;
      vb.gx = batch.g.data() + (i * 3 + 0) * batch.m;
      vb.gy = batch.g.data() + (i * 3 + 1) * batch.m;
      vb.gz = batch.g.data() + (i * 3 + 2) * batch.m;
      vb.hx = batch.h[i * 3 + 0];
      vb.hy = batch.h[i * 3 + 1];
      vb.hz = batch.h[i * 3 + 2];
      const CameraIntrinsics& intr = controls[i]->intrinsics;
      vb.fx = intr.fx;
      vb.fy = intr.fy;
      vb.cx = intr.cx;
      vb.cy = intr.cy;
      vb.raster = &rasters[i];

      kernels::CostAccum acc;
      if (config.loss == LossKind::Reparam) {
        kernels::ReparamTerms terms{batch.L.data(), batch.vref.data()};
        acc = kernel.reparam_cost(vb, terms, z);
      } else {
        kernels::CombinedTerms terms{batch.n1.data(), batch.r1.data(), config.mu};
        acc = kernel.combined_cost(vb, terms, z);
      }
      if (acc.count > 0) {
        ++contributing;
        total += acc.sum;
        count += acc.count;
      }
    }
    if (contributing < config.min_valid_views || count == 0) return std::nullopt;
    return total / static_cast<double>(count);
  }

  SweepResult sweep(const Patch& patch, PatchIntegrator* integrator) const {
    const PixelBatch batch =
        build_batch(patch, config.model, config.loss, *ref, controls, integrator);

    const double z_lo = config.z_min;
    const double z_hi = config.z_max;
    const int samples = config.coarse_samples;
    const double step = (z_hi - z_lo) / (samples - 1);

    double best_z = std::numeric_limits<double>::quiet_NaN();
    double best_cost = std::numeric_limits<double>::infinity();
    auto consider = [&](double z, double cost) {
      if (cost < best_cost || (cost == best_cost && z < best_z)) {
        best_cost = cost;
        best_z = z;
      }
    };

    int best_index = -1;
    for (int t = 0; t < samples; ++t) {
      const double z = z_lo + step * t;
      const std::optional<double> c = eval(batch, z);
      if (!c) continue;
      if (best_index < 0 || *c < best_cost) best_index = t;
      consider(z, *c);
    }
    if (best_index < 0)
      throw Error(ErrorCode::NoValidHypothesis, "every coarse depth sample failed");

    double lo = z_lo + step * std::max(0, best_index - 1);
    double hi = z_lo + step * std::min(samples - 1, best_index + 1);
    auto eval_or_inf = [&](double z) {
      const std::optional<double> c = eval(batch, z);
      return c ? *c : std::numeric_limits<double>::infinity();
    };

    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = eval_or_inf(x1);
    double f2 = eval_or_inf(x2);
    consider(x1, f1);
    consider(x2, f2);
    int iter = 0;
    while (hi - lo > config.refine_tol * 0.5 * (hi + lo) && iter++ < 256) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - invphi * (hi - lo);
        f1 = eval_or_inf(x1);
        consider(x1, f1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + invphi * (hi - lo);
        f2 = eval_or_inf(x2);
        consider(x2, f2);
      }
    }
    return SweepResult{best_z, best_cost};
  }
};

}  // namespace

std::vector<Vec3> patch_points(PatchModel model, double z, const Patch& patch,
                               const CameraIntrinsics& intr) {
  const std::vector<double> beta = member_betas(model, patch, intr, nullptr);
  std::vector<Vec3> points(patch.pixels.size());
  for (size_t j = 0; j < patch.pixels.size(); ++j) {
    const Vec3 d = intr.ray_dir(
        {static_cast<double>(patch.pixels[j].x), static_cast<double>(patch.pixels[j].y)});
    points[j] = z * beta[j] * d;
  }
  return points;
}

double reparam_cost(double z, const Patch& patch, const View& ref,
                    const std::vector<View>& controls, PatchModel model,
                    const SweepConfig& config) {
  SweepConfig cfg = config;
  cfg.loss = LossKind::Reparam;
  cfg.model = model;
  Session session(ref, controls, cfg);
  const PixelBatch batch =
      build_batch(patch, model, LossKind::Reparam, ref, session.controls, nullptr);
  const std::optional<double> c = session.eval(batch, z);
  if (!c) throw Error(ErrorCode::TooFewValidViews, "not enough control views contribute");
  return *c;
}

double combined_cost(double z, const Patch& patch, const View& ref,
                     const std::vector<View>& controls, PatchModel model, double mu,
                     const SweepConfig& config) {
  SweepConfig cfg = config;
  cfg.loss = LossKind::Combined;
  cfg.mu = mu;
  cfg.model = model;
  Session session(ref, controls, cfg);
  const PixelBatch batch =
      build_batch(patch, model, LossKind::Combined, ref, session.controls, nullptr);
  const std::optional<double> c = session.eval(batch, z);
  if (!c) throw Error(ErrorCode::TooFewValidViews, "not enough control views contribute");
  return *c;
}

SweepResult sweep_pixel(const PixelI& center, const SweepConfig& config, const View& ref,
                        const std::vector<View>& controls) {
  validate_sweep_config(config);
  const std::optional<Patch> patch = make_patch(ref, center, config.patch_radius);
  if (!patch)
    throw Error(ErrorCode::NoValidHypothesis, "patch is not constructible at this pixel");
  Session session(ref, controls, config);
  PatchIntegrator integrator;
  return session.sweep(*patch, &integrator);
}

DepthResult reconstruct_depth_map(size_t ref_index, const std::vector<View>& views,
                                  const SweepConfig& config) {
  validate_sweep_config(config);
  if (views.size() < 2)
    throw Error(ErrorCode::InsufficientViews, "reconstruction needs at least 2 views");
  if (ref_index >= views.size())
    throw Error(ErrorCode::ConfigError, "reference view index out of range");

  const View& ref = views[ref_index];
  std::vector<View> controls;
  controls.reserve(views.size() - 1);
  for (size_t i = 0; i < views.size(); ++i)
    if (i != ref_index) controls.push_back(views[i]);

  Session session(ref, controls, config);

  const int w = ref.maps.width();
  const int h = ref.maps.height();
  const float nan = std::numeric_limits<float>::quiet_NaN();
  DepthResult result;
  result.depth = Image(w, h, 1, nan);
  result.cost = Image(w, h, 1, nan);
  result.valid.assign(static_cast<size_t>(w) * h, 0);

  parallel_for(h, resolve_thread_count(config.threads), [&](int64_t y) {
    PatchIntegrator integrator;
    for (int x = 0; x < w; ++x) {
      if (!ref.maps.masked_in(x, static_cast<int>(y))) continue;
      const std::optional<Patch> patch =
          make_patch(ref, {x, static_cast<int>(y)}, config.patch_radius);
      if (!patch) continue;
      try {
        const SweepResult r = session.sweep(*patch, &integrator);
        result.depth.at(x, static_cast<int>(y)) = static_cast<float>(r.z);
        result.cost.at(x, static_cast<int>(y)) = static_cast<float>(r.cost);
        result.valid[static_cast<size_t>(y) * w + x] = 1;
      } catch (const Error&) {
        // Degenerate pixel (grazing patch, no valid hypothesis, ...): stays invalid.
      }
    }
  });
  return result;
}

}  // namespace rsweep
