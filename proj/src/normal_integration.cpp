#include "rsweep/normal_integration.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <queue>

#include "rsweep/error.hpp"

namespace rsweep {

Eigen::Vector2d log_depth_gradient(const CameraIntrinsics& intr, const Pixel& p, const Vec3& n) {
  const Vec3 d = intr.ray_dir(p);
  const double nd = n.dot(d);
  if (std::abs(nd) < 1e-3)
    throw Error(ErrorCode::GrazingNormal, "normal is near-perpendicular to the pixel ray");
  return {-n.x() / (intr.fx * nd), -n.y() / (intr.fy * nd)};
}

namespace {

struct Edge {
  int a, b;  // member indices, b is the +u or +v neighbour of a
};

// Window-local member index lookup; -1 for absent pixels.
std::vector<int> window_index(const Patch& patch) {
  const int side = 2 * patch.radius + 1;
  std::vector<int> idx(static_cast<size_t>(side) * side, -1);
  for (size_t j = 0; j < patch.pixels.size(); ++j) {
    const int lx = patch.pixels[j].x - (patch.center.x - patch.radius);
    const int ly = patch.pixels[j].y - (patch.center.y - patch.radius);
    idx[static_cast<size_t>(ly) * side + lx] = static_cast<int>(j);
  }
  return idx;
}

std::vector<Edge> build_edges(const Patch& patch) {
  const int side = 2 * patch.radius + 1;
  const std::vector<int> idx = window_index(patch);
  std::vector<Edge> edges;
  edges.reserve(2 * patch.pixels.size());
  for (int ly = 0; ly < side; ++ly) {
    for (int lx = 0; lx < side; ++lx) {
      const int a = idx[static_cast<size_t>(ly) * side + lx];
      if (a < 0) continue;
      if (lx + 1 < side) {
        const int b = idx[static_cast<size_t>(ly) * side + lx + 1];
        if (b >= 0) edges.push_back({a, b});
      }
      if (ly + 1 < side) {
        const int b = idx[static_cast<size_t>(ly + 1) * side + lx];
        if (b >= 0) edges.push_back({a, b});
      }
    }
  }
  return edges;
}

bool connected_to_center(const Patch& patch, const std::vector<Edge>& edges) {
  const int m = static_cast<int>(patch.pixels.size());
  std::vector<std::vector<int>> adj(m);
  for (const Edge& e : edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::vector<char> seen(m, 0);
  std::queue<int> queue;
  queue.push(patch.center_index);
  seen[patch.center_index] = 1;
  int reached = 1;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        queue.push(w);
      }
    }
  }
  return reached == m;
}

Eigen::MatrixXd system_matrix(const Patch& patch, const std::vector<Edge>& edges) {
  const int m = static_cast<int>(patch.pixels.size());
  const int c = patch.center_index;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<int>(edges.size()), m - 1);
  auto col = [c](int j) { return j < c ? j : j - 1; };
  for (size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].a != c) A(static_cast<int>(e), col(edges[e].a)) = -1.0;
    if (edges[e].b != c) A(static_cast<int>(e), col(edges[e].b)) = 1.0;
  }
  return A;
}

// Trapezoidal edge targets: the log-depth step between adjacent pixels is
// the average of the endpoint gradients along that axis.
Eigen::VectorXd edge_targets(const CameraIntrinsics& intr, const Patch& patch,
                             const std::vector<Edge>& edges) {
  std::vector<Eigen::Vector2d> grads(patch.pixels.size());
  for (size_t j = 0; j < patch.pixels.size(); ++j) {
    const Pixel p{static_cast<double>(patch.pixels[j].x), static_cast<double>(patch.pixels[j].y)};
    grads[j] = log_depth_gradient(intr, p, patch.normals[j]);
  }
  Eigen::VectorXd rhs(static_cast<int>(edges.size()));
  for (size_t e = 0; e < edges.size(); ++e) {
    const Edge& edge = edges[e];
    const int axis = patch.pixels[edge.b].x != patch.pixels[edge.a].x ? 0 : 1;
    rhs(static_cast<int>(e)) = 0.5 * (grads[edge.a](axis) + grads[edge.b](axis));
  }
  return rhs;
}

ScaleField solve_scales(const Patch& patch, const Eigen::MatrixXd& A,
                        const Eigen::LDLT<Eigen::MatrixXd>& factor,
                        const Eigen::VectorXd& rhs) {
  const int m = static_cast<int>(patch.pixels.size());
  Eigen::VectorXd x = factor.solve(A.transpose() * rhs);
  ScaleField out;
  out.alphas.resize(m);
  const int c = patch.center_index;
  for (int j = 0; j < m; ++j) {
    if (j == c)
      out.alphas[j] = 1.0;
    else
      out.alphas[j] = std::exp(x(j < c ? j : j - 1));
  }
  out.residual = (A * x - rhs).norm();
  return out;
}

void check_patch(const Patch& patch) {
  if (patch.pixels.empty() || patch.center_index < 0 ||
      patch.center_index >= static_cast<int>(patch.pixels.size()) ||
      !(patch.pixels[patch.center_index] == patch.center))
    throw Error(ErrorCode::SingularSystem, "patch does not contain its centre");
  if (patch.normals.size() != patch.pixels.size())
    throw Error(ErrorCode::SingularSystem, "patch normals/pixels size mismatch");
}

}  // namespace

ScaleField integrate_patch(const CameraIntrinsics& intr, const Patch& patch) {
  check_patch(patch);
  if (patch.pixels.size() == 1) return ScaleField{{1.0}, 0.0};
  const std::vector<Edge> edges = build_edges(patch);
  if (!connected_to_center(patch, edges))
    throw Error(ErrorCode::SingularSystem, "patch is disconnected after masking");
  const Eigen::MatrixXd A = system_matrix(patch, edges);
  const Eigen::LDLT<Eigen::MatrixXd> factor((A.transpose() * A).eval());
  if (factor.info() != Eigen::Success)
    throw Error(ErrorCode::SingularSystem, "normal-equation factorization failed");
  return solve_scales(patch, A, factor, edge_targets(intr, patch, edges));
}

struct PatchIntegrator::FullPatchFactor {
  std::vector<Edge> edges;
  Eigen::MatrixXd A;
  Eigen::LDLT<Eigen::MatrixXd> factor;
};

ScaleField PatchIntegrator::integrate(const CameraIntrinsics& intr, const Patch& patch) {
  check_patch(patch);
  if (patch.pixels.size() == 1) return ScaleField{{1.0}, 0.0};
  const size_t side = 2 * static_cast<size_t>(patch.radius) + 1;
  const bool full = patch.pixels.size() == side * side;
  if (!full) return integrate_patch(intr, patch);

  // A hole-free patch always yields the same system matrix; factorize once.
  if (full_radius_ != patch.radius) {
    auto f = std::make_shared<FullPatchFactor>();
    f->edges = build_edges(patch);
    f->A = system_matrix(patch, f->edges);
    f->factor.compute((f->A.transpose() * f->A).eval());
    if (f->factor.info() != Eigen::Success)
      throw Error(ErrorCode::SingularSystem, "normal-equation factorization failed");
    full_ = std::move(f);
    full_radius_ = patch.radius;
  }
  return solve_scales(patch, full_->A, full_->factor,
                      edge_targets(intr, patch, full_->edges));
}

}  // namespace rsweep
