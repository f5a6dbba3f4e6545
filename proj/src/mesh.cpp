#include "shapeflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "shapeflow/parallel.hpp"
#include "shapeflow/rng.hpp"

namespace shapeflow {

bool Mesh::valid(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  for (const auto& v : vertices)
    if (!finite(v)) return fail("non-finite vertex");
  const int n = (int)vertices.size();
  for (const auto& t : triangles) {
    for (int i : t)
      if (i < 0 || i >= n) return fail("triangle index out of range");
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) return fail("degenerate triangle");
  }
  return true;
}

std::vector<VoxelCoord> voxelize(const PointSet& points, int res) {
  if (res < 1) throw std::invalid_argument("voxelize: res must be >= 1");
  std::vector<VoxelCoord> cells;
  cells.reserve(points.size());
  for (const auto& p : points.points) {
    VoxelCoord c;
    int* out[3] = {&c.x, &c.y, &c.z};
    for (int a = 0; a < 3; ++a) {
      double u = (p[a] + 1.0) * 0.5 * res;
      int k = (int)std::floor(u);
      *out[a] = std::clamp(k, 0, res - 1);
    }
    cells.push_back(c);
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

double chamfer(const PointSet& a, const PointSet& b) {
  if (a.points.empty() || b.points.empty())
    throw std::invalid_argument("chamfer: point sets must be nonempty");
  auto mean_nn = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    std::vector<double> nn(from.size());
    parallel_for((int64_t)from.size(), [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : to) best = std::min(best, norm2(from[i] - q));
        nn[i] = std::sqrt(best);
      }
    });
    double s = 0;
    for (double d : nn) s += d;
    return s / (double)from.size();
  };
  return 0.5 * (mean_nn(a.points, b.points) + mean_nn(b.points, a.points));
}

std::pair<Vec3, Vec3> bbox_of(const PointSet& points) {
  if (points.points.empty()) throw std::invalid_argument("bbox_of: empty point set");
  Vec3 lo = points.points[0], hi = points.points[0];
  for (const auto& p : points.points) {
    lo = cwise_min(lo, p);
    hi = cwise_max(hi, p);
  }
  return {lo, hi};
}

PointSet sample_mesh_surface(const Mesh& mesh, int n, uint64_t rng_seed) {
  if (n < 1) throw std::invalid_argument("sample_mesh_surface: n must be >= 1");
  if (mesh.triangles.empty()) throw std::invalid_argument("sample_mesh_surface: empty mesh");

  std::vector<double> cum(mesh.triangles.size());
  double total = 0;
  for (size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
    Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
    total += 0.5 * norm(cross(e1, e2));
    cum[i] = total;
  }
  if (total <= 0) throw std::invalid_argument("sample_mesh_surface: zero-area mesh");

  Rng rng(rng_seed);
  PointSet out;
  out.points.reserve(n);
  out.normals.reserve(n);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform() * total;
    size_t idx = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
    idx = std::min(idx, mesh.triangles.size() - 1);
    const auto& t = mesh.triangles[idx];
    double r1 = std::sqrt(rng.uniform());
    double r2 = rng.uniform();
    double w0 = 1.0 - r1, w1 = r1 * (1.0 - r2), w2 = r1 * r2;
    Vec3 p = mesh.vertices[t[0]] * w0 + mesh.vertices[t[1]] * w1 + mesh.vertices[t[2]] * w2;
    Vec3 nrm = cross(mesh.vertices[t[1]] - mesh.vertices[t[0]],
                     mesh.vertices[t[2]] - mesh.vertices[t[0]]);
    double len = norm(nrm);
    out.points.push_back(p);
    out.normals.push_back(len > 1e-18 ? nrm / len : Vec3{0, 0, 1});
  }
  return out;
}

}  // namespace shapeflow
