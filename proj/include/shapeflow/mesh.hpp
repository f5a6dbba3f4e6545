#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "shapeflow/vec3.hpp"

namespace shapeflow {

// Explicit triangle surface. Indices are 0-based in memory; OBJ I/O
// converts to the 1-based convention on disk.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return triangles.empty(); }
  bool valid(std::string* why = nullptr) const;
};

struct PointSet {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty or same length as points

  size_t size() const { return points.size(); }
  bool has_normals() const { return !normals.empty(); }
};

// Signed distances sampled on a regular lattice over [-1,1]^3; lattice
// point k along an axis sits at -1 + 2k/(resolution-1).
struct SdfGrid {
  int resolution = 0;
  std::vector<double> values;  // index = (ix*res + iy)*res + iz

  double at(int ix, int iy, int iz) const {
    return values[(size_t(ix) * resolution + iy) * resolution + iz];
  }
  double& at(int ix, int iy, int iz) {
    return values[(size_t(ix) * resolution + iy) * resolution + iz];
  }
  double lattice_coord(int k) const { return -1.0 + 2.0 * k / (resolution - 1); }
};

struct VoxelCoord {
  int x = 0, y = 0, z = 0;
  friend bool operator==(const VoxelCoord&, const VoxelCoord&) = default;
  friend auto operator<=>(const VoxelCoord&, const VoxelCoord&) = default;
};

// Quantizes points in [-1,1]^3 onto a res^3 grid: u = (p+1)/2*res, cell =
// floor(u) clamped to res-1 on the upper boundary. Sorted, deduplicated.
std::vector<VoxelCoord> voxelize(const PointSet& points, int res = 16);

// Symmetric mean-of-means of nearest-neighbor Euclidean distances.
double chamfer(const PointSet& a, const PointSet& b);

// Componentwise min/max corners; throws on empty input.
std::pair<Vec3, Vec3> bbox_of(const PointSet& points);

// Area-weighted uniform sampling of a triangle mesh; normals are the face
// normals of the sampled triangles.
PointSet sample_mesh_surface(const Mesh& mesh, int n, uint64_t rng_seed);

}  // namespace shapeflow
