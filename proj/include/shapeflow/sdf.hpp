#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shapeflow/mesh.hpp"
#include "shapeflow/vec3.hpp"

namespace shapeflow {

// Analytic signed-distance primitives used as synthetic ground truth.
// Distances are exact for sphere/box/capsule; the ellipsoid solves the
// closest-point problem iteratively to below 1e-6 absolute error.
struct SdfPrimitive {
  enum class Kind { sphere, box, capsule, ellipsoid, group };

  Kind kind = Kind::sphere;
  double radius = 1.0;         // sphere, capsule
  Vec3 half_extents{1, 1, 1};  // box
  Vec3 radii{1, 1, 1};         // ellipsoid
  Vec3 seg_a{0, 0, 0};         // capsule endpoints, local frame
  Vec3 seg_b{0, 0, 0};
  Mat3 rotation;               // local -> world
  Vec3 translation{0, 0, 0};
  std::vector<SdfPrimitive> members;  // group: union via min

  static SdfPrimitive sphere(double r, const Vec3& center = {0, 0, 0});
  static SdfPrimitive box(const Vec3& half_extents, const Mat3& rot = Mat3::identity(),
                          const Vec3& t = {0, 0, 0});
  static SdfPrimitive capsule(const Vec3& a, const Vec3& b, double r);
  static SdfPrimitive ellipsoid(const Vec3& radii, const Mat3& rot = Mat3::identity(),
                                const Vec3& t = {0, 0, 0});
  static SdfPrimitive group(std::vector<SdfPrimitive> members);

  // Uniformly scales every size parameter and translation; exact for all kinds.
  void scale_uniform(double s);

  bool valid(std::string* why = nullptr) const;
};

// Signed distance, negative inside. Exact except for ellipsoids (<= 1e-6)
// and the interior of groups (min underestimates interior distance where
// members overlap, which is the usual union convention).
double sdf_eval(const SdfPrimitive& prim, const Vec3& q);

// Outward unit gradient of the distance field, analytic per primitive.
Vec3 sdf_gradient(const SdfPrimitive& prim, const Vec3& q);

// Total surface area (exact; ellipsoid via Thomsen's approximation, only
// used for area-proportional sampling weights).
double surface_area(const SdfPrimitive& prim);

// Draws exactly n points on the surface with unit normals. Group members are
// picked area-proportionally and candidates interior to the union are
// rejected; throws after the iteration cap (64 * n attempts) is exhausted.
PointSet sample_surface(const SdfPrimitive& prim, int n, uint64_t rng_seed);

// Samples sdf_eval on the regular lattice over [-1,1]^3.
SdfGrid make_sdf_grid(const SdfPrimitive& prim, int resolution);

}  // namespace shapeflow
