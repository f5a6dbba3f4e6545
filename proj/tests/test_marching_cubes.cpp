#include <cmath>
#include <map>

#include "doctest.h"
#include "shapeflow/marching_cubes.hpp"
#include "shapeflow/sdf.hpp"

using namespace shapeflow;

namespace {

// counts undirected edge usage; watertight <=> every edge used exactly twice
bool watertight(const Mesh& mesh) {
  std::map<std::pair<int, int>, int> uses;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      uses[{std::min(a, b), std::max(a, b)}]++;
    }
  }
  for (const auto& [edge, n] : uses)
    if (n != 2) return false;
  return !uses.empty();
}

}  // namespace

TEST_CASE("marching cubes on constant grids is empty") {
  SdfGrid grid;
  grid.resolution = 8;
  grid.values.assign(8 * 8 * 8, 1.0);
  CHECK(marching_cubes(grid).empty());
  grid.values.assign(8 * 8 * 8, -1.0);
  CHECK(marching_cubes(grid).empty());
}

TEST_CASE("marching cubes sphere: vertices near surface, watertight") {
  auto prim = SdfPrimitive::sphere(0.5);
  auto grid = make_sdf_grid(prim, 32);
  auto mesh = marching_cubes(grid);
  REQUIRE(!mesh.empty());
  std::string why;
  CHECK(mesh.valid(&why));

  double cell_diag = 2.0 / 31.0 * std::sqrt(3.0);
  for (const auto& v : mesh.vertices) CHECK(std::fabs(norm(v) - 0.5) <= cell_diag);
  CHECK(watertight(mesh));
}

TEST_CASE("marching cubes vertices sit on straddling edges (linear interpolation)") {
  auto prim = SdfPrimitive::box({0.55, 0.35, 0.45}, rotation_from_axis_angle({0.2, 0.1, 0.4}));
  auto grid = make_sdf_grid(prim, 24);
  auto mesh = marching_cubes(grid);
  REQUIRE(!mesh.empty());
  CHECK(watertight(mesh));
  // every vertex must lie on a lattice edge: at most one coordinate off-lattice
  double step = 2.0 / 23.0;
  for (const auto& v : mesh.vertices) {
    int off_lattice = 0;
    for (int a = 0; a < 3; ++a) {
      double u = (v[a] + 1.0) / step;
      if (std::fabs(u - std::round(u)) > 1e-9) ++off_lattice;
    }
    CHECK(off_lattice <= 1);
    // and the interpolated SDF is near zero there
    CHECK(std::fabs(sdf_eval(prim, v)) <= 2.0 * step);
  }
}

TEST_CASE("marching cubes watertight across convex primitives") {
  std::vector<SdfPrimitive> prims = {
      SdfPrimitive::sphere(0.62),
      SdfPrimitive::ellipsoid({0.7, 0.5, 0.35}),
      SdfPrimitive::capsule({-0.3, -0.3, -0.2}, {0.3, 0.4, 0.2}, 0.25)};
  for (const auto& prim : prims) {
    auto mesh = marching_cubes(make_sdf_grid(prim, 20));
    REQUIRE(!mesh.empty());
    CHECK(watertight(mesh));
  }
}

TEST_CASE("marching cubes triangles face outward") {
  auto mesh = marching_cubes(make_sdf_grid(SdfPrimitive::sphere(0.5), 32));
  double agree = 0;
  for (const auto& t : mesh.triangles) {
    Vec3 a = mesh.vertices[t[0]], b = mesh.vertices[t[1]], c = mesh.vertices[t[2]];
    Vec3 n = cross(b - a, c - a);
    Vec3 centroid = (a + b + c) / 3.0;
    if (dot(n, centroid) > 0) agree += 1;
  }
  CHECK(agree == doctest::Approx((double)mesh.triangles.size()));
}
