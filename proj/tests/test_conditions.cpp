#include <cmath>
#include <set>

#include "doctest.h"
#include "shapeflow/conditions.hpp"
#include "shapeflow/rng.hpp"
#include "shapeflow/sdf.hpp"

using namespace shapeflow;

namespace {

bool contains_point(const PointSet& haystack, const Vec3& p) {
  for (const auto& q : haystack.points)
    if (q.x == p.x && q.y == p.y && q.z == p.z) return true;
  return false;
}

}  // namespace

TEST_CASE("point condition complete mode subsets the input") {
  auto surface = sample_surface(SdfPrimitive::sphere(0.8), 2048, 1);
  auto cond = build_point_condition(surface, 512, PointCloudMode::complete, 7);
  REQUIRE(cond.points.size() == 512);
  for (const auto& p : cond.points) CHECK(contains_point(surface, p));

  // zero noise behaves like complete
  auto noisy0 = build_point_condition(surface, 512, PointCloudMode::noisy, 7, 0.0);
  for (const auto& p : noisy0.points) CHECK(contains_point(surface, p));
}

TEST_CASE("point condition validates resolution and input size") {
  auto surface = sample_surface(SdfPrimitive::sphere(0.8), 600, 2);
  CHECK_THROWS_AS(build_point_condition(surface, 1024, PointCloudMode::complete, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_point_condition(surface, 500, PointCloudMode::complete, 1),
                  std::invalid_argument);
}

TEST_CASE("point condition partial mode deletes a ball and pads to resolution") {
  auto surface = sample_surface(SdfPrimitive::sphere(0.9), 2048, 3);
  for (uint64_t seed = 0; seed < 8; ++seed) {
    PartialBall ball;
    auto cond = build_point_condition(surface, 1024, PointCloudMode::partial, seed, 0.0, &ball);
    REQUIRE((int)cond.points.size() == 1024);
    CHECK(ball.fraction >= 0.25);
    CHECK(ball.fraction <= 0.75);
    // oracle: re-apply the ball predicate; all outputs lie outside
    for (const auto& p : cond.points) CHECK(norm(p - ball.center) >= ball.radius - 1e-12);
    // and every output is a member of the surviving input points
    for (const auto& p : cond.points) CHECK(contains_point(surface, p));
  }
}

TEST_CASE("point condition noisy mode perturbs with the requested sigma") {
  auto surface = sample_surface(SdfPrimitive::sphere(0.5), 2048, 4);
  double sigma = 0.02;
  auto cond = build_point_condition(surface, 2048, PointCloudMode::noisy, 11, sigma);
  double sum2 = 0;
  int m = 0;
  // same seed, zero sigma reproduces the underlying subset for comparison
  auto base = build_point_condition(surface, 2048, PointCloudMode::noisy, 11, 0.0);
  for (size_t i = 0; i < cond.points.size(); ++i) {
    Vec3 d = cond.points[i] - base.points[i];
    sum2 += norm2(d);
    m += 3;
  }
  double est = std::sqrt(sum2 / m);
  CHECK(est == doctest::Approx(sigma).epsilon(0.1));
  for (const auto& p : cond.points) {
    CHECK(std::fabs(p.x) <= 1.1);
    CHECK(std::fabs(p.y) <= 1.1);
    CHECK(std::fabs(p.z) <= 1.1);
  }
}

TEST_CASE("builders are deterministic in the seed") {
  auto surface = sample_surface(SdfPrimitive::sphere(0.7), 2048, 5);
  for (auto mode : {PointCloudMode::complete, PointCloudMode::partial, PointCloudMode::noisy}) {
    auto a = build_point_condition(surface, 512, mode, 123, 0.01);
    auto b = build_point_condition(surface, 512, mode, 123, 0.01);
    REQUIRE(a.points.size() == b.points.size());
    for (size_t i = 0; i < a.points.size(); ++i) {
      CHECK(a.points[i].x == b.points[i].x);
      CHECK(a.points[i].y == b.points[i].y);
      CHECK(a.points[i].z == b.points[i].z);
    }
  }
}

TEST_CASE("voxel condition center remap") {
  PointSet single;
  single.points = {{0, 0, 0}};
  auto cond = build_voxel_condition(single);
  REQUIRE(cond.centers.size() == 1);
  CHECK(cond.centers[0].x == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(cond.centers[0].y == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(cond.centers[0].z == doctest::Approx(0.0625).epsilon(1e-15));

  single.points = {{-1, -1, -1}};
  cond = build_voxel_condition(single);
  CHECK(cond.centers[0].x == doctest::Approx(-0.9375).epsilon(1e-15));

  PointSet empty;
  CHECK_THROWS_AS(build_voxel_condition(empty), std::invalid_argument);
}

TEST_CASE("voxel condition equals brute-force oracle on a dense sphere") {
  auto surface = sample_surface(SdfPrimitive::sphere(0.9), 4096, 6);
  auto cond = build_voxel_condition(surface);
  std::set<std::array<int, 3>> oracle;
  for (const auto& p : surface.points) {
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a) {
      int k = (int)std::floor((p[a] + 1.0) / 2.0 * 16.0);
      c[a] = std::clamp(k, 0, 15);
    }
    oracle.insert(c);
  }
  REQUIRE(cond.centers.size() == oracle.size());
  size_t i = 0;
  for (const auto& c : oracle) {
    Vec3 want{(c[0] + 0.5) / 16.0 * 2.0 - 1.0, (c[1] + 0.5) / 16.0 * 2.0 - 1.0,
              (c[2] + 0.5) / 16.0 * 2.0 - 1.0};
    CHECK(cond.centers[i].x == doctest::Approx(want.x).epsilon(1e-15));
    CHECK(cond.centers[i].y == doctest::Approx(want.y).epsilon(1e-15));
    CHECK(cond.centers[i].z == doctest::Approx(want.z).epsilon(1e-15));
    ++i;
  }
}

TEST_CASE("voxel condition is idempotent on its own centers") {
  auto surface = sample_surface(SdfPrimitive::ellipsoid({0.8, 0.6, 0.4}), 2048, 8);
  auto cond = build_voxel_condition(surface);
  PointSet centers;
  centers.points = cond.centers;
  auto again = build_voxel_condition(centers);
  REQUIRE(again.centers.size() == cond.centers.size());
  for (size_t i = 0; i < cond.centers.size(); ++i) {
    CHECK(again.centers[i].x == cond.centers[i].x);
    CHECK(again.centers[i].y == cond.centers[i].y);
    CHECK(again.centers[i].z == cond.centers[i].z);
  }
}

TEST_CASE("bbox condition corners") {
  auto unit = build_bbox_condition(1, 1, 1);
  for (const auto& v : unit.vertices) {
    CHECK(std::fabs(v.x) == doctest::Approx(1.0));
    CHECK(std::fabs(v.y) == doctest::Approx(1.0));
    CHECK(std::fabs(v.z) == doctest::Approx(1.0));
  }
  // Gray-code order: adjacent corners differ in exactly one axis sign
  for (int k = 0; k + 1 < 8; ++k) {
    int diff = 0;
    for (int a = 0; a < 3; ++a)
      if (unit.vertices[k][a] != unit.vertices[k + 1][a]) ++diff;
    CHECK(diff == 1);
  }

  auto b = build_bbox_condition(2, 1, 1);
  Vec3 he = b.half_extents();
  CHECK(he.x == doctest::Approx(1.0));
  CHECK(he.y == doctest::Approx(0.5));
  CHECK(he.z == doctest::Approx(0.5));

  auto c = build_bbox_condition(3, 4, 5);
  he = c.half_extents();
  CHECK(he.x == doctest::Approx(0.6));
  CHECK(he.y == doctest::Approx(0.8));
  CHECK(he.z == doctest::Approx(1.0));
  // enumeration oracle: the 8 signed combinations all appear exactly once
  std::set<std::array<int, 3>> signs;
  for (const auto& v : c.vertices) {
    CHECK(std::fabs(std::fabs(v.x) - 0.6) < 1e-12);
    CHECK(std::fabs(std::fabs(v.y) - 0.8) < 1e-12);
    CHECK(std::fabs(std::fabs(v.z) - 1.0) < 1e-12);
    signs.insert({v.x > 0 ? 1 : -1, v.y > 0 ? 1 : -1, v.z > 0 ? 1 : -1});
  }
  CHECK(signs.size() == 8);

  CHECK_THROWS_AS(build_bbox_condition(0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_bbox_condition(1, -2, 1), std::invalid_argument);
}

TEST_CASE("bbox condition always pins the largest half-extent to 1") {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    double l = std::exp(rng.uniform(-1.0, 1.0));
    double w = std::exp(rng.uniform(-1.0, 1.0));
    double h = std::exp(rng.uniform(-1.0, 1.0));
    auto he = build_bbox_condition(l, w, h).half_extents();
    CHECK(max_component(he) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("perturb_bbox_pair identity and scaling behavior") {
  auto cube = sample_surface(SdfPrimitive::box({0.5, 0.5, 0.5}), 1024, 9);

  // identity scale: bbox matches the input's own bbox ratios
  auto scaled = scale_points(cube, {1, 1, 1});
  auto [lo, hi] = bbox_of(scaled);
  Vec3 ext = (hi - lo) * 0.5;
  auto direct = build_bbox_condition(ext.x, ext.y, ext.z);
  auto [lo2, hi2] = bbox_of(cube);
  Vec3 ext2 = (hi2 - lo2) * 0.5;
  auto from_input = build_bbox_condition(ext2.x, ext2.y, ext2.z);
  for (int k = 0; k < 8; ++k) {
    CHECK(direct.vertices[k].x == doctest::Approx(from_input.vertices[k].x));
    CHECK(direct.vertices[k].y == doctest::Approx(from_input.vertices[k].y));
  }

  // anisotropic scale (2,1,1) on a cube: recovered ratios are 2:1:1
  auto stretched = scale_points(cube, {2, 1, 1});
  auto [slo, shi] = bbox_of(stretched);
  Vec3 sext = (shi - slo) * 0.5;
  CHECK(sext.x / sext.y == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sext.y / sext.z == doctest::Approx(1.0).epsilon(1e-6));

  // scale range over many seeds
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    Vec3 s;
    auto [pts, bbox] = perturb_bbox_pair(cube, seed, &s);
    CHECK(s.x >= 0.6);
    CHECK(s.x <= 1.4);
    CHECK(s.y >= 0.6);
    CHECK(s.y <= 1.4);
    CHECK(s.z >= 0.6);
    CHECK(s.z <= 1.4);
    // per-axis extent of the perturbed set relative to original
    auto [plo, phi] = bbox_of(pts);
    Vec3 pext = (phi - plo) * 0.5;
    for (int a = 0; a < 3; ++a) {
      double ratio = pext[a] / ext2[a];
      CHECK(ratio >= 0.6 - 1e-9);
      CHECK(ratio <= 1.4 + 1e-9);
    }
  }
}

TEST_CASE("skeleton condition is the FK output flattened") {
  auto fig = toy_humanoid();
  auto rest = PoseParams::rest(fig.bone_count());
  auto cond = build_skeleton_condition(fig, rest);
  REQUIRE((int)cond.bones.size() == fig.bone_count());
  // rest pose: heads equal cumulative rest offsets
  auto fk = forward_kinematics(fig, rest);
  for (size_t b = 0; b < fk.size(); ++b) {
    CHECK(cond.bones[b][0] == fk[b].head.x);
    CHECK(cond.bones[b][5] == fk[b].tail.z);
    if (fig.bones[b].parent >= 0) {
      const auto& parent = fk[fig.bones[b].parent];
      CHECK(fk[b].head.x == parent.tail.x);
      CHECK(fk[b].head.y == parent.tail.y);
      CHECK(fk[b].head.z == parent.tail.z);
    }
  }

  PoseParams bad = rest;
  bad.rotations.pop_back();
  CHECK_THROWS_AS(build_skeleton_condition(fig, bad), std::invalid_argument);
}

TEST_CASE("single-bone 90 degree z rotation maps (x,y) to (-y,x)") {
  ArticulatedFigure fig;
  fig.root_head = {0, 0, 0};
  fig.bones.push_back({-1, {0.4, 0.2, 0}, 0.05, "only"});
  PoseParams pose{{Vec3{0, 0, M_PI / 2}}};
  auto fk = forward_kinematics(fig, pose);
  CHECK(fk[0].tail.x == doctest::Approx(-0.2).epsilon(1e-12));
  CHECK(fk[0].tail.y == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(fk[0].tail.z == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("canonicalize shapes, repeat rule and round trip") {
  // bbox: 8x6 with repeated channels
  auto bbox = build_bbox_condition(1, 1, 1);
  auto uni = canonicalize(bbox);
  CHECK(uni.rows == 8);
  CHECK(uni.type_id == 3);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 3; ++c) CHECK(uni.at(r, c) == uni.at(r, c + 3));

  // skeleton: M x 6 pass-through with type id 0
  SkeletonCond skel;
  for (int i = 0; i < 22; ++i)
    skel.bones.push_back({0.1 * i, 0.2, 0.3, 0.4, 0.5, 0.6 + 0.01 * i});
  auto us = canonicalize(skel);
  CHECK(us.rows == 22);
  CHECK(us.type_id == 0);
  for (int r = 0; r < 22; ++r)
    for (int c = 0; c < 6; ++c) CHECK(us.at(r, c) == skel.bones[r][c]);

  // point cloud: columns 0..2 equal the input points exactly
  auto surface = sample_surface(SdfPrimitive::sphere(0.6), 512, 13);
  PointCloudCond pc;
  pc.points = surface.points;
  auto up = canonicalize(pc);
  CHECK(up.rows == 512);
  CHECK(up.type_id == 1);
  for (int r = 0; r < up.rows; ++r) {
    CHECK(up.at(r, 0) == surface.points[r].x);
    CHECK(up.at(r, 1) == surface.points[r].y);
    CHECK(up.at(r, 2) == surface.points[r].z);
  }
}

TEST_CASE("canonicalize property: channel repeat + exact payload recovery, 10k conditions") {
  Rng rng(29);
  int checked = 0;
  while (checked < 10000) {
    int type = (int)rng.uniform_int(4);
    int n = 1 + (int)rng.uniform_int(24);
    UnifiedCondition uni;
    std::vector<Vec3> pts;
    if (type == 0) {
      SkeletonCond skel;
      for (int i = 0; i < n; ++i)
        skel.bones.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                              rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
      uni = canonicalize(skel);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < 6; ++c) REQUIRE(uni.at(r, c) == skel.bones[r][c]);
    } else {
      for (int i = 0; i < n; ++i)
        pts.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
      if (type == 1) {
        PointCloudCond c;
        c.points = pts;
        uni = canonicalize(c);
      } else if (type == 2) {
        VoxelCond c;
        c.centers = pts;
        uni = canonicalize(c);
      } else {
        BBoxCond c;
        pts.resize(8, Vec3{0.1, 0.2, 0.3});
        n = 8;
        for (int i = 0; i < 8; ++i) c.vertices[i] = pts[i];
        uni = canonicalize(c);
      }
      REQUIRE(uni.rows == n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < 3; ++c) {
          REQUIRE(uni.at(r, c) == pts[r][c]);           // exact recovery
          REQUIRE(uni.at(r, c) == uni.at(r, c + 3));    // channel repeat
        }
    }
    REQUIRE(uni.type_id == type);
    ++checked;
  }
}

TEST_CASE("condition JSON envelope round-trips f32-exactly") {
  auto surface = sample_surface(SdfPrimitive::sphere(0.77), 512, 15);
  PointCloudCond pc;
  pc.points = surface.points;
  auto uni = canonicalize(pc);
  auto text = condition_to_json(uni);
  auto back = condition_from_json(text);
  CHECK(back.rows == uni.rows);
  CHECK(back.type_id == uni.type_id);
  REQUIRE(back.payload.size() == uni.payload.size());
  for (size_t i = 0; i < uni.payload.size(); ++i)
    CHECK((float)back.payload[i] == (float)uni.payload[i]);

  CHECK_THROWS(condition_from_json("{\"type_id\":9,\"rows\":0,\"payload\":[]}"));
  CHECK_THROWS(condition_from_json("{\"type_id\":1,\"rows\":2,\"payload\":[1,2,3]}"));
}
