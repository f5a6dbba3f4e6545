#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shapeflow/figure.hpp"
#include "shapeflow/mesh.hpp"
#include "shapeflow/vec3.hpp"

namespace shapeflow {

// Control-signal type ids, fixed across the whole system.
enum class CondType : int { skeleton = 0, point_cloud = 1, voxel = 2, bbox = 3 };

const char* cond_type_name(CondType t);
CondType cond_type_from_name(const std::string& name);

enum class PointCloudMode { complete, partial, noisy };

struct PointCloudCond {
  std::vector<Vec3> points;
  PointCloudMode mode = PointCloudMode::complete;
};

struct VoxelCond {
  std::vector<Vec3> centers;  // distinct voxel-center coordinates in [-1,1]^3
  int resolution = 16;
};

// Corners of an axis-aligned box {+-a,+-b,+-c} with max(a,b,c) == 1, emitted
// in Gray-code order over the sign bits: corner k has code g = k ^ (k >> 1),
// sign per axis = + when the bit is set (bit0=x, bit1=y, bit2=z).
struct BBoxCond {
  std::array<Vec3, 8> vertices;

  Vec3 half_extents() const;  // recovered (a, b, c)
};

struct SkeletonCond {
  std::vector<std::array<double, 6>> bones;  // head.xyz, tail.xyz per bone
};

// Any condition canonicalized to an N x 6 point set plus its type id. The
// 3-channel conditions carry their xyz duplicated into columns 3..5.
struct UnifiedCondition {
  int rows = 0;
  int type_id = 0;
  std::vector<double> payload;  // row-major, rows x 6

  double at(int r, int c) const { return payload[size_t(r) * 6 + c]; }
};

// Ball used by partial-mode deletion; exposed so tests can re-apply the
// predicate.
struct PartialBall {
  Vec3 center;
  double radius = 0;
  double fraction = 0;
};

PointCloudCond build_point_condition(const PointSet& surface, int resolution, PointCloudMode mode,
                                     uint64_t rng_seed, double noise_sigma = 0.0,
                                     PartialBall* ball_out = nullptr);

VoxelCond build_voxel_condition(const PointSet& surface);

BBoxCond build_bbox_condition(double l, double w, double h);

// Anisotropic scaling of a point set; normals are re-derived via the inverse
// transpose.
PointSet scale_points(const PointSet& points, const Vec3& scale);

// Draws a per-axis scale in U(0.6, 1.4)^3, scales the points, and returns
// them with the bounding box extracted from the scaled set; this is the
// deliberately image-misaligned training pair.
std::pair<PointSet, BBoxCond> perturb_bbox_pair(const PointSet& shape_points, uint64_t rng_seed,
                                                Vec3* scale_out = nullptr);

SkeletonCond build_skeleton_condition(const ArticulatedFigure& figure, const PoseParams& pose);

UnifiedCondition canonicalize(const SkeletonCond& cond);
UnifiedCondition canonicalize(const PointCloudCond& cond);
UnifiedCondition canonicalize(const VoxelCond& cond);
UnifiedCondition canonicalize(const BBoxCond& cond);

// JSON envelope {type_id, rows, payload}; floats are written with 9
// significant digits so the round trip is value-exact at f32.
std::string condition_to_json(const UnifiedCondition& cond);
UnifiedCondition condition_from_json(const std::string& json_text);

}  // namespace shapeflow
