#pragma once

#include <string>
#include <vector>

#include "shapeflow/sdf.hpp"
#include "shapeflow/vec3.hpp"

namespace shapeflow {

// Bone tree for the toy articulated figure. Bone b starts at the tail of its
// parent; rest_offset is the head->tail vector in the parent-rotated frame.
struct Bone {
  int parent = -1;  // -1 for the root
  Vec3 rest_offset{0, 0, 0};
  double radius = 0.05;
  std::string name;
};

struct ArticulatedFigure {
  std::vector<Bone> bones;
  Vec3 root_head{0, 0, 0};

  int bone_count() const { return (int)bones.size(); }
  bool valid(std::string* why = nullptr) const;
};

// Per-bone joint rotation as an axis-angle vector; each component is limited
// to [-pi/2, pi/2].
struct PoseParams {
  std::vector<Vec3> rotations;

  static PoseParams rest(int bone_count) { return {std::vector<Vec3>(bone_count)}; }
  bool within_limits() const;
};

struct BonePose {
  Vec3 head, tail;
};

// Composes joint rotations root-to-leaf; head(b) == tail(parent(b)) exactly.
// Throws on pose length mismatch or limit violation.
std::vector<BonePose> forward_kinematics(const ArticulatedFigure& figure, const PoseParams& pose);

// Union of capsules along the posed bones.
SdfPrimitive figure_to_sdf(const ArticulatedFigure& figure, const PoseParams& pose);

// 11-bone humanoid (pelvis, spine, head, upper arms, forearms, thighs,
// shins), pre-scaled so every pose within joint limits stays in [-1,1]^3.
ArticulatedFigure toy_humanoid();

}  // namespace shapeflow
