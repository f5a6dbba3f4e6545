#include "shapeflow/figure.hpp"

#include <cmath>
#include <stdexcept>

namespace shapeflow {

bool ArticulatedFigure::valid(std::string* why) const {
  auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  if (bones.empty()) return fail("no bones");
  int roots = 0;
  for (size_t b = 0; b < bones.size(); ++b) {
    const Bone& bone = bones[b];
    if (bone.parent == -1) {
      ++roots;
    } else {
      if (bone.parent < 0 || bone.parent >= (int)b)
        return fail("parents must precede children");  // also guarantees acyclic
      if (norm(bone.rest_offset) == 0) return fail("non-root bone with zero offset");
    }
    if (!(bone.radius > 0)) return fail("non-positive bone radius");
  }
  if (roots != 1) return fail("figure must have exactly one root");
  return true;
}

bool PoseParams::within_limits() const {
  const double lim = M_PI / 2 + 1e-12;
  for (const auto& r : rotations)
    if (std::fabs(r.x) > lim || std::fabs(r.y) > lim || std::fabs(r.z) > lim) return false;
  return true;
}

std::vector<BonePose> forward_kinematics(const ArticulatedFigure& figure, const PoseParams& pose) {
  std::string why;
  if (!figure.valid(&why)) throw std::invalid_argument("forward_kinematics: " + why);
  if ((int)pose.rotations.size() != figure.bone_count())
    throw std::invalid_argument("forward_kinematics: pose length mismatch");
  if (!pose.within_limits())
    throw std::invalid_argument("forward_kinematics: joint limit violation");

  std::vector<BonePose> out(figure.bones.size());
  std::vector<Mat3> world_rot(figure.bones.size());
  for (size_t b = 0; b < figure.bones.size(); ++b) {
    const Bone& bone = figure.bones[b];
    Mat3 local = rotation_from_axis_angle(pose.rotations[b]);
    if (bone.parent == -1) {
      world_rot[b] = local;
      out[b].head = figure.root_head;
    } else {
      world_rot[b] = world_rot[bone.parent] * local;
      out[b].head = out[bone.parent].tail;
    }
    out[b].tail = out[b].head + world_rot[b] * bone.rest_offset;
  }
  return out;
}

SdfPrimitive figure_to_sdf(const ArticulatedFigure& figure, const PoseParams& pose) {
  auto posed = forward_kinematics(figure, pose);
  std::vector<SdfPrimitive> capsules;
  capsules.reserve(posed.size());
  for (size_t b = 0; b < posed.size(); ++b)
    capsules.push_back(SdfPrimitive::capsule(posed[b].head, posed[b].tail, figure.bones[b].radius));
  return SdfPrimitive::group(std::move(capsules));
}

ArticulatedFigure toy_humanoid() {
  // Pre-scaled by 0.75 so the longest chain plus radius stays inside the
  // canonical cube for any pose within joint limits.
  const double s = 0.75;
  ArticulatedFigure f;
  f.root_head = Vec3{0, -0.09, 0} * s;
  auto add = [&](int parent, Vec3 offset, double radius, const char* name) {
    f.bones.push_back({parent, offset * s, radius * s, name});
  };
  add(-1, {0, -0.135, 0}, 0.100, "pelvis");      // 0
  add(0, {0, 0.495, 0}, 0.105, "spine");          // 1
  add(1, {0, 0.270, 0}, 0.085, "head");           // 2
  add(1, {0.270, -0.045, 0}, 0.055, "upper_arm_l");   // 3
  add(3, {0.225, -0.045, 0}, 0.050, "forearm_l");     // 4
  add(1, {-0.270, -0.045, 0}, 0.055, "upper_arm_r");  // 5
  add(5, {-0.225, -0.045, 0}, 0.050, "forearm_r");    // 6
  add(0, {0.108, -0.270, 0}, 0.065, "thigh_l");   // 7
  add(7, {0, -0.315, 0}, 0.055, "shin_l");        // 8
  add(0, {-0.108, -0.270, 0}, 0.065, "thigh_r");  // 9
  add(9, {0, -0.315, 0}, 0.055, "shin_r");        // 10
  return f;
}

}  // namespace shapeflow
