#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shapeflow/conditions.hpp"
#include "shapeflow/figure.hpp"
#include "shapeflow/mesh.hpp"
#include "shapeflow/sdf.hpp"
#include "shapeflow/tensor.hpp"

namespace shapeflow {

enum class ShapeCategory { box_like, sphere_like, capsule_like, table_like };

const char* category_name(ShapeCategory c);
ShapeCategory category_from_name(const std::string& name);

struct ShapeSpec {
  ShapeCategory category = ShapeCategory::box_like;
  Vec3 ratios{1, 1, 1};
  SdfPrimitive primitive;  // posed and normalized into [-1,1]^3
};

// Unposed composition for a category; ratios control the axis proportions.
SdfPrimitive make_primitive(ShapeCategory cat, const Vec3& ratios);

// Uniformly rescales the primitive so a 512-point surface probe peaks at
// `target` absolute coordinate.
void normalize_to_canonical(SdfPrimitive* prim, uint64_t probe_seed, double target = 0.9);

// n specs cycling the four categories, ratios log-uniform in [1/3, 3], a
// small random rotation, normalized to the canonical cube; deterministic per
// (seed, index).
std::vector<ShapeSpec> gen_primitive_dataset(int n, uint64_t seed);

// Orthographic depth over a `res` x `res` grid from an axis-aligned view
// direction (+-x, +-y, +-z). Pixel (row r, col c) maps to plane coordinates
// v = -1 + 2r/res, u = -1 + 2c/res, so the image center is sampled exactly.
// Rays sphere-trace the SDF; hits record travelled depth in [0,2], misses
// the 2.0 sentinel.
Tensor render_depth(const SdfPrimitive& prim, const Vec3& view = {0, 0, 1}, int res = 32);

struct PosePair {
  PoseParams pose_image, pose_target;
  Tensor depth;           // render of the image-side pose
  SkeletonCond skeleton;  // target-side pose
  PointSet surface;       // target-side surface, 2048 points with normals
  SdfPrimitive shape_target;
};

// Independent random poses for the image and the target; the building block
// with explicit poses is exposed for the degenerate A == B case.
PosePair make_pose_pair(const ArticulatedFigure& figure, uint64_t seed);
PosePair make_pose_pair_with(const ArticulatedFigure& figure, const PoseParams& pose_image,
                             const PoseParams& pose_target, uint64_t sample_seed);

// One dataset example; conditions are precomputed per modality and keyed by
// type id. For primitive bbox pairs, surface_bbox holds the anisotropically
// scaled target backing the deliberately image-misaligned pair.
struct DatasetExample {
  std::string id;
  std::string category;
  uint64_t seed = 0;
  bool is_figure = false;
  SdfPrimitive shape;  // target geometry
  PointSet surface;    // target surface, 2048 points with normals
  PointSet surface_bbox;
  Tensor depth;  // 32 x 32 image-side render
  std::map<int, UnifiedCondition> conditions;
  // spec.json payload for rebuild
  Vec3 ratios{1, 1, 1};
  PoseParams pose_image, pose_target;
};

DatasetExample build_full_example(const ShapeSpec& spec, uint64_t seed, bool random_view = false);
DatasetExample build_full_example(const ArticulatedFigure& figure, uint64_t seed,
                                  bool random_view = false);

// Spec operation: assembles the example restricted to one requested
// modality. Skeleton on a primitive spec is an error.
DatasetExample make_training_example(const ShapeSpec& spec, CondType modality, uint64_t seed);
DatasetExample make_training_example(const ArticulatedFigure& figure, CondType modality,
                                     uint64_t seed);

struct GenDataOptions {
  int num = 0;
  uint64_t seed = 0;
  double figures_frac = 0.0;
  bool random_view = false;
};

// Writes the dataset layout (per-example directory with depth.f32 + sidecar,
// surface.ply, cond_<type>.json, spec.json, plus a root manifest.jsonl) and
// returns the manifest hash.
std::string generate_dataset(const std::string& out_dir, const GenDataOptions& opts);

struct LoadedDataset {
  std::vector<DatasetExample> examples;
  std::string manifest_hash;
};

LoadedDataset load_dataset(const std::string& dir);

// Deterministic 10% held-out split by id hash.
bool is_held_out(const std::string& id);

}  // namespace shapeflow
