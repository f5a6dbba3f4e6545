#include "shapeflow/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "shapeflow/io.hpp"
#include "shapeflow/rng.hpp"

namespace shapeflow {

const char* cond_type_name(CondType t) {
  switch (t) {
    case CondType::skeleton: return "skeleton";
    case CondType::point_cloud: return "point";
    case CondType::voxel: return "voxel";
    case CondType::bbox: return "bbox";
  }
  return "unknown";
}

CondType cond_type_from_name(const std::string& name) {
  if (name == "skeleton") return CondType::skeleton;
  if (name == "point") return CondType::point_cloud;
  if (name == "voxel") return CondType::voxel;
  if (name == "bbox") return CondType::bbox;
  throw std::invalid_argument("unknown condition type: " + name);
}

Vec3 BBoxCond::half_extents() const {
  Vec3 he{0, 0, 0};
  for (const auto& v : vertices) he = cwise_max(he, cwise_abs(v));
  return he;
}

namespace {

// distinct uniform subset of [0, n), deterministic partial Fisher-Yates
std::vector<int> sample_indices(int n, int k, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    int j = i + (int)rng.uniform_int(uint64_t(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

PointCloudCond build_point_condition(const PointSet& surface, int resolution, PointCloudMode mode,
                                     uint64_t rng_seed, double noise_sigma,
                                     PartialBall* ball_out) {
  if (resolution != 512 && resolution != 1024 && resolution != 2048)
    throw std::invalid_argument("build_point_condition: resolution must be 512, 1024 or 2048");
  const int n = (int)surface.size();
  if (n < resolution)
    throw std::invalid_argument("build_point_condition: surface has fewer points than resolution");

  Rng rng(rng_seed);
  PointCloudCond out;
  out.mode = mode;
  out.points.reserve(resolution);

  if (mode == PointCloudMode::complete || mode == PointCloudMode::noisy) {
    for (int i : sample_indices(n, resolution, rng)) out.points.push_back(surface.points[i]);
    if (mode == PointCloudMode::noisy) {
      for (auto& p : out.points) {
        p.x = std::clamp(p.x + rng.normal(0.0, noise_sigma), -1.1, 1.1);
        p.y = std::clamp(p.y + rng.normal(0.0, noise_sigma), -1.1, 1.1);
        p.z = std::clamp(p.z + rng.normal(0.0, noise_sigma), -1.1, 1.1);
      }
    }
    return out;
  }

  // partial: delete the f-fraction of points nearest a random surface point,
  // then resample/pad the survivors back to the requested resolution
  double fraction = rng.uniform(0.25, 0.75);
  Vec3 center = surface.points[rng.uniform_int(uint64_t(n))];
  int delete_count = std::min(n - 1, (int)std::lround(fraction * n));
  std::vector<std::pair<double, int>> by_dist(n);
  for (int i = 0; i < n; ++i) by_dist[i] = {norm2(surface.points[i] - center), i};
  std::sort(by_dist.begin(), by_dist.end());
  double radius = std::sqrt(by_dist[delete_count - 1].first);
  std::vector<int> survivors;
  survivors.reserve(n - delete_count);
  for (int i = delete_count; i < n; ++i) survivors.push_back(by_dist[i].second);
  std::sort(survivors.begin(), survivors.end());  // restore input order
  if (ball_out) *ball_out = {center, radius, fraction};

  int keep = std::min((int)survivors.size(), resolution);
  for (int i : sample_indices((int)survivors.size(), keep, rng))
    out.points.push_back(surface.points[survivors[i]]);
  while ((int)out.points.size() < resolution) {
    int i = survivors[rng.uniform_int(survivors.size())];
    out.points.push_back(surface.points[i]);
  }
  return out;
}

VoxelCond build_voxel_condition(const PointSet& surface) {
  if (surface.points.empty()) throw std::invalid_argument("build_voxel_condition: empty surface");
  for (const auto& p : surface.points)
    if (std::fabs(p.x) > 1 || std::fabs(p.y) > 1 || std::fabs(p.z) > 1)
      throw std::invalid_argument("build_voxel_condition: point outside [-1,1]^3");
  VoxelCond out;
  out.resolution = 16;
  for (const auto& v : voxelize(surface, out.resolution)) {
    auto center = [&](int k) { return (k + 0.5) / out.resolution * 2.0 - 1.0; };
    out.centers.push_back({center(v.x), center(v.y), center(v.z)});
  }
  return out;
}

BBoxCond build_bbox_condition(double l, double w, double h) {
  if (!(l > 0) || !(w > 0) || !(h > 0))
    throw std::invalid_argument("build_bbox_condition: ratios must be positive");
  double m = std::max({l, w, h});
  Vec3 he{l / m, w / m, h / m};
  BBoxCond out;
  for (int k = 0; k < 8; ++k) {
    int g = k ^ (k >> 1);
    out.vertices[k] = {(g & 1) ? he.x : -he.x, (g & 2) ? he.y : -he.y, (g & 4) ? he.z : -he.z};
  }
  return out;
}

PointSet scale_points(const PointSet& points, const Vec3& scale) {
  PointSet out;
  out.points.reserve(points.points.size());
  for (const auto& p : points.points) out.points.push_back(cwise_mul(p, scale));
  if (points.has_normals()) {
    out.normals.reserve(points.normals.size());
    for (const auto& n : points.normals) {
      Vec3 t{n.x / scale.x, n.y / scale.y, n.z / scale.z};  // inverse transpose
      double len = norm(t);
      out.normals.push_back(len > 1e-18 ? t / len : n);
    }
  }
  return out;
}

std::pair<PointSet, BBoxCond> perturb_bbox_pair(const PointSet& shape_points, uint64_t rng_seed,
                                                Vec3* scale_out) {
  if (shape_points.points.empty()) throw std::invalid_argument("perturb_bbox_pair: empty input");
  Rng rng(rng_seed);
  Vec3 scale{rng.uniform(0.6, 1.4), rng.uniform(0.6, 1.4), rng.uniform(0.6, 1.4)};
  if (scale_out) *scale_out = scale;
  PointSet scaled = scale_points(shape_points, scale);
  auto [lo, hi] = bbox_of(scaled);
  Vec3 ext = (hi - lo) * 0.5;
  ext = cwise_max(ext, {1e-9, 1e-9, 1e-9});
  return {std::move(scaled), build_bbox_condition(ext.x, ext.y, ext.z)};
}

SkeletonCond build_skeleton_condition(const ArticulatedFigure& figure, const PoseParams& pose) {
  SkeletonCond out;
  for (const auto& bp : forward_kinematics(figure, pose))
    out.bones.push_back({bp.head.x, bp.head.y, bp.head.z, bp.tail.x, bp.tail.y, bp.tail.z});
  return out;
}

namespace {

UnifiedCondition repeat_channels(const std::vector<Vec3>& pts, CondType type) {
  UnifiedCondition out;
  out.rows = (int)pts.size();
  out.type_id = (int)type;
  out.payload.reserve(size_t(out.rows) * 6);
  for (const auto& p : pts) out.payload.insert(out.payload.end(), {p.x, p.y, p.z, p.x, p.y, p.z});
  return out;
}

}  // namespace

UnifiedCondition canonicalize(const SkeletonCond& cond) {
  UnifiedCondition out;
  out.rows = (int)cond.bones.size();
  out.type_id = (int)CondType::skeleton;
  out.payload.reserve(size_t(out.rows) * 6);
  for (const auto& row : cond.bones) out.payload.insert(out.payload.end(), row.begin(), row.end());
  return out;
}

UnifiedCondition canonicalize(const PointCloudCond& cond) {
  return repeat_channels(cond.points, CondType::point_cloud);
}

UnifiedCondition canonicalize(const VoxelCond& cond) {
  return repeat_channels(cond.centers, CondType::voxel);
}

UnifiedCondition canonicalize(const BBoxCond& cond) {
  return repeat_channels({cond.vertices.begin(), cond.vertices.end()}, CondType::bbox);
}

std::string condition_to_json(const UnifiedCondition& cond) {
  std::string out = "{\"type_id\":" + std::to_string(cond.type_id) +
                    ",\"rows\":" + std::to_string(cond.rows) + ",\"payload\":[";
  for (size_t i = 0; i < cond.payload.size(); ++i) {
    if (i) out += ',';
    out += format_g9((double)(float)cond.payload[i]);
  }
  out += "]}";
  return out;
}

UnifiedCondition condition_from_json(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  UnifiedCondition out;
  out.type_id = j.at("type_id").get<int>();
  out.rows = j.at("rows").get<int>();
  if (out.type_id < 0 || out.type_id > 3)
    throw std::invalid_argument("condition_from_json: bad type_id");
  const auto& payload = j.at("payload");
  if ((int)payload.size() != out.rows * 6)
    throw std::invalid_argument("condition_from_json: payload size != rows*6");
  out.payload.reserve(payload.size());
  for (const auto& v : payload) {
    double d = v.get<double>();
    if (!std::isfinite(d)) throw std::invalid_argument("condition_from_json: non-finite value");
    out.payload.push_back(d);
  }
  return out;
}

}  // namespace shapeflow
