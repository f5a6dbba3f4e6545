#include "shapeflow/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "shapeflow/io.hpp"
#include "shapeflow/rng.hpp"

namespace fs = std::filesystem;

namespace shapeflow {

const char* category_name(ShapeCategory c) {
  switch (c) {
    case ShapeCategory::box_like: return "box_like";
    case ShapeCategory::sphere_like: return "sphere_like";
    case ShapeCategory::capsule_like: return "capsule_like";
    case ShapeCategory::table_like: return "table_like";
  }
  return "unknown";
}

ShapeCategory category_from_name(const std::string& name) {
  if (name == "box_like") return ShapeCategory::box_like;
  if (name == "sphere_like") return ShapeCategory::sphere_like;
  if (name == "capsule_like") return ShapeCategory::capsule_like;
  if (name == "table_like") return ShapeCategory::table_like;
  throw std::invalid_argument("unknown shape category: " + name);
}

SdfPrimitive make_primitive(ShapeCategory cat, const Vec3& ratios) {
  if (!(ratios.x > 0 && ratios.y > 0 && ratios.z > 0))
    throw std::invalid_argument("make_primitive: ratios must be positive");
  const double base = 0.85;
  double m = std::max({ratios.x, ratios.y, ratios.z});
  Vec3 s = ratios * (base / m);
  switch (cat) {
    case ShapeCategory::box_like:
      return SdfPrimitive::box(s);
    case ShapeCategory::sphere_like:
      return SdfPrimitive::ellipsoid(s);
    case ShapeCategory::capsule_like: {
      // long axis from the largest ratio, radius from the middle one
      int axis = 0;
      if (s.y > s[axis]) axis = 1;
      if (s.z > s[axis]) axis = 2;
      double second = 0;
      for (int a = 0; a < 3; ++a)
        if (a != axis) second = std::max(second, s[a]);
      double r = std::clamp(0.5 * second, 0.08, 0.6);
      double half = std::max(base - r, r + 0.05);
      Vec3 dir{0, 0, 0};
      dir[axis] = 1.0;
      return SdfPrimitive::capsule(dir * -(half - r), dir * (half - r), r);
    }
    case ShapeCategory::table_like: {
      double sx = s.x, sy = s.y, sz = s.z;
      double th = std::min(std::max(0.04, 0.12 * sy), 0.45 * sy);
      double lr = std::clamp(0.3 * std::min(sx, sz), 0.02, 0.05);
      double lx = std::max(sx - 2.0 * lr, lr);
      double lz = std::max(sz - 2.0 * lr, lr);
      double leg_top = sy - 2.0 * th;
      double leg_bot = -sy + lr;
      if (leg_top <= leg_bot) leg_top = leg_bot + 0.02;
      std::vector<SdfPrimitive> parts;
      parts.push_back(
          SdfPrimitive::box({sx, th, sz}, Mat3::identity(), {0, sy - th, 0}));
      for (int ix : {-1, 1})
        for (int iz : {-1, 1})
          parts.push_back(SdfPrimitive::capsule({ix * lx, leg_bot, iz * lz},
                                                {ix * lx, leg_top, iz * lz}, lr));
      return SdfPrimitive::group(std::move(parts));
    }
  }
  throw std::invalid_argument("make_primitive: bad category");
}

void normalize_to_canonical(SdfPrimitive* prim, uint64_t probe_seed, double target) {
  auto probe = sample_surface(*prim, 512, probe_seed);
  double m = 0;
  for (const auto& p : probe.points) m = std::max(m, max_component(cwise_abs(p)));
  if (m > 1e-9) prim->scale_uniform(target / m);
}

namespace {

ShapeSpec random_shape_spec(ShapeCategory category, uint64_t seed) {
  Rng rng(derive_seed(seed, 100));
  ShapeSpec spec;
  spec.category = category;
  auto log_uniform = [&] { return std::exp(rng.uniform(-std::log(3.0), std::log(3.0))); };
  spec.ratios = {log_uniform(), log_uniform(), log_uniform()};
  spec.primitive = make_primitive(spec.category, spec.ratios);

  Mat3 rot;
  if (spec.category == ShapeCategory::table_like) {
    // keep tables upright; random yaw hides the legs differently
    rot = rotation_from_axis_angle({0, rng.uniform(0.0, M_PI), 0});
  } else {
    double z = rng.uniform(-1.0, 1.0);
    double phi = rng.uniform(0.0, 2.0 * M_PI);
    double sr = std::sqrt(std::max(0.0, 1.0 - z * z));
    Vec3 axis{sr * std::cos(phi), sr * std::sin(phi), z};
    rot = rotation_from_axis_angle(axis * rng.uniform(0.0, M_PI / 8.0));
  }
  // a group wrapper keeps the pose in one place for all kinds
  auto posed = SdfPrimitive::group({spec.primitive});
  posed.rotation = rot;
  spec.primitive = std::move(posed);
  normalize_to_canonical(&spec.primitive, derive_seed(seed, 101));
  return spec;
}

}  // namespace

std::vector<ShapeSpec> gen_primitive_dataset(int n, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_primitive_dataset: n must be >= 1");
  std::vector<ShapeSpec> specs;
  specs.reserve(n);
  for (int i = 0; i < n; ++i)
    specs.push_back(random_shape_spec((ShapeCategory)(i % 4), derive_seed(seed, (uint64_t)i)));
  return specs;
}

Tensor render_depth(const SdfPrimitive& prim, const Vec3& view, int res) {
  int axis = -1;
  double sign = 0;
  for (int a = 0; a < 3; ++a) {
    if (view[a] == 1.0 || view[a] == -1.0) {
      if (axis != -1) throw std::invalid_argument("render_depth: view must be axis-aligned");
      axis = a;
      sign = view[a];
    } else if (view[a] != 0.0) {
      throw std::invalid_argument("render_depth: view must be axis-aligned");
    }
  }
  if (axis == -1) throw std::invalid_argument("render_depth: zero view direction");
  Vec3 e1{0, 0, 0}, e2{0, 0, 0}, v{0, 0, 0};
  v[axis] = sign;
  e1[(axis + 1) % 3] = 1.0;
  e2[(axis + 2) % 3] = 1.0;

  Tensor depth(res, res);
  const double kHitEps = 1e-4;
  for (int r = 0; r < res; ++r) {
    double pv = -1.0 + 2.0 * r / res;
    for (int c = 0; c < res; ++c) {
      double pu = -1.0 + 2.0 * c / res;
      Vec3 origin = e1 * pu + e2 * pv + v;
      Vec3 dir = -v;
      double t = 0.0;
      double out = 2.0;
      for (int it = 0; it < 256 && t <= 2.0; ++it) {
        double d = sdf_eval(prim, origin + dir * t);
        if (d < kHitEps) {
          out = std::clamp(t, 0.0, 2.0);
          break;
        }
        t += std::max(d, kHitEps);
      }
      depth.at(r, c) = out;
    }
  }
  return depth;
}

PosePair make_pose_pair_with(const ArticulatedFigure& figure, const PoseParams& pose_image,
                             const PoseParams& pose_target, uint64_t sample_seed) {
  PosePair out;
  out.pose_image = pose_image;
  out.pose_target = pose_target;
  out.depth = render_depth(figure_to_sdf(figure, pose_image));
  out.skeleton = build_skeleton_condition(figure, pose_target);
  out.shape_target = figure_to_sdf(figure, pose_target);
  out.surface = sample_surface(out.shape_target, 2048, sample_seed);
  return out;
}

namespace {

PoseParams random_pose(const ArticulatedFigure& figure, Rng& rng) {
  PoseParams pose = PoseParams::rest(figure.bone_count());
  for (auto& r : pose.rotations) {
    r.x = rng.uniform(-0.6, 0.6);
    r.y = rng.uniform(-0.6, 0.6);
    r.z = rng.uniform(-0.6, 0.6);
  }
  return pose;
}

}  // namespace

PosePair make_pose_pair(const ArticulatedFigure& figure, uint64_t seed) {
  Rng rng(derive_seed(seed, 1));
  PoseParams a = random_pose(figure, rng);
  PoseParams b = random_pose(figure, rng);
  return make_pose_pair_with(figure, a, b, derive_seed(seed, 2));
}

namespace {

// shared point/voxel/bbox condition assembly from a target surface
void attach_common_conditions(DatasetExample* ex, uint64_t seed, bool figure_bbox) {
  Rng rng(derive_seed(seed, 10));
  const int resolutions[3] = {512, 1024, 2048};
  int resolution = resolutions[rng.uniform_int(3)];
  PointCloudMode mode = (PointCloudMode)rng.uniform_int(3);
  double sigma = rng.uniform(0.0, 0.02);
  auto pc = build_point_condition(ex->surface, resolution, mode, derive_seed(seed, 11), sigma);
  ex->conditions[(int)CondType::point_cloud] = canonicalize(pc);

  ex->conditions[(int)CondType::voxel] = canonicalize(build_voxel_condition(ex->surface));

  if (figure_bbox) {
    // pose misalignment already separates image and target; the bbox comes
    // straight from the target surface
    auto [lo, hi] = bbox_of(ex->surface);
    Vec3 extent = cwise_max((hi - lo) * 0.5, {1e-6, 1e-6, 1e-6});
    ex->conditions[(int)CondType::bbox] =
        canonicalize(build_bbox_condition(extent.x, extent.y, extent.z));
  } else {
    // shrink so the 1.4x worst-case scale stays inside the canonical cube,
    // then scale anisotropically; the scaled points are the bbox target
    double m = 0;
    for (const auto& p : ex->surface.points) m = std::max(m, max_component(cwise_abs(p)));
    double shrink = m > 1e-9 ? std::min(1.0, 0.7 / m) : 1.0;
    PointSet shrunk = scale_points(ex->surface, {shrink, shrink, shrink});
    auto [scaled, bbox] = perturb_bbox_pair(shrunk, derive_seed(seed, 12));
    ex->surface_bbox = std::move(scaled);
    ex->conditions[(int)CondType::bbox] = canonicalize(bbox);
  }
}

}  // namespace

DatasetExample build_full_example(const ShapeSpec& spec, uint64_t seed, bool random_view) {
  DatasetExample ex;
  ex.seed = seed;
  ex.is_figure = false;
  ex.category = category_name(spec.category);
  ex.ratios = spec.ratios;
  ex.shape = spec.primitive;
  ex.surface = sample_surface(ex.shape, 2048, derive_seed(seed, 1));
  Vec3 view{0, 0, 1};
  if (random_view) {
    Rng rng(derive_seed(seed, 3));
    int a = (int)rng.uniform_int(3);
    view = {0, 0, 0};
    view[a] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  }
  ex.depth = render_depth(ex.shape, view);
  attach_common_conditions(&ex, seed, /*figure_bbox=*/false);
  return ex;
}

DatasetExample build_full_example(const ArticulatedFigure& figure, uint64_t seed,
                                  bool random_view) {
  (void)random_view;  // figures render from the default view
  DatasetExample ex;
  ex.seed = seed;
  ex.is_figure = true;
  ex.category = "figure";
  auto pair = make_pose_pair(figure, seed);
  ex.shape = pair.shape_target;
  ex.surface = std::move(pair.surface);
  ex.depth = std::move(pair.depth);
  ex.pose_image = pair.pose_image;
  ex.pose_target = pair.pose_target;
  ex.conditions[(int)CondType::skeleton] = canonicalize(pair.skeleton);
  attach_common_conditions(&ex, seed, /*figure_bbox=*/true);
  return ex;
}

namespace {

DatasetExample restrict_to(DatasetExample ex, CondType modality) {
  auto it = ex.conditions.find((int)modality);
  if (it == ex.conditions.end())
    throw std::invalid_argument("make_training_example: modality unavailable for this spec");
  UnifiedCondition kept = it->second;
  ex.conditions.clear();
  ex.conditions[(int)modality] = std::move(kept);
  if (modality != CondType::bbox) ex.surface_bbox = PointSet{};
  return ex;
}

}  // namespace

DatasetExample make_training_example(const ShapeSpec& spec, CondType modality, uint64_t seed) {
  if (modality == CondType::skeleton)
    throw std::invalid_argument("make_training_example: skeleton modality needs a figure");
  return restrict_to(build_full_example(spec, seed), modality);
}

DatasetExample make_training_example(const ArticulatedFigure& figure, CondType modality,
                                     uint64_t seed) {
  return restrict_to(build_full_example(figure, seed), modality);
}

namespace {

nlohmann::json primitive_to_json(const SdfPrimitive& p) {
  nlohmann::json j;
  switch (p.kind) {
    case SdfPrimitive::Kind::sphere: j["kind"] = "sphere"; j["radius"] = p.radius; break;
    case SdfPrimitive::Kind::box:
      j["kind"] = "box";
      j["half_extents"] = {p.half_extents.x, p.half_extents.y, p.half_extents.z};
      break;
    case SdfPrimitive::Kind::capsule:
      j["kind"] = "capsule";
      j["radius"] = p.radius;
      j["seg_a"] = {p.seg_a.x, p.seg_a.y, p.seg_a.z};
      j["seg_b"] = {p.seg_b.x, p.seg_b.y, p.seg_b.z};
      break;
    case SdfPrimitive::Kind::ellipsoid:
      j["kind"] = "ellipsoid";
      j["radii"] = {p.radii.x, p.radii.y, p.radii.z};
      break;
    case SdfPrimitive::Kind::group: {
      j["kind"] = "group";
      nlohmann::json members = nlohmann::json::array();
      for (const auto& m : p.members) members.push_back(primitive_to_json(m));
      j["members"] = std::move(members);
      break;
    }
  }
  j["rotation"] = p.rotation.m;
  j["translation"] = {p.translation.x, p.translation.y, p.translation.z};
  return j;
}

SdfPrimitive primitive_from_json(const nlohmann::json& j) {
  SdfPrimitive p;
  std::string kind = j.at("kind").get<std::string>();
  auto vec3_of = [&](const char* key) {
    const auto& a = j.at(key);
    return Vec3{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
  };
  if (kind == "sphere") {
    p.kind = SdfPrimitive::Kind::sphere;
    p.radius = j.at("radius").get<double>();
  } else if (kind == "box") {
    p.kind = SdfPrimitive::Kind::box;
    p.half_extents = vec3_of("half_extents");
  } else if (kind == "capsule") {
    p.kind = SdfPrimitive::Kind::capsule;
    p.radius = j.at("radius").get<double>();
    p.seg_a = vec3_of("seg_a");
    p.seg_b = vec3_of("seg_b");
  } else if (kind == "ellipsoid") {
    p.kind = SdfPrimitive::Kind::ellipsoid;
    p.radii = vec3_of("radii");
  } else if (kind == "group") {
    p.kind = SdfPrimitive::Kind::group;
    for (const auto& m : j.at("members")) p.members.push_back(primitive_from_json(m));
  } else {
    throw std::runtime_error("unknown primitive kind: " + kind);
  }
  const auto& rot = j.at("rotation");
  for (int i = 0; i < 9; ++i) p.rotation.m[i] = rot.at(i).get<double>();
  p.translation = vec3_of("translation");
  return p;
}

nlohmann::json pose_to_json(const PoseParams& pose) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : pose.rotations) j.push_back({r.x, r.y, r.z});
  return j;
}

PoseParams pose_from_json(const nlohmann::json& j) {
  PoseParams pose;
  for (const auto& r : j)
    pose.rotations.push_back({r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()});
  return pose;
}

std::string depth_sidecar_json() {
  return "{\"background_sentinel\":2.0,\"height\":32,\"width\":32}";
}

}  // namespace

std::string generate_dataset(const std::string& out_dir, const GenDataOptions& opts) {
  if (opts.num < 1) throw std::invalid_argument("generate_dataset: num must be >= 1");
  if (opts.figures_frac < 0.0 || opts.figures_frac > 1.0)
    throw std::invalid_argument("generate_dataset: figures-frac must be in [0,1]");
  fs::create_directories(out_dir);

  auto figure = toy_humanoid();
  // deterministic stratification: example i is a figure when the running
  // count floor((i+1)*frac) increments
  auto figure_count_before = [&](int i) { return (int)std::floor(opts.figures_frac * i + 1e-9); };

  std::string manifest;
  int prim_index = 0;
  for (int i = 0; i < opts.num; ++i) {
    bool as_figure = figure_count_before(i + 1) > figure_count_before(i);
    uint64_t ex_seed = derive_seed(opts.seed, (uint64_t)i);
    DatasetExample ex;
    if (as_figure) {
      ex = build_full_example(figure, ex_seed, opts.random_view);
    } else {
      auto spec = random_shape_spec((ShapeCategory)(prim_index % 4), ex_seed);
      ++prim_index;
      ex = build_full_example(spec, ex_seed, opts.random_view);
    }
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "ex%05d", i);
    ex.id = idbuf;

    fs::path dir = fs::path(out_dir) / ex.id;
    fs::create_directories(dir);

    nlohmann::json spec_json;
    if (ex.is_figure) {
      spec_json["type"] = "figure";
      spec_json["template"] = "humanoid11";
      spec_json["pose_image"] = pose_to_json(ex.pose_image);
      spec_json["pose_target"] = pose_to_json(ex.pose_target);
    } else {
      spec_json["type"] = "primitive";
      spec_json["category"] = ex.category;
      spec_json["ratios"] = {ex.ratios.x, ex.ratios.y, ex.ratios.z};
      spec_json["primitive"] = primitive_to_json(ex.shape);
    }
    write_text_file((dir / "spec.json").string(), spec_json.dump());

    write_ply((dir / "surface.ply").string(), ex.surface);
    if (!ex.surface_bbox.points.empty())
      write_ply((dir / "surface_bbox.ply").string(), ex.surface_bbox);

    std::vector<float> raster(ex.depth.v.begin(), ex.depth.v.end());
    write_raw_f32((dir / "depth.f32").string(), raster, depth_sidecar_json());

    nlohmann::json cond_paths;
    for (const auto& [type_id, cond] : ex.conditions) {
      std::string name = std::string("cond_") + cond_type_name((CondType)type_id) + ".json";
      write_text_file((dir / name).string(), condition_to_json(cond));
      cond_paths[cond_type_name((CondType)type_id)] = ex.id + "/" + name;
    }

    nlohmann::json row;
    row["id"] = ex.id;
    row["category"] = ex.category;
    row["seed"] = ex.seed;
    nlohmann::json paths;
    paths["dir"] = ex.id;
    paths["spec"] = ex.id + "/spec.json";
    paths["surface"] = ex.id + "/surface.ply";
    if (!ex.surface_bbox.points.empty()) paths["surface_bbox"] = ex.id + "/surface_bbox.ply";
    paths["depth"] = ex.id + "/depth.f32";
    paths["conditions"] = std::move(cond_paths);
    row["paths"] = std::move(paths);
    manifest += row.dump();
    manifest += '\n';
  }
  write_text_file((fs::path(out_dir) / "manifest.jsonl").string(), manifest);
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx", (unsigned long long)fnv1a64(manifest));
  return hash;
}

LoadedDataset load_dataset(const std::string& dir) {
  std::string manifest = read_text_file((fs::path(dir) / "manifest.jsonl").string());
  LoadedDataset out;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx", (unsigned long long)fnv1a64(manifest));
  out.manifest_hash = hash;

  std::istringstream lines(manifest);
  std::string line;
  auto figure = toy_humanoid();
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    auto row = nlohmann::json::parse(line);
    DatasetExample ex;
    ex.id = row.at("id").get<std::string>();
    ex.category = row.at("category").get<std::string>();
    ex.seed = row.at("seed").get<uint64_t>();
    const auto& paths = row.at("paths");

    auto spec_json = nlohmann::json::parse(
        read_text_file((fs::path(dir) / paths.at("spec").get<std::string>()).string()));
    if (spec_json.at("type") == "figure") {
      ex.is_figure = true;
      ex.pose_image = pose_from_json(spec_json.at("pose_image"));
      ex.pose_target = pose_from_json(spec_json.at("pose_target"));
      ex.shape = figure_to_sdf(figure, ex.pose_target);
    } else {
      ex.is_figure = false;
      const auto& ratios = spec_json.at("ratios");
      ex.ratios = {ratios.at(0).get<double>(), ratios.at(1).get<double>(),
                   ratios.at(2).get<double>()};
      ex.shape = primitive_from_json(spec_json.at("primitive"));
    }

    ex.surface = read_ply((fs::path(dir) / paths.at("surface").get<std::string>()).string());
    if (paths.contains("surface_bbox"))
      ex.surface_bbox =
          read_ply((fs::path(dir) / paths.at("surface_bbox").get<std::string>()).string());

    auto raster = read_raw_f32((fs::path(dir) / paths.at("depth").get<std::string>()).string());
    if (raster.size() != 32 * 32) throw std::runtime_error("load_dataset: bad depth raster size");
    ex.depth = Tensor(32, 32);
    for (size_t i = 0; i < raster.size(); ++i) ex.depth.v[i] = raster[i];

    for (const auto& [name, rel] : paths.at("conditions").items()) {
      auto cond = condition_from_json(read_text_file((fs::path(dir) / rel.get<std::string>()).string()));
      ex.conditions[cond.type_id] = std::move(cond);
    }
    out.examples.push_back(std::move(ex));
  }
  return out;
}

bool is_held_out(const std::string& id) { return fnv1a64(id) % 10 == 0; }

}  // namespace shapeflow
