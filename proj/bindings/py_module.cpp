// Python bindings for the core operations: SDF primitives, surface sampling,
// iso-surface extraction, voxelization, metrics, condition construction and
// the end-to-end generation pipeline.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shapeflow/conditions.hpp"
#include "shapeflow/evaluate.hpp"
#include "shapeflow/io.hpp"
#include "shapeflow/layers.hpp"
#include "shapeflow/marching_cubes.hpp"
#include "shapeflow/model_io.hpp"
#include "shapeflow/sdf.hpp"
#include "shapeflow/synthdata.hpp"

namespace py = pybind11;
using namespace shapeflow;

namespace {

PointSet pointset_from(py::array_t<double, py::array::c_style | py::array::forcecast> pts,
                       py::object normals = py::none()) {
  auto b = pts.request();
  if (b.ndim != 2 || b.shape[1] != 3) throw std::invalid_argument("points must be (N, 3)");
  PointSet out;
  const double* p = (const double*)b.ptr;
  out.points.resize(b.shape[0]);
  for (ssize_t i = 0; i < b.shape[0]; ++i) out.points[i] = {p[i * 3], p[i * 3 + 1], p[i * 3 + 2]};
  if (!normals.is_none()) {
    auto arr = normals.cast<py::array_t<double, py::array::c_style | py::array::forcecast>>();
    auto nb = arr.request();
    if (nb.ndim != 2 || nb.shape[1] != 3 || nb.shape[0] != b.shape[0])
      throw std::invalid_argument("normals must match points with shape (N, 3)");
    const double* n = (const double*)nb.ptr;
    out.normals.resize(nb.shape[0]);
    for (ssize_t i = 0; i < nb.shape[0]; ++i)
      out.normals[i] = {n[i * 3], n[i * 3 + 1], n[i * 3 + 2]};
  }
  return out;
}

py::array_t<double> vec3s_to_array(const std::vector<Vec3>& v) {
  py::array_t<double> out({(ssize_t)v.size(), (ssize_t)3});
  double* p = out.mutable_data();
  for (size_t i = 0; i < v.size(); ++i) {
    p[i * 3] = v[i].x;
    p[i * 3 + 1] = v[i].y;
    p[i * 3 + 2] = v[i].z;
  }
  return out;
}

Vec3 vec3_from(py::handle seq) {
  auto t = seq.cast<std::vector<double>>();
  if (t.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return {t[0], t[1], t[2]};
}

Tensor tensor_from(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
  auto b = arr.request();
  if (b.ndim != 2) throw std::invalid_argument("expected a 2D array");
  Tensor t((int)b.shape[0], (int)b.shape[1]);
  const double* p = (const double*)b.ptr;
  std::copy(p, p + t.size(), t.v.begin());
  return t;
}

py::array_t<double> tensor_to_array(const Tensor& t) {
  py::array_t<double> out({(ssize_t)t.rows, (ssize_t)t.cols});
  std::copy(t.v.begin(), t.v.end(), out.mutable_data());
  return out;
}

py::tuple mesh_to_tuple(const Mesh& mesh) {
  py::array_t<double> verts = vec3s_to_array(mesh.vertices);
  py::array_t<int> tris({(ssize_t)mesh.triangles.size(), (ssize_t)3});
  int* tp = tris.mutable_data();
  for (size_t i = 0; i < mesh.triangles.size(); ++i) {
    tp[i * 3] = mesh.triangles[i][0];
    tp[i * 3 + 1] = mesh.triangles[i][1];
    tp[i * 3 + 2] = mesh.triangles[i][2];
  }
  return py::make_tuple(verts, tris);
}

UnifiedCondition condition_from_payload(const std::string& type,
                                        py::array_t<double, py::array::c_style | py::array::forcecast> data) {
  auto b = data.request();
  if (b.ndim != 2) throw std::invalid_argument("condition payload must be 2D");
  const double* p = (const double*)b.ptr;
  CondType t = cond_type_from_name(type);
  if (t == CondType::skeleton) {
    if (b.shape[1] != 6) throw std::invalid_argument("skeleton payload must be (M, 6)");
    SkeletonCond s;
    for (ssize_t i = 0; i < b.shape[0]; ++i)
      s.bones.push_back({p[i * 6], p[i * 6 + 1], p[i * 6 + 2], p[i * 6 + 3], p[i * 6 + 4],
                         p[i * 6 + 5]});
    return canonicalize(s);
  }
  if (b.shape[1] != 3) throw std::invalid_argument("payload must be (N, 3)");
  std::vector<Vec3> pts(b.shape[0]);
  for (ssize_t i = 0; i < b.shape[0]; ++i) pts[i] = {p[i * 3], p[i * 3 + 1], p[i * 3 + 2]};
  if (t == CondType::point_cloud) {
    PointCloudCond c;
    c.points = std::move(pts);
    return canonicalize(c);
  }
  if (t == CondType::voxel) {
    VoxelCond c;
    c.centers = std::move(pts);
    return canonicalize(c);
  }
  BBoxCond c;
  if (pts.size() != 8) throw std::invalid_argument("bbox payload must be (8, 3)");
  for (int i = 0; i < 8; ++i) c.vertices[i] = pts[i];
  return canonicalize(c);
}

}  // namespace

PYBIND11_MODULE(_shapeflow, m) {
  m.doc() = "Controllable 3D shape generation: geometry kernels, condition "
            "encoders and the flow-matching pipeline.";

  py::class_<SdfPrimitive>(m, "SdfPrimitive")
      .def_static("sphere",
                  [](double r, py::object center) {
                    return SdfPrimitive::sphere(
                        r, center.is_none() ? Vec3{0, 0, 0} : vec3_from(center));
                  },
                  py::arg("radius"), py::arg("center") = py::none())
      .def_static("box",
                  [](py::object half_extents, py::object translation) {
                    return SdfPrimitive::box(vec3_from(half_extents), Mat3::identity(),
                                             translation.is_none() ? Vec3{0, 0, 0}
                                                                   : vec3_from(translation));
                  },
                  py::arg("half_extents"), py::arg("translation") = py::none())
      .def_static("capsule",
                  [](py::object a, py::object b, double r) {
                    return SdfPrimitive::capsule(vec3_from(a), vec3_from(b), r);
                  },
                  py::arg("a"), py::arg("b"), py::arg("radius"))
      .def_static("ellipsoid",
                  [](py::object radii) { return SdfPrimitive::ellipsoid(vec3_from(radii)); },
                  py::arg("radii"))
      .def_static("group",
                  [](std::vector<SdfPrimitive> members) {
                    return SdfPrimitive::group(std::move(members));
                  },
                  py::arg("members"));

  m.def(
      "sdf_eval",
      [](const SdfPrimitive& prim, py::array_t<double, py::array::c_style | py::array::forcecast> q) {
        auto pts = pointset_from(q);
        // the single-count array_t ctor produces zero strides in pybind11 3.x
        py::array_t<double> out(std::vector<ssize_t>{(ssize_t)pts.points.size()});
        double* o = out.mutable_data();
        for (size_t i = 0; i < pts.points.size(); ++i) o[i] = sdf_eval(prim, pts.points[i]);
        return out;
      },
      py::arg("primitive"), py::arg("points"), "Signed distances, negative inside.");

  m.def(
      "sample_surface",
      [](const SdfPrimitive& prim, int n, uint64_t seed) {
        auto ps = sample_surface(prim, n, seed);
        return py::make_tuple(vec3s_to_array(ps.points), vec3s_to_array(ps.normals));
      },
      py::arg("primitive"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "make_sdf_grid",
      [](const SdfPrimitive& prim, int res) {
        auto grid = make_sdf_grid(prim, res);
        py::array_t<double> out({(ssize_t)res, (ssize_t)res, (ssize_t)res});
        std::copy(grid.values.begin(), grid.values.end(), out.mutable_data());
        return out;
      },
      py::arg("primitive"), py::arg("resolution"));

  m.def(
      "marching_cubes",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> values, double iso) {
        auto b = values.request();
        if (b.ndim != 3 || b.shape[0] != b.shape[1] || b.shape[1] != b.shape[2])
          throw std::invalid_argument("values must be (res, res, res)");
        SdfGrid grid;
        grid.resolution = (int)b.shape[0];
        const double* p = (const double*)b.ptr;
        grid.values.assign(p, p + (size_t)b.size);
        return mesh_to_tuple(marching_cubes(grid, iso));
      },
      py::arg("values"), py::arg("iso") = 0.0,
      "Extracts the iso-surface; returns (vertices, triangles).");

  m.def(
      "voxelize",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> pts, int res) {
        auto cells = voxelize(pointset_from(pts), res);
        py::array_t<int> out({(ssize_t)cells.size(), (ssize_t)3});
        int* o = out.mutable_data();
        for (size_t i = 0; i < cells.size(); ++i) {
          o[i * 3] = cells[i].x;
          o[i * 3 + 1] = cells[i].y;
          o[i * 3 + 2] = cells[i].z;
        }
        return out;
      },
      py::arg("points"), py::arg("resolution") = 16);

  m.def(
      "chamfer",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> a,
         py::array_t<double, py::array::c_style | py::array::forcecast> b) {
        return chamfer(pointset_from(a), pointset_from(b));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "bbox_of",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> pts) {
        auto [lo, hi] = bbox_of(pointset_from(pts));
        return py::make_tuple(py::make_tuple(lo.x, lo.y, lo.z), py::make_tuple(hi.x, hi.y, hi.z));
      },
      py::arg("points"));

  m.def(
      "render_depth",
      [](const SdfPrimitive& prim, py::object view, int res) {
        Vec3 v = view.is_none() ? Vec3{0, 0, 1} : vec3_from(view);
        return tensor_to_array(render_depth(prim, v, res));
      },
      py::arg("primitive"), py::arg("view") = py::none(), py::arg("resolution") = 32);

  m.def(
      "pos_embed",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> payload, int freqs) {
        return tensor_to_array(pos_embed(tensor_from(payload), freqs));
      },
      py::arg("payload"), py::arg("freqs"),
      "Sinusoidal features [x, sin(2^k pi x), cos(2^k pi x)], raw columns first.");

  py::class_<UnifiedCondition>(m, "Condition")
      .def_property_readonly("rows", [](const UnifiedCondition& c) { return c.rows; })
      .def_property_readonly("type_id", [](const UnifiedCondition& c) { return c.type_id; })
      .def_property_readonly("payload",
                             [](const UnifiedCondition& c) {
                               py::array_t<double> out({(ssize_t)c.rows, (ssize_t)6});
                               std::copy(c.payload.begin(), c.payload.end(), out.mutable_data());
                               return out;
                             })
      .def("to_json", [](const UnifiedCondition& c) { return condition_to_json(c); })
      .def_static("from_json",
                  [](const std::string& text) { return condition_from_json(text); });

  m.def("make_condition", &condition_from_payload, py::arg("type"), py::arg("data"),
        "Canonicalizes skeleton (M,6) or point/voxel (N,3) or bbox (8,3) data.");

  m.def(
      "bbox_condition",
      [](double l, double w, double h) {
        auto bbox = build_bbox_condition(l, w, h);
        return canonicalize(bbox);
      },
      py::arg("l"), py::arg("w"), py::arg("h"),
      "Corner condition for the requested aspect ratios, largest ratio pinned to 1.");

  m.def(
      "voxel_condition",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> pts) {
        return canonicalize(build_voxel_condition(pointset_from(pts)));
      },
      py::arg("surface_points"));

  m.def(
      "point_condition",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> pts, int resolution,
         const std::string& mode, uint64_t seed, double noise_sigma) {
        PointCloudMode m = PointCloudMode::complete;
        if (mode == "partial") m = PointCloudMode::partial;
        else if (mode == "noisy") m = PointCloudMode::noisy;
        else if (mode != "complete") throw std::invalid_argument("mode must be complete|partial|noisy");
        return canonicalize(
            build_point_condition(pointset_from(pts), resolution, m, seed, noise_sigma));
      },
      py::arg("surface_points"), py::arg("resolution") = 1024, py::arg("mode") = "complete",
      py::arg("seed") = 0, py::arg("noise_sigma") = 0.0);

  m.def(
      "skeleton_condition",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> pose) {
        auto fig = toy_humanoid();
        auto b = pose.request();
        if (b.ndim != 2 || b.shape[1] != 3 || b.shape[0] != fig.bone_count())
          throw std::invalid_argument("pose must be (11, 3) axis-angle rows");
        PoseParams p;
        const double* d = (const double*)b.ptr;
        for (ssize_t i = 0; i < b.shape[0]; ++i)
          p.rotations.push_back({d[i * 3], d[i * 3 + 1], d[i * 3 + 2]});
        return canonicalize(build_skeleton_condition(fig, p));
      },
      py::arg("pose"), "Skeleton condition for the 11-bone toy humanoid.");

  m.def(
      "humanoid_fk",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> pose) {
        auto fig = toy_humanoid();
        auto b = pose.request();
        if (b.ndim != 2 || b.shape[1] != 3 || b.shape[0] != fig.bone_count())
          throw std::invalid_argument("pose must be (11, 3) axis-angle rows");
        PoseParams p;
        const double* d = (const double*)b.ptr;
        for (ssize_t i = 0; i < b.shape[0]; ++i)
          p.rotations.push_back({d[i * 3], d[i * 3 + 1], d[i * 3 + 2]});
        auto fk = forward_kinematics(fig, p);
        std::vector<Vec3> heads, tails;
        for (const auto& bp : fk) {
          heads.push_back(bp.head);
          tails.push_back(bp.tail);
        }
        return py::make_tuple(vec3s_to_array(heads), vec3s_to_array(tails));
      },
      py::arg("pose"));

  m.def(
      "gen_dataset",
      [](const std::string& out_dir, int num, uint64_t seed, double figures_frac) {
        GenDataOptions opts;
        opts.num = num;
        opts.seed = seed;
        opts.figures_frac = figures_frac;
        return generate_dataset(out_dir, opts);
      },
      py::arg("out_dir"), py::arg("num"), py::arg("seed") = 0, py::arg("figures_frac") = 0.0,
      "Writes a synthetic dataset and returns the manifest hash.");

  py::class_<GenPipeline>(m, "Pipeline")
      .def_static("load", &GenPipeline::from_checkpoint, py::arg("checkpoint"))
      .def(
          "generate",
          [](GenPipeline& pipe, py::array_t<double, py::array::c_style | py::array::forcecast> depth,
             py::object cond, int steps, double guidance, uint64_t seed, int grid_res) {
            FlowSampleConfig cfg;
            cfg.euler_steps = steps;
            cfg.guidance_scale = guidance;
            const UnifiedCondition* cp = nullptr;
            UnifiedCondition held;
            if (!cond.is_none()) {
              held = cond.cast<UnifiedCondition>();
              cp = &held;
            }
            return mesh_to_tuple(pipe.generate(tensor_from(depth), cp, cfg, seed, grid_res));
          },
          py::arg("depth"), py::arg("condition") = py::none(), py::arg("steps") = 50,
          py::arg("guidance") = 1.0, py::arg("seed") = 0, py::arg("grid_res") = 32,
          "Returns (vertices, triangles) for the conditioned sample.")
      .def(
          "sample_latent",
          [](GenPipeline& pipe, py::array_t<double, py::array::c_style | py::array::forcecast> depth,
             py::object cond, int steps, double guidance, uint64_t seed) {
            FlowSampleConfig cfg;
            cfg.euler_steps = steps;
            cfg.guidance_scale = guidance;
            const UnifiedCondition* cp = nullptr;
            UnifiedCondition held;
            if (!cond.is_none()) {
              held = cond.cast<UnifiedCondition>();
              cp = &held;
            }
            return tensor_to_array(pipe.sample_latent(tensor_from(depth), cp, cfg, seed));
          },
          py::arg("depth"), py::arg("condition") = py::none(), py::arg("steps") = 50,
          py::arg("guidance") = 1.0, py::arg("seed") = 0);
}
