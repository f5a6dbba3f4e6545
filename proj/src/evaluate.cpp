#include "shapeflow/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "shapeflow/io.hpp"
#include "shapeflow/parallel.hpp"
#include "shapeflow/rng.hpp"

namespace shapeflow {

double voxel_iou(const PointSet& a, const PointSet& b, int res) {
  auto va = voxelize(a, res);
  auto vb = voxelize(b, res);
  size_t i = 0, j = 0, inter = 0;
  while (i < va.size() && j < vb.size()) {
    if (va[i] == vb[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (va[i] < vb[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  size_t uni = va.size() + vb.size() - inter;
  return uni == 0 ? 0.0 : (double)inter / (double)uni;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

constexpr double kPenaltyDistance = 3.4641016151377544;  // 2*sqrt(3), cube diameter

Vec3 normalized_ratios(Vec3 extents) {
  double m = std::max(max_component(extents), 1e-9);
  return extents / m;
}

struct ExampleMetrics {
  std::vector<EvalRecord> rows;
};

ExampleMetrics eval_example(const DatasetExample& ex, GenPipeline& pipe, const EvalOptions& opts,
                            const ArticulatedFigure& figure) {
  ExampleMetrics out;
  auto want = [&](const char* m) { return opts.metrics.empty() || opts.metrics.count(m); };

  // modalities to evaluate: every stored condition plus the image-only path
  std::vector<std::pair<std::string, const UnifiedCondition*>> runs;
  UnifiedCondition point_eval;  // complete-mode rebuild, the controllability probe
  if (ex.conditions.count((int)CondType::point_cloud)) {
    auto pc = build_point_condition(ex.surface, 1024, PointCloudMode::complete,
                                    derive_seed(opts.seed, fnv1a64(ex.id + "#point")), 0.0);
    point_eval = canonicalize(pc);
    runs.push_back({"point", &point_eval});
  }
  for (int type_id : {(int)CondType::skeleton, (int)CondType::voxel, (int)CondType::bbox}) {
    auto it = ex.conditions.find(type_id);
    if (it != ex.conditions.end())
      runs.push_back({cond_type_name((CondType)type_id), &it->second});
  }
  runs.push_back({"none", nullptr});

  for (auto& [modality, cond] : runs) {
    EvalRecord rec;
    rec.id = ex.id;
    rec.modality = modality;
    uint64_t seed = derive_seed(opts.seed, fnv1a64(ex.id + ":" + modality));
    Mesh mesh = pipe.generate(ex.depth, cond, opts.sampling, seed, opts.mesh_res);

    PointSet gen;
    if (mesh.empty()) {
      rec.note = "empty mesh";
      if (want("chamfer")) rec.chamfer = kPenaltyDistance;
      if (want("iou")) rec.voxel_iou = 0.0;
      if (want("bbox") && modality == "bbox") rec.bbox_ratio_error = 1.0;
    } else {
      gen = sample_mesh_surface(mesh, opts.surface_samples, derive_seed(seed, 1));
      // clamp stray vertices into the canonical cube for voxel metrics
      PointSet gen_clamped = gen;
      for (auto& p : gen_clamped.points) {
        p.x = std::clamp(p.x, -1.0, 1.0);
        p.y = std::clamp(p.y, -1.0, 1.0);
        p.z = std::clamp(p.z, -1.0, 1.0);
      }
      if (want("chamfer")) rec.chamfer = chamfer(gen, ex.surface);
      if (want("iou")) rec.voxel_iou = voxel_iou(gen_clamped, ex.surface);
      if (want("bbox") && modality == "bbox" && cond) {
        Vec3 requested{0, 0, 0};
        for (int r = 0; r < cond->rows; ++r)
          requested = cwise_max(requested,
                                cwise_abs(Vec3{cond->at(r, 0), cond->at(r, 1), cond->at(r, 2)}));
        requested = normalized_ratios(requested);
        auto [lo, hi] = bbox_of(gen);
        Vec3 got = normalized_ratios((hi - lo) * 0.5);
        double err = 0;
        for (int a = 0; a < 3; ++a)
          err = std::max(err, std::fabs(got[a] / std::max(requested[a], 1e-9) - 1.0));
        rec.bbox_ratio_error = err;
      }
    }

    // pose alignment: requested skeleton heads vs the generated surface, for
    // both the skeleton-conditioned and the image-only run on figures
    if (want("joint") && ex.is_figure && (modality == "skeleton" || modality == "none")) {
      auto it = ex.conditions.find((int)CondType::skeleton);
      if (it != ex.conditions.end()) {
        const UnifiedCondition& skel = it->second;
        if (mesh.empty()) {
          rec.joint_error = kPenaltyDistance;
        } else {
          double total = 0;
          for (int b = 0; b < skel.rows; ++b) {
            Vec3 head{skel.at(b, 0), skel.at(b, 1), skel.at(b, 2)};
            double best = 1e30;
            for (const auto& p : gen.points) best = std::min(best, norm2(p - head));
            // medial proxy: nearest surface distance should be the bone radius
            total += std::fabs(std::sqrt(best) - figure.bones[b].radius);
          }
          rec.joint_error = total / skel.rows;
        }
      }
    }
    out.rows.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

EvalReport run_eval(const std::vector<DatasetExample>& dataset, GenPipeline& pipe,
                    const EvalOptions& opts) {
  if (opts.split != "held-out" && opts.split != "train" && opts.split != "all")
    throw std::invalid_argument("run_eval: split must be held-out, train or all");
  for (const auto& m : opts.metrics)
    if (m != "chamfer" && m != "bbox" && m != "joint" && m != "iou")
      throw std::invalid_argument("run_eval: unknown metric " + m);

  std::vector<const DatasetExample*> picked;
  for (const auto& ex : dataset) {
    bool held = is_held_out(ex.id);
    if (opts.split == "all" || (opts.split == "held-out" && held) ||
        (opts.split == "train" && !held))
      picked.push_back(&ex);
  }
  if (picked.empty()) throw std::invalid_argument("run_eval: split selected no examples");

  auto figure = toy_humanoid();
  std::vector<ExampleMetrics> per_example(picked.size());
  parallel_for((int64_t)picked.size(), [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i)
      per_example[i] = eval_example(*picked[i], pipe, opts, figure);
  });

  EvalReport report;
  for (auto& em : per_example)
    for (auto& row : em.rows) report.records.push_back(std::move(row));
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  std::map<std::string, std::map<std::string, std::vector<double>>> buckets;
  for (const auto& r : records) {
    nlohmann::json row;
    row["id"] = r.id;
    row["modality"] = r.modality;
    auto put = [&](const char* key, double v) {
      if (v >= 0) {
        row[key] = v;
        buckets[r.modality][key].push_back(v);
      }
    };
    put("chamfer", r.chamfer);
    put("bbox_ratio_error", r.bbox_ratio_error);
    put("joint_error", r.joint_error);
    put("voxel_iou", r.voxel_iou);
    if (r.skipped) row["skipped"] = true;
    if (!r.note.empty()) row["note"] = r.note;
    recs.push_back(std::move(row));
  }

  nlohmann::json aggregates;
  for (const auto& [modality, metrics] : buckets) {
    nlohmann::json m;
    for (const auto& [name, values] : metrics) {
      double mean = 0;
      for (double v : values) mean += v;
      mean /= (double)values.size();
      m[name] = {{"count", values.size()}, {"mean", mean}, {"median", median(values)}};
    }
    aggregates[modality] = std::move(m);
  }

  nlohmann::json out;
  out["records"] = std::move(recs);
  out["aggregates"] = std::move(aggregates);
  return out;
}

}  // namespace shapeflow
