#pragma once

#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "shapeflow/model_io.hpp"
#include "shapeflow/synthdata.hpp"

namespace shapeflow {

// Intersection-over-union of the occupied voxel sets at `res`.
double voxel_iou(const PointSet& a, const PointSet& b, int res = 16);

struct EvalOptions {
  std::string split = "held-out";   // held-out | train | all
  std::set<std::string> metrics;    // subset of {chamfer,bbox,joint,iou}; empty = all
  FlowSampleConfig sampling;
  int mesh_res = 32;
  int surface_samples = 2048;
  uint64_t seed = 1234;
};

struct EvalRecord {
  std::string id;
  std::string modality;  // skeleton | point | voxel | bbox | none
  double chamfer = -1, bbox_ratio_error = -1, joint_error = -1, voxel_iou = -1;
  bool skipped = false;
  std::string note;
};

struct EvalReport {
  std::vector<EvalRecord> records;

  // aggregates (count/mean/median per modality and metric) are recomputed
  // from the records at serialization time
  nlohmann::json to_json() const;
};

double median(std::vector<double> values);

// Generates per example and modality (plus image-only) and measures
// alignment against the stored ground truth. Examples run in parallel under
// OMNI_THREADS; per-example seeds keep the report identical regardless of
// the worker count. The point modality is evaluated with a complete-mode
// 1024-point condition rebuilt from the stored surface.
EvalReport run_eval(const std::vector<DatasetExample>& dataset, GenPipeline& pipe,
                    const EvalOptions& opts);

}  // namespace shapeflow
