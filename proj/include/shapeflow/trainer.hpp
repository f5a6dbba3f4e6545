#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shapeflow/control_encoder.hpp"
#include "shapeflow/flow_model.hpp"
#include "shapeflow/synthdata.hpp"
#include "shapeflow/tensor.hpp"
#include "shapeflow/vae.hpp"

namespace shapeflow {

struct TrainConfig {
  double learning_rate = 3e-4;  // paper-scale value 1e-5 stays available here
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  int batch_size = 1;
  int steps = 5000;
  // difficulty-aware draw; skeleton deliberately highest
  double w_skeleton = 0.4, w_point = 0.2, w_voxel = 0.2, w_bbox = 0.2;
  double condition_dropout_prob = 0.1;
  double grad_clip = 1.0;
  uint64_t seed = 0;

  // weights indexed by condition type id, normalized to sum 1
  std::vector<double> normalized_weights() const;

  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
};

// Categorical draw over type ids {0: skeleton, 1: point, 2: voxel, 3: bbox}.
int sample_modality(Rng& rng, const std::vector<double>& weights);

// Decoupled-weight-decay Adam with bias correction; updated values are
// f32-quantized so checkpoints round-trip exactly. Throws (with the
// parameter name) on non-finite gradients. step_index is 1-based.
void adamw_step(ParamStore& ps, const TrainConfig& cfg, int step_index);

// Scales all gradients so the global L2 norm is at most max_norm.
double clip_gradients(ParamStore& ps, double max_norm);

struct TrainResult {
  ParamStore params;
  std::vector<std::string> trace;  // "step,loss,modality,dropout_flag" rows
};

// Minimizes the VAE objective over non-held-out examples; deterministic per
// (config, dataset). Throws on non-finite loss with the step index.
TrainResult train_vae(const std::vector<DatasetExample>& dataset, const VaeConfig& vcfg,
                      const TrainConfig& tcfg);

// Conditioned flow matching: per step draw example and modality, encode the
// target to x1 (VAE posterior mean, precomputed), draw x0 and t, apply
// condition dropout, regress the velocity. The result carries the frozen
// vae.* parameters alongside dit.*, img.* and cenc.* so the checkpoint is
// self-contained.
TrainResult train_flow(const std::vector<DatasetExample>& dataset, const ParamStore& vae_params,
                       const VaeConfig& vcfg, const DitConfig& dcfg,
                       const ControlEncoderConfig& ccfg, const TrainConfig& tcfg);

void write_loss_trace(const std::string& path, const std::vector<std::string>& rows);

}  // namespace shapeflow
