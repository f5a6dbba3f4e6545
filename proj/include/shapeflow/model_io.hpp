#pragma once

#include <string>

#include "json.hpp"
#include "shapeflow/checkpoint.hpp"
#include "shapeflow/conditions.hpp"
#include "shapeflow/control_encoder.hpp"
#include "shapeflow/flow_model.hpp"
#include "shapeflow/vae.hpp"

namespace shapeflow {

nlohmann::json vae_config_json(const VaeConfig& cfg);
VaeConfig vae_config_from_json(const nlohmann::json& j);
nlohmann::json dit_config_json(const DitConfig& cfg);
DitConfig dit_config_from_json(const nlohmann::json& j);
nlohmann::json cenc_config_json(const ControlEncoderConfig& cfg);
ControlEncoderConfig cenc_config_from_json(const nlohmann::json& j);

void save_vae_checkpoint(const std::string& path, const ParamStore& params, const VaeConfig& cfg,
                         const nlohmann::json& train_config);
void save_flow_checkpoint(const std::string& path, const ParamStore& params, const VaeConfig& vcfg,
                          const DitConfig& dcfg, const ControlEncoderConfig& ccfg,
                          const nlohmann::json& train_config);
ParamStore load_vae_checkpoint(const std::string& path, VaeConfig* cfg_out);

// End-to-end conditioned generation: embed the depth image, encode the
// optional condition, cross-attend through the flow sampler, decode the
// sampled latent set and extract the mesh.
struct GenPipeline {
  ParamStore params;
  VaeConfig vae;
  DitConfig dit;
  ControlEncoderConfig cenc;

  static GenPipeline from_checkpoint(const std::string& path);

  Tensor sample_latent(const Tensor& depth, const UnifiedCondition* cond,
                       const FlowSampleConfig& cfg, uint64_t seed);
  Mesh generate(const Tensor& depth, const UnifiedCondition* cond, const FlowSampleConfig& cfg,
                uint64_t seed, int grid_res = 32);
};

}  // namespace shapeflow
