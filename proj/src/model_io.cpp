#include "shapeflow/model_io.hpp"

#include <stdexcept>

namespace shapeflow {

nlohmann::json vae_config_json(const VaeConfig& cfg) {
  return {{"latent_tokens", cfg.latent_tokens}, {"latent_dim", cfg.latent_dim},
          {"width", cfg.width},                 {"heads", cfg.heads},
          {"freqs", cfg.freqs},                 {"mlp_hidden", cfg.mlp_hidden},
          {"kl_weight", cfg.kl_weight},         {"logvar_clamp", cfg.logvar_clamp}};
}

VaeConfig vae_config_from_json(const nlohmann::json& j) {
  VaeConfig cfg;
  cfg.latent_tokens = j.at("latent_tokens").get<int>();
  cfg.latent_dim = j.at("latent_dim").get<int>();
  cfg.width = j.at("width").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.freqs = j.at("freqs").get<int>();
  cfg.mlp_hidden = j.at("mlp_hidden").get<int>();
  cfg.kl_weight = j.at("kl_weight").get<double>();
  cfg.logvar_clamp = j.at("logvar_clamp").get<double>();
  return cfg;
}

nlohmann::json dit_config_json(const DitConfig& cfg) {
  return {{"blocks", cfg.blocks},
          {"width", cfg.width},
          {"heads", cfg.heads},
          {"latent_tokens", cfg.latent_tokens},
          {"latent_dim", cfg.latent_dim},
          {"mlp_hidden", cfg.mlp_hidden},
          {"image_size", cfg.image_size},
          {"patch", cfg.patch}};
}

DitConfig dit_config_from_json(const nlohmann::json& j) {
  DitConfig cfg;
  cfg.blocks = j.at("blocks").get<int>();
  cfg.width = j.at("width").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.latent_tokens = j.at("latent_tokens").get<int>();
  cfg.latent_dim = j.at("latent_dim").get<int>();
  cfg.mlp_hidden = j.at("mlp_hidden").get<int>();
  cfg.image_size = j.at("image_size").get<int>();
  cfg.patch = j.at("patch").get<int>();
  return cfg;
}

nlohmann::json cenc_config_json(const ControlEncoderConfig& cfg) {
  return {{"freqs", cfg.freqs},
          {"point_channels", cfg.point_channels},
          {"type_dim", cfg.type_dim},
          {"repeats", cfg.repeats}};
}

ControlEncoderConfig cenc_config_from_json(const nlohmann::json& j) {
  ControlEncoderConfig cfg;
  cfg.freqs = j.at("freqs").get<int>();
  cfg.point_channels = j.at("point_channels").get<int>();
  cfg.type_dim = j.at("type_dim").get<int>();
  cfg.repeats = j.at("repeats").get<int>();
  return cfg;
}

void save_vae_checkpoint(const std::string& path, const ParamStore& params, const VaeConfig& cfg,
                         const nlohmann::json& train_config) {
  nlohmann::json meta;
  meta["kind"] = "vae";
  meta["vae"] = vae_config_json(cfg);
  meta["train"] = train_config;
  save_checkpoint(path, params, meta);
}

void save_flow_checkpoint(const std::string& path, const ParamStore& params, const VaeConfig& vcfg,
                          const DitConfig& dcfg, const ControlEncoderConfig& ccfg,
                          const nlohmann::json& train_config) {
  nlohmann::json meta;
  meta["kind"] = "flow";
  meta["vae"] = vae_config_json(vcfg);
  meta["dit"] = dit_config_json(dcfg);
  meta["cenc"] = cenc_config_json(ccfg);
  meta["train"] = train_config;
  save_checkpoint(path, params, meta);
}

ParamStore load_vae_checkpoint(const std::string& path, VaeConfig* cfg_out) {
  nlohmann::json meta;
  auto params = load_checkpoint(path, &meta);
  if (meta.at("kind") != "vae" && meta.at("kind") != "flow")
    throw std::runtime_error("expected a vae or flow checkpoint: " + path);
  if (cfg_out) *cfg_out = vae_config_from_json(meta.at("vae"));
  return params;
}

GenPipeline GenPipeline::from_checkpoint(const std::string& path) {
  nlohmann::json meta;
  GenPipeline pipe;
  pipe.params = load_checkpoint(path, &meta);
  if (meta.at("kind") != "flow")
    throw std::runtime_error("generate needs a flow checkpoint, got kind=" +
                             meta.at("kind").get<std::string>());
  pipe.vae = vae_config_from_json(meta.at("vae"));
  pipe.dit = dit_config_from_json(meta.at("dit"));
  pipe.cenc = cenc_config_from_json(meta.at("cenc"));
  return pipe;
}

Tensor GenPipeline::sample_latent(const Tensor& depth, const UnifiedCondition* cond,
                                  const FlowSampleConfig& cfg, uint64_t seed) {
  Tensor img = embed_image(depth, params, dit);
  Tensor ctx = img;
  if (cond) {
    Tensor beta = encode_condition(*cond, params, cenc);
    ctx = build_joint_condition(img, beta);
  }
  const bool guided = cfg.guidance_scale != 1.0 && cond != nullptr;
  if (guided) return sample_flow(ctx, &img, cfg, params, dit, seed);
  return sample_flow(ctx, nullptr, cfg, params, dit, seed);
}

Mesh GenPipeline::generate(const Tensor& depth, const UnifiedCondition* cond,
                           const FlowSampleConfig& cfg, uint64_t seed, int grid_res) {
  Tensor z = sample_latent(depth, cond, cfg, seed);
  return extract_mesh(z, grid_res, params, vae);
}

}  // namespace shapeflow
