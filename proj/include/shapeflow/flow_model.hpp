#pragma once

#include <cstdint>

#include "shapeflow/layers.hpp"
#include "shapeflow/tensor.hpp"

namespace shapeflow {

// Velocity-field transformer over the latent set: per block, self-attention
// across the L latent tokens, cross-attention to the joint context
// [image tokens; control feature], and an MLP, all pre-norm. The timestep
// embedding is added to the tokens after the input projection.
struct DitConfig {
  int blocks = 4;
  int width = 64;
  int heads = 4;
  int latent_tokens = 32;  // L
  int latent_dim = 16;     // d
  int mlp_hidden = 256;
  int image_size = 32;  // depth raster side
  int patch = 4;        // tokens = (image_size/patch)^2 = 64

  int image_tokens() const { return (image_size / patch) * (image_size / patch); }
  int patch_values() const { return patch * patch; }
};

struct FlowSampleConfig {
  int euler_steps = 50;
  double guidance_scale = 1.0;
  double condition_dropout_prob = 0.1;  // training-time dropout
};

void init_flow_model(ParamStore& ps, const DitConfig& cfg, Rng& rng);

// 4x4 patches -> linear patch embedding + learned 2D positional embedding.
// Depth rasters use the +2.0 background sentinel. Throws on wrong raster
// shape or non-finite values.
int embed_image_node(Graph& g, ParamStore& ps, const DitConfig& cfg, const Tensor& depth);
Tensor embed_image(const Tensor& depth, ParamStore& ps, const DitConfig& cfg);

// Rectified path x_t = (1-t) x0 + t x1; the matching velocity target is
// x1 - x0, independent of t.
Tensor interpolate(const Tensor& x0, const Tensor& x1, double t);

int predict_velocity_node(Graph& g, ParamStore& ps, const DitConfig& cfg, int x_t, double t,
                          int context);
Tensor predict_velocity(const Tensor& x_t, double t, const Tensor& context, ParamStore& ps,
                        const DitConfig& cfg);

int fm_loss_node(Graph& g, ParamStore& ps, const DitConfig& cfg, const Tensor& x0,
                 const Tensor& x1, double t, int context);
double fm_loss(const Tensor& x0, const Tensor& x1, double t, const Tensor& context,
               ParamStore& ps, const DitConfig& cfg);

// Euler integration from seeded Gaussian noise. With guidance_scale != 1 the
// velocity is v_uncond + s (v_cond - v_uncond); context_uncond (image tokens
// only) is required in that case.
Tensor sample_flow(const Tensor& context, const Tensor* context_uncond,
                   const FlowSampleConfig& cfg, ParamStore& ps, const DitConfig& dit,
                   uint64_t rng_seed);

}  // namespace shapeflow
