#include "shapeflow/flow_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "shapeflow/rng.hpp"

namespace shapeflow {

void init_flow_model(ParamStore& ps, const DitConfig& cfg, Rng& rng) {
  const int w = cfg.width;
  init_linear(ps, "img.patch", cfg.patch_values(), w, rng);
  ps.add("img.pos", randn(cfg.image_tokens(), w, rng, 0.02));

  init_linear(ps, "dit.in", cfg.latent_dim, w, rng);
  init_mlp(ps, "dit.temb", w, w, rng);
  for (int b = 0; b < cfg.blocks; ++b) {
    std::string p = "dit.blk" + std::to_string(b);
    init_layer_norm(ps, p + ".ln1", w);
    init_attention(ps, p + ".self", w, rng);
    init_layer_norm(ps, p + ".ln2", w);
    init_attention(ps, p + ".cross", w, rng);
    init_layer_norm(ps, p + ".ln3", w);
    init_mlp(ps, p + ".mlp", w, cfg.mlp_hidden, rng);
  }
  init_layer_norm(ps, "dit.lnf", w);
  // zero-init output: the untrained model predicts zero velocity
  init_linear_zero(ps, "dit.out", w, cfg.latent_dim);
}

int embed_image_node(Graph& g, ParamStore& ps, const DitConfig& cfg, const Tensor& depth) {
  if (depth.rows != cfg.image_size || depth.cols != cfg.image_size)
    throw std::invalid_argument("embed_image: raster must be " + std::to_string(cfg.image_size) +
                                "x" + std::to_string(cfg.image_size));
  if (!depth.finite()) throw std::invalid_argument("embed_image: non-finite depth values");
  const int grid = cfg.image_size / cfg.patch;
  Tensor patches(cfg.image_tokens(), cfg.patch_values());
  for (int py = 0; py < grid; ++py)
    for (int px = 0; px < grid; ++px) {
      double* row = patches.row(py * grid + px);
      int at = 0;
      for (int dy = 0; dy < cfg.patch; ++dy)
        for (int dx = 0; dx < cfg.patch; ++dx)
          row[at++] = depth.at(py * cfg.patch + dy, px * cfg.patch + dx);
    }
  int tokens = linear(g, ps, "img.patch", g.value(std::move(patches)));
  return g.add(tokens, g.param(ps, "img.pos"));
}

Tensor embed_image(const Tensor& depth, ParamStore& ps, const DitConfig& cfg) {
  Graph g;
  return g.val(embed_image_node(g, ps, cfg, depth));
}

Tensor interpolate(const Tensor& x0, const Tensor& x1, double t) {
  if (!x0.same_shape(x1)) throw std::invalid_argument("interpolate: shape mismatch");
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("interpolate: t must be in [0,1]");
  Tensor out = x0;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = (1.0 - t) * x0.v[i] + t * x1.v[i];
  return out;
}

int predict_velocity_node(Graph& g, ParamStore& ps, const DitConfig& cfg, int x_t, double t,
                          int context) {
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("predict_velocity: t must be in [0,1]");
  int temb = mlp(g, ps, "dit.temb", g.value(timestep_features(t, cfg.width)));
  int h = g.add_rowvec(linear(g, ps, "dit.in", x_t), temb);
  for (int b = 0; b < cfg.blocks; ++b) {
    std::string p = "dit.blk" + std::to_string(b);
    int n1 = layer_norm(g, ps, p + ".ln1", h);
    h = g.add(h, attention(g, ps, p + ".self", n1, n1, cfg.heads));
    int n2 = layer_norm(g, ps, p + ".ln2", h);
    h = g.add(h, attention(g, ps, p + ".cross", n2, context, cfg.heads));
    h = g.add(h, mlp(g, ps, p + ".mlp", layer_norm(g, ps, p + ".ln3", h)));
  }
  return linear(g, ps, "dit.out", layer_norm(g, ps, "dit.lnf", h));
}

Tensor predict_velocity(const Tensor& x_t, double t, const Tensor& context, ParamStore& ps,
                        const DitConfig& cfg) {
  Graph g;
  return g.val(predict_velocity_node(g, ps, cfg, g.value(x_t), t, g.value(context)));
}

int fm_loss_node(Graph& g, ParamStore& ps, const DitConfig& cfg, const Tensor& x0,
                 const Tensor& x1, double t, int context) {
  Tensor target = x1;
  for (size_t i = 0; i < target.v.size(); ++i) target.v[i] -= x0.v[i];
  int v = predict_velocity_node(g, ps, cfg, g.value(interpolate(x0, x1, t)), t, context);
  return g.mse(v, g.value(std::move(target)));
}

double fm_loss(const Tensor& x0, const Tensor& x1, double t, const Tensor& context,
               ParamStore& ps, const DitConfig& cfg) {
  Graph g;
  return g.scalar(fm_loss_node(g, ps, cfg, x0, x1, t, g.value(context)));
}

Tensor sample_flow(const Tensor& context, const Tensor* context_uncond,
                   const FlowSampleConfig& cfg, ParamStore& ps, const DitConfig& dit,
                   uint64_t rng_seed) {
  if (cfg.euler_steps < 1) throw std::invalid_argument("sample_flow: euler_steps must be >= 1");
  const bool guided = cfg.guidance_scale != 1.0;
  if (guided && context_uncond == nullptr)
    throw std::invalid_argument("sample_flow: guidance needs the unconditioned context");

  Rng rng(rng_seed);
  Tensor x(dit.latent_tokens, dit.latent_dim);
  for (double& v : x.v) v = rng.normal();

  const double dt = 1.0 / cfg.euler_steps;
  for (int k = 0; k < cfg.euler_steps; ++k) {
    double t = (double)k / cfg.euler_steps;
    Tensor v = predict_velocity(x, t, context, ps, dit);
    if (guided) {
      Tensor vu = predict_velocity(x, t, *context_uncond, ps, dit);
      for (size_t i = 0; i < v.v.size(); ++i)
        v.v[i] = vu.v[i] + cfg.guidance_scale * (v.v[i] - vu.v[i]);
    }
    for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += dt * v.v[i];
  }
  return x;
}

}  // namespace shapeflow
