#pragma once

#include <cstdint>
#include <vector>

#include "shapeflow/layers.hpp"
#include "shapeflow/mesh.hpp"
#include "shapeflow/tensor.hpp"

namespace shapeflow {

// Point-cloud VAE over a latent vector set: a cross-attention block pools
// embedded surface points (position + normal channels) into L learned
// queries; the decoder cross-attends arbitrary 3D queries against the
// projected latents and emits a scalar SDF per query.
struct VaeConfig {
  int latent_tokens = 32;  // L
  int latent_dim = 16;     // d
  int width = 64;
  int heads = 4;
  int freqs = 8;
  int mlp_hidden = 256;
  double kl_weight = 1e-4;
  double logvar_clamp = 10.0;
};

struct LatentDist {
  Tensor mean, logvar;  // L x d each
};

void init_vae(ParamStore& ps, const VaeConfig& cfg, Rng& rng);

struct VaeEncodeNodes {
  int mean = -1, logvar = -1, sample = -1;
};

// Graph forms for training; eps for the reparameterized sample is drawn from
// noise_seed.
VaeEncodeNodes vae_encode_node(Graph& g, ParamStore& ps, const VaeConfig& cfg,
                               const PointSet& surface, uint64_t noise_seed);
int vae_decode_node(Graph& g, ParamStore& ps, const VaeConfig& cfg, int z,
                    const std::vector<Vec3>& queries);
// mean |pred - true| + kl_weight * mean KL(N(mean, var) || N(0,1))
int vae_loss_node(Graph& g, int mean, int logvar, int sdf_pred,
                  const std::vector<double>& sdf_true, double kl_weight);

// Plain wrappers.
std::pair<LatentDist, Tensor> vae_encode(const PointSet& surface, ParamStore& ps,
                                         const VaeConfig& cfg, uint64_t rng_seed);
std::vector<double> vae_decode_sdf(const Tensor& z, const std::vector<Vec3>& queries,
                                   ParamStore& ps, const VaeConfig& cfg);
double vae_loss(const LatentDist& dist, const std::vector<double>& sdf_pred,
                const std::vector<double>& sdf_true, double kl_weight);

// Evaluates the decoder on the [-1,1]^3 lattice and extracts the zero level
// set; an empty iso-surface yields an empty mesh.
Mesh extract_mesh(const Tensor& z, int grid_res, ParamStore& ps, const VaeConfig& cfg);

// Decoder lattice evaluation only (shared by extract_mesh and IoU metrics).
SdfGrid decode_sdf_grid(const Tensor& z, int grid_res, ParamStore& ps, const VaeConfig& cfg);

}  // namespace shapeflow
