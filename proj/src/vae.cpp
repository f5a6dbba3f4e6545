#include "shapeflow/vae.hpp"

#include <cmath>
#include <stdexcept>

#include "shapeflow/marching_cubes.hpp"
#include "shapeflow/rng.hpp"

namespace shapeflow {

void init_vae(ParamStore& ps, const VaeConfig& cfg, Rng& rng) {
  const int w = cfg.width;
  const int pe6 = 6 + 12 * cfg.freqs;
  const int pe3 = 3 + 6 * cfg.freqs;
  ps.add("vae.enc.queries", randn(cfg.latent_tokens, w, rng, 1.0));
  init_linear(ps, "vae.enc.embed", pe6, w, rng);
  init_layer_norm(ps, "vae.enc.lnq", w);
  init_layer_norm(ps, "vae.enc.lnkv", w);
  init_attention(ps, "vae.enc.attn", w, rng);
  init_layer_norm(ps, "vae.enc.ln2", w);
  init_mlp(ps, "vae.enc.mlp", w, cfg.mlp_hidden, rng);
  init_layer_norm(ps, "vae.enc.lnf", w);
  init_linear(ps, "vae.enc.mean", w, cfg.latent_dim, rng);
  init_linear(ps, "vae.enc.logvar", w, cfg.latent_dim, rng);

  init_linear(ps, "vae.dec.zproj", cfg.latent_dim, w, rng);
  init_linear(ps, "vae.dec.embed", pe3, w, rng);
  init_layer_norm(ps, "vae.dec.lnq", w);
  init_layer_norm(ps, "vae.dec.lnkv", w);
  init_attention(ps, "vae.dec.attn", w, rng);
  init_layer_norm(ps, "vae.dec.ln2", w);
  init_mlp(ps, "vae.dec.mlp", w, cfg.mlp_hidden, rng);
  init_layer_norm(ps, "vae.dec.lnf", w);
  init_linear(ps, "vae.dec.head1", w, w, rng);
  init_linear(ps, "vae.dec.head2", w, 1, rng);
}

namespace {

Tensor surface_channels(const PointSet& surface) {
  Tensor t((int)surface.size(), 6);
  for (size_t i = 0; i < surface.size(); ++i) {
    double* row = t.row((int)i);
    row[0] = surface.points[i].x;
    row[1] = surface.points[i].y;
    row[2] = surface.points[i].z;
    row[3] = surface.normals[i].x;
    row[4] = surface.normals[i].y;
    row[5] = surface.normals[i].z;
  }
  return t;
}

}  // namespace

VaeEncodeNodes vae_encode_node(Graph& g, ParamStore& ps, const VaeConfig& cfg,
                               const PointSet& surface, uint64_t noise_seed) {
  if (!surface.has_normals()) throw std::invalid_argument("vae_encode: surface normals required");
  if ((int)surface.size() < cfg.latent_tokens)
    throw std::invalid_argument("vae_encode: need at least L surface points");

  int emb = linear(g, ps, "vae.enc.embed", g.value(pos_embed(surface_channels(surface), cfg.freqs)));
  int q = g.param(ps, "vae.enc.queries");
  int h = g.add(q, attention(g, ps, "vae.enc.attn", layer_norm(g, ps, "vae.enc.lnq", q),
                             layer_norm(g, ps, "vae.enc.lnkv", emb), cfg.heads));
  h = g.add(h, mlp(g, ps, "vae.enc.mlp", layer_norm(g, ps, "vae.enc.ln2", h)));
  h = layer_norm(g, ps, "vae.enc.lnf", h);

  VaeEncodeNodes out;
  out.mean = linear(g, ps, "vae.enc.mean", h);
  out.logvar = g.clamp(linear(g, ps, "vae.enc.logvar", h), -cfg.logvar_clamp, cfg.logvar_clamp);

  Rng rng(noise_seed);
  Tensor eps(cfg.latent_tokens, cfg.latent_dim);
  for (double& x : eps.v) x = rng.normal();
  int std_dev = g.exp(g.scale(out.logvar, 0.5));
  out.sample = g.add(out.mean, g.mul(std_dev, g.value(std::move(eps))));
  return out;
}

int vae_decode_node(Graph& g, ParamStore& ps, const VaeConfig& cfg, int z,
                    const std::vector<Vec3>& queries) {
  Tensor qpts((int)queries.size(), 3);
  for (size_t i = 0; i < queries.size(); ++i) {
    if (!finite(queries[i])) throw std::invalid_argument("vae_decode: non-finite query");
    qpts.at((int)i, 0) = queries[i].x;
    qpts.at((int)i, 1) = queries[i].y;
    qpts.at((int)i, 2) = queries[i].z;
  }
  int zp = linear(g, ps, "vae.dec.zproj", z);
  int qe = linear(g, ps, "vae.dec.embed", g.value(pos_embed(qpts, cfg.freqs)));
  int h = g.add(qe, attention(g, ps, "vae.dec.attn", layer_norm(g, ps, "vae.dec.lnq", qe),
                              layer_norm(g, ps, "vae.dec.lnkv", zp), cfg.heads));
  h = g.add(h, mlp(g, ps, "vae.dec.mlp", layer_norm(g, ps, "vae.dec.ln2", h)));
  h = layer_norm(g, ps, "vae.dec.lnf", h);
  return linear(g, ps, "vae.dec.head2", g.relu2(linear(g, ps, "vae.dec.head1", h)));
}

int vae_loss_node(Graph& g, int mean, int logvar, int sdf_pred,
                  const std::vector<double>& sdf_true, double kl_weight) {
  const Tensor& pred = g.val(sdf_pred);
  if ((int)sdf_true.size() != pred.rows * pred.cols)
    throw std::invalid_argument("vae_loss: prediction/target length mismatch");
  Tensor target(pred.rows, pred.cols);
  target.v = sdf_true;
  int recon = g.l1(sdf_pred, g.value(std::move(target)));
  // KL(N(mu, sigma^2) || N(0,1)) = 0.5 * (mu^2 + e^lv - 1 - lv) per entry
  int mu2 = g.mul(mean, mean);
  int term = g.add(g.add(mu2, g.exp(logvar)), g.affine(logvar, -1.0, -1.0));
  int kl = g.scale(g.mean_all(term), 0.5);
  return g.add(recon, g.scale(kl, kl_weight));
}

std::pair<LatentDist, Tensor> vae_encode(const PointSet& surface, ParamStore& ps,
                                         const VaeConfig& cfg, uint64_t rng_seed) {
  Graph g;
  auto nodes = vae_encode_node(g, ps, cfg, surface, rng_seed);
  LatentDist dist{g.val(nodes.mean), g.val(nodes.logvar)};
  return {std::move(dist), g.val(nodes.sample)};
}

std::vector<double> vae_decode_sdf(const Tensor& z, const std::vector<Vec3>& queries,
                                   ParamStore& ps, const VaeConfig& cfg) {
  if (queries.empty()) return {};
  // chunked evaluation keeps per-graph memory flat for lattice-sized batches
  const size_t chunk = 8192;
  std::vector<double> out;
  out.reserve(queries.size());
  for (size_t start = 0; start < queries.size(); start += chunk) {
    std::vector<Vec3> part(queries.begin() + start,
                           queries.begin() + std::min(queries.size(), start + chunk));
    Graph g;
    int sdf = vae_decode_node(g, ps, cfg, g.value(z), part);
    const Tensor& vals = g.val(sdf);
    out.insert(out.end(), vals.v.begin(), vals.v.end());
  }
  return out;
}

double vae_loss(const LatentDist& dist, const std::vector<double>& sdf_pred,
                const std::vector<double>& sdf_true, double kl_weight) {
  if (sdf_pred.size() != sdf_true.size())
    throw std::invalid_argument("vae_loss: prediction/target length mismatch");
  double recon = 0;
  for (size_t i = 0; i < sdf_pred.size(); ++i) recon += std::fabs(sdf_pred[i] - sdf_true[i]);
  recon /= sdf_pred.empty() ? 1.0 : (double)sdf_pred.size();
  double kl = 0;
  for (size_t i = 0; i < dist.mean.v.size(); ++i) {
    double mu = dist.mean.v[i], lv = dist.logvar.v[i];
    kl += 0.5 * (mu * mu + std::exp(lv) - 1.0 - lv);
  }
  kl /= (double)dist.mean.v.size();
  return recon + kl_weight * kl;
}

SdfGrid decode_sdf_grid(const Tensor& z, int grid_res, ParamStore& ps, const VaeConfig& cfg) {
  if (grid_res < 8) throw std::invalid_argument("decode_sdf_grid: grid_res must be >= 8");
  SdfGrid grid;
  grid.resolution = grid_res;
  std::vector<Vec3> queries;
  queries.reserve((size_t)grid_res * grid_res * grid_res);
  for (int ix = 0; ix < grid_res; ++ix)
    for (int iy = 0; iy < grid_res; ++iy)
      for (int iz = 0; iz < grid_res; ++iz)
        queries.push_back(
            {grid.lattice_coord(ix), grid.lattice_coord(iy), grid.lattice_coord(iz)});
  grid.values = vae_decode_sdf(z, queries, ps, cfg);
  return grid;
}

Mesh extract_mesh(const Tensor& z, int grid_res, ParamStore& ps, const VaeConfig& cfg) {
  return marching_cubes(decode_sdf_grid(z, grid_res, ps, cfg), 0.0);
}

}  // namespace shapeflow
