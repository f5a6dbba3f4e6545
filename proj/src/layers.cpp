#include "shapeflow/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace shapeflow {

Tensor randn(int rows, int cols, Rng& rng, double stddev) {
  Tensor t(rows, cols);
  for (double& x : t.v) x = (double)(float)(rng.normal() * stddev);
  return t;
}

void init_linear(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng) {
  ps.add(prefix + ".w", randn(in, out, rng, 1.0 / std::sqrt((double)in)));
  ps.add(prefix + ".b", Tensor(1, out));
}

void init_linear_zero(ParamStore& ps, const std::string& prefix, int in, int out) {
  ps.add(prefix + ".w", Tensor(in, out));
  ps.add(prefix + ".b", Tensor(1, out));
}

void init_layer_norm(ParamStore& ps, const std::string& prefix, int width) {
  Tensor gain(1, width);
  for (double& x : gain.v) x = 1.0;
  ps.add(prefix + ".g", std::move(gain));
  ps.add(prefix + ".o", Tensor(1, width));
}

void init_attention(ParamStore& ps, const std::string& prefix, int width, Rng& rng) {
  init_linear(ps, prefix + ".wq", width, width, rng);
  init_linear(ps, prefix + ".wk", width, width, rng);
  init_linear(ps, prefix + ".wv", width, width, rng);
  init_linear(ps, prefix + ".wo", width, width, rng);
}

void init_mlp(ParamStore& ps, const std::string& prefix, int width, int hidden, Rng& rng) {
  init_linear(ps, prefix + ".fc1", width, hidden, rng);
  init_linear(ps, prefix + ".fc2", hidden, width, rng);
}

int linear(Graph& g, ParamStore& ps, const std::string& prefix, int x) {
  int w = g.param(ps, prefix + ".w");
  int b = g.param(ps, prefix + ".b");
  return g.linear_xwb(x, w, b);
}

int linear_nobias(Graph& g, ParamStore& ps, const std::string& prefix, int x) {
  return g.matmul(x, g.param(ps, prefix + ".w"));
}

int layer_norm(Graph& g, ParamStore& ps, const std::string& prefix, int x) {
  return g.layer_norm(x, g.param(ps, prefix + ".g"), g.param(ps, prefix + ".o"));
}

int mlp(Graph& g, ParamStore& ps, const std::string& prefix, int x) {
  return linear(g, ps, prefix + ".fc2", g.relu2(linear(g, ps, prefix + ".fc1", x)));
}

int attention(Graph& g, ParamStore& ps, const std::string& prefix, int x_q, int x_kv, int heads) {
  const int width = g.val(x_q).cols;
  if (g.val(x_kv).cols != width) throw std::invalid_argument("attention: width mismatch");
  if (width % heads != 0) throw std::invalid_argument("attention: width not divisible by heads");
  const int dh = width / heads;
  int q = linear(g, ps, prefix + ".wq", x_q);
  int k = linear(g, ps, prefix + ".wk", x_kv);
  int v = linear(g, ps, prefix + ".wv", x_kv);
  std::vector<int> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    int qh = g.slice_cols(q, h * dh, (h + 1) * dh);
    int kh = g.slice_cols(k, h * dh, (h + 1) * dh);
    int vh = g.slice_cols(v, h * dh, (h + 1) * dh);
    int scores = g.scale(g.matmul_nt(qh, kh), 1.0 / std::sqrt((double)dh));
    int probs = g.softmax_rows(scores);
    outs.push_back(g.matmul(probs, vh));
  }
  return linear(g, ps, prefix + ".wo", g.concat_cols(outs));
}

Tensor pos_embed(const Tensor& payload, int freqs) {
  if (freqs < 0) throw std::invalid_argument("pos_embed: negative frequency count");
  const int d = payload.cols;
  Tensor out(payload.rows, d + 2 * d * freqs);
  for (int r = 0; r < payload.rows; ++r) {
    const double* in = payload.row(r);
    double* o = out.row(r);
    for (int c = 0; c < d; ++c) o[c] = in[c];
    int at = d;
    for (int c = 0; c < d; ++c) {
      for (int k = 0; k < freqs; ++k) {
        double arg = std::ldexp(M_PI * in[c], k);  // 2^k * pi * x
        o[at++] = std::sin(arg);
        o[at++] = std::cos(arg);
      }
    }
  }
  return out;
}

Tensor timestep_features(double t, int dim) {
  if (dim % 2 != 0) throw std::invalid_argument("timestep_features: dim must be even");
  Tensor out(1, dim);
  const int half = dim / 2;
  // t in [0,1] scaled by 1000 so the standard frequency ladder resolves it
  double tv = 1000.0 * t;
  for (int k = 0; k < half; ++k) {
    double freq = std::exp(-std::log(10000.0) * (double)k / (double)(half > 1 ? half - 1 : 1));
    out.v[k] = std::sin(tv * freq);
    out.v[half + k] = std::cos(tv * freq);
  }
  return out;
}

}  // namespace shapeflow
