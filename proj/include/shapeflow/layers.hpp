#pragma once

#include <string>
#include <vector>

#include "shapeflow/rng.hpp"
#include "shapeflow/tensor.hpp"

namespace shapeflow {

// Parameter initializers. Linear weights are N(0, 1/fan_in); all values are
// f32-quantized at creation so checkpoints round-trip bit-exactly.
Tensor randn(int rows, int cols, Rng& rng, double stddev);
void init_linear(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng);
void init_linear_zero(ParamStore& ps, const std::string& prefix, int in, int out);
void init_layer_norm(ParamStore& ps, const std::string& prefix, int width);
void init_attention(ParamStore& ps, const std::string& prefix, int width, Rng& rng);
void init_mlp(ParamStore& ps, const std::string& prefix, int width, int hidden, Rng& rng);

// Graph builders. Prefixes follow the init_* naming: "<prefix>.w"/".b" for
// linear, ".g"/".o" for layer norm gains/offsets, ".wq|.wk|.wv|.wo" blocks
// for attention.
int linear(Graph& g, ParamStore& ps, const std::string& prefix, int x);
int linear_nobias(Graph& g, ParamStore& ps, const std::string& prefix, int x);
int layer_norm(Graph& g, ParamStore& ps, const std::string& prefix, int x);
int mlp(Graph& g, ParamStore& ps, const std::string& prefix, int x);

// Multi-head attention; queries from x_q, keys/values from x_kv. Softmax
// rows are proper distributions; no positional encoding across context rows.
int attention(Graph& g, ParamStore& ps, const std::string& prefix, int x_q, int x_kv, int heads);

// Sinusoidal features: per input column x emits [x, sin(2^k pi x),
// cos(2^k pi x)] for k = 0..freqs-1; raw passthrough columns come first.
Tensor pos_embed(const Tensor& payload, int freqs);

// Sinusoidal embedding of a scalar timestep into `dim` channels.
Tensor timestep_features(double t, int dim);

}  // namespace shapeflow
