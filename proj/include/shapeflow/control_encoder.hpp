#pragma once

#include <string>

#include "shapeflow/conditions.hpp"
#include "shapeflow/layers.hpp"
#include "shapeflow/tensor.hpp"

namespace shapeflow {

// Shared encoder for all four control signals: sinusoidal position embedding
// plus a linear layer on the canonicalized N x 6 point set, concatenated with
// a projected, repeated type embedding that disambiguates the modalities.
struct ControlEncoderConfig {
  int freqs = 8;           // position-embedding frequency count
  int point_channels = 48; // width of the per-point block
  int type_dim = 8;        // type-embedding table width
  int repeats = 2;         // copies of the projected type vector

  int channels() const { return point_channels + repeats * type_dim; }
  int posemb_dim() const { return 6 + 12 * freqs; }
};

// Parameters: cenc.point.{w,b} linear, cenc.table (4 x type_dim, N(0,1)),
// cenc.proj (type_dim x type_dim, N(0, 1/type_dim), no bias).
void init_control_encoder(ParamStore& ps, const ControlEncoderConfig& cfg, Rng& rng);

Tensor payload_tensor(const UnifiedCondition& cond);

// Graph forms, used during training and reused by the plain wrappers.
int encode_condition_node(Graph& g, ParamStore& ps, const ControlEncoderConfig& cfg,
                          const UnifiedCondition& cond);
int build_joint_condition_node(Graph& g, int image_tokens, int beta_or_minus1);

// Per-point control feature, N x channels; the type block is identical
// across rows. Throws on type ids outside {0,1,2,3}.
Tensor encode_condition(const UnifiedCondition& cond, ParamStore& ps,
                        const ControlEncoderConfig& cfg);

// Row-wise concatenation [image_tokens; beta]; beta may be empty (dropped
// condition). Throws on channel-width mismatch.
Tensor build_joint_condition(const Tensor& image_tokens, const Tensor& beta);

}  // namespace shapeflow
