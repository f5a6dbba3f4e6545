#include "shapeflow/control_encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace shapeflow {

void init_control_encoder(ParamStore& ps, const ControlEncoderConfig& cfg, Rng& rng) {
  init_linear(ps, "cenc.point", cfg.posemb_dim(), cfg.point_channels, rng);
  ps.add("cenc.table", randn(4, cfg.type_dim, rng, 1.0));
  ps.add("cenc.proj", randn(cfg.type_dim, cfg.type_dim, rng, 1.0 / std::sqrt((double)cfg.type_dim)));
}

Tensor payload_tensor(const UnifiedCondition& cond) {
  if ((int)cond.payload.size() != cond.rows * 6)
    throw std::invalid_argument("payload_tensor: payload size != rows*6");
  Tensor t(cond.rows, 6);
  t.v = cond.payload;
  return t;
}

int encode_condition_node(Graph& g, ParamStore& ps, const ControlEncoderConfig& cfg,
                          const UnifiedCondition& cond) {
  if (cond.type_id < 0 || cond.type_id > 3)
    throw std::invalid_argument("encode_condition: unknown type_id");
  if (cond.rows < 1) throw std::invalid_argument("encode_condition: empty condition");
  int pe = g.value(pos_embed(payload_tensor(cond), cfg.freqs));
  int point_block = linear(g, ps, "cenc.point", pe);

  int table = g.param(ps, "cenc.table");
  int type_row = g.slice_rows(table, cond.type_id, cond.type_id + 1);
  int projected = g.matmul(type_row, g.param(ps, "cenc.proj"));
  std::vector<int> copies(cfg.repeats, projected);
  int type_block = g.repeat_rows(g.concat_cols(copies), cond.rows);
  return g.concat_cols({point_block, type_block});
}

int build_joint_condition_node(Graph& g, int image_tokens, int beta_or_minus1) {
  if (beta_or_minus1 < 0) return image_tokens;
  if (g.val(image_tokens).cols != g.val(beta_or_minus1).cols)
    throw std::invalid_argument("build_joint_condition: channel width mismatch");
  return g.concat_rows({image_tokens, beta_or_minus1});
}

Tensor encode_condition(const UnifiedCondition& cond, ParamStore& ps,
                        const ControlEncoderConfig& cfg) {
  Graph g;
  return g.val(encode_condition_node(g, ps, cfg, cond));
}

Tensor build_joint_condition(const Tensor& image_tokens, const Tensor& beta) {
  if (beta.rows == 0) return image_tokens;
  if (image_tokens.cols != beta.cols)
    throw std::invalid_argument("build_joint_condition: channel width mismatch");
  Tensor out(image_tokens.rows + beta.rows, image_tokens.cols);
  std::copy(image_tokens.v.begin(), image_tokens.v.end(), out.v.begin());
  std::copy(beta.v.begin(), beta.v.end(), out.v.begin() + image_tokens.v.size());
  return out;
}

}  // namespace shapeflow
