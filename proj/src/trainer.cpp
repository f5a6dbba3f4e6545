#include "shapeflow/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"
#include "shapeflow/io.hpp"
#include "shapeflow/rng.hpp"

namespace shapeflow {

std::vector<double> TrainConfig::normalized_weights() const {
  std::vector<double> w = {w_skeleton, w_point, w_voxel, w_bbox};
  double sum = 0;
  for (double x : w) {
    if (x < 0) throw std::invalid_argument("TrainConfig: negative modality weight");
    sum += x;
  }
  if (sum <= 0) throw std::invalid_argument("TrainConfig: modality weights sum to zero");
  for (double& x : w) x /= sum;
  return w;
}

std::string TrainConfig::to_json() const {
  nlohmann::json j;
  j["learning_rate"] = learning_rate;
  j["adam_beta1"] = adam_beta1;
  j["adam_beta2"] = adam_beta2;
  j["adam_eps"] = adam_eps;
  j["weight_decay"] = weight_decay;
  j["batch_size"] = batch_size;
  j["steps"] = steps;
  j["modality_weights"] = {
      {"skeleton", w_skeleton}, {"point", w_point}, {"voxel", w_voxel}, {"bbox", w_bbox}};
  j["condition_dropout_prob"] = condition_dropout_prob;
  j["grad_clip"] = grad_clip;
  j["seed"] = seed;
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  TrainConfig cfg;
  auto get = [&](const char* key, auto* field) {
    if (j.contains(key)) *field = j.at(key).get<std::decay_t<decltype(*field)>>();
  };
  get("learning_rate", &cfg.learning_rate);
  get("adam_beta1", &cfg.adam_beta1);
  get("adam_beta2", &cfg.adam_beta2);
  get("adam_eps", &cfg.adam_eps);
  get("weight_decay", &cfg.weight_decay);
  get("batch_size", &cfg.batch_size);
  get("steps", &cfg.steps);
  get("condition_dropout_prob", &cfg.condition_dropout_prob);
  get("grad_clip", &cfg.grad_clip);
  get("seed", &cfg.seed);
  if (j.contains("modality_weights")) {
    const auto& w = j.at("modality_weights");
    if (w.contains("skeleton")) cfg.w_skeleton = w.at("skeleton").get<double>();
    if (w.contains("point")) cfg.w_point = w.at("point").get<double>();
    if (w.contains("voxel")) cfg.w_voxel = w.at("voxel").get<double>();
    if (w.contains("bbox")) cfg.w_bbox = w.at("bbox").get<double>();
  }
  if (!(cfg.learning_rate > 0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (cfg.condition_dropout_prob < 0 || cfg.condition_dropout_prob > 1)
    throw std::invalid_argument("TrainConfig: condition_dropout_prob must be in [0,1]");
  cfg.normalized_weights();  // validates
  return cfg;
}

int sample_modality(Rng& rng, const std::vector<double>& weights) {
  if (weights.size() != 4) throw std::invalid_argument("sample_modality: need 4 weights");
  double u = rng.uniform();
  double acc = 0;
  for (int i = 0; i < 4; ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return 3;
}

double clip_gradients(ParamStore& ps, double max_norm) {
  double sq = 0;
  for (const auto& [name, e] : ps.entries)
    for (double g : e.grad.v) sq += g * g;
  double nrm = std::sqrt(sq);
  if (max_norm > 0 && nrm > max_norm) {
    double s = max_norm / nrm;
    for (auto& [name, e] : ps.entries)
      for (double& g : e.grad.v) g *= s;
  }
  return nrm;
}

void adamw_step(ParamStore& ps, const TrainConfig& cfg, int step_index) {
  if (step_index < 1) throw std::invalid_argument("adamw_step: step_index is 1-based");
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, step_index);
  const double bc2 = 1.0 - std::pow(b2, step_index);
  for (auto& [name, e] : ps.entries) {
    for (size_t i = 0; i < e.value.v.size(); ++i) {
      double g = e.grad.v[i];
      if (!std::isfinite(g))
        throw std::runtime_error("adamw_step: non-finite gradient in " + name);
      e.m.v[i] = b1 * e.m.v[i] + (1.0 - b1) * g;
      e.v.v[i] = b2 * e.v.v[i] + (1.0 - b2) * g * g;
      double mhat = e.m.v[i] / bc1;
      double vhat = e.v.v[i] / bc2;
      double w = e.value.v[i];
      w -= cfg.learning_rate * (mhat / (std::sqrt(vhat) + cfg.adam_eps));
      w -= cfg.learning_rate * cfg.weight_decay * e.value.v[i];  // decoupled decay
      e.value.v[i] = (double)(float)w;
    }
  }
}

namespace {

std::string trace_row(int step, double loss, const char* modality, int dropout_flag) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%s,%d", step, loss, modality, dropout_flag);
  return buf;
}

std::vector<const DatasetExample*> train_split(const std::vector<DatasetExample>& dataset) {
  std::vector<const DatasetExample*> out;
  for (const auto& ex : dataset)
    if (!is_held_out(ex.id)) out.push_back(&ex);
  if (out.empty()) throw std::invalid_argument("trainer: no training examples after split");
  return out;
}

}  // namespace

TrainResult train_vae(const std::vector<DatasetExample>& dataset, const VaeConfig& vcfg,
                      const TrainConfig& tcfg) {
  auto train = train_split(dataset);
  TrainResult result;
  Rng init_rng(derive_seed(tcfg.seed, 0xA11CE));
  init_vae(result.params, vcfg, init_rng);

  for (int step = 1; step <= tcfg.steps; ++step) {
    Rng rng(derive_seed(tcfg.seed, 0x10000000ULL + step));
    const DatasetExample& ex = *train[rng.uniform_int(train.size())];

    // SDF supervision: half uniform, half near-surface
    const int n_uniform = 2048, n_near = 2048;
    std::vector<Vec3> queries;
    queries.reserve(n_uniform + n_near);
    for (int i = 0; i < n_uniform; ++i)
      queries.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    for (int i = 0; i < n_near; ++i) {
      const Vec3& p = ex.surface.points[rng.uniform_int(ex.surface.size())];
      queries.push_back({p.x + rng.normal(0.0, 0.05), p.y + rng.normal(0.0, 0.05),
                         p.z + rng.normal(0.0, 0.05)});
    }
    std::vector<double> truth;
    truth.reserve(queries.size());
    for (const auto& q : queries) truth.push_back(sdf_eval(ex.shape, q));

    Graph g;
    auto enc = vae_encode_node(g, result.params, vcfg, ex.surface, rng.next_u64());
    int pred = vae_decode_node(g, result.params, vcfg, enc.sample, queries);
    int loss = vae_loss_node(g, enc.mean, enc.logvar, pred, truth, vcfg.kl_weight);
    double loss_val = g.scalar(loss);
    if (!std::isfinite(loss_val))
      throw std::runtime_error("train_vae: non-finite loss at step " + std::to_string(step));

    result.params.zero_grad();
    g.backward(loss);
    clip_gradients(result.params, tcfg.grad_clip);
    adamw_step(result.params, tcfg, step);
    result.trace.push_back(trace_row(step, loss_val, "none", 0));
  }
  return result;
}

TrainResult train_flow(const std::vector<DatasetExample>& dataset, const ParamStore& vae_params,
                       const VaeConfig& vcfg, const DitConfig& dcfg,
                       const ControlEncoderConfig& ccfg, const TrainConfig& tcfg) {
  if (ccfg.channels() != dcfg.width)
    throw std::invalid_argument("train_flow: control channels must equal the DiT width");
  auto train = train_split(dataset);

  // frozen VAE: precompute the posterior-mean target latents once
  ParamStore vae_copy;
  for (const auto& [name, e] : vae_params.entries) vae_copy.add(name, e.value);
  std::vector<Tensor> x1_main(train.size()), x1_bbox(train.size());
  for (size_t i = 0; i < train.size(); ++i) {
    x1_main[i] = vae_encode(train[i]->surface, vae_copy, vcfg, 0).first.mean;
    x1_bbox[i] = train[i]->surface_bbox.points.empty()
                     ? x1_main[i]
                     : vae_encode(train[i]->surface_bbox, vae_copy, vcfg, 0).first.mean;
  }

  TrainResult result;
  Rng init_rng(derive_seed(tcfg.seed, 0xF10));
  init_flow_model(result.params, dcfg, init_rng);
  init_control_encoder(result.params, ccfg, init_rng);
  auto weights = tcfg.normalized_weights();

  for (int step = 1; step <= tcfg.steps; ++step) {
    Rng rng(derive_seed(tcfg.seed, 0x20000000ULL + step));
    size_t idx = rng.uniform_int(train.size());
    const DatasetExample& ex = *train[idx];

    int modality = sample_modality(rng, weights);
    for (int attempt = 0; attempt < 8 && !ex.conditions.count(modality); ++attempt)
      modality = sample_modality(rng, weights);
    if (!ex.conditions.count(modality)) modality = ex.conditions.begin()->first;

    bool dropout = rng.uniform() < tcfg.condition_dropout_prob;

    Tensor x0(dcfg.latent_tokens, dcfg.latent_dim);
    for (double& v : x0.v) v = rng.normal();
    double t = rng.uniform();
    const Tensor& x1 =
        (modality == (int)CondType::bbox && !ex.surface_bbox.points.empty()) ? x1_bbox[idx]
                                                                             : x1_main[idx];

    Graph g;
    int img = embed_image_node(g, result.params, dcfg, ex.depth);
    int ctx = img;
    if (!dropout) {
      int beta = encode_condition_node(g, result.params, ccfg, ex.conditions.at(modality));
      ctx = build_joint_condition_node(g, img, beta);
    }
    int loss = fm_loss_node(g, result.params, dcfg, x0, x1, t, ctx);
    double loss_val = g.scalar(loss);
    if (!std::isfinite(loss_val))
      throw std::runtime_error("train_flow: non-finite loss at step " + std::to_string(step));

    result.params.zero_grad();
    g.backward(loss);
    clip_gradients(result.params, tcfg.grad_clip);
    adamw_step(result.params, tcfg, step);
    result.trace.push_back(
        trace_row(step, loss_val, cond_type_name((CondType)modality), dropout ? 1 : 0));
  }

  // fold the frozen VAE in so generation needs a single checkpoint
  for (const auto& [name, e] : vae_params.entries) result.params.add(name, e.value);
  return result;
}

void write_loss_trace(const std::string& path, const std::vector<std::string>& rows) {
  std::string text = "step,loss,modality,dropout_flag\n";
  for (const auto& r : rows) {
    text += r;
    text += '\n';
  }
  write_text_file(path, text);
}

}  // namespace shapeflow
