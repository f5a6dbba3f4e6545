// Command-line entry points: dataset generation, VAE and flow training,
// conditioned generation, and quantitative controllability evaluation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "shapeflow/evaluate.hpp"
#include "shapeflow/io.hpp"
#include "shapeflow/model_io.hpp"
#include "shapeflow/synthdata.hpp"
#include "shapeflow/trainer.hpp"

using namespace shapeflow;

namespace {

TrainConfig load_train_config(const std::string& config_path) {
  if (config_path.empty()) return TrainConfig{};
  return TrainConfig::from_json(read_text_file(config_path));
}

Tensor load_depth_raster(const std::string& path) {
  auto raster = read_raw_f32(path);
  auto sidecar = nlohmann::json::parse(read_text_file(sidecar_path(path)));
  int w = sidecar.at("width").get<int>();
  int h = sidecar.at("height").get<int>();
  if ((size_t)w * h != raster.size())
    throw std::runtime_error("depth raster size does not match its sidecar");
  Tensor depth(h, w);
  for (size_t i = 0; i < raster.size(); ++i) depth.v[i] = raster[i];
  return depth;
}

Vec3 parse_bbox_arg(const std::string& text) {
  Vec3 out;
  char comma1, comma2;
  std::istringstream ss(text);
  ss >> out.x >> comma1 >> out.y >> comma2 >> out.z;
  if (!ss || comma1 != ',' || comma2 != ',')
    throw std::runtime_error("--bbox expects l,w,h (e.g. 2,1,1)");
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"controllable 3D shape generation toolkit"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::string gen_out;
  GenDataOptions gen_opts;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--num", gen_opts.num, "number of examples")->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_opts.seed, "global seed")->default_val(0);
  gen->add_option("--figures-frac", gen_opts.figures_frac,
                  "fraction of articulated-figure examples")
      ->default_val(0.0)
      ->check(CLI::Range(0.0, 1.0));
  gen->add_flag("--random-view", gen_opts.random_view, "randomize the render view per example");

  // train-vae
  auto* tv = app.add_subcommand("train-vae", "train the point-cloud VAE");
  std::string tv_data, tv_out, tv_config, tv_trace;
  int tv_steps = -1;
  int64_t tv_seed = -1;
  tv->add_option("--data", tv_data, "dataset directory")->required();
  tv->add_option("--out", tv_out, "checkpoint path")->required();
  tv->add_option("--config", tv_config, "train config JSON");
  tv->add_option("--steps", tv_steps, "override step count");
  tv->add_option("--seed", tv_seed, "override seed");
  tv->add_option("--trace", tv_trace, "loss trace CSV path (default <out>.loss.csv)");

  // train-flow
  auto* tf = app.add_subcommand("train-flow", "train the conditioned flow model");
  std::string tf_data, tf_vae, tf_out, tf_config, tf_trace;
  int tf_steps = -1;
  int64_t tf_seed = -1;
  tf->add_option("--data", tf_data, "dataset directory")->required();
  tf->add_option("--vae", tf_vae, "VAE checkpoint")->required();
  tf->add_option("--out", tf_out, "checkpoint path")->required();
  tf->add_option("--config", tf_config, "train config JSON");
  tf->add_option("--steps", tf_steps, "override step count");
  tf->add_option("--seed", tf_seed, "override seed");
  tf->add_option("--trace", tf_trace, "loss trace CSV path (default <out>.loss.csv)");

  // generate
  auto* gn = app.add_subcommand("generate", "generate a mesh from a depth image and condition");
  std::string gn_ckpt, gn_depth, gn_cond_type = "none", gn_cond_file, gn_bbox, gn_out;
  FlowSampleConfig gn_sample;
  uint64_t gn_seed = 0;
  int gn_res = 32;
  gn->add_option("--ckpt", gn_ckpt, "flow checkpoint")->required();
  gn->add_option("--depth", gn_depth, "depth raster (.f32 with JSON sidecar)")->required();
  gn->add_option("--cond-type", gn_cond_type, "none|skeleton|point|voxel|bbox")
      ->check(CLI::IsMember({"none", "skeleton", "point", "voxel", "bbox"}));
  gn->add_option("--cond-file", gn_cond_file, "condition JSON envelope");
  gn->add_option("--bbox", gn_bbox, "bbox ratios l,w,h (alternative to --cond-file)");
  gn->add_option("--steps", gn_sample.euler_steps, "Euler steps")->default_val(50);
  gn->add_option("--guidance", gn_sample.guidance_scale, "guidance scale")->default_val(1.0);
  gn->add_option("--seed", gn_seed, "sampling seed")->default_val(0);
  gn->add_option("--grid-res", gn_res, "marching-cubes resolution")->default_val(32);
  gn->add_option("--out", gn_out, "output OBJ path")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate controllability metrics");
  std::string ev_ckpt, ev_data, ev_split = "held-out", ev_metrics, ev_out;
  EvalOptions ev_opts;
  ev->add_option("--ckpt", ev_ckpt, "flow checkpoint")->required();
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--split", ev_split, "held-out|train|all")
      ->check(CLI::IsMember({"held-out", "train", "all"}));
  ev->add_option("--metrics", ev_metrics, "comma list of chamfer,bbox,joint,iou (default all)");
  ev->add_option("--steps", ev_opts.sampling.euler_steps, "Euler steps")->default_val(50);
  ev->add_option("--guidance", ev_opts.sampling.guidance_scale, "guidance scale")->default_val(1.0);
  ev->add_option("--seed", ev_opts.seed, "evaluation seed")->default_val(1234);
  ev->add_option("--mesh-res", ev_opts.mesh_res, "marching-cubes resolution")->default_val(32);
  ev->add_option("--out", ev_out, "report JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  }

  if (gen->parsed()) {
    auto hash = generate_dataset(gen_out, gen_opts);
    std::printf("{\"manifest_hash\":\"%s\",\"out\":\"%s\",\"num\":%d}\n", hash.c_str(),
                gen_out.c_str(), gen_opts.num);
    return 0;
  }

  if (tv->parsed()) {
    auto cfg = load_train_config(tv_config);
    if (tv_steps > 0) cfg.steps = tv_steps;
    if (tv_seed >= 0) cfg.seed = (uint64_t)tv_seed;
    auto dataset = load_dataset(tv_data);
    VaeConfig vcfg;
    auto result = train_vae(dataset.examples, vcfg, cfg);
    save_vae_checkpoint(tv_out, result.params, vcfg, nlohmann::json::parse(cfg.to_json()));
    std::string trace_path = tv_trace.empty() ? tv_out + ".loss.csv" : tv_trace;
    write_loss_trace(trace_path, result.trace);
    std::string final_loss = "null";
    if (!result.trace.empty()) {
      const std::string& row = result.trace.back();
      auto p1 = row.find(',');
      final_loss = row.substr(p1 + 1, row.find(',', p1 + 1) - p1 - 1);
    }
    std::printf("{\"ckpt\":\"%s\",\"steps\":%d,\"final_loss\":%s,\"trace\":\"%s\"}\n",
                tv_out.c_str(), cfg.steps, final_loss.c_str(), trace_path.c_str());
    return 0;
  }

  if (tf->parsed()) {
    auto cfg = load_train_config(tf_config);
    if (tf_steps > 0) cfg.steps = tf_steps;
    if (tf_seed >= 0) cfg.seed = (uint64_t)tf_seed;
    auto dataset = load_dataset(tf_data);
    VaeConfig vcfg;
    auto vae_params = load_vae_checkpoint(tf_vae, &vcfg);
    DitConfig dcfg;
    ControlEncoderConfig ccfg;
    auto result = train_flow(dataset.examples, vae_params, vcfg, dcfg, ccfg, cfg);
    save_flow_checkpoint(tf_out, result.params, vcfg, dcfg, ccfg,
                         nlohmann::json::parse(cfg.to_json()));
    std::string trace_path = tf_trace.empty() ? tf_out + ".loss.csv" : tf_trace;
    write_loss_trace(trace_path, result.trace);
    std::printf("{\"ckpt\":\"%s\",\"steps\":%d,\"trace\":\"%s\"}\n", tf_out.c_str(), cfg.steps,
                trace_path.c_str());
    return 0;
  }

  if (gn->parsed()) {
    auto pipe = GenPipeline::from_checkpoint(gn_ckpt);
    Tensor depth = load_depth_raster(gn_depth);

    UnifiedCondition cond;
    bool has_cond = false;
    if (gn_cond_type != "none") {
      if (!gn_bbox.empty()) {
        if (gn_cond_type != "bbox")
          throw std::runtime_error("--bbox is only valid with --cond-type bbox");
        Vec3 r = parse_bbox_arg(gn_bbox);
        cond = canonicalize(build_bbox_condition(r.x, r.y, r.z));
      } else if (!gn_cond_file.empty()) {
        cond = condition_from_json(read_text_file(gn_cond_file));
        if (cond.type_id != (int)cond_type_from_name(gn_cond_type))
          throw std::runtime_error("condition file type_id does not match --cond-type");
      } else {
        throw std::runtime_error("--cond-type " + gn_cond_type +
                                 " needs --cond-file (or --bbox for bbox)");
      }
      has_cond = true;
    }

    Mesh mesh = pipe.generate(depth, has_cond ? &cond : nullptr, gn_sample, gn_seed, gn_res);
    std::string why;
    if (!mesh.valid(&why)) throw std::runtime_error("generated mesh failed validation: " + why);
    write_obj(gn_out, mesh);

    nlohmann::json log;
    log["out"] = gn_out;
    log["vertices"] = mesh.vertices.size();
    log["triangles"] = mesh.triangles.size();
    if (!mesh.empty()) {
      auto points = sample_mesh_surface(mesh, 2048, derive_seed(gn_seed, 7));
      auto [lo, hi] = bbox_of(points);
      Vec3 ext = (hi - lo) * 0.5;
      double m = std::max(max_component(ext), 1e-9);
      log["measured_bbox_ratios"] = {ext.x / m, ext.y / m, ext.z / m};
    }
    if (has_cond && cond.type_id == (int)CondType::bbox) {
      Vec3 req{0, 0, 0};
      for (int r = 0; r < cond.rows; ++r)
        req = cwise_max(req, cwise_abs(Vec3{cond.at(r, 0), cond.at(r, 1), cond.at(r, 2)}));
      log["requested_bbox_ratios"] = {req.x, req.y, req.z};
    }
    std::printf("%s\n", log.dump().c_str());
    return 0;
  }

  if (ev->parsed()) {
    ev_opts.split = ev_split;
    if (!ev_metrics.empty()) {
      std::istringstream ss(ev_metrics);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) ev_opts.metrics.insert(item);
    }
    auto pipe = GenPipeline::from_checkpoint(ev_ckpt);
    auto dataset = load_dataset(ev_data);
    auto report = run_eval(dataset.examples, pipe, ev_opts);
    auto doc = report.to_json();
    if (ev_out.empty()) {
      std::printf("%s\n", doc.dump(2).c_str());
    } else {
      write_text_file(ev_out, doc.dump(2));
      std::printf("{\"report\":\"%s\",\"records\":%zu}\n", ev_out.c_str(),
                  report.records.size());
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (auto& c : msg)
      if (c == '\n') c = ' ';
    std::fprintf(stderr, "error: %s\n", msg.c_str());
    return 2;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (auto& c : msg)
      if (c == '\n') c = ' ';
    std::fprintf(stderr, "error: %s\n", msg.c_str());
    return 1;
  }
}
