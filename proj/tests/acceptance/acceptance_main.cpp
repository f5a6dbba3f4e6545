// Acceptance suite: runs every criterion end to end and prints one PASS/FAIL
// line per criterion. Training artifacts are cached in the work directory so
// a rerun after a late failure does not retrain.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <thread>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shapeflow/control_encoder.hpp"
#include "shapeflow/evaluate.hpp"
#include "shapeflow/io.hpp"
#include "shapeflow/parallel.hpp"
#include "shapeflow/marching_cubes.hpp"
#include "shapeflow/model_io.hpp"
#include "shapeflow/synthdata.hpp"
#include "shapeflow/trainer.hpp"

using namespace shapeflow;
namespace fs = std::filesystem;

namespace {

struct Checker {
  int failures = 0;

  void report(bool ok, const std::string& line) {
    std::printf("%s %s\n", ok ? "PASS" : "FAIL", line.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const auto start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

struct Timer {
  double t0 = now_seconds();
  double elapsed() const { return now_seconds() - t0; }
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

// ---------------------------------------------------------------- criterion 1
void criterion_voxel_oracle(Checker& c) {
  Timer timer;
  Rng rng(101);
  bool all_equal = true;
  for (int trial = 0; trial < 1000 && all_equal; ++trial) {
    int n = 1 + (int)rng.uniform_int(256);
    PointSet pts;
    for (int i = 0; i < n; ++i)
      pts.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    auto cond = build_voxel_condition(pts);
    std::set<std::array<int, 3>> oracle;
    for (const auto& p : pts.points) {
      std::array<int, 3> cell{};
      for (int a = 0; a < 3; ++a)
        cell[a] = std::clamp((int)std::floor((p[a] + 1.0) / 2.0 * 16.0), 0, 15);
      oracle.insert(cell);
    }
    if (cond.centers.size() != oracle.size()) {
      all_equal = false;
      break;
    }
    size_t i = 0;
    for (const auto& cell : oracle) {
      Vec3 want{(cell[0] + 0.5) / 16.0 * 2.0 - 1.0, (cell[1] + 0.5) / 16.0 * 2.0 - 1.0,
                (cell[2] + 0.5) / 16.0 * 2.0 - 1.0};
      if (norm(cond.centers[i] - want) != 0.0) {
        all_equal = false;
        break;
      }
      ++i;
    }
  }
  double secs = timer.elapsed();
  c.report(all_equal && secs < 10.0,
           "criterion 1: voxelization equals the pointwise brute-force oracle on 1000 random "
           "point sets (exact set equality, " +
               fmt("%.2f", secs) + " s)");
}

// ---------------------------------------------------------------- criterion 2
void criterion_canonicalize_law(Checker& c) {
  Rng rng(202);
  bool ok = true;
  for (int trial = 0; trial < 10000 && ok; ++trial) {
    int type = (int)rng.uniform_int(4);
    int n = (type == 3) ? 8 : 1 + (int)rng.uniform_int(32);
    std::vector<double> data;
    for (int i = 0; i < n * (type == 0 ? 6 : 3); ++i) data.push_back(rng.uniform(-1, 1));
    UnifiedCondition uni;
    if (type == 0) {
      SkeletonCond s;
      for (int i = 0; i < n; ++i)
        s.bones.push_back({data[i * 6], data[i * 6 + 1], data[i * 6 + 2], data[i * 6 + 3],
                           data[i * 6 + 4], data[i * 6 + 5]});
      uni = canonicalize(s);
      for (int r = 0; r < n && ok; ++r)
        for (int col = 0; col < 6; ++col) ok = ok && uni.at(r, col) == s.bones[r][col];
    } else {
      std::vector<Vec3> pts(n);
      for (int i = 0; i < n; ++i) pts[i] = {data[i * 3], data[i * 3 + 1], data[i * 3 + 2]};
      if (type == 1) {
        PointCloudCond pc;
        pc.points = pts;
        uni = canonicalize(pc);
      } else if (type == 2) {
        VoxelCond vc;
        vc.centers = pts;
        uni = canonicalize(vc);
      } else {
        BBoxCond bc;
        for (int i = 0; i < 8; ++i) bc.vertices[i] = pts[i];
        uni = canonicalize(bc);
      }
      for (int r = 0; r < n && ok; ++r)
        for (int col = 0; col < 3; ++col) {
          ok = ok && uni.at(r, col) == pts[r][col];             // exact round trip
          ok = ok && uni.at(r, col) == uni.at(r, col + 3);      // channel repeat
        }
    }
    ok = ok && uni.type_id == type && uni.rows == n;
  }
  c.report(ok, "criterion 2: canonicalization channel-repeat law and exact payload round trip "
               "over 10k random conditions");
}

// ---------------------------------------------------------------- criterion 3
void criterion_encoder_contract(Checker& c) {
  Timer timer;
  ControlEncoderConfig cfg;
  ParamStore ps;
  Rng rng(303);
  init_control_encoder(ps, cfg, rng);

  bool ok = true;
  // shape law for all four modalities
  auto surface = sample_surface(SdfPrimitive::ellipsoid({0.7, 0.6, 0.4}), 2048, 7);
  std::vector<UnifiedCondition> conds;
  {
    PointCloudCond pc;
    pc.points = surface.points;
    pc.points.resize(512);
    conds.push_back(canonicalize(pc));
    conds.push_back(canonicalize(build_voxel_condition(surface)));
    conds.push_back(canonicalize(build_bbox_condition(2, 1, 1)));
    SkeletonCond sk;
    for (int i = 0; i < 11; ++i)
      sk.bones.push_back({0.1 * i, 0.2, -0.1, 0.0, 0.3, 0.1});
    conds.push_back(canonicalize(sk));
  }
  for (const auto& cond : conds) {
    auto beta = encode_condition(cond, ps, cfg);
    ok = ok && beta.rows == cond.rows && beta.cols == cfg.channels();
  }

  // identical payload, two type ids: point block equal, type block differs
  auto uni = conds[2];
  for (int a = 0; a < 4 && ok; ++a)
    for (int b = a + 1; b < 4 && ok; ++b) {
      auto ua = uni;
      ua.type_id = a;
      auto ub = uni;
      ub.type_id = b;
      auto ba = encode_condition(ua, ps, cfg);
      auto bb = encode_condition(ub, ps, cfg);
      double point_diff = 0, type_diff = 0;
      for (int r = 0; r < ba.rows; ++r) {
        for (int col = 0; col < cfg.point_channels; ++col)
          point_diff += std::fabs(ba.at(r, col) - bb.at(r, col));
        for (int col = cfg.point_channels; col < cfg.channels(); ++col)
          type_diff += std::fabs(ba.at(r, col) - bb.at(r, col));
      }
      ok = ok && point_diff == 0.0 && type_diff > 0.0;
    }

  // f64 matmul oracle within 1e-9
  const auto& W = ps.at("cenc.point.w").value;
  const auto& B = ps.at("cenc.point.b").value;
  const auto& table = ps.at("cenc.table").value;
  const auto& M = ps.at("cenc.proj").value;
  for (const auto& cond : conds) {
    auto beta = encode_condition(cond, ps, cfg);
    auto pe = pos_embed(payload_tensor(cond), cfg.freqs);
    std::vector<double> tvec(cfg.type_dim, 0.0);
    for (int j = 0; j < cfg.type_dim; ++j)
      for (int k = 0; k < cfg.type_dim; ++k) tvec[j] += table.at(cond.type_id, k) * M.at(k, j);
    for (int r = 0; r < cond.rows && ok; ++r) {
      for (int col = 0; col < cfg.point_channels; ++col) {
        double s = B.v[col];
        for (int k = 0; k < cfg.posemb_dim(); ++k) s += pe.at(r, k) * W.at(k, col);
        ok = ok && std::fabs(beta.at(r, col) - s) <= 1e-9;
      }
      for (int rep = 0; rep < cfg.repeats; ++rep)
        for (int j = 0; j < cfg.type_dim; ++j)
          ok = ok && std::fabs(beta.at(r, cfg.point_channels + rep * cfg.type_dim + j) -
                               tvec[j]) <= 1e-9;
    }
  }
  double secs = timer.elapsed();
  c.report(ok && secs < 5.0,
           "criterion 3: encoder contract (shape law, type-block disambiguation, matmul-oracle "
           "agreement <= 1e-9, " +
               fmt("%.2f", secs) + " s)");
}

// ---------------------------------------------------------------- criterion 4
struct GradStats {
  double worst = 0;
  size_t params = 0;
};

template <typename LossFn>
GradStats grad_check(ParamStore& ps, LossFn&& loss_fn, double h = 1e-5) {
  GradStats stats;
  stats.params = ps.param_count();
  ps.zero_grad();
  loss_fn(ps, true);
  for (auto& [name, e] : ps.entries) {
    for (size_t i = 0; i < e.value.v.size(); ++i) {
      double saved = e.value.v[i];
      e.value.v[i] = saved + h;
      double fp = loss_fn(ps, false);
      e.value.v[i] = saved - h;
      double fm = loss_fn(ps, false);
      e.value.v[i] = saved;
      double fd = (fp - fm) / (2.0 * h);
      double an = e.grad.v[i];
      double err = std::fabs(an - fd) / std::max({std::fabs(an), std::fabs(fd), 1e-6});
      stats.worst = std::max(stats.worst, err);
    }
  }
  return stats;
}

void criterion_gradients(Checker& c) {
  Timer timer;

  VaeConfig vcfg;
  vcfg.latent_tokens = 3;
  vcfg.latent_dim = 2;
  vcfg.width = 8;
  vcfg.heads = 2;
  vcfg.freqs = 1;
  vcfg.mlp_hidden = 12;
  ParamStore vps;
  Rng vrng(404);
  init_vae(vps, vcfg, vrng);
  auto surface = sample_surface(SdfPrimitive::sphere(0.5), 8, 405);
  std::vector<Vec3> queries = {{0, 0, 0}, {0.4, 0, 0}, {0, -0.6, 0.2}, {0.8, 0.8, -0.8}};
  std::vector<double> truth;
  for (const auto& q : queries) truth.push_back(sdf_eval(SdfPrimitive::sphere(0.5), q));
  auto vae_stats = grad_check(vps, [&](ParamStore& p, bool back) {
    Graph g;
    auto enc = vae_encode_node(g, p, vcfg, surface, 99);
    int pred = vae_decode_node(g, p, vcfg, enc.sample, queries);
    int loss = vae_loss_node(g, enc.mean, enc.logvar, pred, truth, 1e-2);
    if (back) g.backward(loss);
    return g.scalar(loss);
  });

  DitConfig dcfg;
  dcfg.blocks = 1;
  dcfg.width = 8;
  dcfg.heads = 2;
  dcfg.latent_tokens = 3;
  dcfg.latent_dim = 2;
  dcfg.mlp_hidden = 12;
  dcfg.image_size = 8;
  dcfg.patch = 4;
  ControlEncoderConfig ccfg;
  ccfg.freqs = 1;
  ccfg.point_channels = 4;
  ccfg.type_dim = 2;
  ccfg.repeats = 2;  // channels = 8 = width
  ParamStore fps;
  Rng frng(406);
  init_flow_model(fps, dcfg, frng);
  init_control_encoder(fps, ccfg, frng);
  for (double& x : fps.at("dit.out.w").value.v) x = (double)(float)(0.2 * frng.normal());
  UnifiedCondition cond = canonicalize(build_bbox_condition(1.5, 1.0, 0.7));
  Tensor depth(8, 8);
  Rng drng(407);
  for (double& x : depth.v) x = drng.uniform(0.0, 2.0);
  Tensor x0(3, 2), x1(3, 2);
  for (double& v : x0.v) v = drng.normal();
  for (double& v : x1.v) v = drng.normal();
  auto flow_stats = grad_check(fps, [&](ParamStore& p, bool back) {
    Graph g;
    int img = embed_image_node(g, p, dcfg, depth);
    int beta = encode_condition_node(g, p, ccfg, cond);
    int ctx = build_joint_condition_node(g, img, beta);
    int loss = fm_loss_node(g, p, dcfg, x0, x1, 0.37, ctx);
    if (back) g.backward(loss);
    return g.scalar(loss);
  });

  double secs = timer.elapsed();
  bool ok = vae_stats.worst <= 1e-3 && flow_stats.worst <= 1e-3 && vae_stats.params <= 10000 &&
            flow_stats.params <= 10000 && secs < 120.0;
  c.report(ok, "criterion 4: VAE and flow-matching loss gradients match central differences "
               "(worst rel err " +
                   fmt("%.2e", vae_stats.worst) + " / " + fmt("%.2e", flow_stats.worst) + " on " +
                   fmt("%.0f", (double)vae_stats.params) + " / " +
                   fmt("%.0f", (double)flow_stats.params) + " params, " + fmt("%.1f", secs) +
                   " s)");
}

// ---------------------------------------------------------------- criterion 5
bool mesh_watertight(const Mesh& mesh) {
  std::map<std::pair<int, int>, int> uses;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      uses[{std::min(a, b), std::max(a, b)}]++;
    }
  for (const auto& [edge, n] : uses)
    if (n != 2) return false;
  return !uses.empty();
}

void criterion_marching_cubes(Checker& c) {
  Timer timer;
  auto mesh = marching_cubes(make_sdf_grid(SdfPrimitive::sphere(0.5), 32), 0.0);
  double cell_diag = 2.0 / 31.0 * std::sqrt(3.0);
  double worst = 0;
  for (const auto& v : mesh.vertices) worst = std::max(worst, std::fabs(norm(v) - 0.5));
  bool ok = !mesh.empty() && mesh_watertight(mesh) && worst <= cell_diag;
  double secs = timer.elapsed();
  c.report(ok && secs < 5.0, "criterion 5: marching cubes on the analytic sphere is watertight "
                             "with max surface deviation " +
                                 fmt("%.4f", worst) + " <= " + fmt("%.4f", cell_diag) + " (" +
                                 fmt("%.2f", secs) + " s)");
}

// ------------------------------------------------------- shared training ops
struct Budgets {
  int dataset_size = 500;
  int vae_steps = 5000;
  int flow_steps = 20000;
  double figures_frac = 0.4;
  int eval_cap = 0;  // 0 = no cap on held-out examples per criterion
};

std::string ensure_dataset(const fs::path& dir, int num, double figures_frac, uint64_t seed) {
  if (fs::exists(dir / "manifest.jsonl"))
    return read_text_file((dir / "manifest.jsonl").string()).empty() ? "" : "cached";
  GenDataOptions opts;
  opts.num = num;
  opts.seed = seed;
  opts.figures_frac = figures_frac;
  generate_dataset(dir.string(), opts);
  return "generated";
}

ParamStore ensure_vae(const fs::path& ckpt, const std::vector<DatasetExample>& dataset,
                      const VaeConfig& vcfg, int steps, uint64_t seed, double* train_secs) {
  if (fs::exists(ckpt)) {
    *train_secs = 0;
    return load_vae_checkpoint(ckpt.string(), nullptr);
  }
  TrainConfig tcfg;
  tcfg.steps = steps;
  tcfg.seed = seed;
  Timer t;
  auto result = train_vae(dataset, vcfg, tcfg);
  *train_secs = t.elapsed();
  save_vae_checkpoint(ckpt.string(), result.params, vcfg,
                      nlohmann::json::parse(tcfg.to_json()));
  write_loss_trace(ckpt.string() + ".loss.csv", result.trace);
  return std::move(result.params);
}

GenPipeline ensure_flow(const fs::path& ckpt, const std::vector<DatasetExample>& dataset,
                        const ParamStore& vae_params, const VaeConfig& vcfg, int steps,
                        uint64_t seed, double* train_secs) {
  DitConfig dcfg;
  ControlEncoderConfig ccfg;
  if (fs::exists(ckpt)) {
    *train_secs = 0;
    return GenPipeline::from_checkpoint(ckpt.string());
  }
  TrainConfig tcfg;
  tcfg.steps = steps;
  tcfg.seed = seed;
  Timer t;
  auto result = train_flow(dataset, vae_params, vcfg, dcfg, ccfg, tcfg);
  *train_secs = t.elapsed();
  save_flow_checkpoint(ckpt.string(), result.params, vcfg, dcfg, ccfg,
                       nlohmann::json::parse(tcfg.to_json()));
  write_loss_trace(ckpt.string() + ".loss.csv", result.trace);
  GenPipeline pipe;
  pipe.params = std::move(result.params);
  pipe.vae = vcfg;
  pipe.dit = dcfg;
  pipe.cenc = ccfg;
  return pipe;
}

// ---------------------------------------------------------------- criterion 6
void criterion_vae_reconstruction(Checker& c, const fs::path& work, const Budgets& budgets,
                                  std::vector<double>* held_out_ious) {
  ensure_dataset(work / "ds_prims", budgets.dataset_size, 0.0, 1001);
  auto dataset = load_dataset((work / "ds_prims").string());

  VaeConfig vcfg;
  double train_secs = 0;
  auto params =
      ensure_vae(work / "vae_prims.omni", dataset.examples, vcfg, budgets.vae_steps, 11, &train_secs);

  std::vector<const DatasetExample*> held;
  for (const auto& ex : dataset.examples)
    if (is_held_out(ex.id)) held.push_back(&ex);
  if (budgets.eval_cap > 0 && (int)held.size() > budgets.eval_cap) held.resize(budgets.eval_cap);

  const int res = 32;
  std::vector<double> ious(held.size());
  for (size_t i = 0; i < held.size(); ++i) {
    const auto& ex = *held[i];
    auto z = vae_encode(ex.surface, params, vcfg, 0).first.mean;
    auto pred = decode_sdf_grid(z, res, params, vcfg);
    auto truth = make_sdf_grid(ex.shape, res);
    size_t inter = 0, uni = 0;
    for (size_t k = 0; k < pred.values.size(); ++k) {
      bool in_pred = pred.values[k] < 0;
      bool in_true = truth.values[k] < 0;
      inter += in_pred && in_true;
      uni += in_pred || in_true;
    }
    ious[i] = uni == 0 ? 1.0 : (double)inter / (double)uni;
  }
  double med = median(ious);
  if (held_out_ious) *held_out_ious = ious;
  c.report(med >= 0.7, "criterion 6: toy VAE reconstruction on held-out primitives, median "
                       "volumetric IoU@32 = " +
                           fmt("%.3f", med) + " >= 0.7 (over " +
                           fmt("%.0f", (double)held.size()) + " examples, train " +
                           fmt("%.0f", train_secs) + " s)");
}

// --------------------------------------------------------- criteria 7, 8, 9
void criteria_controllability(Checker& c, const fs::path& work, const Budgets& budgets) {
  ensure_dataset(work / "ds_mixed", budgets.dataset_size, budgets.figures_frac, 2002);
  auto dataset = load_dataset((work / "ds_mixed").string());

  VaeConfig vcfg;
  double vae_secs = 0, flow_secs = 0;
  auto vae_params = ensure_vae(work / "vae_mixed.omni", dataset.examples, vcfg, budgets.vae_steps,
                               21, &vae_secs);
  auto pipe = ensure_flow(work / "flow_mixed.omni", dataset.examples, vae_params, vcfg,
                          budgets.flow_steps, 22, &flow_secs);
  std::printf("INFO trained flow pipeline (vae %.0f s, flow %.0f s)\n", vae_secs, flow_secs);
  std::fflush(stdout);

  std::vector<const DatasetExample*> held;
  for (const auto& ex : dataset.examples)
    if (is_held_out(ex.id)) held.push_back(&ex);
  if (budgets.eval_cap > 0 && (int)held.size() > budgets.eval_cap) held.resize(budgets.eval_cap);

  FlowSampleConfig sampling;  // 50 Euler steps, no guidance

  // criterion 7: complete point cloud conditioning vs image-only chamfer
  {
    std::vector<double> chamfer_point(held.size()), chamfer_none(held.size());
    parallel_for((int64_t)held.size(), [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) {
        const auto& ex = *held[i];
        auto pc = build_point_condition(ex.surface, 1024, PointCloudMode::complete,
                                        derive_seed(7001, fnv1a64(ex.id)), 0.0);
        auto cond = canonicalize(pc);
        uint64_t seed = derive_seed(7002, fnv1a64(ex.id));
        auto mesh_pt = pipe.generate(ex.depth, &cond, sampling, seed);
        auto mesh_im = pipe.generate(ex.depth, nullptr, sampling, seed);
        auto measure = [&](const Mesh& mesh) {
          if (mesh.empty()) return 2.0 * std::sqrt(3.0);
          auto pts = sample_mesh_surface(mesh, 2048, derive_seed(seed, 3));
          return chamfer(pts, ex.surface);
        };
        chamfer_point[i] = measure(mesh_pt);
        chamfer_none[i] = measure(mesh_im);
      }
    });
    double med_point = median(chamfer_point);
    double med_none = median(chamfer_none);
    bool ok = med_point <= 0.8 * med_none;
    c.report(ok, "criterion 7: point-cloud controllability, held-out median chamfer " +
                     fmt("%.4f", med_point) + " (conditioned) vs " + fmt("%.4f", med_none) +
                     " (image-only); required >= 20% reduction (" +
                     fmt("%.1f", 100.0 * (1.0 - med_point / med_none)) + "% achieved over " +
                     fmt("%.0f", (double)held.size()) + " examples)");
  }

  // criterion 8: bbox ratio control on held-out table-like shapes
  {
    std::vector<const DatasetExample*> tables;
    for (const auto* ex : held)
      if (ex->category == "table_like") tables.push_back(ex);
    const Vec3 requests[3] = {{1, 1, 1}, {2, 1, 1}, {1, 1, 2}};
    std::vector<double> errors(tables.size() * 3, -1.0);
    parallel_for((int64_t)tables.size(), [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) {
        const auto& ex = *tables[i];
        for (int r = 0; r < 3; ++r) {
          auto cond = canonicalize(
              build_bbox_condition(requests[r].x, requests[r].y, requests[r].z));
          uint64_t seed = derive_seed(8000 + r, fnv1a64(ex.id));
          auto mesh = pipe.generate(ex.depth, &cond, sampling, seed);
          if (mesh.empty()) {
            errors[i * 3 + r] = 1.0;
            continue;
          }
          auto pts = sample_mesh_surface(mesh, 2048, derive_seed(seed, 3));
          auto [lo_c, hi_c] = bbox_of(pts);
          Vec3 got = (hi_c - lo_c) * 0.5;
          double gm = std::max(max_component(got), 1e-9);
          Vec3 req = requests[r] / max_component(requests[r]);
          double err = 0;
          for (int a = 0; a < 3; ++a)
            err = std::max(err, std::fabs((got[a] / gm) / req[a] - 1.0));
          errors[i * 3 + r] = err;
        }
      }
    });
    int good = 0;
    for (double e : errors) good += (e >= 0 && e <= 0.2) ? 1 : 0;
    double frac = errors.empty() ? 0.0 : (double)good / (double)errors.size();
    c.report(!errors.empty() && frac >= 0.8,
             "criterion 8: bbox controllability on held-out table-like shapes, ratio error <= "
             "0.2 in " +
                 fmt("%.1f", 100.0 * frac) + "% of " + fmt("%.0f", (double)errors.size()) +
                 " generations (required >= 80%)");
  }

  // criterion 9: skeleton controllability on held-out figures
  {
    auto figure = toy_humanoid();
    std::vector<const DatasetExample*> figures;
    for (const auto* ex : held)
      if (ex->is_figure && ex->conditions.count((int)CondType::skeleton)) figures.push_back(ex);
    std::vector<double> err_skel(figures.size()), err_none(figures.size());
    parallel_for((int64_t)figures.size(), [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) {
        const auto& ex = *figures[i];
        const auto& skel = ex.conditions.at((int)CondType::skeleton);
        uint64_t seed = derive_seed(9001, fnv1a64(ex.id));
        auto joint_error = [&](const Mesh& mesh) {
          if (mesh.empty()) return 2.0 * std::sqrt(3.0);
          auto pts = sample_mesh_surface(mesh, 2048, derive_seed(seed, 3));
          double total = 0;
          for (int b = 0; b < skel.rows; ++b) {
            Vec3 head{skel.at(b, 0), skel.at(b, 1), skel.at(b, 2)};
            double best = 1e30;
            for (const auto& p : pts.points) best = std::min(best, norm2(p - head));
            total += std::fabs(std::sqrt(best) - figure.bones[b].radius);
          }
          return total / skel.rows;
        };
        err_skel[i] = joint_error(pipe.generate(ex.depth, &skel, sampling, seed));
        err_none[i] = joint_error(pipe.generate(ex.depth, nullptr, sampling, seed));
      }
    });
    double med = median(err_skel);
    int wins = 0;
    for (size_t i = 0; i < figures.size(); ++i) wins += err_skel[i] < err_none[i] ? 1 : 0;
    double win_frac = figures.empty() ? 0.0 : (double)wins / (double)figures.size();
    bool ok = !figures.empty() && med <= 0.15 && win_frac >= 0.7;
    c.report(ok, "criterion 9: skeleton controllability, held-out median joint error " +
                     fmt("%.4f", med) + " <= 0.15 and beats image-only in " +
                     fmt("%.1f", 100.0 * win_frac) + "% of " +
                     fmt("%.0f", (double)figures.size()) + " pose pairs (required >= 70%)");
  }

  // post-training property lines (module invariants that need a trained model)
  {
    const DatasetExample* probe = held.empty() ? nullptr : held.front();
    if (probe) {
      auto pc = build_point_condition(probe->surface, 1024, PointCloudMode::complete, 555, 0.0);
      auto cond = canonicalize(pc);
      Tensor img = embed_image(probe->depth, pipe.params, pipe.dit);
      Tensor beta = encode_condition(cond, pipe.params, pipe.cenc);
      Tensor ctx = build_joint_condition(img, beta);

      // Euler-step convergence: ||sample(2K) - sample(K)|| decreasing in K
      std::vector<int> ks = {5, 10, 25, 50};
      std::vector<double> deltas;
      for (int k : ks) {
        std::vector<double> diffs;
        for (uint64_t s = 0; s < 16; ++s) {
          FlowSampleConfig ca;
          ca.euler_steps = k;
          FlowSampleConfig cb;
          cb.euler_steps = 2 * k;
          auto xa = sample_flow(ctx, nullptr, ca, pipe.params, pipe.dit, 1000 + s);
          auto xb = sample_flow(ctx, nullptr, cb, pipe.params, pipe.dit, 1000 + s);
          double d2 = 0;
          for (size_t i = 0; i < xa.v.size(); ++i)
            d2 += (xa.v[i] - xb.v[i]) * (xa.v[i] - xb.v[i]);
          diffs.push_back(std::sqrt(d2));
        }
        deltas.push_back(median(diffs));
      }
      bool mono = deltas[0] > deltas[1] && deltas[1] > deltas[2] && deltas[2] > deltas[3];
      c.report(mono, "property: Euler sampling converges, median ||x(2K)-x(K)|| = " +
                         fmt("%.3f", deltas[0]) + " > " + fmt("%.3f", deltas[1]) + " > " +
                         fmt("%.3f", deltas[2]) + " > " + fmt("%.3f", deltas[3]) +
                         " for K in {5,10,25,50}");
    }
  }
}

// --------------------------------------------------- post-training VAE props
void vae_behavior_properties(Checker& c, const fs::path& work, const Budgets& budgets) {
  auto dataset = load_dataset((work / "ds_prims").string());
  VaeConfig vcfg;
  double secs = 0;
  auto params = ensure_vae(work / "vae_prims.omni", dataset.examples, vcfg, budgets.vae_steps,
                           11, &secs);

  const DatasetExample* sphere_ex = nullptr;
  for (const auto& ex : dataset.examples)
    if (is_held_out(ex.id) && ex.category == "sphere_like") {
      sphere_ex = &ex;
      break;
    }
  if (!sphere_ex) {
    c.report(false, "property: no held-out sphere-like example available");
    return;
  }
  auto z = vae_encode(sphere_ex->surface, params, vcfg, 0).first.mean;

  // interior query decodes negative after training
  Vec3 center{0, 0, 0};
  double inner = vae_decode_sdf(z, {center}, params, vcfg)[0];
  c.report(inner < 0, "property: trained VAE decodes the held-out shape center as interior (" +
                          fmt("%.4f", inner) + " < 0)");

  // res-32 extraction is nonempty and watertight
  auto mesh32 = extract_mesh(z, 32, params, vcfg);
  c.report(!mesh32.empty() && mesh_watertight(mesh32),
           "property: trained VAE mesh extraction at res 32 is nonempty and watertight (" +
               fmt("%.0f", (double)mesh32.triangles.size()) + " triangles)");

  // coarse-grid consistency: chamfer(res 8, res 32) within the cell bound
  auto mesh8 = extract_mesh(z, 8, params, vcfg);
  if (mesh8.empty()) {
    c.report(false, "property: res-8 extraction unexpectedly empty");
  } else {
    auto a = sample_mesh_surface(mesh8, 1024, 5);
    auto b = sample_mesh_surface(mesh32, 1024, 6);
    double d = chamfer(a, b);
    c.report(d <= 2.0 * (2.0 / 7.0), "property: res-8 vs res-32 extraction chamfer " +
                                         fmt("%.4f", d) + " <= " + fmt("%.4f", 2.0 * (2.0 / 7.0)));
  }
}

// --------------------------------------------------------------- criterion 10
void criterion_determinism(Checker& c, const fs::path& work, const Budgets& budgets) {
  // dataset manifests
  GenDataOptions opts;
  opts.num = 12;
  opts.seed = 77;
  opts.figures_frac = 0.25;
  fs::remove_all(work / "det_a");
  fs::remove_all(work / "det_b");
  auto h1 = generate_dataset((work / "det_a").string(), opts);
  auto h2 = generate_dataset((work / "det_b").string(), opts);
  bool manifests_ok = h1 == h2;

  // 10-step loss traces (VAE and flow)
  auto ds = load_dataset((work / "det_a").string());
  VaeConfig vcfg;
  vcfg.latent_tokens = 8;
  vcfg.latent_dim = 4;
  vcfg.width = 16;
  vcfg.heads = 2;
  vcfg.freqs = 2;
  vcfg.mlp_hidden = 32;
  TrainConfig tcfg;
  tcfg.steps = 10;
  tcfg.seed = 5;
  auto v1 = train_vae(ds.examples, vcfg, tcfg);
  auto v2 = train_vae(ds.examples, vcfg, tcfg);
  bool vae_trace_ok = v1.trace == v2.trace;

  DitConfig dcfg;
  dcfg.blocks = 1;
  dcfg.width = 16;
  dcfg.heads = 2;
  dcfg.latent_tokens = 8;
  dcfg.latent_dim = 4;
  dcfg.mlp_hidden = 32;
  ControlEncoderConfig ccfg;
  ccfg.freqs = 2;
  ccfg.point_channels = 12;
  ccfg.type_dim = 2;
  ccfg.repeats = 2;
  auto f1 = train_flow(ds.examples, v1.params, vcfg, dcfg, ccfg, tcfg);
  auto f2 = train_flow(ds.examples, v1.params, vcfg, dcfg, ccfg, tcfg);
  bool flow_trace_ok = f1.trace == f2.trace;

  // generated OBJ bytes from the cached full-scale pipeline when present,
  // otherwise from the small one trained here
  std::string obj1, obj2;
  {
    GenPipeline pipe;
    fs::path full = work / "flow_mixed.omni";
    if (fs::exists(full)) {
      pipe = GenPipeline::from_checkpoint(full.string());
    } else {
      pipe.params = std::move(f1.params);
      pipe.vae = vcfg;
      pipe.dit = dcfg;
      pipe.cenc = ccfg;
    }
    const auto& ex = ds.examples.front();
    auto cond = canonicalize(build_bbox_condition(2, 1, 1));
    FlowSampleConfig sampling;
    sampling.euler_steps = 25;
    obj1 = obj_to_string(pipe.generate(ex.depth, &cond, sampling, 99, 24));
    obj2 = obj_to_string(pipe.generate(ex.depth, &cond, sampling, 99, 24));
  }
  bool obj_ok = !obj1.empty() && obj1 == obj2;

  c.report(manifests_ok && vae_trace_ok && flow_trace_ok && obj_ok,
           std::string("criterion 10: determinism (manifest hashes ") +
               (manifests_ok ? "equal" : "DIFFER") + ", 10-step VAE/flow traces " +
               ((vae_trace_ok && flow_trace_ok) ? "bit-identical" : "DIFFER") +
               ", generated OBJ bytes " + (obj_ok ? "identical" : "DIFFER") + ")");
  (void)budgets;
}

// --------------------------------------------------------------- criterion 11
void criterion_modality_sampler(Checker& c) {
  TrainConfig cfg;  // defaults
  auto w = cfg.normalized_weights();
  bool skeleton_highest = w[0] > w[1] && w[0] > w[2] && w[0] > w[3];
  Rng rng(1111);
  const int n = 100000;
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < n; ++i) counts[sample_modality(rng, w)]++;
  double worst = 0;
  for (int m = 0; m < 4; ++m)
    worst = std::max(worst, std::fabs((double)counts[m] / n - w[m]));
  c.report(skeleton_highest && worst <= 0.01,
           "criterion 11: modality sampler frequencies within +-0.01 of configured weights over "
           "100k draws (worst dev " +
               fmt("%.4f", worst) + "), skeleton weight strictly highest by default");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string workdir = "acceptance_work";
  Budgets budgets;
  bool quick = false;
  app.add_option("--workdir", workdir, "artifact cache directory");
  app.add_flag("--quick", quick, "tiny budgets for a fast pipeline exercise");
  app.add_option("--dataset-size", budgets.dataset_size, "training dataset size");
  app.add_option("--vae-steps", budgets.vae_steps, "VAE training steps");
  app.add_option("--flow-steps", budgets.flow_steps, "flow training steps");
  app.add_option("--eval-cap", budgets.eval_cap, "cap held-out examples per criterion");
  CLI11_PARSE(app, argc, argv);

  if (quick) {
    budgets.dataset_size = 40;
    budgets.vae_steps = 60;
    budgets.flow_steps = 80;
    budgets.eval_cap = 4;
  }

  // default to 4 workers (the budget reference) unless the env caps it
  if (!std::getenv("OMNI_THREADS")) {
    int hw = (int)std::thread::hardware_concurrency();
    setenv("OMNI_THREADS", std::to_string(std::min(4, std::max(1, hw))).c_str(), 0);
  }

  fs::path work(workdir);
  fs::create_directories(work);

  Checker checker;
  criterion_voxel_oracle(checker);
  criterion_canonicalize_law(checker);
  criterion_encoder_contract(checker);
  criterion_gradients(checker);
  criterion_marching_cubes(checker);
  criterion_modality_sampler(checker);  // 11 (cheap, run early)
  criterion_determinism(checker, work, budgets);  // 10

  criterion_vae_reconstruction(checker, work, budgets, nullptr);  // 6
  vae_behavior_properties(checker, work, budgets);
  criteria_controllability(checker, work, budgets);  // 7, 8, 9

  std::printf("%s: %d failure(s)\n", checker.failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
              checker.failures);
  return checker.failures == 0 ? 0 : 1;
}
