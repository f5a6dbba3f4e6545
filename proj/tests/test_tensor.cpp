#include <cmath>

#include "doctest.h"
#include "grad_check.hpp"
#include "shapeflow/layers.hpp"
#include "shapeflow/rng.hpp"
#include "shapeflow/tensor.hpp"

using namespace shapeflow;

namespace {

Tensor random_tensor(int r, int c, uint64_t seed) {
  Rng rng(seed);
  Tensor t(r, c);
  for (double& x : t.v) x = rng.normal();
  return t;
}

}  // namespace

TEST_CASE("matmul variants agree with a naive oracle") {
  auto A = random_tensor(7, 5, 1);
  auto B = random_tensor(5, 9, 2);
  Tensor C;
  mm_nn(A, B, &C);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 9; ++j) {
      double s = 0;
      for (int k = 0; k < 5; ++k) s += A.at(i, k) * B.at(k, j);
      CHECK(C.at(i, j) == doctest::Approx(s).epsilon(1e-14));
    }

  auto Bt = random_tensor(9, 5, 3);  // use as B^T
  Tensor D;
  mm_nt(A, Bt, &D);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 9; ++j) {
      double s = 0;
      for (int k = 0; k < 5; ++k) s += A.at(i, k) * Bt.at(j, k);
      CHECK(D.at(i, j) == doctest::Approx(s).epsilon(1e-14));
    }

  auto At = random_tensor(5, 7, 4);  // use as A^T
  Tensor E;
  mm_tn(At, B, &E);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 9; ++j) {
      double s = 0;
      for (int k = 0; k < 5; ++k) s += At.at(k, i) * B.at(k, j);
      CHECK(E.at(i, j) == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("graph forward values for elementwise ops") {
  Graph g;
  Tensor t(2, 2);
  t.v = {1.0, -2.0, 0.5, 0.0};
  int a = g.value(t);
  CHECK(g.val(g.affine(a, 2.0, 1.0)).v[1] == doctest::Approx(-3.0));
  CHECK(g.val(g.exp(a)).v[0] == doctest::Approx(std::exp(1.0)));
  CHECK(g.val(g.clamp(a, -1.0, 0.75)).v[1] == doctest::Approx(-1.0));
  int sm = g.softmax_rows(a);
  CHECK(g.val(sm).v[0] + g.val(sm).v[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.scalar(g.mean_all(a)) == doctest::Approx(-0.125));
}

TEST_CASE("softmax rows sum to one on random input") {
  Graph g;
  int x = g.value(random_tensor(16, 33, 9));
  int sm = g.softmax_rows(x);
  for (int r = 0; r < 16; ++r) {
    double s = 0;
    for (int c = 0; c < 33; ++c) s += g.val(sm).at(r, c);
    CHECK(std::fabs(s - 1.0) <= 1e-6);
  }
}

TEST_CASE("gradients: linear + relu2 + mse chain") {
  ParamStore ps;
  Rng rng(5);
  init_linear(ps, "fc1", 4, 6, rng);
  init_linear(ps, "fc2", 6, 3, rng);
  Tensor x = random_tensor(5, 4, 6);
  Tensor y = random_tensor(5, 3, 7);
  auto loss = [&](ParamStore& p, bool back) {
    Graph g;
    int h = g.relu2(linear(g, p, "fc1", g.value(x)));
    int out = linear(g, p, "fc2", h);
    int l = g.mse(out, g.value(y));
    if (back) g.backward(l);
    return g.scalar(l);
  };
  testing::check_gradients(ps, loss);
}

TEST_CASE("gradients: attention block") {
  ParamStore ps;
  Rng rng(8);
  init_attention(ps, "attn", 8, rng);
  Tensor xq = random_tensor(3, 8, 10);
  Tensor xkv = random_tensor(5, 8, 11);
  Tensor y = random_tensor(3, 8, 12);
  auto loss = [&](ParamStore& p, bool back) {
    Graph g;
    int out = attention(g, p, "attn", g.value(xq), g.value(xkv), 2);
    int l = g.mse(out, g.value(y));
    if (back) g.backward(l);
    return g.scalar(l);
  };
  testing::check_gradients(ps, loss);
}

TEST_CASE("gradients: layer norm, softmax, l1, concat, slices, repeat") {
  ParamStore ps;
  Rng rng(13);
  init_layer_norm(ps, "ln", 6);
  ps.add("w", randn(6, 6, rng, 0.5));
  ps.add("row", randn(1, 4, rng, 1.0));
  Tensor x = random_tensor(4, 6, 14);
  Tensor y = random_tensor(4, 10, 15);
  auto loss = [&](ParamStore& p, bool back) {
    Graph g;
    int xn = layer_norm(g, p, "ln", g.value(x));
    int h = g.softmax_rows(g.matmul(xn, g.param(p, "w")));
    int rep = g.repeat_rows(g.param(p, "row"), 4);
    int cat = g.concat_cols({h, rep});
    int sl = g.slice_rows(cat, 0, 4);
    int l = g.l1(sl, g.value(y));
    if (back) g.backward(l);
    return g.scalar(l);
  };
  testing::check_gradients(ps, loss, 1e-3, 1e-6);
}

TEST_CASE("gradients: mul, exp, clamp, add_rowvec, concat_rows") {
  ParamStore ps;
  Rng rng(21);
  ps.add("a", randn(3, 4, rng, 0.7));
  ps.add("b", randn(3, 4, rng, 0.7));
  ps.add("bias", randn(1, 4, rng, 0.5));
  Tensor target = random_tensor(6, 4, 22);
  auto loss = [&](ParamStore& p, bool back) {
    Graph g;
    int a = g.param(p, "a");
    int b = g.param(p, "b");
    int prod = g.mul(a, g.exp(g.scale(b, 0.5)));
    int shifted = g.add_rowvec(prod, g.param(p, "bias"));
    int both = g.concat_rows({shifted, g.clamp(a, -0.5, 0.5)});
    int l = g.mse(both, g.value(target));
    if (back) g.backward(l);
    return g.scalar(l);
  };
  testing::check_gradients(ps, loss);
}

TEST_CASE("backward accumulates into shared parameters") {
  ParamStore ps;
  Rng rng(31);
  ps.add("w", randn(2, 2, rng, 1.0));
  Tensor x = random_tensor(2, 2, 32);
  auto loss = [&](ParamStore& p, bool back) {
    Graph g;
    int w1 = g.param(p, "w");
    int w2 = g.param(p, "w");  // used twice
    int out = g.matmul(g.matmul(g.value(x), w1), w2);
    int l = g.mean_all(g.mul(out, out));
    if (back) g.backward(l);
    return g.scalar(l);
  };
  testing::check_gradients(ps, loss);
}

TEST_CASE("pos_embed layout and analytic values") {
  // zero row: raw zeros, sin terms 0, cos terms 1
  Tensor zero(1, 6);
  auto pe = pos_embed(zero, 3);
  CHECK(pe.cols == 6 + 12 * 3);
  for (int c = 0; c < 6; ++c) CHECK(pe.v[c] == 0.0);
  for (int c = 6; c < pe.cols; c += 2) {
    CHECK(pe.v[c] == doctest::Approx(0.0));      // sin
    CHECK(pe.v[c + 1] == doctest::Approx(1.0));  // cos
  }

  // K_f = 0 is the identity
  Tensor x(2, 6);
  Rng rng(3);
  for (double& v : x.v) v = rng.uniform(-1, 1);
  auto id = pos_embed(x, 0);
  CHECK(id.cols == 6);
  for (size_t i = 0; i < x.v.size(); ++i) CHECK(id.v[i] == x.v[i]);

  // x = 0.5 at k = 1: sin(pi) = 0, cos(pi) = -1
  Tensor half(1, 1);
  half.v = {0.5};
  auto ph = pos_embed(half, 2);
  // layout: [x, sin(2^0 pi x), cos(2^0 pi x), sin(2^1 pi x), cos(2^1 pi x)]
  CHECK(ph.v[0] == 0.5);
  CHECK(ph.v[3] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::fabs(ph.v[3]) < 1e-12);
  CHECK(ph.v[4] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("parameter stores quantize to f32 and count sizes") {
  ParamStore ps;
  Rng rng(77);
  init_linear(ps, "fc", 3, 5, rng);
  CHECK(ps.param_count() == 3 * 5 + 5);
  for (const auto& [name, e] : ps.entries)
    for (double v : e.value.v) CHECK((double)(float)v == v);
}
