#include "shapeflow/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "shapeflow/parallel.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace shapeflow {

namespace {
// training graphs allocate multi-megabyte activations every step; keeping
// large blocks on the heap freelist avoids mmap/page-fault churn
const bool malloc_tuned = [] {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  return true;
}();
}  // namespace

bool Tensor::finite() const {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

namespace {
constexpr int64_t kParallelFlops = 1 << 20;
}

void mm_nn(const Tensor& a, const Tensor& b, Tensor* c, bool accumulate) {
  if (a.cols != b.rows) throw std::invalid_argument("mm_nn: inner dimension mismatch");
  if (c->rows != a.rows || c->cols != b.cols) *c = Tensor(a.rows, b.cols);
  const int m = a.rows, k = a.cols, n = b.cols;
  auto body = [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      double* crow = c->row((int)i);
      if (!accumulate)
        for (int j = 0; j < n; ++j) crow[j] = 0.0;
      const double* arow = a.row((int)i);
      for (int kk = 0; kk < k; ++kk) {
        double av = arow[kk];
        const double* brow = b.row(kk);
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  };
  if (int64_t(m) * k * n >= kParallelFlops)
    parallel_for(m, body);
  else
    body(0, m);
}

void mm_nt(const Tensor& a, const Tensor& b, Tensor* c, bool accumulate) {
  if (a.cols != b.cols) throw std::invalid_argument("mm_nt: inner dimension mismatch");
  // transpose b once so the inner kernel runs in saxpy form; the per-element
  // accumulation order matches the direct dot product bit for bit
  thread_local Tensor bt;
  if (bt.rows != b.cols || bt.cols != b.rows) bt = Tensor(b.cols, b.rows);
  for (int r = 0; r < b.rows; ++r) {
    const double* brow = b.row(r);
    for (int col = 0; col < b.cols; ++col) bt.at(col, r) = brow[col];
  }
  mm_nn(a, bt, c, accumulate);
}

void mm_tn(const Tensor& a, const Tensor& b, Tensor* c, bool accumulate) {
  if (a.rows != b.rows) throw std::invalid_argument("mm_tn: inner dimension mismatch");
  if (c->rows != a.cols || c->cols != b.cols) *c = Tensor(a.cols, b.cols);
  const int m = a.rows, k = a.cols, n = b.cols;
  auto body = [&](int64_t lo, int64_t hi) {
    for (int64_t r = lo; r < hi; ++r) {  // output rows = columns of a
      double* crow = c->row((int)r);
      if (!accumulate)
        for (int j = 0; j < n; ++j) crow[j] = 0.0;
      for (int i = 0; i < m; ++i) {
        double av = a.at(i, (int)r);
        const double* brow = b.row(i);
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  };
  if (int64_t(m) * k * n >= kParallelFlops)
    parallel_for(k, body);
  else
    body(0, k);
}

Tensor& ParamStore::add(const std::string& name, Tensor init) {
  if (entries.count(name)) throw std::invalid_argument("ParamStore: duplicate param " + name);
  Entry e;
  e.value = std::move(init);
  e.grad = Tensor(e.value.rows, e.value.cols);
  e.m = Tensor(e.value.rows, e.value.cols);
  e.v = Tensor(e.value.rows, e.value.cols);
  auto [it, ok] = entries.emplace(name, std::move(e));
  (void)ok;
  return it->second.value;
}

ParamStore::Entry& ParamStore::at(const std::string& name) {
  auto it = entries.find(name);
  if (it == entries.end()) throw std::out_of_range("ParamStore: unknown param " + name);
  return it->second;
}

const ParamStore::Entry& ParamStore::at(const std::string& name) const {
  auto it = entries.find(name);
  if (it == entries.end()) throw std::out_of_range("ParamStore: unknown param " + name);
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, e] : entries) std::fill(e.grad.v.begin(), e.grad.v.end(), 0.0);
}

size_t ParamStore::param_count() const {
  size_t n = 0;
  for (const auto& [name, e] : entries) n += e.value.size();
  return n;
}

void ParamStore::quantize_f32() {
  for (auto& [name, e] : entries)
    for (double& x : e.value.v) x = (double)(float)x;
}

int Graph::push(Tensor val, bool needs_grad, std::function<void()> back) {
  Node n;
  n.val = std::move(val);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return (int)nodes_.size() - 1;
}

int Graph::value(Tensor t) { return push(std::move(t), false); }

int Graph::param(ParamStore& store, const std::string& name) {
  auto& entry = store.at(name);
  int id = push(entry.value, true);
  ParamStore* sp = &store;
  std::string nm = name;
  nodes_[id].back = [this, id, sp, nm] {
    Tensor& g = sp->at(nm).grad;
    const Tensor& mine = nodes_[id].grad;
    for (size_t i = 0; i < g.v.size(); ++i) g.v[i] += mine.v[i];
  };
  return id;
}

void Graph::backward(int loss_id) {
  if (nodes_[loss_id].val.size() != 1)
    throw std::invalid_argument("backward: target must be a scalar node");
  for (auto& n : nodes_) {
    if (n.needs_grad)
      n.grad = Tensor(n.val.rows, n.val.cols);
    else
      n.grad = Tensor();
  }
  nodes_[loss_id].grad.v[0] = 1.0;
  for (int i = loss_id; i >= 0; --i)
    if (nodes_[i].needs_grad && nodes_[i].back) nodes_[i].back();
}

int Graph::linear_xwb(int x, int w, int b) {
  const Tensor &X = nodes_[x].val, &W = nodes_[w].val, &B = nodes_[b].val;
  if (B.rows != 1 || B.cols != W.cols) throw std::invalid_argument("linear_xwb: bad bias shape");
  Tensor out;
  mm_nn(X, W, &out);
  for (int r = 0; r < out.rows; ++r) {
    double* orow = out.row(r);
    for (int c = 0; c < out.cols; ++c) orow[c] += B.v[c];
  }
  bool ng = nodes_[x].needs_grad || nodes_[w].needs_grad || nodes_[b].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, x, w, b] {
      const Tensor& g = nodes_[id].grad;
      if (nodes_[x].needs_grad) mm_nt(g, nodes_[w].val, &grad_buf(x), true);
      if (nodes_[w].needs_grad) mm_tn(nodes_[x].val, g, &grad_buf(w), true);
      if (nodes_[b].needs_grad) {
        Tensor& gb = grad_buf(b);
        for (int r = 0; r < g.rows; ++r) {
          const double* grow = g.row(r);
          for (int c = 0; c < g.cols; ++c) gb.v[c] += grow[c];
        }
      }
    };
  return id;
}

int Graph::matmul(int a, int b) {
  const Tensor &A = nodes_[a].val, &B = nodes_[b].val;
  Tensor out;
  mm_nn(A, B, &out);
  bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a, b] {
      const Tensor& g = nodes_[id].grad;
      if (nodes_[a].needs_grad) mm_nt(g, nodes_[b].val, &grad_buf(a), true);  // dA = G B^T
      if (nodes_[b].needs_grad) mm_tn(nodes_[a].val, g, &grad_buf(b), true);  // dB = A^T G
    };
  return id;
}

int Graph::matmul_nt(int a, int b) {
  const Tensor &A = nodes_[a].val, &B = nodes_[b].val;
  Tensor out;
  mm_nt(A, B, &out);
  bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a, b] {
      const Tensor& g = nodes_[id].grad;
      if (nodes_[a].needs_grad) mm_nn(g, nodes_[b].val, &grad_buf(a), true);  // dA = G B
      if (nodes_[b].needs_grad) mm_tn(g, nodes_[a].val, &grad_buf(b), true);  // dB = G^T A
    };
  return id;
}

int Graph::add(int a, int b) {
  const Tensor &A = nodes_[a].val, &B = nodes_[b].val;
  if (!A.same_shape(B)) throw std::invalid_argument("add: shape mismatch");
  Tensor out = A;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += B.v[i];
  bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a, b] {
      const Tensor& g = nodes_[id].grad;
      if (nodes_[a].needs_grad) {
        Tensor& ga = grad_buf(a);
        for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
      }
      if (nodes_[b].needs_grad) {
        Tensor& gb = grad_buf(b);
        for (size_t i = 0; i < g.v.size(); ++i) gb.v[i] += g.v[i];
      }
    };
  return id;
}

int Graph::sub(int a, int b) {
  const Tensor &A = nodes_[a].val, &B = nodes_[b].val;
  if (!A.same_shape(B)) throw std::invalid_argument("sub: shape mismatch");
  Tensor out = A;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= B.v[i];
  bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a, b] {
      const Tensor& g = nodes_[id].grad;
      if (nodes_[a].needs_grad) {
        Tensor& ga = grad_buf(a);
        for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
      }
      if (nodes_[b].needs_grad) {
        Tensor& gb = grad_buf(b);
        for (size_t i = 0; i < g.v.size(); ++i) gb.v[i] -= g.v[i];
      }
    };
  return id;
}

int Graph::mul(int a, int b) {
  const Tensor &A = nodes_[a].val, &B = nodes_[b].val;
  if (!A.same_shape(B)) throw std::invalid_argument("mul: shape mismatch");
  Tensor out = A;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= B.v[i];
  bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a, b] {
      const Tensor& g = nodes_[id].grad;
      if (nodes_[a].needs_grad) {
        Tensor& ga = grad_buf(a);
        const Tensor& bv = nodes_[b].val;
        for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * bv.v[i];
      }
      if (nodes_[b].needs_grad) {
        Tensor& gb = grad_buf(b);
        const Tensor& av = nodes_[a].val;
        for (size_t i = 0; i < g.v.size(); ++i) gb.v[i] += g.v[i] * av.v[i];
      }
    };
  return id;
}

int Graph::scale(int a, double s) { return affine(a, s, 0.0); }

int Graph::affine(int a, double alpha, double beta) {
  Tensor out = nodes_[a].val;
  for (double& x : out.v) x = alpha * x + beta;
  bool ng = nodes_[a].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a, alpha] {
      const Tensor& g = nodes_[id].grad;
      Tensor& ga = grad_buf(a);
      for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += alpha * g.v[i];
    };
  return id;
}

int Graph::add_rowvec(int a, int b) {
  const Tensor &A = nodes_[a].val, &B = nodes_[b].val;
  if (B.rows != 1 || B.cols != A.cols) throw std::invalid_argument("add_rowvec: bad vector shape");
  Tensor out = A;
  for (int r = 0; r < A.rows; ++r) {
    double* orow = out.row(r);
    for (int c = 0; c < A.cols; ++c) orow[c] += B.v[c];
  }
  bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a, b] {
      const Tensor& g = nodes_[id].grad;
      if (nodes_[a].needs_grad) {
        Tensor& ga = grad_buf(a);
        for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
      }
      if (nodes_[b].needs_grad) {
        Tensor& gb = grad_buf(b);
        for (int r = 0; r < g.rows; ++r) {
          const double* grow = g.row(r);
          for (int c = 0; c < g.cols; ++c) gb.v[c] += grow[c];
        }
      }
    };
  return id;
}

int Graph::softmax_rows(int a) {
  const Tensor& A = nodes_[a].val;
  Tensor out = A;
  for (int r = 0; r < A.rows; ++r) {
    double* row = out.row(r);
    double mx = row[0];
    for (int c = 1; c < A.cols; ++c) mx = std::max(mx, row[c]);
    double sum = 0;
    for (int c = 0; c < A.cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (int c = 0; c < A.cols; ++c) row[c] /= sum;
  }
  bool ng = nodes_[a].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a] {
      const Tensor& y = nodes_[id].val;
      const Tensor& g = nodes_[id].grad;
      Tensor& ga = grad_buf(a);
      for (int r = 0; r < y.rows; ++r) {
        const double* yr = y.row(r);
        const double* gr = g.row(r);
        double dotv = 0;
        for (int c = 0; c < y.cols; ++c) dotv += yr[c] * gr[c];
        double* gar = ga.row(r);
        for (int c = 0; c < y.cols; ++c) gar[c] += yr[c] * (gr[c] - dotv);
      }
    };
  return id;
}

int Graph::layer_norm(int x, int gain, int bias, double eps) {
  const Tensor& X = nodes_[x].val;
  const Tensor &G = nodes_[gain].val, &B = nodes_[bias].val;
  if (G.rows != 1 || G.cols != X.cols || B.rows != 1 || B.cols != X.cols)
    throw std::invalid_argument("layer_norm: gain/bias must be 1 x cols");
  Tensor out(X.rows, X.cols);
  Tensor xhat(X.rows, X.cols);
  std::vector<double> inv_std(X.rows);
  for (int r = 0; r < X.rows; ++r) {
    const double* xr = X.row(r);
    double mu = 0;
    for (int c = 0; c < X.cols; ++c) mu += xr[c];
    mu /= X.cols;
    double var = 0;
    for (int c = 0; c < X.cols; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= X.cols;
    double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    double* hr = xhat.row(r);
    double* orow = out.row(r);
    for (int c = 0; c < X.cols; ++c) {
      hr[c] = (xr[c] - mu) * is;
      orow[c] = hr[c] * G.v[c] + B.v[c];
    }
  }
  bool ng = nodes_[x].needs_grad || nodes_[gain].needs_grad || nodes_[bias].needs_grad;
  int id = push(std::move(out), ng);
  if (ng) {
    auto xh = std::make_shared<Tensor>(std::move(xhat));
    auto istd = std::make_shared<std::vector<double>>(std::move(inv_std));
    nodes_[id].back = [this, id, x, gain, bias, xh, istd] {
      const Tensor& g = nodes_[id].grad;
      const Tensor& G = nodes_[gain].val;
      const int n = g.cols;
      if (nodes_[gain].needs_grad) {
        Tensor& gg = grad_buf(gain);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < n; ++c) gg.v[c] += g.at(r, c) * xh->at(r, c);
      }
      if (nodes_[bias].needs_grad) {
        Tensor& gb = grad_buf(bias);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < n; ++c) gb.v[c] += g.at(r, c);
      }
      if (nodes_[x].needs_grad) {
        Tensor& gx = grad_buf(x);
        for (int r = 0; r < g.rows; ++r) {
          double mean_dh = 0, mean_dh_xh = 0;
          for (int c = 0; c < n; ++c) {
            double dh = g.at(r, c) * G.v[c];
            mean_dh += dh;
            mean_dh_xh += dh * xh->at(r, c);
          }
          mean_dh /= n;
          mean_dh_xh /= n;
          for (int c = 0; c < n; ++c) {
            double dh = g.at(r, c) * G.v[c];
            gx.at(r, c) += (*istd)[r] * (dh - mean_dh - xh->at(r, c) * mean_dh_xh);
          }
        }
      }
    };
  }
  return id;
}

int Graph::relu2(int a) {
  const Tensor& A = nodes_[a].val;
  Tensor out = A;
  for (double& x : out.v) x = x > 0 ? x * x : 0.0;
  bool ng = nodes_[a].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a] {
      const Tensor& g = nodes_[id].grad;
      const Tensor& X = nodes_[a].val;
      Tensor& ga = grad_buf(a);
      for (size_t i = 0; i < g.v.size(); ++i)
        if (X.v[i] > 0) ga.v[i] += g.v[i] * 2.0 * X.v[i];
    };
  return id;
}

int Graph::exp(int a) {
  Tensor out = nodes_[a].val;
  for (double& x : out.v) x = std::exp(x);
  bool ng = nodes_[a].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a] {
      const Tensor& g = nodes_[id].grad;
      const Tensor& y = nodes_[id].val;
      Tensor& ga = grad_buf(a);
      for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * y.v[i];
    };
  return id;
}

int Graph::clamp(int a, double lo, double hi) {
  Tensor out = nodes_[a].val;
  for (double& x : out.v) x = std::min(hi, std::max(lo, x));
  bool ng = nodes_[a].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a, lo, hi] {
      const Tensor& g = nodes_[id].grad;
      const Tensor& X = nodes_[a].val;
      Tensor& ga = grad_buf(a);
      for (size_t i = 0; i < g.v.size(); ++i)
        if (X.v[i] > lo && X.v[i] < hi) ga.v[i] += g.v[i];
    };
  return id;
}

int Graph::slice_rows(int a, int r0, int r1) {
  const Tensor& A = nodes_[a].val;
  if (r0 < 0 || r1 > A.rows || r0 >= r1) throw std::invalid_argument("slice_rows: bad range");
  Tensor out(r1 - r0, A.cols);
  for (int r = r0; r < r1; ++r)
    for (int c = 0; c < A.cols; ++c) out.at(r - r0, c) = A.at(r, c);
  bool ng = nodes_[a].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a, r0] {
      const Tensor& g = nodes_[id].grad;
      Tensor& ga = grad_buf(a);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) ga.at(r + r0, c) += g.at(r, c);
    };
  return id;
}

int Graph::slice_cols(int a, int c0, int c1) {
  const Tensor& A = nodes_[a].val;
  if (c0 < 0 || c1 > A.cols || c0 >= c1) throw std::invalid_argument("slice_cols: bad range");
  Tensor out(A.rows, c1 - c0);
  for (int r = 0; r < A.rows; ++r)
    for (int c = c0; c < c1; ++c) out.at(r, c - c0) = A.at(r, c);
  bool ng = nodes_[a].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a, c0] {
      const Tensor& g = nodes_[id].grad;
      Tensor& ga = grad_buf(a);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) ga.at(r, c + c0) += g.at(r, c);
    };
  return id;
}

int Graph::concat_rows(const std::vector<int>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  int cols = nodes_[parts[0]].val.cols, rows = 0;
  bool ng = false;
  for (int p : parts) {
    if (nodes_[p].val.cols != cols) throw std::invalid_argument("concat_rows: width mismatch");
    rows += nodes_[p].val.rows;
    ng = ng || nodes_[p].needs_grad;
  }
  Tensor out(rows, cols);
  int r = 0;
  for (int p : parts) {
    const Tensor& P = nodes_[p].val;
    for (int i = 0; i < P.rows; ++i, ++r)
      for (int c = 0; c < cols; ++c) out.at(r, c) = P.at(i, c);
  }
  int id = push(std::move(out), ng);
  if (ng) {
    std::vector<int> ps = parts;
    nodes_[id].back = [this, id, ps] {
      const Tensor& g = nodes_[id].grad;
      int r = 0;
      for (int p : ps) {
        Tensor& gp = grad_buf(p);
        for (int i = 0; i < gp.rows; ++i, ++r)
          if (nodes_[p].needs_grad)
            for (int c = 0; c < g.cols; ++c) gp.at(i, c) += g.at(r, c);
      }
    };
  }
  return id;
}

int Graph::concat_cols(const std::vector<int>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  int rows = nodes_[parts[0]].val.rows, cols = 0;
  bool ng = false;
  for (int p : parts) {
    if (nodes_[p].val.rows != rows) throw std::invalid_argument("concat_cols: height mismatch");
    cols += nodes_[p].val.cols;
    ng = ng || nodes_[p].needs_grad;
  }
  Tensor out(rows, cols);
  int c0 = 0;
  for (int p : parts) {
    const Tensor& P = nodes_[p].val;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < P.cols; ++c) out.at(r, c0 + c) = P.at(r, c);
    c0 += P.cols;
  }
  int id = push(std::move(out), ng);
  if (ng) {
    std::vector<int> ps = parts;
    nodes_[id].back = [this, id, ps] {
      const Tensor& g = nodes_[id].grad;
      int c0 = 0;
      for (int p : ps) {
        Tensor& gp = grad_buf(p);
        if (nodes_[p].needs_grad)
          for (int r = 0; r < g.rows; ++r)
            for (int c = 0; c < gp.cols; ++c) gp.at(r, c) += g.at(r, c0 + c);
        c0 += gp.cols;
      }
    };
  }
  return id;
}

int Graph::repeat_rows(int a, int copies) {
  const Tensor& A = nodes_[a].val;
  if (A.rows != 1) throw std::invalid_argument("repeat_rows: input must be a single row");
  Tensor out(copies, A.cols);
  for (int r = 0; r < copies; ++r)
    for (int c = 0; c < A.cols; ++c) out.at(r, c) = A.v[c];
  bool ng = nodes_[a].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a] {
      const Tensor& g = nodes_[id].grad;
      Tensor& ga = grad_buf(a);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) ga.v[c] += g.at(r, c);
    };
  return id;
}

int Graph::sum_all(int a) {
  const Tensor& A = nodes_[a].val;
  Tensor out(1, 1);
  double s = 0;
  for (double x : A.v) s += x;
  out.v[0] = s;
  bool ng = nodes_[a].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a] {
      double g = nodes_[id].grad.v[0];
      Tensor& ga = grad_buf(a);
      for (double& x : ga.v) x += g;
    };
  return id;
}

int Graph::mean_all(int a) {
  const Tensor& A = nodes_[a].val;
  double inv = 1.0 / (double)A.size();
  int s = sum_all(a);
  return scale(s, inv);
}

int Graph::mse(int a, int b) {
  const Tensor &A = nodes_[a].val, &B = nodes_[b].val;
  if (!A.same_shape(B)) throw std::invalid_argument("mse: shape mismatch");
  Tensor out(1, 1);
  double s = 0;
  for (size_t i = 0; i < A.v.size(); ++i) {
    double d = A.v[i] - B.v[i];
    s += d * d;
  }
  out.v[0] = s / (double)A.size();
  bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a, b] {
      double g = nodes_[id].grad.v[0];
      const Tensor &A = nodes_[a].val, &B = nodes_[b].val;
      double c = 2.0 * g / (double)A.size();
      if (nodes_[a].needs_grad) {
        Tensor& ga = grad_buf(a);
        for (size_t i = 0; i < A.v.size(); ++i) ga.v[i] += c * (A.v[i] - B.v[i]);
      }
      if (nodes_[b].needs_grad) {
        Tensor& gb = grad_buf(b);
        for (size_t i = 0; i < A.v.size(); ++i) gb.v[i] -= c * (A.v[i] - B.v[i]);
      }
    };
  return id;
}

int Graph::l1(int a, int b) {
  const Tensor &A = nodes_[a].val, &B = nodes_[b].val;
  if (!A.same_shape(B)) throw std::invalid_argument("l1: shape mismatch");
  Tensor out(1, 1);
  double s = 0;
  for (size_t i = 0; i < A.v.size(); ++i) s += std::fabs(A.v[i] - B.v[i]);
  out.v[0] = s / (double)A.size();
  bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [this, id, a, b] {
      double g = nodes_[id].grad.v[0];
      const Tensor &A = nodes_[a].val, &B = nodes_[b].val;
      double c = g / (double)A.size();
      Tensor* ga = nodes_[a].needs_grad ? &grad_buf(a) : nullptr;
      Tensor* gb = nodes_[b].needs_grad ? &grad_buf(b) : nullptr;
      for (size_t i = 0; i < A.v.size(); ++i) {
        double d = A.v[i] - B.v[i];
        double sg = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
        if (ga) ga->v[i] += c * sg;
        if (gb) gb->v[i] -= c * sg;
      }
    };
  return id;
}

}  // namespace shapeflow
