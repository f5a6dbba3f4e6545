#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace shapeflow {

// Dense row-major matrix of doubles. All model math runs in f64; learned
// parameters are kept at f32-representable values (see ParamStore) so the
// on-disk f32 checkpoints round-trip exactly.
struct Tensor {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(size_t(r) * c, 0.0) {}

  double& at(int r, int c) { return v[size_t(r) * cols + c]; }
  double at(int r, int c) const { return v[size_t(r) * cols + c]; }
  double* row(int r) { return v.data() + size_t(r) * cols; }
  const double* row(int r) const { return v.data() + size_t(r) * cols; }
  size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  bool finite() const;
};

// C (+)= A * B variants; row-partitioned so results are bit-identical for
// any worker count.
void mm_nn(const Tensor& a, const Tensor& b, Tensor* c, bool accumulate = false);
void mm_nt(const Tensor& a, const Tensor& b, Tensor* c, bool accumulate = false);  // a * b^T
void mm_tn(const Tensor& a, const Tensor& b, Tensor* c, bool accumulate = false);  // a^T * b

// Named parameter table with gradient and AdamW moment slots. std::map keeps
// iteration order deterministic for the optimizer and the checkpoint layout.
struct ParamStore {
  struct Entry {
    Tensor value, grad, m, v;
  };
  std::map<std::string, Entry> entries;

  Tensor& add(const std::string& name, Tensor init);
  Entry& at(const std::string& name);
  const Entry& at(const std::string& name) const;
  bool has(const std::string& name) const { return entries.count(name) != 0; }
  void zero_grad();
  size_t param_count() const;
  // rounds every value through f32, the storage precision of checkpoints
  void quantize_f32();
};

// Define-by-run reverse-mode autodiff. Ops evaluate eagerly and push a
// backward closure; backward() replays them in reverse. Graphs are cheap,
// one per forward pass.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  int value(Tensor t);                                  // constant leaf
  int param(ParamStore& store, const std::string& name);  // learned leaf

  int matmul(int a, int b);
  int linear_xwb(int x, int w, int b);  // fused x*W + row-broadcast bias
  int matmul_nt(int a, int b);  // A * B^T
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);  // hadamard
  int scale(int a, double s);
  int affine(int a, double alpha, double beta);  // alpha*a + beta elementwise
  int add_rowvec(int a, int b);                  // b broadcast over rows, 1 x cols
  int softmax_rows(int a);
  int layer_norm(int x, int gain, int bias, double eps = 1e-5);
  int relu2(int a);  // squared ReLU, C1-smooth and cheap
  int exp(int a);
  int clamp(int a, double lo, double hi);
  int slice_rows(int a, int r0, int r1);
  int slice_cols(int a, int c0, int c1);
  int concat_rows(const std::vector<int>& parts);
  int concat_cols(const std::vector<int>& parts);
  int repeat_rows(int a, int copies);  // 1 x c -> copies x c
  int sum_all(int a);                  // 1x1
  int mean_all(int a);                 // 1x1
  int mse(int a, int b);               // 1x1, mean squared difference
  int l1(int a, int b);                // 1x1, mean absolute difference

  const Tensor& val(int id) const { return nodes_[id].val; }
  double scalar(int id) const { return nodes_[id].val.v[0]; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  // gradient of the last backward() target w.r.t. node id
  const Tensor& grad(int id) const { return nodes_[id].grad; }

  void backward(int loss_id);

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    bool needs_grad = false;
    std::function<void()> back;  // empty for leaves
  };

  int push(Tensor val, bool needs_grad, std::function<void()> back = {});
  Tensor& grad_buf(int id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

}  // namespace shapeflow
