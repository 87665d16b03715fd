#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace raincast {

// Dense tensor of up to 4 axes. Values are kept in float64 so that loss
// accumulation and finite-difference checks are not polluted by storage
// rounding; parameters are snapped to the binary32 grid at build/save/load
// boundaries (see quantize_f32) to keep GTF1 checkpoints bit-exact.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {}

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);

  std::size_t numel() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  // (c, h, w) indexing for rank-3 tensors
  double& at3(int c, int y, int x) {
    return values[(static_cast<std::size_t>(c) * dim(1) + y) * dim(2) + x];
  }
  double at3(int c, int y, int x) const {
    return values[(static_cast<std::size_t>(c) * dim(1) + y) * dim(2) + x];
  }
  // (a, b, kh, kw) indexing for rank-4 kernels
  double& at4(int a, int b, int y, int x) {
    return values[((static_cast<std::size_t>(a) * dim(1) + b) * dim(2) + y) * dim(3) + x];
  }
  double at4(int a, int b, int y, int x) const {
    return values[((static_cast<std::size_t>(a) * dim(1) + b) * dim(2) + y) * dim(3) + x];
  }
};

std::string shape_string(const std::vector<int>& shape);

// Rounds every element to the nearest binary32 value.
void quantize_f32(Tensor& t);

// One vertex of the dynamically built backward graph. Nodes are created in
// forward order with strictly increasing ids, so a reverse sweep over ids is
// a topological order.
struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily; same shape as value once touched
  bool needs_grad = false;
  std::uint64_t id = 0;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;  // accumulates this->grad into parents

  void ensure_grad();
};

NodePtr leaf(Tensor value, bool requires_grad);
inline NodePtr parameter(Tensor value) { return leaf(std::move(value), true); }
inline NodePtr constant(Tensor value) { return leaf(std::move(value), false); }

// conv2d: odd square kernel, stride 1, zero same-padding.
//   input (Ci, H, W), kernel (Co, Ci, k, k), bias (Co) -> (Co, H, W)
NodePtr conv2d(const NodePtr& input, const NodePtr& kernel, const NodePtr& bias);

// maxpool2: 2x2 windows, stride 2; gradient routes to the first maximal
// element of each window in row-major order.
//   input (C, H, W), H and W even -> (C, H/2, W/2)
NodePtr maxpool2(const NodePtr& input);

// tconv2d: 2x2 kernel, stride-2 upsampling; exact adjoint of a stride-2
// 2x2 valid convolution with the same kernel buffer.
//   input (Ci, H, W), kernel (Ci, Co, 2, 2), bias (Co) -> (Co, 2H, 2W)
NodePtr tconv2d(const NodePtr& input, const NodePtr& kernel, const NodePtr& bias);

NodePtr relu(const NodePtr& input);

// concat_channels: (C1, H, W) + (C2, H, W) -> (C1+C2, H, W)
NodePtr concat_channels(const NodePtr& a, const NodePtr& b);

// l1_loss: scalar node sum(|pred - target|); subgradient 0 at exact ties.
NodePtr l1_loss(const NodePtr& pred, const Tensor& target);

// Reverse-mode sweep from root. Seeds root's gradient (with ones by
// default), then applies each backprop in descending creation order.
// Gradients ACCUMULATE into leaves, so zero_grad between optimization steps.
void backward(const NodePtr& root);
void backward(const NodePtr& root, const Tensor& seed);

void zero_grad(const std::vector<NodePtr>& params);

// Central finite differences (step h, float64 forwards) against reverse-mode
// gradients; returns the max relative error max |ad-fd| / max(1,|ad|,|fd|)
// over every element of every input with requires_grad.
using GraphFn = std::function<NodePtr(const std::vector<NodePtr>&)>;
double grad_check(const GraphFn& fn, const std::vector<Tensor>& inputs, double step = 1e-4);

}  // namespace raincast
