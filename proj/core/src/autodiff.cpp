#include "raincast/autodiff.hpp"

#include <atomic>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "raincast/errors.hpp"

namespace raincast {

namespace {

std::atomic<std::uint64_t> g_next_id{1};

void check_shape(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("autodiff: " + what);
}

NodePtr make_node(Tensor value, std::vector<NodePtr> parents, std::function<void(Node&)> backprop) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  for (const auto& p : parents)
    if (p->needs_grad) node->needs_grad = true;
  if (node->needs_grad) {
    node->parents = std::move(parents);
    node->backprop = std::move(backprop);
  }
  return node;
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape) {
  Tensor t;
  t.shape = std::move(shape);
  t.values.assign(t.numel(), 0.0);
  return t;
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t;
  t.shape = std::move(shape);
  t.values.assign(t.numel(), value);
  return t;
}

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

void quantize_f32(Tensor& t) {
  for (double& v : t.values) v = static_cast<double>(static_cast<float>(v));
}

void Node::ensure_grad() {
  if (grad.values.empty()) grad = Tensor::zeros(value.shape);
}

NodePtr leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->needs_grad = requires_grad;
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return node;
}

NodePtr conv2d(const NodePtr& input, const NodePtr& kernel, const NodePtr& bias) {
  const Tensor& in = input->value;
  const Tensor& ker = kernel->value;
  const Tensor& b = bias->value;
  check_shape(in.rank() == 3, "conv2d input must be (C, H, W), got " + shape_string(in.shape));
  check_shape(ker.rank() == 4, "conv2d kernel must be (Co, Ci, k, k), got " + shape_string(ker.shape));
  check_shape(ker.dim(2) == ker.dim(3) && ker.dim(2) % 2 == 1,
              "conv2d kernel must be square with odd size, got " + shape_string(ker.shape));
  check_shape(ker.dim(1) == in.dim(0), "conv2d channel mismatch: input " + shape_string(in.shape) +
                                           " vs kernel " + shape_string(ker.shape));
  check_shape(b.rank() == 1 && b.dim(0) == ker.dim(0),
              "conv2d bias must be (Co), got " + shape_string(b.shape));

  const int ci = in.dim(0), h = in.dim(1), w = in.dim(2);
  const int co = ker.dim(0), k = ker.dim(2), pad = k / 2;

  Tensor out = Tensor::zeros({co, h, w});
  for (int o = 0; o < co; ++o) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = b.values[o];
        for (int i = 0; i < ci; ++i) {
          for (int dy = 0; dy < k; ++dy) {
            const int sy = y + dy - pad;
            if (sy < 0 || sy >= h) continue;
            for (int dx = 0; dx < k; ++dx) {
              const int sx = x + dx - pad;
              if (sx < 0 || sx >= w) continue;
              acc += in.at3(i, sy, sx) * ker.at4(o, i, dy, dx);
            }
          }
        }
        out.at3(o, y, x) = acc;
      }
    }
  }

  return make_node(std::move(out), {input, kernel, bias}, [ci, h, w, co, k, pad](Node& node) {
    const NodePtr& input = node.parents[0];
    const NodePtr& kernel = node.parents[1];
    const NodePtr& bias = node.parents[2];
    input->ensure_grad();
    kernel->ensure_grad();
    bias->ensure_grad();
    const Tensor& in = input->value;
    const Tensor& ker = kernel->value;
    for (int o = 0; o < co; ++o) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double g = node.grad.at3(o, y, x);
          if (g == 0.0) continue;
          bias->grad.values[o] += g;
          for (int i = 0; i < ci; ++i) {
            for (int dy = 0; dy < k; ++dy) {
              const int sy = y + dy - pad;
              if (sy < 0 || sy >= h) continue;
              for (int dx = 0; dx < k; ++dx) {
                const int sx = x + dx - pad;
                if (sx < 0 || sx >= w) continue;
                input->grad.at3(i, sy, sx) += g * ker.at4(o, i, dy, dx);
                kernel->grad.at4(o, i, dy, dx) += g * in.at3(i, sy, sx);
              }
            }
          }
        }
      }
    }
  });
}

NodePtr maxpool2(const NodePtr& input) {
  const Tensor& in = input->value;
  check_shape(in.rank() == 3, "maxpool2 input must be (C, H, W), got " + shape_string(in.shape));
  check_shape(in.dim(1) % 2 == 0 && in.dim(2) % 2 == 0,
              "maxpool2 needs even spatial dims, got " + shape_string(in.shape));

  const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
  const int oh = h / 2, ow = w / 2;
  Tensor out = Tensor::zeros({c, oh, ow});
  // row-major index of the argmax of each window (first occurrence on ties)
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.numel());
  std::size_t oi = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x, ++oi) {
        double best = in.at3(ch, 2 * y, 2 * x);
        std::size_t best_idx = (static_cast<std::size_t>(ch) * h + 2 * y) * w + 2 * x;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (static_cast<std::size_t>(ch) * h + 2 * y + dy) * w + 2 * x + dx;
            if (in.values[idx] > best) {
              best = in.values[idx];
              best_idx = idx;
            }
          }
        }
        out.values[oi] = best;
        (*argmax)[oi] = best_idx;
      }
    }
  }

  return make_node(std::move(out), {input}, [argmax](Node& node) {
    const NodePtr& input = node.parents[0];
    input->ensure_grad();
    for (std::size_t i = 0; i < node.grad.values.size(); ++i)
      input->grad.values[(*argmax)[i]] += node.grad.values[i];
  });
}

NodePtr tconv2d(const NodePtr& input, const NodePtr& kernel, const NodePtr& bias) {
  const Tensor& in = input->value;
  const Tensor& ker = kernel->value;
  const Tensor& b = bias->value;
  check_shape(in.rank() == 3, "tconv2d input must be (Ci, H, W), got " + shape_string(in.shape));
  check_shape(ker.rank() == 4 && ker.dim(2) == 2 && ker.dim(3) == 2,
              "tconv2d kernel must be (Ci, Co, 2, 2), got " + shape_string(ker.shape));
  check_shape(ker.dim(0) == in.dim(0), "tconv2d channel mismatch: input " + shape_string(in.shape) +
                                           " vs kernel " + shape_string(ker.shape));
  check_shape(b.rank() == 1 && b.dim(0) == ker.dim(1),
              "tconv2d bias must be (Co), got " + shape_string(b.shape));

  const int ci = in.dim(0), h = in.dim(1), w = in.dim(2);
  const int co = ker.dim(1);
  Tensor out = Tensor::zeros({co, 2 * h, 2 * w});
  for (int o = 0; o < co; ++o) {
    for (int y = 0; y < 2 * h; ++y)
      for (int x = 0; x < 2 * w; ++x) out.at3(o, y, x) = b.values[o];
    for (int i = 0; i < ci; ++i) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double v = in.at3(i, y, x);
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
              out.at3(o, 2 * y + dy, 2 * x + dx) += v * ker.at4(i, o, dy, dx);
        }
      }
    }
  }

  return make_node(std::move(out), {input, kernel, bias}, [ci, h, w, co](Node& node) {
    const NodePtr& input = node.parents[0];
    const NodePtr& kernel = node.parents[1];
    const NodePtr& bias = node.parents[2];
    input->ensure_grad();
    kernel->ensure_grad();
    bias->ensure_grad();
    const Tensor& in = input->value;
    const Tensor& ker = kernel->value;
    for (int o = 0; o < co; ++o) {
      for (int y = 0; y < 2 * h; ++y)
        for (int x = 0; x < 2 * w; ++x) bias->grad.values[o] += node.grad.at3(o, y, x);
      for (int i = 0; i < ci; ++i) {
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            double gi = 0.0;
            for (int dy = 0; dy < 2; ++dy) {
              for (int dx = 0; dx < 2; ++dx) {
                const double g = node.grad.at3(o, 2 * y + dy, 2 * x + dx);
                gi += g * ker.at4(i, o, dy, dx);
                kernel->grad.at4(i, o, dy, dx) += g * in.at3(i, y, x);
              }
            }
            input->grad.at3(i, y, x) += gi;
          }
        }
      }
    }
  });
}

NodePtr relu(const NodePtr& input) {
  const Tensor& in = input->value;
  Tensor out = in;
  for (double& v : out.values) v = v > 0.0 ? v : 0.0;

  return make_node(std::move(out), {input}, [](Node& node) {
    const NodePtr& input = node.parents[0];
    input->ensure_grad();
    for (std::size_t i = 0; i < node.grad.values.size(); ++i)
      if (input->value.values[i] > 0.0) input->grad.values[i] += node.grad.values[i];
  });
}

NodePtr concat_channels(const NodePtr& a, const NodePtr& b) {
  const Tensor& ta = a->value;
  const Tensor& tb = b->value;
  check_shape(ta.rank() == 3 && tb.rank() == 3, "concat operands must be (C, H, W)");
  check_shape(ta.dim(1) == tb.dim(1) && ta.dim(2) == tb.dim(2),
              "concat spatial mismatch: " + shape_string(ta.shape) + " vs " + shape_string(tb.shape));

  Tensor out = Tensor::zeros({ta.dim(0) + tb.dim(0), ta.dim(1), ta.dim(2)});
  std::copy(ta.values.begin(), ta.values.end(), out.values.begin());
  std::copy(tb.values.begin(), tb.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(ta.numel()));

  const std::size_t na = ta.numel();
  return make_node(std::move(out), {a, b}, [na](Node& node) {
    const NodePtr& a = node.parents[0];
    const NodePtr& b = node.parents[1];
    a->ensure_grad();
    b->ensure_grad();
    for (std::size_t i = 0; i < na; ++i) a->grad.values[i] += node.grad.values[i];
    for (std::size_t i = 0; i < b->grad.values.size(); ++i)
      b->grad.values[i] += node.grad.values[na + i];
  });
}

NodePtr l1_loss(const NodePtr& pred, const Tensor& target) {
  const Tensor& p = pred->value;
  check_shape(p.shape == target.shape, "l1_loss shape mismatch: " + shape_string(p.shape) +
                                           " vs " + shape_string(target.shape));
  double sum = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) sum += std::fabs(p.values[i] - target.values[i]);

  Tensor out({1}, {sum});
  auto tgt = std::make_shared<Tensor>(target);
  return make_node(std::move(out), {pred}, [tgt](Node& node) {
    const NodePtr& pred = node.parents[0];
    pred->ensure_grad();
    const double g = node.grad.values[0];
    for (std::size_t i = 0; i < pred->value.values.size(); ++i) {
      const double d = pred->value.values[i] - tgt->values[i];
      if (d > 0.0)
        pred->grad.values[i] += g;
      else if (d < 0.0)
        pred->grad.values[i] -= g;
      // subgradient 0 at exact ties
    }
  });
}

void backward(const NodePtr& root, const Tensor& seed) {
  if (!root->needs_grad) return;
  check_shape(seed.shape == root->value.shape, "backward seed shape mismatch: " +
                                                   shape_string(seed.shape) + " vs " +
                                                   shape_string(root->value.shape));
  // collect the reachable subgraph
  std::vector<Node*> nodes;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.get()};
  seen.insert(root.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    nodes.push_back(n);
    for (const auto& p : n->parents)
      if (p->needs_grad && seen.insert(p.get()).second) stack.push_back(p.get());
  }
  // creation ids are topological: children always have larger ids
  std::sort(nodes.begin(), nodes.end(), [](const Node* a, const Node* b) { return a->id > b->id; });

  root->ensure_grad();
  for (std::size_t i = 0; i < seed.values.size(); ++i) root->grad.values[i] += seed.values[i];
  for (Node* n : nodes) {
    if (!n->backprop) continue;  // leaves keep their accumulated gradients
    n->backprop(*n);
    // interior gradients are per-sweep temporaries; dropping them here makes
    // repeated sweeps over one graph accumulate only into leaves
    n->grad = Tensor();
  }
}

void backward(const NodePtr& root) { backward(root, Tensor::full(root->value.shape, 1.0)); }

void zero_grad(const std::vector<NodePtr>& params) {
  for (const auto& p : params) {
    p->grad = Tensor::zeros(p->value.shape);
  }
}

double grad_check(const GraphFn& fn, const std::vector<Tensor>& inputs, double step) {
  std::vector<NodePtr> leaves;
  leaves.reserve(inputs.size());
  for (const auto& t : inputs) leaves.push_back(parameter(t));
  NodePtr out = fn(leaves);
  check_shape(out->value.numel() == 1, "grad_check target must be scalar");
  backward(out);

  auto eval = [&](const std::vector<NodePtr>& ls) {
    const NodePtr y = fn(ls);
    return y->value.values[0];
  };

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    leaves[i]->ensure_grad();
    for (std::size_t j = 0; j < inputs[i].values.size(); ++j) {
      std::vector<NodePtr> probe;
      probe.reserve(inputs.size());
      for (const auto& t : inputs) probe.push_back(constant(t));
      probe[i]->value.values[j] = inputs[i].values[j] + step;
      const double up = eval(probe);
      probe[i]->value.values[j] = inputs[i].values[j] - step;
      const double down = eval(probe);
      const double fd = (up - down) / (2.0 * step);
      const double ad = leaves[i]->grad.values[j];
      const double err = std::fabs(ad - fd) / std::max({1.0, std::fabs(ad), std::fabs(fd)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace raincast
