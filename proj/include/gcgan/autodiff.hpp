#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gcgan/error.hpp"
#include "gcgan/tensor.hpp"
#include "gcgan/transforms.hpp"

namespace gcgan {

namespace ad {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first use, same shape as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad/value, accumulates into the parents' grads.
  std::function<void(Node&)> backprop;

  Tensor<T>& ensure_grad() {
    if (grad.size() != value.size()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

}  // namespace ad

/// Handle to a node of the dynamically built computation graph. Cheap to
/// copy; the graph lives as long as some handle reaches it.
template <typename T>
class Var {
 public:
  Var() = default;

  static Var leaf(Tensor<T> value, bool requires_grad) {
    Var v;
    v.node_ = std::make_shared<ad::Node<T>>();
    v.node_->value = std::move(value);
    v.node_->requires_grad = requires_grad;
    return v;
  }
  static Var constant(Tensor<T> value) { return leaf(std::move(value), false); }
  static Var scalar(T value) { return constant(Tensor<T>({1}, {value})); }

  bool defined() const { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  Tensor<T>& grad() { return node_->ensure_grad(); }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool b) { node_->requires_grad = b; }

  /// Scalar convenience: value of a size-1 tensor.
  T item() const {
    if (node_->value.size() != 1) throw ShapeError("item() on non-scalar " + node_->value.shape_string());
    return node_->value[0];
  }

  std::shared_ptr<ad::Node<T>> node() const { return node_; }

 private:
  std::shared_ptr<ad::Node<T>> node_;
};

namespace ad {

// Sign census of every relu/leaky-relu/abs evaluation on this thread. A
// central finite difference is only a derivative estimate when both
// evaluation points lie on the same smooth piece of the loss; comparing the
// censuses taken at theta+h and theta-h detects kink crossings exactly.
inline thread_local std::uint64_t sign_census = 0;
inline thread_local std::uint64_t census_op_seq = 0;

inline void census_begin_op() { ++census_op_seq; }
inline void census_mark(std::size_t i) {
  std::uint64_t z = (census_op_seq << 32) ^ static_cast<std::uint64_t>(i);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  sign_census += z ^ (z >> 31);
}
inline void reset_sign_census() {
  sign_census = 0;
  census_op_seq = 0;
}

template <typename T>
Var<T> make_op(Tensor<T> value, std::vector<Var<T>> parents, std::function<void(Node<T>&)> backprop) {
  bool needs = false;
  for (const auto& p : parents) needs = needs || p.requires_grad();
  auto v = Var<T>::leaf(std::move(value), needs);
  if (needs) {
    auto node = v.node();
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backprop = std::move(backprop);
  }
  return v;
}

}  // namespace ad

/// Reverse-mode sweep from a scalar root. No-op when nothing upstream
/// requires gradients. Gradients accumulate; callers zero them between steps.
template <typename T>
void backward(const Var<T>& root) {
  if (!root.defined() || !root.requires_grad()) return;
  if (root.value().size() != 1) throw ShapeError("backward: root must be scalar");

  // iterative post-order over grad-requiring nodes
  std::vector<ad::Node<T>*> order;
  std::unordered_set<ad::Node<T>*> seen;
  struct Frame {
    ad::Node<T>* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack{{root.node().get(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      ad::Node<T>* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad();
  root.node()->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    ad::Node<T>* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

// ---------------------------------------------------------------------------
// elementwise ops
// ---------------------------------------------------------------------------

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a.value(), b.value(), "add");
  Tensor<T> out(a.value().shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  auto an = a.node(), bn = b.node();
  return ad::make_op<T>(std::move(out), {a, b}, [an, bn](ad::Node<T>& self) {
    if (an->requires_grad) {
      auto& g = an->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      auto& g = bn->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a.value(), b.value(), "sub");
  Tensor<T> out(a.value().shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  auto an = a.node(), bn = b.node();
  return ad::make_op<T>(std::move(out), {a, b}, [an, bn](ad::Node<T>& self) {
    if (an->requires_grad) {
      auto& g = an->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      auto& g = bn->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

/// k*x + c, elementwise with scalar constants.
template <typename T>
Var<T> scale_shift(const Var<T>& x, T k, T c = T(0)) {
  Tensor<T> out(x.value().shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = k * x.value()[i] + c;
  auto xn = x.node();
  return ad::make_op<T>(std::move(out), {x}, [xn, k](ad::Node<T>& self) {
    if (!xn->requires_grad) return;
    auto& g = xn->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += k * self.grad[i];
  });
}

template <typename T>
Var<T> abs_of(const Var<T>& x) {
  Tensor<T> out(x.value().shape());
  ad::census_begin_op();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (x.value()[i] > T(0)) ad::census_mark(i);
    out[i] = std::abs(x.value()[i]);
  }
  auto xn = x.node();
  return ad::make_op<T>(std::move(out), {x}, [xn](ad::Node<T>& self) {
    if (!xn->requires_grad) return;
    auto& g = xn->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T v = xn->value[i];
      const T s = v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
      g[i] += s * self.grad[i];
    }
  });
}

template <typename T>
Var<T> tanh_of(const Var<T>& x) {
  Tensor<T> out(x.value().shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x.value()[i]);
  auto xn = x.node();
  return ad::make_op<T>(std::move(out), {x}, [xn](ad::Node<T>& self) {
    if (!xn->requires_grad) return;
    auto& g = xn->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T y = self.value[i];
      g[i] += (T(1) - y * y) * self.grad[i];
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out(x.value().shape());
  ad::census_begin_op();
  // max keeps NaN flowing so divergence is caught, unlike (v>0 ? v : 0)
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (x.value()[i] > T(0)) ad::census_mark(i);
    out[i] = std::max(x.value()[i], T(0));
  }
  auto xn = x.node();
  return ad::make_op<T>(std::move(out), {x}, [xn](ad::Node<T>& self) {
    if (!xn->requires_grad) return;
    auto& g = xn->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xn->value[i] > T(0)) g[i] += self.grad[i];
  });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  Tensor<T> out(x.value().shape());
  ad::census_begin_op();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = x.value()[i];
    if (v > T(0)) ad::census_mark(i);
    out[i] = v > T(0) ? v : slope * v;
  }
  auto xn = x.node();
  return ad::make_op<T>(std::move(out), {x}, [xn, slope](ad::Node<T>& self) {
    if (!xn->requires_grad) return;
    auto& g = xn->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += (xn->value[i] > T(0) ? T(1) : slope) * self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// reductions and structural ops
// ---------------------------------------------------------------------------

template <typename T>
Var<T> mean_all(const Var<T>& x) {
  const std::size_t n = x.value().size();
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x.value()[i];
  auto xn = x.node();
  return ad::make_op<T>(Tensor<T>({1}, {acc / static_cast<T>(n)}), {x}, [xn, n](ad::Node<T>& self) {
    if (!xn->requires_grad) return;
    auto& g = xn->ensure_grad();
    const T gi = self.grad[0] / static_cast<T>(n);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gi;
  });
}

/// mean |a - b| over every element.
template <typename T>
Var<T> l1_diff_mean(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a.value(), b.value(), "l1_diff_mean");
  const std::size_t n = a.value().size();
  T acc = 0;
  ad::census_begin_op();
  for (std::size_t i = 0; i < n; ++i) {
    const T d = a.value()[i] - b.value()[i];
    if (d > T(0)) ad::census_mark(i);
    acc += std::abs(d);
  }
  auto an = a.node(), bn = b.node();
  return ad::make_op<T>(Tensor<T>({1}, {acc / static_cast<T>(n)}), {a, b},
                        [an, bn, n](ad::Node<T>& self) {
                          const T g0 = self.grad[0] / static_cast<T>(n);
                          for (std::size_t i = 0; i < n; ++i) {
                            const T d = an->value[i] - bn->value[i];
                            const T s = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
                            if (an->requires_grad) an->ensure_grad()[i] += s * g0;
                            if (bn->requires_grad) bn->ensure_grad()[i] -= s * g0;
                          }
                        });
}

/// mean (x - target)^2 over every element; the least-squares GAN objective.
template <typename T>
Var<T> squared_error_mean(const Var<T>& x, T target) {
  const std::size_t n = x.value().size();
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T d = x.value()[i] - target;
    acc += d * d;
  }
  auto xn = x.node();
  return ad::make_op<T>(Tensor<T>({1}, {acc / static_cast<T>(n)}), {x},
                        [xn, target, n](ad::Node<T>& self) {
                          if (!xn->requires_grad) return;
                          auto& g = xn->ensure_grad();
                          const T g0 = T(2) * self.grad[0] / static_cast<T>(n);
                          for (std::size_t i = 0; i < n; ++i)
                            g[i] += g0 * (xn->value[i] - target);
                        });
}

/// Sample n of a batched (N,...) tensor as its own (...) tensor.
template <typename T>
Var<T> select_sample(const Var<T>& x, std::size_t n) {
  if (x.value().rank() < 2) throw ShapeError("select_sample: need batched tensor");
  if (n >= x.value().dim(0)) throw ShapeError("select_sample: index out of range");
  std::vector<std::size_t> shape(x.value().shape().begin() + 1, x.value().shape().end());
  const std::size_t stride = Tensor<T>::count(shape);
  Tensor<T> out(shape);
  const T* src = x.value().data() + n * stride;
  for (std::size_t i = 0; i < stride; ++i) out[i] = src[i];
  auto xn = x.node();
  return ad::make_op<T>(std::move(out), {x}, [xn, n, stride](ad::Node<T>& self) {
    if (!xn->requires_grad) return;
    auto& g = xn->ensure_grad();
    T* dst = g.data() + n * stride;
    for (std::size_t i = 0; i < stride; ++i) dst[i] += self.grad[i];
  });
}

/// Differentiable geometric transform of the spatial dimensions. The adjoint
/// of a permutation is its inverse, so the backward pass is exact.
template <typename T>
Var<T> geo_apply(const Var<T>& x, GeoTransform t) {
  Tensor<T> out = apply_transform(t, x.value());
  auto xn = x.node();
  const GeoTransform inv = invert_transform(t);
  return ad::make_op<T>(std::move(out), {x}, [xn, inv](ad::Node<T>& self) {
    if (!xn->requires_grad) return;
    auto& g = xn->ensure_grad();
    Tensor<T> back = apply_transform(inv, self.grad);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += back[i];
  });
}

/// Value copy with the gradient path severed.
template <typename T>
Var<T> detach(const Var<T>& x) {
  return Var<T>::constant(x.value());
}

/// Weighted sum of scalar terms: sum_i w_i * t_i.
template <typename T>
Var<T> weighted_sum(const std::vector<std::pair<T, Var<T>>>& terms) {
  T acc = 0;
  std::vector<Var<T>> parents;
  parents.reserve(terms.size());
  std::vector<std::pair<T, std::shared_ptr<ad::Node<T>>>> entries;
  for (const auto& [w, v] : terms) {
    if (v.value().size() != 1) throw ShapeError("weighted_sum: terms must be scalar");
    acc += w * v.value()[0];
    parents.push_back(v);
    entries.emplace_back(w, v.node());
  }
  return ad::make_op<T>(Tensor<T>({1}, {acc}), std::move(parents),
                        [entries](ad::Node<T>& self) {
                          for (const auto& [w, n] : entries)
                            if (n->requires_grad) n->ensure_grad()[0] += w * self.grad[0];
                        });
}

}  // namespace gcgan
