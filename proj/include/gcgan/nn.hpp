#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gcgan/autodiff.hpp"
#include "gcgan/conv_ops.hpp"
#include "gcgan/rng.hpp"

namespace gcgan {

template <typename T>
struct NamedParam {
  std::string name;
  Var<T> param;
};

template <typename T>
using ParamList = std::vector<NamedParam<T>>;

/// Fresh leaf with a copy of the values (used by separate-parameter mode).
template <typename T>
Var<T> clone_param(const Var<T>& p) {
  if (!p.defined()) return {};
  return Var<T>::leaf(p.value(), p.requires_grad());
}

namespace nn {

/// Zero-mean Gaussian init, std 0.02 (the convention of this model family).
template <typename T>
Tensor<T> gaussian_init(std::vector<std::size_t> shape, RandomStream& rng, T std_dev = T(0.02)) {
  Tensor<T> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std_dev * static_cast<T>(rng.normal());
  return t;
}

template <typename T>
struct Conv2dLayer {
  Var<T> w, b;
  std::size_t stride = 1, pad = 0;

  Conv2dLayer() = default;
  // use_bias=false for convolutions immediately followed by instance norm:
  // the normalization cancels a per-channel shift exactly, leaving a dead
  // parameter.
  Conv2dLayer(std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride_,
              std::size_t pad_, RandomStream& rng, bool use_bias = true)
      : w(Var<T>::leaf(gaussian_init<T>({cout, cin, k, k}, rng), true)),
        stride(stride_),
        pad(pad_) {
    if (use_bias) b = Var<T>::leaf(Tensor<T>({cout}), true);
  }

  Var<T> operator()(const Var<T>& x) const { return conv2d(x, w, b, stride, pad); }

  void collect(const std::string& name, ParamList<T>& out) const {
    out.push_back({name + ".weight", w});
    if (b.defined()) out.push_back({name + ".bias", b});
  }
  Conv2dLayer cloned() const {
    Conv2dLayer c(*this);
    c.w = clone_param(w);
    c.b = clone_param(b);
    return c;
  }
};

template <typename T>
struct ConvTranspose2dLayer {
  Var<T> w, b;
  std::size_t stride = 1, pad = 0, output_pad = 0;

  ConvTranspose2dLayer() = default;
  ConvTranspose2dLayer(std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride_,
                       std::size_t pad_, std::size_t output_pad_, RandomStream& rng,
                       bool use_bias = true)
      : w(Var<T>::leaf(gaussian_init<T>({cin, cout, k, k}, rng), true)),
        stride(stride_),
        pad(pad_),
        output_pad(output_pad_) {
    if (use_bias) b = Var<T>::leaf(Tensor<T>({cout}), true);
  }

  Var<T> operator()(const Var<T>& x) const {
    return conv_transpose2d(x, w, b, stride, pad, output_pad);
  }

  void collect(const std::string& name, ParamList<T>& out) const {
    out.push_back({name + ".weight", w});
    if (b.defined()) out.push_back({name + ".bias", b});
  }
  ConvTranspose2dLayer cloned() const {
    ConvTranspose2dLayer c(*this);
    c.w = clone_param(w);
    c.b = clone_param(b);
    return c;
  }
};

/// Instance normalization; learned per-channel affine optional and off by
/// default.
template <typename T>
struct InstanceNorm2dLayer {
  bool affine = false;
  Var<T> gamma, beta;
  T eps = T(1e-5);

  InstanceNorm2dLayer() = default;
  InstanceNorm2dLayer(std::size_t channels, bool affine_) : affine(affine_) {
    if (affine) {
      gamma = Var<T>::leaf(Tensor<T>::full({channels}, T(1)), true);
      beta = Var<T>::leaf(Tensor<T>({channels}), true);
    }
  }

  Var<T> operator()(const Var<T>& x) const {
    Var<T> y = instance_norm(x, eps);
    return affine ? channel_affine(y, gamma, beta) : y;
  }

  void collect(const std::string& name, ParamList<T>& out) const {
    if (!affine) return;
    out.push_back({name + ".gamma", gamma});
    out.push_back({name + ".beta", beta});
  }
  InstanceNorm2dLayer cloned() const {
    InstanceNorm2dLayer c(*this);
    if (affine) {
      c.gamma = clone_param(gamma);
      c.beta = clone_param(beta);
    }
    return c;
  }
};

}  // namespace nn

/// Sets requires_grad on every parameter in the list (freeze/unfreeze).
template <typename T>
void set_requires_grad(const ParamList<T>& params, bool value) {
  for (const auto& p : params) const_cast<Var<T>&>(p.param).set_requires_grad(value);
}

template <typename T>
void zero_grads(const ParamList<T>& params) {
  for (const auto& p : params) const_cast<Var<T>&>(p.param).grad().fill(T(0));
}

template <typename T>
std::size_t parameter_count(const ParamList<T>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.param.value().size();
  return n;
}

}  // namespace gcgan
