#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gcgan/nn.hpp"

namespace gcgan {

/// Adam over one parameter group. Moments live here and are part of the
/// checkpointed training state.
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(ParamList<T> params, double beta1, double beta2, double eps = 1e-8)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
      m_.emplace_back(p.param.value().shape());
      v_.emplace_back(p.param.value().shape());
    }
  }

  void zero_grad() { zero_grads(params_); }

  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& value = const_cast<Var<T>&>(params_[i].param).mutable_value();
      auto& grad = const_cast<Var<T>&>(params_[i].param).grad();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < value.size(); ++j) {
        const T g = grad[j];
        m[j] = static_cast<T>(beta1_) * m[j] + static_cast<T>(1.0 - beta1_) * g;
        v[j] = static_cast<T>(beta2_) * v[j] + static_cast<T>(1.0 - beta2_) * g * g;
        const double mh = static_cast<double>(m[j]) / bc1;
        const double vh = static_cast<double>(v[j]) / bc2;
        value[j] -= static_cast<T>(lr * mh / (std::sqrt(vh) + eps_));
      }
    }
  }

  const ParamList<T>& params() const { return params_; }
  std::int64_t step_count() const { return t_; }
  void set_step_count(std::int64_t t) { t_ = t; }
  std::vector<Tensor<T>>& moment1() { return m_; }
  std::vector<Tensor<T>>& moment2() { return v_; }

 private:
  ParamList<T> params_;
  std::vector<Tensor<T>> m_, v_;
  double beta1_ = 0.5, beta2_ = 0.999, eps_ = 1e-8;
  std::int64_t t_ = 0;
};

}  // namespace gcgan
