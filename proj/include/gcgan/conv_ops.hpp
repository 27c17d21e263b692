#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

#include "gcgan/autodiff.hpp"
#include "gcgan/tensor.hpp"

namespace gcgan {

namespace conv_detail {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<Mat<T>>;
template <typename T>
using CMatMap = Eigen::Map<const Mat<T>>;

inline std::size_t conv_out_dim(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

/// Unfolds one (C,H,W) sample into a (C*k*k, Ho*Wo) patch matrix, zero
/// padding out-of-range taps. Row index is (c*k + ki)*k + kj.
template <typename T>
void im2col(const T* x, std::size_t c, std::size_t h, std::size_t w, std::size_t k,
            std::size_t stride, std::size_t pad, Mat<T>& cols) {
  const std::size_t ho = conv_out_dim(h, k, stride, pad);
  const std::size_t wo = conv_out_dim(w, k, stride, pad);
  cols.resize(static_cast<Eigen::Index>(c * k * k), static_cast<Eigen::Index>(ho * wo));
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const std::size_t row = (ci * k + ki) * k + kj;
        T* dst = cols.data() + row * ho * wo;
        for (std::size_t i = 0; i < ho; ++i) {
          const std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(i * stride + ki) -
                                    static_cast<std::ptrdiff_t>(pad);
          if (hi < 0 || hi >= static_cast<std::ptrdiff_t>(h)) {
            for (std::size_t j = 0; j < wo; ++j) dst[i * wo + j] = T(0);
            continue;
          }
          const T* src_row = x + (ci * h + static_cast<std::size_t>(hi)) * w;
          for (std::size_t j = 0; j < wo; ++j) {
            const std::ptrdiff_t wi = static_cast<std::ptrdiff_t>(j * stride + kj) -
                                      static_cast<std::ptrdiff_t>(pad);
            dst[i * wo + j] = (wi < 0 || wi >= static_cast<std::ptrdiff_t>(w))
                                  ? T(0)
                                  : src_row[static_cast<std::size_t>(wi)];
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatter-adds a patch matrix back onto a (C,H,W) sample.
template <typename T>
void col2im_add(const Mat<T>& cols, std::size_t c, std::size_t h, std::size_t w, std::size_t k,
                std::size_t stride, std::size_t pad, T* x) {
  const std::size_t ho = conv_out_dim(h, k, stride, pad);
  const std::size_t wo = conv_out_dim(w, k, stride, pad);
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const std::size_t row = (ci * k + ki) * k + kj;
        const T* src = cols.data() + row * ho * wo;
        for (std::size_t i = 0; i < ho; ++i) {
          const std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(i * stride + ki) -
                                    static_cast<std::ptrdiff_t>(pad);
          if (hi < 0 || hi >= static_cast<std::ptrdiff_t>(h)) continue;
          T* dst_row = x + (ci * h + static_cast<std::size_t>(hi)) * w;
          for (std::size_t j = 0; j < wo; ++j) {
            const std::ptrdiff_t wi = static_cast<std::ptrdiff_t>(j * stride + kj) -
                                      static_cast<std::ptrdiff_t>(pad);
            if (wi >= 0 && wi < static_cast<std::ptrdiff_t>(w))
              dst_row[static_cast<std::size_t>(wi)] += src[i * wo + j];
          }
        }
      }
    }
  }
}

}  // namespace conv_detail

/// 2D convolution, zero padding. x: (N,Cin,H,W), w: (Cout,Cin,k,k), b: (Cout).
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, std::size_t stride,
              std::size_t pad) {
  using namespace conv_detail;
  const auto& xv = x.value();
  const auto& wv = w.value();
  if (xv.rank() != 4 || wv.rank() != 4) throw ShapeError("conv2d: expects 4D input and weight");
  const std::size_t n = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), wd = xv.dim(3);
  const std::size_t cout = wv.dim(0), k = wv.dim(2);
  if (wv.dim(1) != cin)
    throw ShapeError("conv2d: input channels " + xv.shape_string() + " vs weight " + wv.shape_string());
  if (h + 2 * pad < k || wd + 2 * pad < k)
    throw ShapeError("conv2d: input " + xv.shape_string() + " smaller than kernel " +
                     std::to_string(k) + " (pad " + std::to_string(pad) + ")");
  const std::size_t ho = conv_out_dim(h, k, stride, pad);
  const std::size_t wo = conv_out_dim(wd, k, stride, pad);

  Tensor<T> out({n, cout, ho, wo});
  Mat<T> cols;
  CMatMap<T> wm(wv.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(cin * k * k));
  const bool has_bias = b.defined();
  for (std::size_t s = 0; s < n; ++s) {
    im2col(xv.data() + s * cin * h * wd, cin, h, wd, k, stride, pad, cols);
    MatMap<T> om(out.data() + s * cout * ho * wo, static_cast<Eigen::Index>(cout),
                 static_cast<Eigen::Index>(ho * wo));
    om.noalias() = wm * cols;
    if (has_bias)
      for (std::size_t c = 0; c < cout; ++c)
        om.row(static_cast<Eigen::Index>(c)).array() += b.value()[c];
  }

  std::vector<Var<T>> parents{x, w};
  if (has_bias) parents.push_back(b);
  auto xn = x.node(), wn = w.node();
  auto bn = has_bias ? b.node() : nullptr;
  return ad::make_op<T>(
      std::move(out), std::move(parents),
      [xn, wn, bn, n, cin, h, wd, cout, k, stride, pad, ho, wo](ad::Node<T>& self) {
        Mat<T> cols, dcols;
        CMatMap<T> wm(wn->value.data(), static_cast<Eigen::Index>(cout),
                      static_cast<Eigen::Index>(cin * k * k));
        for (std::size_t s = 0; s < n; ++s) {
          CMatMap<T> go(self.grad.data() + s * cout * ho * wo, static_cast<Eigen::Index>(cout),
                        static_cast<Eigen::Index>(ho * wo));
          if (wn->requires_grad) {
            im2col(xn->value.data() + s * cin * h * wd, cin, h, wd, k, stride, pad, cols);
            MatMap<T> gw(wn->ensure_grad().data(), static_cast<Eigen::Index>(cout),
                         static_cast<Eigen::Index>(cin * k * k));
            gw.noalias() += go * cols.transpose();
          }
          if (bn && bn->requires_grad) {
            auto& gb = bn->ensure_grad();
            for (std::size_t c = 0; c < cout; ++c)
              gb[c] += go.row(static_cast<Eigen::Index>(c)).sum();
          }
          if (xn->requires_grad) {
            dcols.noalias() = wm.transpose() * go;
            col2im_add(dcols, cin, h, wd, k, stride, pad,
                       xn->ensure_grad().data() + s * cin * h * wd);
          }
        }
      });
}

/// Transposed 2D convolution (fractionally strided). x: (N,Cin,H,W),
/// w: (Cin,Cout,k,k), b: (Cout). Output spatial size is
/// (H-1)*stride - 2*pad + k + output_pad; output_pad must be < stride.
template <typename T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, std::size_t stride,
                        std::size_t pad, std::size_t output_pad) {
  using namespace conv_detail;
  const auto& xv = x.value();
  const auto& wv = w.value();
  if (xv.rank() != 4 || wv.rank() != 4)
    throw ShapeError("conv_transpose2d: expects 4D input and weight");
  if (output_pad >= stride) throw ShapeError("conv_transpose2d: output_pad must be < stride");
  const std::size_t n = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), wd = xv.dim(3);
  const std::size_t cout = wv.dim(1), k = wv.dim(2);
  if (wv.dim(0) != cin)
    throw ShapeError("conv_transpose2d: input channels " + xv.shape_string() + " vs weight " +
                     wv.shape_string());
  if ((h - 1) * stride + k + output_pad < 2 * pad + 1 || (wd - 1) * stride + k + output_pad < 2 * pad + 1)
    throw ShapeError("conv_transpose2d: output would be empty for input " + xv.shape_string());
  const std::size_t ho = (h - 1) * stride + k + output_pad - 2 * pad;
  const std::size_t wo = (wd - 1) * stride + k + output_pad - 2 * pad;

  Tensor<T> out({n, cout, ho, wo});
  Mat<T> cols;
  CMatMap<T> wm(wv.data(), static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(cout * k * k));
  const bool has_bias = b.defined();
  for (std::size_t s = 0; s < n; ++s) {
    CMatMap<T> xm(xv.data() + s * cin * h * wd, static_cast<Eigen::Index>(cin),
                  static_cast<Eigen::Index>(h * wd));
    cols.noalias() = wm.transpose() * xm;  // (cout*k*k, h*wd)
    col2im_add(cols, cout, ho, wo, k, stride, pad, out.data() + s * cout * ho * wo);
    if (has_bias) {
      T* o = out.data() + s * cout * ho * wo;
      for (std::size_t c = 0; c < cout; ++c)
        for (std::size_t i = 0; i < ho * wo; ++i) o[c * ho * wo + i] += b.value()[c];
    }
  }

  std::vector<Var<T>> parents{x, w};
  if (has_bias) parents.push_back(b);
  auto xn = x.node(), wn = w.node();
  auto bn = has_bias ? b.node() : nullptr;
  return ad::make_op<T>(
      std::move(out), std::move(parents),
      [xn, wn, bn, n, cin, h, wd, cout, k, stride, pad, ho, wo](ad::Node<T>& self) {
        Mat<T> dcols;
        CMatMap<T> wm(wn->value.data(), static_cast<Eigen::Index>(cin),
                      static_cast<Eigen::Index>(cout * k * k));
        for (std::size_t s = 0; s < n; ++s) {
          im2col(self.grad.data() + s * cout * ho * wo, cout, ho, wo, k, stride, pad, dcols);
          if (xn->requires_grad) {
            MatMap<T> gx(xn->ensure_grad().data() + s * cin * h * wd,
                         static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(h * wd));
            gx.noalias() += wm * dcols;
          }
          if (wn->requires_grad) {
            CMatMap<T> xm(xn->value.data() + s * cin * h * wd, static_cast<Eigen::Index>(cin),
                          static_cast<Eigen::Index>(h * wd));
            MatMap<T> gw(wn->ensure_grad().data(), static_cast<Eigen::Index>(cin),
                         static_cast<Eigen::Index>(cout * k * k));
            gw.noalias() += xm * dcols.transpose();
          }
          if (bn && bn->requires_grad) {
            auto& gb = bn->ensure_grad();
            const T* g = self.grad.data() + s * cout * ho * wo;
            for (std::size_t c = 0; c < cout; ++c)
              for (std::size_t i = 0; i < ho * wo; ++i) gb[c] += g[c * ho * wo + i];
          }
        }
      });
}

/// Reflection padding of the two spatial dims (PyTorch-style, mirror without
/// repeating the border pixel). Requires pad <= dim - 1.
template <typename T>
Var<T> reflection_pad2d(const Var<T>& x, std::size_t pad) {
  const auto& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("reflection_pad2d: expects 4D input");
  const std::size_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  if (pad >= h || pad >= w) throw ShapeError("reflection_pad2d: pad too large for input");
  const std::size_t ho = h + 2 * pad, wo = w + 2 * pad;

  auto mirror = [](std::ptrdiff_t i, std::size_t nn) {
    if (i < 0) i = -i;
    const auto sn = static_cast<std::ptrdiff_t>(nn);
    if (i >= sn) i = 2 * sn - 2 - i;
    return static_cast<std::size_t>(i);
  };

  Tensor<T> out({n, c, ho, wo});
  for (std::size_t p = 0; p < n * c; ++p) {
    const T* src = xv.data() + p * h * w;
    T* dst = out.data() + p * ho * wo;
    for (std::size_t i = 0; i < ho; ++i) {
      const std::size_t si = mirror(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad), h);
      for (std::size_t j = 0; j < wo; ++j) {
        const std::size_t sj = mirror(static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(pad), w);
        dst[i * wo + j] = src[si * w + sj];
      }
    }
  }

  auto xn = x.node();
  return ad::make_op<T>(std::move(out), {x}, [xn, n, c, h, w, pad, ho, wo, mirror](ad::Node<T>& self) {
    if (!xn->requires_grad) return;
    auto& g = xn->ensure_grad();
    for (std::size_t p = 0; p < n * c; ++p) {
      T* dst = g.data() + p * h * w;
      const T* src = self.grad.data() + p * ho * wo;
      for (std::size_t i = 0; i < ho; ++i) {
        const std::size_t si = mirror(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad), h);
        for (std::size_t j = 0; j < wo; ++j) {
          const std::size_t sj = mirror(static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(pad), w);
          dst[si * w + sj] += src[i * wo + j];
        }
      }
    }
  });
}

/// Instance normalization without affine parameters: every (sample, channel)
/// feature map is normalized to zero mean and unit (population) variance.
template <typename T>
Var<T> instance_norm(const Var<T>& x, T eps = T(1e-5)) {
  const auto& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("instance_norm: expects 4D input");
  const std::size_t planes = xv.dim(0) * xv.dim(1);
  const std::size_t m = xv.dim(2) * xv.dim(3);

  Tensor<T> out(xv.shape());
  std::vector<T> inv_std(planes);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = xv.data() + p * m;
    T mean = 0;
    for (std::size_t i = 0; i < m; ++i) mean += src[i];
    mean /= static_cast<T>(m);
    T var = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const T d = src[i] - mean;
      var += d * d;
    }
    var /= static_cast<T>(m);
    const T istd = T(1) / std::sqrt(var + eps);
    inv_std[p] = istd;
    T* dst = out.data() + p * m;
    for (std::size_t i = 0; i < m; ++i) dst[i] = (src[i] - mean) * istd;
  }

  auto xn = x.node();
  return ad::make_op<T>(std::move(out), {x},
                        [xn, planes, m, inv_std = std::move(inv_std)](ad::Node<T>& self) {
                          if (!xn->requires_grad) return;
                          auto& g = xn->ensure_grad();
                          for (std::size_t p = 0; p < planes; ++p) {
                            const T* y = self.value.data() + p * m;
                            const T* go = self.grad.data() + p * m;
                            T* gx = g.data() + p * m;
                            T sum_g = 0, sum_gy = 0;
                            for (std::size_t i = 0; i < m; ++i) {
                              sum_g += go[i];
                              sum_gy += go[i] * y[i];
                            }
                            const T mg = sum_g / static_cast<T>(m);
                            const T mgy = sum_gy / static_cast<T>(m);
                            const T istd = inv_std[p];
                            for (std::size_t i = 0; i < m; ++i)
                              gx[i] += istd * (go[i] - mg - y[i] * mgy);
                          }
                        });
}

/// Per-channel affine y = gamma_c * x + beta_c (the optional learned part of
/// instance norm). gamma/beta: (C).
template <typename T>
Var<T> channel_affine(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta) {
  const auto& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("channel_affine: expects 4D input");
  const std::size_t n = xv.dim(0), c = xv.dim(1), m = xv.dim(2) * xv.dim(3);

  Tensor<T> out(xv.shape());
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ci = 0; ci < c; ++ci) {
      const T* src = xv.data() + (s * c + ci) * m;
      T* dst = out.data() + (s * c + ci) * m;
      const T gm = gamma.value()[ci], bt = beta.value()[ci];
      for (std::size_t i = 0; i < m; ++i) dst[i] = gm * src[i] + bt;
    }

  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  return ad::make_op<T>(std::move(out), {x, gamma, beta}, [xn, gn, bn, n, c, m](ad::Node<T>& self) {
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t ci = 0; ci < c; ++ci) {
        const T* go = self.grad.data() + (s * c + ci) * m;
        if (xn->requires_grad) {
          T* gx = xn->ensure_grad().data() + (s * c + ci) * m;
          const T gm = gn->value[ci];
          for (std::size_t i = 0; i < m; ++i) gx[i] += gm * go[i];
        }
        if (gn->requires_grad) {
          const T* src = xn->value.data() + (s * c + ci) * m;
          T acc = 0;
          for (std::size_t i = 0; i < m; ++i) acc += go[i] * src[i];
          gn->ensure_grad()[ci] += acc;
        }
        if (bn->requires_grad) {
          T acc = 0;
          for (std::size_t i = 0; i < m; ++i) acc += go[i];
          bn->ensure_grad()[ci] += acc;
        }
      }
  });
}

}  // namespace gcgan
