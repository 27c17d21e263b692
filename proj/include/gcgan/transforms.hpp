#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "gcgan/error.hpp"
#include "gcgan/rng.hpp"
#include "gcgan/tensor.hpp"

namespace gcgan {

/// The geometric transformations an image domain can be co-regularized with:
/// the closure of {vertical flip, 90-degree clockwise rotation} under
/// composition, i.e. the full dihedral group of the pixel grid. Rotations are
/// clockwise in image coordinates (row index grows downward).
enum class GeoTransform {
  identity,
  rot90cw,
  rot180,
  rot270cw,
  vflip,          // reverse rows
  hflip,          // reverse columns
  transpose,      // mirror about the main diagonal
  anti_transpose  // mirror about the anti-diagonal
};

inline constexpr std::array<GeoTransform, 8> kAllTransforms = {
    GeoTransform::identity, GeoTransform::rot90cw,   GeoTransform::rot180,
    GeoTransform::rot270cw, GeoTransform::vflip,     GeoTransform::hflip,
    GeoTransform::transpose, GeoTransform::anti_transpose};

namespace detail {

// Normal form: t = rot90cw^k ∘ vflip^e (flip applied first). The dihedral
// relation vflip ∘ rot90cw = rot90cw^-1 ∘ vflip gives closed-form compose
// and invert below.
struct DihedralForm {
  int k;  // 0..3
  int e;  // 0 or 1
};

inline DihedralForm form_of(GeoTransform t) {
  switch (t) {
    case GeoTransform::identity: return {0, 0};
    case GeoTransform::rot90cw: return {1, 0};
    case GeoTransform::rot180: return {2, 0};
    case GeoTransform::rot270cw: return {3, 0};
    case GeoTransform::vflip: return {0, 1};
    case GeoTransform::transpose: return {1, 1};
    case GeoTransform::hflip: return {2, 1};
    case GeoTransform::anti_transpose: return {3, 1};
  }
  throw std::logic_error("unreachable");
}

inline GeoTransform from_form(int k, int e) {
  k = ((k % 4) + 4) % 4;
  static constexpr GeoTransform rot[4] = {GeoTransform::identity, GeoTransform::rot90cw,
                                          GeoTransform::rot180, GeoTransform::rot270cw};
  static constexpr GeoTransform ref[4] = {GeoTransform::vflip, GeoTransform::transpose,
                                          GeoTransform::hflip, GeoTransform::anti_transpose};
  return e ? ref[k] : rot[k];
}

}  // namespace detail

/// compose(t1, t2): the transform equal to applying t2 first, then t1.
inline GeoTransform compose(GeoTransform t1, GeoTransform t2) {
  const auto a = detail::form_of(t1);
  const auto b = detail::form_of(t2);
  const int k = a.e ? a.k - b.k : a.k + b.k;
  return detail::from_form(k, a.e ^ b.e);
}

inline GeoTransform invert_transform(GeoTransform t) {
  const auto f = detail::form_of(t);
  return f.e ? t : detail::from_form(-f.k, 0);  // every reflection is an involution
}

/// Whether the transform exchanges the two spatial dimensions.
inline bool swaps_axes(GeoTransform t) { return detail::form_of(t).k % 2 == 1; }

inline const char* transform_name(GeoTransform t) {
  switch (t) {
    case GeoTransform::identity: return "identity";
    case GeoTransform::rot90cw: return "rot90cw";
    case GeoTransform::rot180: return "rot180";
    case GeoTransform::rot270cw: return "rot270cw";
    case GeoTransform::vflip: return "vflip";
    case GeoTransform::hflip: return "hflip";
    case GeoTransform::transpose: return "transpose";
    case GeoTransform::anti_transpose: return "anti_transpose";
  }
  return "?";
}

/// Parses pool tokens; accepts the short names used in the literature
/// ("rot" is the 90-degree clockwise rotation, "vf" the vertical flip).
inline GeoTransform parse_transform(const std::string& s) {
  if (s == "id" || s == "identity") return GeoTransform::identity;
  if (s == "rot" || s == "rot90" || s == "rot90cw") return GeoTransform::rot90cw;
  if (s == "rot180") return GeoTransform::rot180;
  if (s == "rot270" || s == "rot270cw") return GeoTransform::rot270cw;
  if (s == "vf" || s == "vflip") return GeoTransform::vflip;
  if (s == "hf" || s == "hflip") return GeoTransform::hflip;
  if (s == "transpose") return GeoTransform::transpose;
  if (s == "anti_transpose" || s == "antitranspose") return GeoTransform::anti_transpose;
  throw ConfigError("unknown geometric transform: '" + s + "'");
}

/// Applies t to the last two (spatial) dimensions of a rank>=2 tensor.
/// Pure index permutation: the pixel-value multiset is preserved exactly.
/// Axis-swapping elements on non-square inputs return shape (...,W,H);
/// pass require_square=true to reject that instead.
template <typename T>
Tensor<T> apply_transform(GeoTransform t, const Tensor<T>& x, bool require_square = false) {
  if (x.rank() < 2) throw ShapeError("apply_transform: tensor rank must be >= 2");
  const std::size_t h = x.dim(x.rank() - 2);
  const std::size_t w = x.dim(x.rank() - 1);
  if (require_square && swaps_axes(t) && h != w)
    throw ShapeError("apply_transform: rotation on non-square image " + x.shape_string() +
                     " in strict-square mode");

  std::vector<std::size_t> out_shape = x.shape();
  if (swaps_axes(t)) {
    out_shape[x.rank() - 2] = w;
    out_shape[x.rank() - 1] = h;
  }
  Tensor<T> out(out_shape);
  const std::size_t planes = x.size() / (h * w);
  const std::size_t oh = out_shape[x.rank() - 2];
  const std::size_t ow = out_shape[x.rank() - 1];

  const T* src = x.data();
  T* dst = out.data();
  for (std::size_t p = 0; p < planes; ++p, src += h * w, dst += oh * ow) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t si = 0, sj = 0;
        switch (t) {
          case GeoTransform::identity: si = i; sj = j; break;
          case GeoTransform::rot90cw: si = h - 1 - j; sj = i; break;
          case GeoTransform::rot180: si = h - 1 - i; sj = w - 1 - j; break;
          case GeoTransform::rot270cw: si = j; sj = w - 1 - i; break;
          case GeoTransform::vflip: si = h - 1 - i; sj = j; break;
          case GeoTransform::hflip: si = i; sj = w - 1 - j; break;
          case GeoTransform::transpose: si = j; sj = i; break;
          case GeoTransform::anti_transpose: si = h - 1 - j; sj = w - 1 - i; break;
        }
        dst[i * ow + j] = src[si * w + sj];
      }
    }
  }
  return out;
}

/// Uniform draw from a transform pool. Deterministic given the stream state.
inline GeoTransform sample_transform(const std::vector<GeoTransform>& pool, RandomStream& rng) {
  if (pool.empty()) throw ConfigError("sample_transform: empty transform pool");
  return pool[static_cast<std::size_t>(rng.uniform_index(pool.size()))];
}

}  // namespace gcgan
