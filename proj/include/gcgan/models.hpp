#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gcgan/nn.hpp"
#include "gcgan/transforms.hpp"

namespace gcgan {

enum class GeneratorArch {
  resnet,  // 7x7 stem, two stride-2 downs, residual blocks, two stride-2 ups
  digit    // the small 32x32 encoder-decoder without residual blocks
};

enum class NormKind { instance };
enum class OutputActivation { tanh };
enum class SharingMode { shared, separate };

struct GeneratorSpec {
  std::size_t input_channels = 3;
  std::size_t output_channels = 3;
  std::size_t base_width = 64;
  std::size_t n_resblocks = 6;  // resnet arch only
  GeneratorArch arch = GeneratorArch::resnet;
  NormKind norm = NormKind::instance;
  bool norm_affine = false;
  OutputActivation output_activation = OutputActivation::tanh;
  bool reflect_stem = true;  // reflection padding on the 7x7 stem

  void validate() const {
    if (input_channels == 0 || output_channels == 0 || base_width == 0)
      throw ConfigError("generator spec: channel counts and base width must be positive");
    if (arch == GeneratorArch::resnet && n_resblocks == 0)
      throw ConfigError("generator spec: resnet arch needs at least one residual block");
  }
};

/// Default residual-block count for a training resolution: 9 blocks from
/// 256x256 upward, 6 below.
inline std::size_t resblocks_for_resolution(std::size_t resolution) {
  return resolution >= 256 ? 9 : 6;
}

struct DiscriminatorSpec {
  std::size_t input_channels = 3;
  std::size_t base_width = 64;  // widths go 1x, 2x, 4x, 8x, then the score conv
  double leaky_slope = 0.2;

  void validate() const {
    if (input_channels == 0 || base_width == 0)
      throw ConfigError("discriminator spec: channel counts and base width must be positive");
  }
};

namespace model_detail {

enum class Act { relu, lrelu, tanh, none };

template <typename T>
struct Stage {
  std::string name;
  bool is_deconv = false;
  nn::Conv2dLayer<T> conv;
  nn::ConvTranspose2dLayer<T> deconv;
  bool has_norm = false;
  nn::InstanceNorm2dLayer<T> norm;
  Act act = Act::none;
  std::size_t reflect_pad = 0;  // reflection padding applied before the conv
  double lrelu_slope = 0.2;

  Var<T> operator()(Var<T> x) const {
    if (reflect_pad > 0) x = reflection_pad2d(x, reflect_pad);
    x = is_deconv ? deconv(x) : conv(x);
    if (has_norm) x = norm(x);
    switch (act) {
      case Act::relu: return relu(x);
      case Act::lrelu: return leaky_relu(x, static_cast<T>(lrelu_slope));
      case Act::tanh: return tanh_of(x);
      case Act::none: return x;
    }
    return x;
  }

  void collect(ParamList<T>& out) const {
    if (is_deconv)
      deconv.collect(name, out);
    else
      conv.collect(name, out);
    norm.collect(name + ".norm", out);
  }

  Stage cloned() const {
    Stage s(*this);
    s.conv = conv.cloned();
    s.deconv = deconv.cloned();
    s.norm = norm.cloned();
    return s;
  }
};

template <typename T>
struct ResBlock {
  std::string name;
  nn::Conv2dLayer<T> c1, c2;
  nn::InstanceNorm2dLayer<T> n1, n2;

  // conv-norm-relu-conv-norm, skip connection, then ReLU on the sum
  Var<T> operator()(const Var<T>& x) const {
    Var<T> h = relu(n1(c1(x)));
    h = n2(c2(h));
    return relu(add(x, h));
  }

  void collect(ParamList<T>& out) const {
    c1.collect(name + ".conv1", out);
    n1.collect(name + ".conv1.norm", out);
    c2.collect(name + ".conv2", out);
    n2.collect(name + ".conv2.norm", out);
  }

  ResBlock cloned() const {
    ResBlock b(*this);
    b.c1 = c1.cloned();
    b.c2 = c2.cloned();
    b.n1 = n1.cloned();
    b.n2 = n2.cloned();
    return b;
  }
};

}  // namespace model_detail

/// Shape-preserving encoder-decoder translator. Outputs lie in (-1,1).
template <typename T>
class Generator {
 public:
  Generator(const GeneratorSpec& spec, RandomStream& rng) : spec_(spec) {
    spec_.validate();
    using model_detail::Act;
    const std::size_t w = spec.base_width;
    const bool aff = spec.norm_affine;
    auto stage = [&](std::string name, nn::Conv2dLayer<T> conv, bool norm, Act act,
                     std::size_t rpad = 0) {
      model_detail::Stage<T> s;
      s.name = std::move(name);
      s.conv = std::move(conv);
      s.has_norm = norm;
      if (norm) s.norm = nn::InstanceNorm2dLayer<T>(s.conv.w.value().dim(0), aff);
      s.act = act;
      s.reflect_pad = rpad;
      return s;
    };
    auto dstage = [&](std::string name, nn::ConvTranspose2dLayer<T> deconv, bool norm, Act act) {
      model_detail::Stage<T> s;
      s.name = std::move(name);
      s.is_deconv = true;
      s.deconv = std::move(deconv);
      s.has_norm = norm;
      if (norm) s.norm = nn::InstanceNorm2dLayer<T>(s.deconv.w.value().dim(1), aff);
      s.act = act;
      return s;
    };

    if (spec.arch == GeneratorArch::resnet) {
      stages_.push_back(stage("stem",
                              nn::Conv2dLayer<T>(spec.input_channels, w, 7, 1, 0, rng, false),
                              true, Act::relu, spec.reflect_stem ? 3 : 0));
      if (!spec.reflect_stem) stages_.back().conv.pad = 3;
      stages_.push_back(stage("down1", nn::Conv2dLayer<T>(w, 2 * w, 3, 2, 1, rng, false), true, Act::relu));
      stages_.push_back(
          stage("down2", nn::Conv2dLayer<T>(2 * w, 4 * w, 3, 2, 1, rng, false), true, Act::relu));
      for (std::size_t i = 0; i < spec.n_resblocks; ++i) {
        model_detail::ResBlock<T> b;
        b.name = "res" + std::to_string(i + 1);
        b.c1 = nn::Conv2dLayer<T>(4 * w, 4 * w, 3, 1, 1, rng, false);
        b.n1 = nn::InstanceNorm2dLayer<T>(4 * w, aff);
        b.c2 = nn::Conv2dLayer<T>(4 * w, 4 * w, 3, 1, 1, rng, false);
        b.n2 = nn::InstanceNorm2dLayer<T>(4 * w, aff);
        blocks_.push_back(std::move(b));
      }
      tail_.push_back(
          dstage("up1", nn::ConvTranspose2dLayer<T>(4 * w, 2 * w, 3, 2, 1, 1, rng, false), true, Act::relu));
      tail_.push_back(
          dstage("up2", nn::ConvTranspose2dLayer<T>(2 * w, w, 3, 2, 1, 1, rng, false), true, Act::relu));
      tail_.push_back(stage("head", nn::Conv2dLayer<T>(w, spec.output_channels, 7, 1, 3, rng),
                            false, Act::tanh));
    } else {
      stages_.push_back(
          stage("enc1", nn::Conv2dLayer<T>(spec.input_channels, w, 4, 2, 1, rng, false), true, Act::lrelu));
      stages_.push_back(stage("enc2", nn::Conv2dLayer<T>(w, 2 * w, 4, 2, 1, rng, false), true, Act::lrelu));
      stages_.push_back(
          stage("mid1", nn::Conv2dLayer<T>(2 * w, 2 * w, 3, 1, 1, rng, false), true, Act::lrelu));
      stages_.push_back(
          stage("mid2", nn::Conv2dLayer<T>(2 * w, 2 * w, 3, 1, 1, rng, false), true, Act::lrelu));
      tail_.push_back(
          dstage("up1", nn::ConvTranspose2dLayer<T>(2 * w, w, 4, 2, 1, 0, rng, false), true, Act::lrelu));
      tail_.push_back(dstage("up2",
                             nn::ConvTranspose2dLayer<T>(w, spec.output_channels, 4, 2, 1, 0, rng),
                             false, Act::lrelu));
      // lrelu feeds the tanh below, matching the published layer listing
    }
  }

  Var<T> operator()(Var<T> x) const {
    for (const auto& s : stages_) x = s(x);
    for (const auto& b : blocks_) x = b(x);
    for (const auto& s : tail_) x = s(x);
    if (spec_.arch == GeneratorArch::digit) x = tanh_of(x);
    return x;
  }

  /// Inference on a raw tensor, no gradient graph.
  Tensor<T> translate(const Tensor<T>& x) const { return (*this)(Var<T>::constant(x)).value(); }

  ParamList<T> named_parameters(const std::string& prefix = "") const {
    ParamList<T> out;
    ParamList<T> raw;
    for (const auto& s : stages_) s.collect(raw);
    for (const auto& b : blocks_) b.collect(raw);
    for (const auto& s : tail_) s.collect(raw);
    for (auto& p : raw) out.push_back({prefix.empty() ? p.name : prefix + "." + p.name, p.param});
    return out;
  }

  std::size_t n_resblocks() const { return blocks_.size(); }
  const GeneratorSpec& spec() const { return spec_; }

  std::shared_ptr<Generator> deep_clone() const {
    auto g = std::make_shared<Generator>(*this);
    for (auto& s : g->stages_) s = s.cloned();
    for (auto& b : g->blocks_) b = b.cloned();
    for (auto& s : g->tail_) s = s.cloned();
    return g;
  }

 private:
  GeneratorSpec spec_;
  std::vector<model_detail::Stage<T>> stages_;
  std::vector<model_detail::ResBlock<T>> blocks_;
  std::vector<model_detail::Stage<T>> tail_;
};

/// Patch-level classifier: widths 1x,2x,4x,8x of base_width with strides
/// (2,2,2,1,1), kernel 4, pad 1; the final conv emits the 1-channel score map.
template <typename T>
class Discriminator {
 public:
  Discriminator(const DiscriminatorSpec& spec, RandomStream& rng) : spec_(spec) {
    spec_.validate();
    using model_detail::Act;
    const std::size_t w = spec.base_width;
    const T slope = static_cast<T>(spec.leaky_slope);
    auto stage = [&](std::string name, std::size_t cin, std::size_t cout, std::size_t stride,
                     bool norm, Act act) {
      model_detail::Stage<T> s;
      s.name = std::move(name);
      s.conv = nn::Conv2dLayer<T>(cin, cout, 4, stride, 1, rng, !norm);
      s.has_norm = norm;
      if (norm) s.norm = nn::InstanceNorm2dLayer<T>(cout, false);
      s.act = act;
      s.lrelu_slope = static_cast<double>(slope);
      return s;
    };
    stages_.push_back(stage("conv1", spec.input_channels, w, 2, false, Act::lrelu));
    stages_.push_back(stage("conv2", w, 2 * w, 2, true, Act::lrelu));
    stages_.push_back(stage("conv3", 2 * w, 4 * w, 2, true, Act::lrelu));
    stages_.push_back(stage("conv4", 4 * w, 8 * w, 1, true, Act::lrelu));
    stages_.push_back(stage("score", 8 * w, 1, 1, false, Act::none));
  }

  Var<T> operator()(Var<T> x) const {
    for (const auto& s : stages_) x = s(x);
    return x;
  }

  ParamList<T> named_parameters(const std::string& prefix = "") const {
    ParamList<T> out;
    ParamList<T> raw;
    for (const auto& s : stages_) s.collect(raw);
    for (auto& p : raw) out.push_back({prefix.empty() ? p.name : prefix + "." + p.name, p.param});
    return out;
  }

  const DiscriminatorSpec& spec() const { return spec_; }

 private:
  DiscriminatorSpec spec_;
  std::vector<model_detail::Stage<T>> stages_;
};

/// The translator pair plus its two patch discriminators. In shared mode the
/// two generator handles alias one parameter storage.
template <typename T>
struct TranslationModel {
  std::shared_ptr<Generator<T>> g_xy;
  std::shared_ptr<Generator<T>> g_xtyt;
  std::shared_ptr<Generator<T>> g_yx;  // present only with the cycle constraint
  std::shared_ptr<Discriminator<T>> d_y;
  std::shared_ptr<Discriminator<T>> d_yt;
  SharingMode sharing = SharingMode::shared;

  bool generators_shared() const { return g_xy == g_xtyt; }

  ParamList<T> generator_parameters() const {
    ParamList<T> out = g_xy->named_parameters("g_xy");
    if (!generators_shared()) {
      auto extra = g_xtyt->named_parameters("g_xtyt");
      out.insert(out.end(), extra.begin(), extra.end());
    }
    if (g_yx) {
      auto extra = g_yx->named_parameters("g_yx");
      out.insert(out.end(), extra.begin(), extra.end());
    }
    return out;
  }

  ParamList<T> all_parameters() const {
    ParamList<T> out = generator_parameters();
    auto dy = d_y->named_parameters("d_y");
    auto dyt = d_yt->named_parameters("d_yt");
    out.insert(out.end(), dy.begin(), dy.end());
    out.insert(out.end(), dyt.begin(), dyt.end());
    return out;
  }
};

/// Rebinds the transformed-domain translator: aliased storage in shared mode,
/// a deep copy (identical values at the moment of binding) in separate mode.
template <typename T>
void bind_translators(TranslationModel<T>& model, SharingMode mode) {
  model.sharing = mode;
  model.g_xtyt = (mode == SharingMode::shared) ? model.g_xy : model.g_xy->deep_clone();
}

template <typename T>
TranslationModel<T> build_translation_model(const GeneratorSpec& gspec,
                                            const DiscriminatorSpec& dspec, SharingMode sharing,
                                            bool with_cycle, std::uint64_t seed) {
  RandomStream rng = RandomStream::derive(seed, "model-init");
  TranslationModel<T> m;
  m.g_xy = std::make_shared<Generator<T>>(gspec, rng);
  m.d_y = std::make_shared<Discriminator<T>>(dspec, rng);
  m.d_yt = std::make_shared<Discriminator<T>>(dspec, rng);
  if (with_cycle) {
    GeneratorSpec back = gspec;
    std::swap(back.input_channels, back.output_channels);
    m.g_yx = std::make_shared<Generator<T>>(back, rng);
  }
  bind_translators(m, sharing);
  return m;
}

/// Mean L1 between f(G(x)) and G~(f(x)) over a set of images: how far the
/// translator pair is from commuting with the transform.
template <typename T>
double equivariance_residual(const Generator<T>& g, const Generator<T>& gt,
                             const std::vector<Tensor<T>>& images, GeoTransform f) {
  if (images.empty()) throw ConfigError("equivariance_residual: no images");
  double acc = 0;
  for (const auto& img : images) {
    Tensor<T> x = img;
    if (x.rank() == 3) x = Tensor<T>({1, x.dim(0), x.dim(1), x.dim(2)},
                                     std::vector<T>(x.data(), x.data() + x.size()));
    const Tensor<T> a = apply_transform(f, g.translate(x));
    const Tensor<T> b = gt.translate(apply_transform(f, x));
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(static_cast<double>(a[i]) - b[i]);
    acc += s / static_cast<double>(a.size());
  }
  return acc / static_cast<double>(images.size());
}

}  // namespace gcgan
