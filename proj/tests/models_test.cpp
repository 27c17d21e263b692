#include "gcgan/models.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gcgan;

namespace {

Tensor<double> random_batch(RandomStream& rng, std::size_t n, std::size_t c, std::size_t h,
                            std::size_t w) {
  Tensor<double> t({n, c, h, w});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

GeneratorSpec tiny_gspec(std::size_t blocks = 1) {
  GeneratorSpec s;
  s.base_width = 4;
  s.n_resblocks = blocks;
  return s;
}

// conv output-size chain, the independent shape oracle
std::size_t conv_chain(std::size_t in, const std::vector<std::size_t>& strides, std::size_t k,
                       std::size_t pad) {
  for (std::size_t s : strides) in = (in + 2 * pad - k) / s + 1;
  return in;
}

}  // namespace

TEST(Models, ResblockCountFollowsResolution) {
  EXPECT_EQ(resblocks_for_resolution(256), 9u);
  EXPECT_EQ(resblocks_for_resolution(128), 6u);

  RandomStream rng(1);
  GeneratorSpec s = tiny_gspec(resblocks_for_resolution(256));
  Generator<double> g256(s, rng);
  EXPECT_EQ(g256.n_resblocks(), 9u);
  s.n_resblocks = resblocks_for_resolution(128);
  Generator<double> g128(s, rng);
  EXPECT_EQ(g128.n_resblocks(), 6u);
}

TEST(Models, GeneratorShapeAndRange) {
  RandomStream rng(2);
  Generator<double> g(tiny_gspec(), rng);

  Tensor<double> zeros({2, 3, 16, 16});
  auto out = g.translate(zeros);
  EXPECT_EQ(out.shape(), zeros.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_TRUE(std::isfinite(out[i]));
    EXPECT_GT(out[i], -1.0);
    EXPECT_LT(out[i], 1.0);
  }

  RandomStream drng(3);
  auto x = random_batch(drng, 1, 3, 32, 32);
  EXPECT_EQ(g.translate(x).shape(), x.shape());
}

TEST(Models, DigitArchShapePreserving) {
  RandomStream rng(4);
  GeneratorSpec s;
  s.arch = GeneratorArch::digit;
  s.base_width = 8;
  s.input_channels = 3;
  s.output_channels = 1;
  Generator<double> g(s, rng);
  RandomStream drng(5);
  auto x = random_batch(drng, 2, 3, 32, 32);
  auto out = g.translate(x);
  EXPECT_EQ(out.shape(), (std::vector<std::size_t>{2, 1, 32, 32}));
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_GT(out[i], -1.0);
    EXPECT_LT(out[i], 1.0);
  }
}

TEST(Models, ForwardIsDeterministic) {
  RandomStream rng(6);
  Generator<double> g(tiny_gspec(), rng);
  RandomStream drng(7);
  auto x = random_batch(drng, 1, 3, 16, 16);
  auto a = g.translate(x);
  auto b = g.translate(x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Models, InitializationIsSeedDeterministic) {
  RandomStream r1(42), r2(42), r3(43);
  Generator<double> a(tiny_gspec(), r1), b(tiny_gspec(), r2), c(tiny_gspec(), r3);
  auto pa = a.named_parameters(), pb = b.named_parameters(), pc = c.named_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff_from_c = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    for (std::size_t j = 0; j < pa[i].param.value().size(); ++j) {
      EXPECT_EQ(pa[i].param.value()[j], pb[i].param.value()[j]);
      if (pa[i].param.value()[j] != pc[i].param.value()[j]) any_diff_from_c = true;
    }
  }
  EXPECT_TRUE(any_diff_from_c);
}

TEST(Models, WeightInitStatistics) {
  RandomStream rng(8);
  GeneratorSpec s = tiny_gspec(2);
  s.base_width = 16;
  Generator<double> g(s, rng);
  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (const auto& p : g.named_parameters()) {
    if (p.name.find(".bias") != std::string::npos) {
      for (std::size_t i = 0; i < p.param.value().size(); ++i)
        EXPECT_EQ(p.param.value()[i], 0.0);
      continue;
    }
    for (std::size_t i = 0; i < p.param.value().size(); ++i) {
      sum += p.param.value()[i];
      sq += p.param.value()[i] * p.param.value()[i];
      ++n;
    }
  }
  const double mean = sum / n;
  const double std_dev = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(mean, 0.0, 2e-3);
  EXPECT_NEAR(std_dev, 0.02, 2e-3);
}

TEST(Models, GeneratorParameterCount) {
  RandomStream rng(9);
  const std::size_t w = 4, blocks = 2, cin = 3, cout = 3;
  GeneratorSpec s = tiny_gspec(blocks);
  Generator<double> g(s, rng);
  // layer-table arithmetic, written out independently; norm-followed convs
  // carry no bias
  std::size_t expect = 0;
  expect += w * cin * 49;                    // 7x7 stem
  expect += (2 * w) * w * 9;                 // down1
  expect += (4 * w) * (2 * w) * 9;           // down2
  expect += blocks * 2 * ((4 * w) * (4 * w) * 9);
  expect += (4 * w) * (2 * w) * 9;           // up1 (deconv)
  expect += (2 * w) * w * 9;                 // up2
  expect += cout * w * 49 + cout;            // 7x7 head (bias: no norm after it)
  EXPECT_EQ(parameter_count(g.named_parameters()), expect);
}

TEST(Models, DiscriminatorScoreMapShape) {
  // receptive-field arithmetic oracle for strides (2,2,2,1,1), kernel 4, pad 1
  EXPECT_EQ(conv_chain(256, {2, 2, 2, 1, 1}, 4, 1), 30u);

  RandomStream rng(10);
  DiscriminatorSpec s;
  s.base_width = 4;
  Discriminator<double> d(s, rng);
  RandomStream drng(11);
  auto x = random_batch(drng, 1, 3, 256, 256);
  auto out = d(Var<double>::constant(x));
  EXPECT_EQ(out.value().shape(), (std::vector<std::size_t>{1, 1, 30, 30}));

  auto x32 = random_batch(drng, 2, 3, 32, 32);
  auto out32 = d(Var<double>::constant(x32));
  const std::size_t expect32 = conv_chain(32, {2, 2, 2, 1, 1}, 4, 1);
  EXPECT_EQ(out32.value().shape(), (std::vector<std::size_t>{2, 1, expect32, expect32}));
}

TEST(Models, DiscriminatorZeroParamsGiveZeroScores) {
  RandomStream rng(12);
  DiscriminatorSpec s;
  s.base_width = 4;
  Discriminator<double> d(s, rng);
  for (auto& p : d.named_parameters()) p.param.mutable_value().fill(0.0);
  RandomStream drng(13);
  auto x = random_batch(drng, 1, 3, 32, 32);
  auto out = d(Var<double>::constant(x));
  for (std::size_t i = 0; i < out.value().size(); ++i) EXPECT_EQ(out.value()[i], 0.0);
}

TEST(Models, DiscriminatorParameterCount) {
  RandomStream rng(14);
  DiscriminatorSpec s;
  s.base_width = 4;
  Discriminator<double> d(s, rng);
  const std::size_t w = 4;
  std::size_t expect = 0;
  expect += w * 3 * 16 + w;            // conv1 keeps its bias (no norm)
  expect += (2 * w) * w * 16;          // conv2..conv4 are norm-followed
  expect += (4 * w) * (2 * w) * 16;
  expect += (8 * w) * (4 * w) * 16;
  expect += 1 * (8 * w) * 16 + 1;      // score conv
  EXPECT_EQ(parameter_count(d.named_parameters()), expect);
}

TEST(Models, GeneratorGradientMatchesFiniteDifference) {
  RandomStream rng(15);
  GeneratorSpec spec = tiny_gspec();
  Generator<double> g(spec, rng);
  RandomStream drng(16);
  const auto x = random_batch(drng, 1, 3, 8, 8);

  auto params = g.named_parameters();
  zero_grads(params);
  auto loss = mean_all(g(Var<double>::constant(x)));
  backward(loss);

  // one weight, central differences with h = 1e-5
  auto& target = params[2].param;  // down1.weight
  const std::size_t idx = 7;
  const double analytic = target.grad()[idx];
  const double h = 1e-5;
  const double orig = target.value()[idx];
  target.mutable_value()[idx] = orig + h;
  const double fp = mean_all(g(Var<double>::constant(x))).item();
  target.mutable_value()[idx] = orig - h;
  const double fm = mean_all(g(Var<double>::constant(x))).item();
  target.mutable_value()[idx] = orig;
  const double numeric = (fp - fm) / (2 * h);
  EXPECT_NEAR(analytic, numeric, 1e-4 * std::max(1.0, std::abs(numeric)));
  EXPECT_GT(std::abs(numeric), 0.0);
}

TEST(Models, SharedModeAliasesStorage) {
  GeneratorSpec gs = tiny_gspec();
  DiscriminatorSpec ds;
  ds.base_width = 4;
  auto m = build_translation_model<double>(gs, ds, SharingMode::shared, false, 99);
  EXPECT_TRUE(m.generators_shared());

  auto p = m.g_xy->named_parameters();
  p[0].param.mutable_value()[0] = 1234.5;
  EXPECT_EQ(m.g_xtyt->named_parameters()[0].param.value()[0], 1234.5);
}

TEST(Models, SeparateModeCopiesInitialization) {
  GeneratorSpec gs = tiny_gspec();
  DiscriminatorSpec ds;
  ds.base_width = 4;
  auto m = build_translation_model<double>(gs, ds, SharingMode::separate, false, 99);
  EXPECT_FALSE(m.generators_shared());

  // step 0: identical outputs
  RandomStream drng(17);
  auto x = random_batch(drng, 1, 3, 16, 16);
  auto a = m.g_xy->translate(x);
  auto b = m.g_xtyt->translate(x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);

  // updates through one are invisible through the other
  auto p = m.g_xy->named_parameters();
  const double before = m.g_xtyt->named_parameters()[0].param.value()[0];
  p[0].param.mutable_value()[0] += 42.0;
  EXPECT_EQ(m.g_xtyt->named_parameters()[0].param.value()[0], before);

  // rebinding to shared aliases again
  bind_translators(m, SharingMode::shared);
  EXPECT_TRUE(m.generators_shared());
}

TEST(Models, EquivarianceResidualZeroForSharedIdentityConfig) {
  GeneratorSpec gs = tiny_gspec();
  DiscriminatorSpec ds;
  ds.base_width = 4;
  auto m = build_translation_model<double>(gs, ds, SharingMode::shared, false, 7);
  RandomStream drng(18);
  std::vector<Tensor<double>> imgs;
  // identity transform: f(G(x)) == G~(f(x)) exactly when parameters are shared
  for (int i = 0; i < 3; ++i) {
    auto b = random_batch(drng, 1, 3, 16, 16);
    imgs.push_back(Tensor<double>({3, 16, 16}, std::vector<double>(b.data(), b.data() + b.size())));
  }
  EXPECT_EQ(equivariance_residual(*m.g_xy, *m.g_xtyt, imgs, GeoTransform::identity), 0.0);
  EXPECT_GT(equivariance_residual(*m.g_xy, *m.g_xtyt, imgs, GeoTransform::rot90cw), 0.0);
}
