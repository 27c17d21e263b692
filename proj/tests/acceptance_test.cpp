// Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include "gcgan/data.hpp"
#include "gcgan/eval.hpp"
#include "gcgan/losses.hpp"
#include "gcgan/models.hpp"
#include "gcgan/toy.hpp"
#include "gcgan/training.hpp"
#include "gcgan/transforms.hpp"

using namespace gcgan;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void print_verdict(int num, const char* name) {
  std::cout << "[ACCEPTANCE] criterion " << num << " (" << name << "): "
            << (::testing::Test::HasFailure() ? "FAIL" : "PASS") << std::endl;
}

fs::path scratch_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("gcgan_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Tensor<double> random_chw(RandomStream& rng, std::size_t c, std::size_t h, std::size_t w) {
  Tensor<double> t({c, h, w});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

Tensor<double> random_batch(RandomStream& rng, std::size_t n, std::size_t c, std::size_t h,
                            std::size_t w) {
  Tensor<double> t({n, c, h, w});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

bool bit_equal(const Tensor<double>& a, const Tensor<double>& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

// --- criterion 3 helper: sampled central-difference gradient comparison ----

struct GradCheck {
  std::size_t total = 0, passed = 0, crossed = 0;
  double pass_fraction() const { return total ? static_cast<double>(passed) / total : 0.0; }
  double crossing_fraction() const {
    const std::size_t n = total + crossed;
    return n ? static_cast<double>(crossed) / n : 0.0;
  }
};

// Central differences compare against the analytic derivative only when both
// evaluation points sit on the same smooth piece of the loss; a relu/abs sign
// flip inside [theta-h, theta+h] turns the quotient into a secant across the
// kink. The engine's sign census detects such crossings exactly and those
// draws are redrawn (counted, and capped by the caller's crossing check).
GradCheck check_loss_gradients(const ParamList<double>& params,
                               const std::function<Var<double>()>& build_loss,
                               std::size_t samples, std::uint64_t pick_seed,
                               double h = 1e-5, double tol = 1e-4) {
  zero_grads(params);
  backward(build_loss());

  std::vector<double> analytic;
  std::vector<std::pair<std::size_t, std::size_t>> layout;  // (param, element)
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& grad = const_cast<Var<double>&>(params[p].param).grad();
    for (std::size_t i = 0; i < grad.size(); ++i) {
      analytic.push_back(grad[i]);
      layout.emplace_back(p, i);
    }
  }

  GradCheck result;
  RandomStream pick(pick_seed);
  std::size_t attempts_left = samples * 4;
  while (result.total < samples && attempts_left-- > 0) {
    const std::size_t g = static_cast<std::size_t>(pick.uniform_index(layout.size()));
    const auto [p, i] = layout[g];
    auto& value = const_cast<Var<double>&>(params[p].param).mutable_value();
    const double orig = value[i];
    value[i] = orig + h;
    ad::reset_sign_census();
    const double fp = build_loss().item();
    const std::uint64_t census_plus = ad::sign_census;
    value[i] = orig - h;
    ad::reset_sign_census();
    const double fm = build_loss().item();
    const std::uint64_t census_minus = ad::sign_census;
    value[i] = orig;
    if (census_plus != census_minus) {
      ++result.crossed;
      continue;
    }
    const double numeric = (fp - fm) / (2 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[g]), 1e-8});
    const double rel = std::abs(numeric - analytic[g]) / denom;
    ++result.total;
    // below ~1e-7 the finite difference is dominated by cancellation noise
    if (rel < tol || std::max(std::abs(numeric), std::abs(analytic[g])) < 1e-7) ++result.passed;
  }
  return result;
}

}  // namespace

// ---------------------------------------------------------------------------
// 1. transform algebra, bit-exact, < 1 s
// ---------------------------------------------------------------------------
TEST(Acceptance, C01_TransformAlgebra) {
  const auto t0 = Clock::now();
  RandomStream rng(2024);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{5, 5}, {8, 8}}) {
    const auto x = random_chw(rng, 3, h, w);

    auto r = x;
    for (int i = 0; i < 4; ++i) r = apply_transform(GeoTransform::rot90cw, r);
    EXPECT_TRUE(bit_equal(r, x));

    auto v = apply_transform(GeoTransform::vflip, apply_transform(GeoTransform::vflip, x));
    EXPECT_TRUE(bit_equal(v, x));

    for (GeoTransform t : kAllTransforms) {
      EXPECT_TRUE(bit_equal(apply_transform(invert_transform(t), apply_transform(t, x)), x));
      EXPECT_TRUE(bit_equal(apply_transform(t, apply_transform(invert_transform(t), x)), x));
    }
    for (GeoTransform a : kAllTransforms)
      for (GeoTransform b : kAllTransforms) {
        EXPECT_TRUE(bit_equal(apply_transform(compose(a, b), x),
                              apply_transform(a, apply_transform(b, x))));
        for (GeoTransform c : kAllTransforms)
          EXPECT_EQ(compose(compose(a, b), c), compose(a, compose(b, c)));
      }
  }
  const double dt = seconds_since(t0);
  EXPECT_LT(dt, 1.0);
  print_verdict(1, "transform algebra");
}

// ---------------------------------------------------------------------------
// 2. loss fixed points within 1e-6 in double precision, < 5 s
// ---------------------------------------------------------------------------
TEST(Acceptance, C02_LossFixedPoints) {
  const auto t0 = Clock::now();
  using V = Var<double>;
  auto filled = [](double v) { return V::constant(Tensor<double>::full({1, 1, 4, 4}, v)); };
  auto id_gen = [](const V& v) { return v; };

  EXPECT_NEAR(adversarial_loss_g(filled(0.5)).item(), 0.25, 1e-6);
  EXPECT_NEAR(adversarial_loss_g(filled(1.0)).item(), 0.0, 1e-6);
  EXPECT_NEAR(adversarial_loss_g(filled(0.0)).item(), 1.0, 1e-6);

  EXPECT_NEAR(adversarial_loss_d(filled(1.0), filled(0.0)).item(), 0.0, 1e-6);
  EXPECT_NEAR(adversarial_loss_d(filled(0.5), filled(0.5)).item(), 0.25, 1e-6);
  EXPECT_NEAR(adversarial_loss_d(filled(0.0), filled(1.0)).item(), 1.0, 1e-6);

  RandomStream rng(7);
  const auto x = random_batch(rng, 2, 3, 4, 4);
  EXPECT_NEAR(
      geometry_consistency_loss<double>(id_gen, id_gen, V::constant(x), GeoTransform::vflip)
          .total.item(),
      0.0, 1e-6);
  {
    GeneratorSpec gs;
    gs.base_width = 4;
    gs.n_resblocks = 1;
    RandomStream mrng(8);
    Generator<double> g(gs, mrng);
    auto gen = [&](const V& v) { return g(v); };
    EXPECT_NEAR(
        geometry_consistency_loss<double>(gen, gen, V::constant(x), GeoTransform::identity)
            .total.item(),
        0.0, 1e-6);
  }
  {
    auto ones = V::constant(Tensor<double>::full({1, 1, 2, 2}, 1.0));
    auto doubler = [](const V& v) { return scale_shift(v, 2.0, 0.0); };
    const auto t = geometry_consistency_loss<double>(id_gen, doubler, ones, GeoTransform::rot90cw);
    EXPECT_NEAR(t.inverse_term.item(), 1.0, 1e-6);
    EXPECT_NEAR(t.forward_term.item(), 1.0, 1e-6);
    EXPECT_NEAR(t.total.item(), 2.0, 1e-6);
  }

  const auto y = random_batch(rng, 2, 3, 4, 4);
  EXPECT_NEAR(cycle_consistency_loss<double>(id_gen, id_gen, V::constant(x), V::constant(y)).item(),
              0.0, 1e-6);
  {
    auto plus_half = [](const V& v) { return scale_shift(v, 1.0, 0.5); };
    EXPECT_NEAR(cycle_consistency_loss<double>(plus_half, id_gen, filled(0.0), filled(0.0)).item(),
                1.0, 1e-6);
    auto twice = [](const V& v) { return scale_shift(v, 2.0, 0.0); };
    auto half = [](const V& v) { return scale_shift(v, 0.5, 0.0); };
    EXPECT_NEAR(cycle_consistency_loss<double>(twice, half, V::constant(x), V::constant(y)).item(),
                0.0, 1e-6);
  }

  {
    const auto xi = random_batch(rng, 3, 1, 2, 2);
    const auto xj = random_batch(rng, 3, 1, 2, 2);
    DistanceStats matched{0.3, 0.7, 0.3, 0.7};
    EXPECT_NEAR(distance_loss<double>(id_gen, V::constant(xi), V::constant(xj), matched).item(),
                0.0, 1e-6);
    // pair at exactly mu_x: phi = 0 regardless of sigma_x
    auto ones = Tensor<double>::full({1, 1, 2, 2}, 1.0);
    auto zeros = Tensor<double>({1, 1, 2, 2});
    auto collapse = [](const V& v) { return scale_shift(v, 0.0, 0.0); };
    for (double sigma : {0.5, 7.0}) {
      DistanceStats st{1.0, sigma, 0.0, 1.0};
      EXPECT_NEAR(
          distance_loss<double>(collapse, V::constant(ones), V::constant(zeros), st).item(), 0.0,
          1e-6);
    }
  }
  {
    // 3-image set, translator scaling by 2, statistics and expected value
    // from direct enumeration of all three pairs
    std::vector<Tensor<double>> xs, ys;
    for (int i = 0; i < 3; ++i) xs.push_back(random_batch(rng, 1, 2, 2, 2));
    for (int i = 0; i < 3; ++i) ys.push_back(random_batch(rng, 1, 2, 2, 2));
    auto mean_l1 = [](const Tensor<double>& a, const Tensor<double>& b) {
      double s = 0;
      for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
      return s / static_cast<double>(a.size());
    };
    auto stats_of = [&](const std::vector<Tensor<double>>& imgs) {
      std::vector<double> d;
      for (std::size_t i = 0; i < imgs.size(); ++i)
        for (std::size_t j = i + 1; j < imgs.size(); ++j) d.push_back(mean_l1(imgs[i], imgs[j]));
      double mu = 0;
      for (double v : d) mu += v;
      mu /= d.size();
      double var = 0;
      for (double v : d) var += (v - mu) * (v - mu);
      var /= d.size();
      return std::pair<double, double>{mu, std::sqrt(var)};
    };
    DistanceStats st;
    std::tie(st.mu_x, st.sigma_x) = stats_of(xs);
    std::tie(st.mu_y, st.sigma_y) = stats_of(ys);
    st.apply_floor();

    const std::size_t pi[3] = {0, 0, 1}, pj[3] = {1, 2, 2};
    double oracle = 0;
    for (int p = 0; p < 3; ++p) {
      Tensor<double> ga = xs[pi[p]], gb = xs[pj[p]];
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= 2;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= 2;
      const double phi = (mean_l1(xs[pi[p]], xs[pj[p]]) - st.mu_x) / st.sigma_x;
      const double psi = (mean_l1(ga, gb) - st.mu_y) / st.sigma_y;
      oracle += std::abs(phi - psi);
    }
    oracle /= 3;

    Tensor<double> bi({3, 2, 2, 2}), bj({3, 2, 2, 2});
    for (int p = 0; p < 3; ++p)
      for (std::size_t i = 0; i < 8; ++i) {
        bi[p * 8 + i] = xs[pi[p]][i];
        bj[p * 8 + i] = xs[pj[p]][i];
      }
    auto twice = [](const V& v) { return scale_shift(v, 2.0, 0.0); };
    EXPECT_NEAR(distance_loss<double>(twice, V::constant(bi), V::constant(bj), st).item(), oracle,
                1e-6);
  }

  EXPECT_NEAR(identity_loss<double>(id_gen, V::constant(y)).item(), 0.0, 1e-6);
  {
    auto plus = [](const V& v) { return scale_shift(v, 1.0, 0.1); };
    EXPECT_NEAR(identity_loss<double>(plus, V::constant(y)).item(), 0.1, 1e-6);
    auto negate = [](const V& v) { return scale_shift(v, -1.0, 0.0); };
    EXPECT_NEAR(identity_loss<double>(negate, V::constant(Tensor<double>::full({1, 3, 2, 2}, 1.0)))
                    .item(),
                2.0, 1e-6);
  }

  {
    LossWeights w;
    EXPECT_NEAR(w.geo, 20.0, 1e-12);
    EXPECT_NEAR(w.cycle, 10.0, 1e-12);
    LossReport r;
    r.gan_g = 0.5;
    r.geo = 0.1;
    ConstraintSet on;
    on.geo = true;
    EXPECT_NEAR(total_objective(r, on, w).first, 2.5, 1e-6);
  }

  const double dt = seconds_since(t0);
  EXPECT_LT(dt, 5.0);
  print_verdict(2, "loss fixed points");
}

// ---------------------------------------------------------------------------
// 3. gradient correctness: central differences, h = 1e-5, rel err < 1e-4 for
//    >= 99% of sampled parameters, < 2 min
// ---------------------------------------------------------------------------
TEST(Acceptance, C03_GradientCorrectness) {
  const auto t0 = Clock::now();
  using V = Var<double>;

  GeneratorSpec gs;
  gs.base_width = 6;
  gs.n_resblocks = 1;

  // geometry loss on a 1-resblock generator pair at 8x8 (shared parameters)
  {
    RandomStream mrng(31);
    Generator<double> g(gs, mrng);
    RandomStream drng(32);
    const auto x = random_batch(drng, 1, 3, 8, 8);
    auto build = [&] {
      return geometry_consistency_loss<double>([&](const V& v) { return g(v); },
                                               [&](const V& v) { return g(v); },
                                               V::constant(x), GeoTransform::rot90cw)
          .total;
    };
    const auto r = check_loss_gradients(g.named_parameters(), build, 200, 101);
    EXPECT_GE(r.pass_fraction(), 0.99) << "geometry: " << r.passed << "/" << r.total;
    EXPECT_LT(r.crossing_fraction(), 0.2);
  }

  // cycle loss through two translators at 8x8
  {
    RandomStream mrng(33);
    Generator<double> g_xy(gs, mrng), g_yx(gs, mrng);
    RandomStream drng(34);
    const auto x = random_batch(drng, 1, 3, 8, 8);
    const auto y = random_batch(drng, 1, 3, 8, 8);
    ParamList<double> params = g_xy.named_parameters("g_xy");
    auto more = g_yx.named_parameters("g_yx");
    params.insert(params.end(), more.begin(), more.end());
    auto build = [&] {
      return cycle_consistency_loss<double>([&](const V& v) { return g_xy(v); },
                                            [&](const V& v) { return g_yx(v); }, V::constant(x),
                                            V::constant(y));
    };
    const auto r = check_loss_gradients(params, build, 200, 102);
    EXPECT_GE(r.pass_fraction(), 0.99) << "cycle: " << r.passed << "/" << r.total;
    EXPECT_LT(r.crossing_fraction(), 0.2);
  }

  // distance loss over two pairs at 8x8
  {
    RandomStream mrng(35);
    Generator<double> g(gs, mrng);
    RandomStream drng(36);
    const auto xi = random_batch(drng, 2, 3, 8, 8);
    const auto xj = random_batch(drng, 2, 3, 8, 8);
    const DistanceStats st{0.6, 0.2, 0.9, 0.3};
    auto build = [&] {
      return distance_loss<double>([&](const V& v) { return g(v); }, V::constant(xi),
                                   V::constant(xj), st);
    };
    const auto r = check_loss_gradients(g.named_parameters(), build, 200, 103);
    EXPECT_GE(r.pass_fraction(), 0.99) << "distance: " << r.passed << "/" << r.total;
  }

  // identity loss at 8x8
  {
    RandomStream mrng(37);
    Generator<double> g(gs, mrng);
    RandomStream drng(38);
    const auto y = random_batch(drng, 1, 3, 8, 8);
    auto build = [&] {
      return identity_loss<double>([&](const V& v) { return g(v); }, V::constant(y));
    };
    const auto r = check_loss_gradients(g.named_parameters(), build, 200, 104);
    EXPECT_GE(r.pass_fraction(), 0.99) << "identity: " << r.passed << "/" << r.total;
  }

  // adversarial losses; the patch discriminator's five-conv stack needs
  // 32x32 inputs, so the generator runs at 32x32 here
  {
    GeneratorSpec gs32 = gs;
    gs32.base_width = 4;
    DiscriminatorSpec ds;
    ds.base_width = 4;
    RandomStream mrng(39);
    Generator<double> g(gs32, mrng);
    Discriminator<double> d(ds, mrng);
    RandomStream drng(40);
    const auto x = random_batch(drng, 1, 3, 32, 32);
    const auto y = random_batch(drng, 1, 3, 32, 32);

    // generator side, gradient flowing through the frozen discriminator
    {
      auto d_params = d.named_parameters();
      set_requires_grad(d_params, false);
      auto build = [&] { return adversarial_loss_g(d(g(V::constant(x)))); };
      const auto r = check_loss_gradients(g.named_parameters(), build, 120, 105);
      EXPECT_GE(r.pass_fraction(), 0.99) << "adversarial-g: " << r.passed << "/" << r.total;
      set_requires_grad(d_params, true);
    }
    // discriminator side on fixed real/fake batches
    {
      const Tensor<double> fake = g.translate(x);
      auto build = [&] {
        return adversarial_loss_d(d(V::constant(y)), d(V::constant(fake)));
      };
      const auto r = check_loss_gradients(d.named_parameters(), build, 120, 106);
      EXPECT_GE(r.pass_fraction(), 0.99) << "adversarial-d: " << r.passed << "/" << r.total;
    }
  }

  const double dt = seconds_since(t0);
  EXPECT_LT(dt, 120.0);
  print_verdict(3, "gradient correctness");
}

// ---------------------------------------------------------------------------
// 4. the two geometry-loss terms agree within 1e-6 for shared parameters
// ---------------------------------------------------------------------------
TEST(Acceptance, C04_GeometryTermSymmetry) {
  GeneratorSpec gs;
  gs.base_width = 4;
  gs.n_resblocks = 1;
  RandomStream mrng(41);
  Generator<double> g(gs, mrng);
  auto gen = [&](const Var<double>& v) { return g(v); };
  RandomStream rng(42);
  for (GeoTransform f : {GeoTransform::vflip, GeoTransform::rot90cw}) {
    for (int rep = 0; rep < 100; ++rep) {
      const auto x = random_batch(rng, 1, 3, 8, 8);
      const auto terms = geometry_consistency_loss<double>(gen, gen, Var<double>::constant(x), f);
      ASSERT_NEAR(terms.inverse_term.item(), terms.forward_term.item(), 1e-6)
          << transform_name(f) << " rep " << rep;
    }
  }
  print_verdict(4, "geometry-loss term symmetry");
}

// ---------------------------------------------------------------------------
// 5. distance statistics match the all-pairs brute force within 1e-9;
//    phi standardization within 1e-6
// ---------------------------------------------------------------------------
TEST(Acceptance, C05_DistanceStatsOracle) {
  const fs::path dir = scratch_dir() / "stats_toy";
  toy::write_recolor_dataset(dir, 10, 99, 32);
  DataConfig dcfg;
  dcfg.height = dcfg.width = 32;
  const auto ds = UnpairedDataset::load(dir / "trainX", dir / "trainY", dcfg);
  const auto st = precompute_distance_stats<double>(ds, 1u << 20);

  std::vector<Tensor<double>> xs;
  for (std::size_t i = 0; i < ds.size_x(); ++i) xs.push_back(ds.load_x<double>(i));
  std::vector<double> dists;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      double s = 0;
      for (std::size_t k = 0; k < xs[i].size(); ++k) s += std::abs(xs[i][k] - xs[j][k]);
      dists.push_back(s / static_cast<double>(xs[i].size()));
    }
  ASSERT_EQ(dists.size(), 45u);
  double mu = 0;
  for (double v : dists) mu += v;
  mu /= static_cast<double>(dists.size());
  double var = 0;
  for (double v : dists) var += (v - mu) * (v - mu);
  var /= static_cast<double>(dists.size());

  EXPECT_NEAR(st.mu_x, mu, 1e-9);
  EXPECT_NEAR(st.sigma_x, std::sqrt(var), 1e-9);

  double phi_mean = 0, phi_sq = 0;
  for (double v : dists) {
    const double phi = (v - st.mu_x) / st.sigma_x;
    phi_mean += phi;
    phi_sq += phi * phi;
  }
  phi_mean /= static_cast<double>(dists.size());
  const double phi_std = std::sqrt(phi_sq / static_cast<double>(dists.size()) - phi_mean * phi_mean);
  EXPECT_NEAR(phi_mean, 0.0, 1e-6);
  EXPECT_NEAR(phi_std, 1.0, 1e-6);
  print_verdict(5, "distance-statistics oracle");
}

// ---------------------------------------------------------------------------
// 6. image buffer statistics: 0.50 +- 0.02 input-return rate, size <= 50
// ---------------------------------------------------------------------------
TEST(Acceptance, C06_BufferStatistics) {
  ImageBuffer<float> buf(50, RandomStream(4242));
  auto make = [&](float tag) {
    Tensor<float> img({1, 1, 1});
    img[0] = tag;
    return img;
  };
  for (int i = 0; i < 50; ++i) {
    buf.query(make(static_cast<float>(-1 - i)));
    ASSERT_LE(buf.size(), 50u);
  }
  ASSERT_EQ(buf.size(), 50u);
  int returned_input = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const float tag = static_cast<float>(i + 1);
    if (buf.query(make(tag))[0] == tag) ++returned_input;
    ASSERT_LE(buf.size(), 50u);
  }
  EXPECT_NEAR(returned_input / static_cast<double>(n), 0.50, 0.02);
  print_verdict(6, "buffer statistics");
}

// ---------------------------------------------------------------------------
// 7. metric oracles: exhaustive fuzz against per-pixel counting; the
//    published aggregate-score arithmetic
// ---------------------------------------------------------------------------
TEST(Acceptance, C07_MetricOracles) {
  RandomStream rng(4343);
  for (int rep = 0; rep < 1000; ++rep) {
    LabelMap gt(8, 8), pred(8, 8);
    for (auto& l : gt.labels) l = static_cast<std::int32_t>(rng.uniform_index(4));
    for (auto& l : pred.labels) l = static_cast<std::int32_t>(rng.uniform_index(4));

    // counting oracle
    std::size_t total = 0, correct = 0;
    std::vector<std::size_t> row(4, 0), col(4, 0), hit(4, 0);
    for (std::size_t i = 0; i < 64; ++i) {
      const auto g = static_cast<std::size_t>(gt.labels[i]);
      const auto p = static_cast<std::size_t>(pred.labels[i]);
      ++total;
      ++row[g];
      ++col[p];
      if (g == p) {
        ++correct;
        ++hit[g];
      }
    }
    double accs = 0, ious = 0;
    std::size_t na = 0, ni = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      if (row[c]) {
        accs += static_cast<double>(hit[c]) / row[c];
        ++na;
      }
      const std::size_t uni = row[c] + col[c] - hit[c];
      if (uni) {
        ious += static_cast<double>(hit[c]) / uni;
        ++ni;
      }
    }

    const auto s = segmentation_scores(pred, gt, 4);
    ASSERT_DOUBLE_EQ(s.pixel_acc, static_cast<double>(correct) / total);
    ASSERT_DOUBLE_EQ(s.class_acc, na ? accs / na : 0.0);
    ASSERT_DOUBLE_EQ(s.mean_iou, ni ? ious / ni : 0.0);
  }

  EXPECT_NEAR(aggregate_score({0.574, 0.234, 0.170}), 0.326, 1e-9);
  EXPECT_NEAR(aggregate_score({0.58, 0.22, 0.16}), 0.320, 1e-9);
  print_verdict(7, "metric oracles");
}

// ---------------------------------------------------------------------------
// 8. toy-scale training: the geometry constraint drives its own loss down by
//    >= 80% and yields an equivariance residual <= 0.25x the plain-GAN
//    baseline, within 15 minutes
// ---------------------------------------------------------------------------
TEST(Acceptance, C08_ToyTrainingBehavior) {
  const auto t0 = Clock::now();
  const fs::path dir = scratch_dir() / "train_toy";
  toy::write_recolor_dataset(dir, 64, 7, 32);

  TrainConfig cfg;
  cfg.data_x = (dir / "trainX").string();
  cfg.data_y = (dir / "trainY").string();
  cfg.out_dir = (scratch_dir() / "run_gc").string();
  cfg.resolution_h = cfg.resolution_w = 32;
  cfg.g_base_width = 16;
  cfg.d_base_width = 16;
  cfg.n_resblocks = 1;
  cfg.constraints = {true, false, false, false};  // geometry only
  cfg.pool = {GeoTransform::rot90cw};
  cfg.batch_size = 1;
  cfg.epochs_const = 24;  // 64 images -> 1536 steps
  cfg.epochs_decay = 0;
  cfg.checkpoint_every = 0;
  cfg.seed = 3;

  Trainer<float> gc(cfg);
  const auto r_gc = gc.train();

  TrainConfig base_cfg = cfg;
  base_cfg.constraints = {};  // GAN alone
  base_cfg.out_dir = (scratch_dir() / "run_baseline").string();
  Trainer<float> baseline(base_cfg);
  baseline.train();

  const auto rows = read_log(r_gc.log_path);
  ASSERT_GE(rows.size(), 1500u);
  const double geo_start = rows.front().losses.geo;
  double geo_end = 0;
  for (std::size_t i = rows.size() - 150; i < rows.size(); ++i) geo_end += rows[i].losses.geo;
  geo_end /= 150.0;
  EXPECT_LE(geo_end, 0.2 * geo_start)
      << "geometry loss " << geo_start << " -> " << geo_end;

  DataConfig dcfg;
  dcfg.height = dcfg.width = 32;
  const auto ds = UnpairedDataset::load(cfg.data_x, cfg.data_y, dcfg);
  std::vector<Tensor<float>> xs;
  for (std::size_t i = 0; i < ds.size_x(); ++i) xs.push_back(ds.load_x<float>(i));

  const double res_gc = equivariance_residual(*gc.model().g_xy, *gc.model().g_xtyt, xs,
                                              GeoTransform::rot90cw);
  const double res_base = equivariance_residual(*baseline.model().g_xy, *baseline.model().g_xtyt,
                                                xs, GeoTransform::rot90cw);
  EXPECT_LE(res_gc, 0.25 * res_base) << "residuals: gc " << res_gc << " baseline " << res_base;

  const double dt = seconds_since(t0);
  EXPECT_LT(dt, 900.0);
  std::cout << "[ACCEPTANCE]   toy training: geo " << geo_start << " -> " << geo_end
            << ", residual " << res_gc << " vs baseline " << res_base << " (" << dt << " s)"
            << std::endl;
  print_verdict(8, "toy-scale training behavior");
}

// ---------------------------------------------------------------------------
// 9. schedule values and end-to-end reproducibility
// ---------------------------------------------------------------------------
TEST(Acceptance, C09_ScheduleAndReproducibility) {
  TrainConfig sched;  // default 100 + 100
  for (std::size_t e = 0; e < 100; ++e) ASSERT_EQ(lr_at(e, sched), 2e-4);
  for (std::size_t e = 100; e < 200; ++e) {
    const double expect = 2e-4 * (1.0 - static_cast<double>(e - 99) / 100.0);
    ASSERT_EQ(lr_at(e, sched), expect) << "epoch " << e;
  }
  ASSERT_EQ(lr_at(199, sched), 0.0);

  const fs::path dir = scratch_dir() / "repro_toy";
  toy::write_recolor_dataset(dir, 8, 55, 32);
  auto make_cfg = [&](const std::string& out) {
    TrainConfig cfg;
    cfg.data_x = (dir / "trainX").string();
    cfg.data_y = (dir / "trainY").string();
    cfg.out_dir = (scratch_dir() / out).string();
    cfg.resolution_h = cfg.resolution_w = 32;
    cfg.g_base_width = 4;
    cfg.d_base_width = 4;
    cfg.n_resblocks = 1;
    cfg.constraints = {true, false, false, false};
    cfg.epochs_const = 1;
    cfg.epochs_decay = 1;
    cfg.checkpoint_every = 0;
    cfg.seed = 1234;
    return cfg;
  };
  Trainer<float> a(make_cfg("repro_a")), b(make_cfg("repro_b"));
  const auto ra = a.train();
  const auto rb = b.train();
  std::ifstream fa(ra.final_checkpoint, std::ios::binary), fb(rb.final_checkpoint, std::ios::binary);
  const std::vector<char> ba{std::istreambuf_iterator<char>(fa), std::istreambuf_iterator<char>()};
  const std::vector<char> bb{std::istreambuf_iterator<char>(fb), std::istreambuf_iterator<char>()};
  ASSERT_FALSE(ba.empty());
  EXPECT_EQ(ba, bb);
  print_verdict(9, "schedule and reproducibility");
}

// ---------------------------------------------------------------------------
// 10. ablation wiring: vf / Mix / Separate / +Cycle / +Dist configurations
//     each train one epoch and log the expected active components
// ---------------------------------------------------------------------------
TEST(Acceptance, C10_AblationWiring) {
  const fs::path dir = scratch_dir() / "ablation_toy";
  toy::write_recolor_dataset(dir, 8, 77, 32);

  struct Ablation {
    const char* name;
    std::vector<GeoTransform> pool;
    ConstraintSet constraints;
    SharingMode sharing;
    std::size_t batch;
  };
  const std::vector<Ablation> ablations = {
      {"vf", {GeoTransform::vflip}, {true, false, false, false}, SharingMode::shared, 1},
      {"mix", {GeoTransform::rot90cw, GeoTransform::vflip}, {true, false, false, false},
       SharingMode::shared, 1},
      {"rot-separate", {GeoTransform::rot90cw}, {true, false, false, false},
       SharingMode::separate, 1},
      {"rot+cycle", {GeoTransform::rot90cw}, {true, true, false, false}, SharingMode::shared, 1},
      {"rot+dist", {GeoTransform::rot90cw}, {true, false, true, false}, SharingMode::shared, 2},
  };

  for (const auto& ab : ablations) {
    TrainConfig cfg;
    cfg.data_x = (dir / "trainX").string();
    cfg.data_y = (dir / "trainY").string();
    cfg.out_dir = (scratch_dir() / ("ablation_" + std::string(ab.name))).string();
    cfg.resolution_h = cfg.resolution_w = 32;
    cfg.g_base_width = 4;
    cfg.d_base_width = 4;
    cfg.n_resblocks = 1;
    cfg.pool = ab.pool;
    cfg.constraints = ab.constraints;
    cfg.sharing = ab.sharing;
    cfg.batch_size = ab.batch;
    cfg.epochs_const = 1;
    cfg.epochs_decay = 0;
    cfg.checkpoint_every = 0;
    cfg.seed = 9;

    Trainer<float> t(cfg);
    ASSERT_NO_THROW(t.train()) << ab.name;
    EXPECT_EQ(t.model().generators_shared(), ab.sharing == SharingMode::shared) << ab.name;
    EXPECT_EQ(static_cast<bool>(t.model().g_yx), ab.constraints.cycle) << ab.name;

    const auto rows = read_log(fs::path(cfg.out_dir) / "log.csv");
    ASSERT_FALSE(rows.empty()) << ab.name;
    for (const auto& r : rows) {
      EXPECT_GT(r.losses.geo, 0.0) << ab.name;
      if (ab.constraints.cycle)
        EXPECT_GT(r.losses.cycle, 0.0) << ab.name;
      else
        EXPECT_EQ(r.losses.cycle, 0.0) << ab.name;
      if (ab.constraints.distance)
        EXPECT_GT(r.losses.distance, 0.0) << ab.name;
      else
        EXPECT_EQ(r.losses.distance, 0.0) << ab.name;
      EXPECT_EQ(r.losses.identity, 0.0) << ab.name;
    }
  }
  print_verdict(10, "ablation wiring");
}

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  const int rc = RUN_ALL_TESTS();
  std::filesystem::remove_all(scratch_dir());
  return rc;
}
