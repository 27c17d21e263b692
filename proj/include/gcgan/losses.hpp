#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "gcgan/autodiff.hpp"
#include "gcgan/transforms.hpp"

namespace gcgan {

/// Component values of one optimization step, as logged to the training CSV.
/// Disabled constraints stay exactly 0 and contribute nothing to the totals.
struct LossReport {
  double gan_g = 0;  // both translators' least-squares generator terms
  double gan_d = 0;  // both discriminators' losses
  double geo = 0;
  double cycle = 0;
  double distance = 0;
  double identity = 0;
  double total_g = 0;
};

/// Which constraint terms are active. The geometry constraint is the method;
/// the empty set (optionally plus identity) is the plain-GAN baseline.
struct ConstraintSet {
  bool geo = false;
  bool cycle = false;
  bool distance = false;
  bool identity = false;
};

struct LossWeights {
  double geo = 20.0;
  double cycle = 10.0;
  double distance = 1.0;
  double identity = 5.0;
};

/// Precomputed means / standard deviations of pairwise L1 distances within
/// each domain. Sigmas are floored to keep the standardization finite on
/// degenerate sets.
struct DistanceStats {
  double mu_x = 0, sigma_x = 1, mu_y = 0, sigma_y = 1;

  static constexpr double kSigmaFloor = 1e-6;
  void apply_floor() {
    sigma_x = std::max(sigma_x, kSigmaFloor);
    sigma_y = std::max(sigma_y, kSigmaFloor);
  }
};

/// Generator side of the least-squares adversarial objective:
/// mean over patch scores of (score - 1)^2.
template <typename T>
Var<T> adversarial_loss_g(const Var<T>& scores_fake) {
  return squared_error_mean(scores_fake, T(1));
}

/// Discriminator side: 0.5 * [mean (real - 1)^2 + mean fake^2].
template <typename T>
Var<T> adversarial_loss_d(const Var<T>& scores_real, const Var<T>& scores_fake) {
  return weighted_sum<T>({{T(0.5), squared_error_mean(scores_real, T(1))},
                          {T(0.5), squared_error_mean(scores_fake, T(0))}});
}

template <typename T>
struct GeometryLossTerms {
  Var<T> inverse_term;  // mean L1 of G_XY(x) - f^-1(G_X~Y~(f(x)))
  Var<T> forward_term;  // mean L1 of G_X~Y~(f(x)) - f(G_XY(x))
  Var<T> total;
};

/// Geometry-consistency loss from already-computed translator outputs:
/// fake_y = G_XY(x) and fake_yt = G_X~Y~(f(x)).
template <typename T>
GeometryLossTerms<T> geometry_consistency_from_outputs(const Var<T>& fake_y,
                                                       const Var<T>& fake_yt, GeoTransform f) {
  GeometryLossTerms<T> terms;
  terms.inverse_term = l1_diff_mean(fake_y, geo_apply(fake_yt, invert_transform(f)));
  terms.forward_term = l1_diff_mean(fake_yt, geo_apply(fake_y, f));
  terms.total = add(terms.inverse_term, terms.forward_term);
  return terms;
}

/// Geometry-consistency loss; g_xy and g_xtyt are callables Var -> Var.
template <typename T, typename G1, typename G2>
GeometryLossTerms<T> geometry_consistency_loss(G1&& g_xy, G2&& g_xtyt, const Var<T>& x,
                                               GeoTransform f) {
  const Var<T> fake_y = g_xy(x);
  const Var<T> fake_yt = g_xtyt(geo_apply(x, f));
  return geometry_consistency_from_outputs(fake_y, fake_yt, f);
}

/// Bidirectional reconstruction loss through the translator pair.
template <typename T, typename G1, typename G2>
Var<T> cycle_consistency_loss(G1&& g_xy, G2&& g_yx, const Var<T>& x, const Var<T>& y) {
  const Var<T> x_rec = g_yx(g_xy(x));
  const Var<T> y_rec = g_xy(g_yx(y));
  return add(l1_diff_mean(x_rec, x), l1_diff_mean(y_rec, y));
}

/// Distance-preservation loss over explicit pairs (x_i[k], x_j[k]).
/// phi standardizes the input-domain distance, psi the translated one;
/// the loss is the mean absolute difference across pairs.
template <typename T, typename G>
Var<T> distance_loss(G&& g_xy, const Var<T>& x_i, const Var<T>& x_j, const DistanceStats& stats) {
  check_same_shape(x_i.value(), x_j.value(), "distance_loss");
  if (x_i.value().rank() != 4) throw ShapeError("distance_loss: expects batched (N,C,H,W) pairs");
  const std::size_t pairs = x_i.value().dim(0);
  if (pairs == 0) return Var<T>::scalar(T(0));

  const Var<T> out_i = g_xy(x_i);
  const Var<T> out_j = g_xy(x_j);

  std::vector<std::pair<T, Var<T>>> terms;
  terms.reserve(pairs);
  const T inv_pairs = T(1) / static_cast<T>(pairs);
  for (std::size_t p = 0; p < pairs; ++p) {
    const Var<T> d_in = l1_diff_mean(select_sample(x_i, p), select_sample(x_j, p));
    const T phi = static_cast<T>((static_cast<double>(d_in.item()) - stats.mu_x) / stats.sigma_x);
    Var<T> d_out = l1_diff_mean(select_sample(out_i, p), select_sample(out_j, p));
    Var<T> psi = scale_shift(d_out, static_cast<T>(1.0 / stats.sigma_y),
                             static_cast<T>(-stats.mu_y / stats.sigma_y));
    terms.emplace_back(inv_pairs, abs_of(scale_shift(psi, T(1), -phi)));
  }
  return weighted_sum(terms);
}

/// Distance loss over consecutive batch items (0,1), (2,3), ... given the
/// generator output for the whole batch. Used by the training step so the
/// batch is translated once.
template <typename T>
Var<T> distance_loss_from_outputs(const Var<T>& fake, const Tensor<T>& x_batch,
                                  const DistanceStats& stats) {
  if (fake.value().rank() != 4) throw ShapeError("distance_loss: expects batched outputs");
  const std::size_t pairs = fake.value().dim(0) / 2;
  if (pairs == 0) return Var<T>::scalar(T(0));
  const Var<T> xv = Var<T>::constant(x_batch);

  std::vector<std::pair<T, Var<T>>> terms;
  terms.reserve(pairs);
  const T inv_pairs = T(1) / static_cast<T>(pairs);
  for (std::size_t p = 0; p < pairs; ++p) {
    const Var<T> d_in = l1_diff_mean(select_sample(xv, 2 * p), select_sample(xv, 2 * p + 1));
    const T phi = static_cast<T>((static_cast<double>(d_in.item()) - stats.mu_x) / stats.sigma_x);
    Var<T> d_out = l1_diff_mean(select_sample(fake, 2 * p), select_sample(fake, 2 * p + 1));
    Var<T> psi = scale_shift(d_out, static_cast<T>(1.0 / stats.sigma_y),
                             static_cast<T>(-stats.mu_y / stats.sigma_y));
    terms.emplace_back(inv_pairs, abs_of(scale_shift(psi, T(1), -phi)));
  }
  return weighted_sum(terms);
}

/// Penalizes the translator for changing target-domain inputs.
template <typename T, typename G>
Var<T> identity_loss(G&& g_xy, const Var<T>& y) {
  return l1_diff_mean(g_xy(y), y);
}

/// Combines component values into (generator total, discriminator total).
/// Disabled components contribute exactly zero regardless of their value.
inline std::pair<double, double> total_objective(const LossReport& r, const ConstraintSet& on,
                                                 const LossWeights& w) {
  double g = r.gan_g;
  if (on.geo) g += w.geo * r.geo;
  if (on.cycle) g += w.cycle * r.cycle;
  if (on.distance) g += w.distance * r.distance;
  if (on.identity) g += w.identity * r.identity;
  return {g, r.gan_d};
}

}  // namespace gcgan
