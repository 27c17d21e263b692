#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gcgan/image.hpp"
#include "gcgan/losses.hpp"
#include "gcgan/rng.hpp"
#include "gcgan/tensor.hpp"

namespace gcgan {

namespace fs = std::filesystem;

struct DataConfig {
  std::size_t height = 128, width = 128;
  std::size_t channels = 3;
  bool augment = false;             // resize-up + random crop + random hflip
  double load_scale = 286.0 / 256.0;  // pre-crop upscale factor when augmenting
};

namespace data_detail {

inline bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

inline std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  if (files.empty()) throw IoError("no PNG/JPEG files in directory: " + dir.string());
  return files;
}

}  // namespace data_detail

/// Decode + resize (+ optional crop/flip augmentation) + normalize to a
/// (C,H,W) tensor in [-1,1]. Deterministic when aug is null.
template <typename T>
Tensor<T> preprocess(const Image8& img, const DataConfig& cfg, RandomStream* aug = nullptr) {
  Image8 work;
  if (cfg.augment && aug != nullptr) {
    const std::size_t lh = std::max<std::size_t>(
        cfg.height, static_cast<std::size_t>(std::lround(cfg.height * cfg.load_scale)));
    const std::size_t lw = std::max<std::size_t>(
        cfg.width, static_cast<std::size_t>(std::lround(cfg.width * cfg.load_scale)));
    work = resize_image(img, lh, lw);
    const std::size_t oy = static_cast<std::size_t>(aug->uniform_index(lh - cfg.height + 1));
    const std::size_t ox = static_cast<std::size_t>(aug->uniform_index(lw - cfg.width + 1));
    Image8 crop(cfg.height, cfg.width, work.channels);
    for (std::size_t y = 0; y < cfg.height; ++y)
      for (std::size_t x = 0; x < cfg.width; ++x)
        for (std::size_t c = 0; c < work.channels; ++c)
          crop.at(y, x, c) = work.at(y + oy, x + ox, c);
    if (aug->bernoulli(0.5)) {
      Image8 flipped(cfg.height, cfg.width, crop.channels);
      for (std::size_t y = 0; y < cfg.height; ++y)
        for (std::size_t x = 0; x < cfg.width; ++x)
          for (std::size_t c = 0; c < crop.channels; ++c)
            flipped.at(y, x, c) = crop.at(y, cfg.width - 1 - x, c);
      work = std::move(flipped);
    } else {
      work = std::move(crop);
    }
  } else {
    work = resize_image(img, cfg.height, cfg.width);
  }
  return image_to_tensor<T>(work, cfg.channels);
}

/// Two-folder unpaired dataset. File order is lexicographic on the filename,
/// so indices are stable across runs and platforms.
class UnpairedDataset {
 public:
  static UnpairedDataset load(const fs::path& dir_x, const fs::path& dir_y, DataConfig cfg) {
    UnpairedDataset d;
    d.cfg_ = cfg;
    d.xs_ = data_detail::list_images(dir_x);
    d.ys_ = data_detail::list_images(dir_y);
    return d;
  }

  std::size_t size_x() const { return xs_.size(); }
  std::size_t size_y() const { return ys_.size(); }
  const fs::path& x_path(std::size_t i) const { return xs_.at(i); }
  const fs::path& y_path(std::size_t j) const { return ys_.at(j); }
  const DataConfig& config() const { return cfg_; }

  template <typename T>
  Tensor<T> load_x(std::size_t i, RandomStream* aug = nullptr) const {
    return preprocess<T>(load_image(xs_.at(i)), cfg_, aug);
  }
  template <typename T>
  Tensor<T> load_y(std::size_t j, RandomStream* aug = nullptr) const {
    return preprocess<T>(load_image(ys_.at(j)), cfg_, aug);
  }

 private:
  std::vector<fs::path> xs_, ys_;
  DataConfig cfg_;
};

/// Deterministic unpaired epoch order: every X index exactly once per epoch,
/// Y partners drawn from an independently reshuffled permutation.
class PairSampler {
 public:
  PairSampler(std::size_t nx, std::size_t ny, std::uint64_t seed)
      : nx_(nx), ny_(ny), seed_(seed) {}

  void begin_epoch(std::size_t epoch) {
    rng_ = RandomStream::derive(seed_, "epoch-pairing", epoch);
    perm_x_ = rng_.permutation(nx_);
    perm_y_ = rng_.permutation(ny_);
    pos_ = 0;
    pos_y_ = 0;
  }

  std::size_t remaining() const { return nx_ - pos_; }

  std::pair<std::size_t, std::size_t> next() {
    if (pos_ >= nx_) throw ConfigError("PairSampler: epoch exhausted");
    if (pos_y_ >= ny_) {
      perm_y_ = rng_.permutation(ny_);
      pos_y_ = 0;
    }
    return {perm_x_[pos_++], perm_y_[pos_y_++]};
  }

 private:
  std::size_t nx_, ny_;
  std::uint64_t seed_;
  RandomStream rng_;
  std::vector<std::size_t> perm_x_, perm_y_;
  std::size_t pos_ = 0, pos_y_ = 0;
};

/// Mean absolute difference per element; the distance all Eq.-style pairwise
/// statistics use.
template <typename T>
double mean_l1_distance(const Tensor<T>& a, const Tensor<T>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  return s / static_cast<double>(a.size());
}

namespace data_detail {

template <typename T>
std::pair<double, double> domain_distance_stats(const std::vector<Tensor<T>>& imgs,
                                                std::size_t max_pairs, RandomStream& rng,
                                                bool force_sampling = false) {
  const std::size_t n = imgs.size();
  if (n < 2) throw ConfigError("distance stats need at least 2 images per domain");
  const std::size_t all = n * (n - 1) / 2;

  std::vector<double> dists;
  if (all <= max_pairs && !force_sampling) {
    dists.reserve(all);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) dists.push_back(mean_l1_distance(imgs[i], imgs[j]));
  } else {
    dists.reserve(max_pairs);
    for (std::size_t k = 0; k < max_pairs; ++k) {
      const std::size_t i = static_cast<std::size_t>(rng.uniform_index(n));
      std::size_t j = static_cast<std::size_t>(rng.uniform_index(n - 1));
      if (j >= i) ++j;
      dists.push_back(mean_l1_distance(imgs[i], imgs[j]));
    }
  }

  double mu = 0;
  for (double d : dists) mu += d;
  mu /= static_cast<double>(dists.size());
  double var = 0;
  for (double d : dists) var += (d - mu) * (d - mu);
  var /= static_cast<double>(dists.size());  // population variance
  return {mu, std::sqrt(var)};
}

}  // namespace data_detail

/// Per-domain means and population standard deviations of pairwise mean-L1
/// distances. Exhaustive when the pair count fits in max_pairs, uniformly
/// sampled otherwise (force_sampling draws max_pairs pairs regardless).
/// Augmentation is never applied here.
template <typename T>
DistanceStats precompute_distance_stats(const UnpairedDataset& ds, std::size_t max_pairs,
                                        std::uint64_t seed = 0, bool force_sampling = false) {
  DataConfig cfg = ds.config();
  cfg.augment = false;

  std::vector<Tensor<T>> xs, ys;
  xs.reserve(ds.size_x());
  ys.reserve(ds.size_y());
  for (std::size_t i = 0; i < ds.size_x(); ++i)
    xs.push_back(preprocess<T>(load_image(ds.x_path(i)), cfg));
  for (std::size_t j = 0; j < ds.size_y(); ++j)
    ys.push_back(preprocess<T>(load_image(ds.y_path(j)), cfg));

  RandomStream rng_x = RandomStream::derive(seed, "dist-stats-x");
  RandomStream rng_y = RandomStream::derive(seed, "dist-stats-y");
  DistanceStats st;
  std::tie(st.mu_x, st.sigma_x) =
      data_detail::domain_distance_stats(xs, max_pairs, rng_x, force_sampling);
  std::tie(st.mu_y, st.sigma_y) =
      data_detail::domain_distance_stats(ys, max_pairs, rng_y, force_sampling);
  st.apply_floor();
  return st;
}

inline void save_distance_stats(const fs::path& path, const DistanceStats& st) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write stats file: " + path.string());
  out.precision(17);
  out << "mu_x " << st.mu_x << "\n"
      << "sigma_x " << st.sigma_x << "\n"
      << "mu_y " << st.mu_y << "\n"
      << "sigma_y " << st.sigma_y << "\n";
}

inline DistanceStats load_distance_stats(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read stats file: " + path.string());
  DistanceStats st;
  std::string key;
  double value;
  bool got[4] = {false, false, false, false};
  while (in >> key >> value) {
    if (key == "mu_x") st.mu_x = value, got[0] = true;
    else if (key == "sigma_x") st.sigma_x = value, got[1] = true;
    else if (key == "mu_y") st.mu_y = value, got[2] = true;
    else if (key == "sigma_y") st.sigma_y = value, got[3] = true;
  }
  if (!(got[0] && got[1] && got[2] && got[3]))
    throw IoError("stats file missing keys: " + path.string());
  st.apply_floor();
  return st;
}

/// Stack (C,H,W) tensors into one (N,C,H,W) batch.
template <typename T>
Tensor<T> stack_batch(const std::vector<Tensor<T>>& items) {
  if (items.empty()) throw ShapeError("stack_batch: empty list");
  const auto& s = items.front().shape();
  Tensor<T> out({items.size(), s[0], s[1], s[2]});
  const std::size_t stride = items.front().size();
  for (std::size_t n = 0; n < items.size(); ++n) {
    check_same_shape(items[n], items.front(), "stack_batch");
    std::copy(items[n].data(), items[n].data() + stride, out.data() + n * stride);
  }
  return out;
}

}  // namespace gcgan
