#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gcgan/error.hpp"
#include "gcgan/image.hpp"

namespace gcgan {

/// Ordered class palette: contiguous ids from 0, unique RGB triples.
struct LabelPalette {
  struct Entry {
    int id;
    std::uint8_t r, g, b;
    std::string name;
  };
  std::vector<Entry> entries;
  int ignore_id = -1;  // -1: nothing ignored

  std::size_t size() const { return entries.size(); }

  void validate() const {
    if (entries.empty()) throw ConfigError("palette: no entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].id != static_cast<int>(i))
        throw ConfigError("palette: class ids must be contiguous from 0");
      for (std::size_t j = i + 1; j < entries.size(); ++j)
        if (entries[i].r == entries[j].r && entries[i].g == entries[j].g &&
            entries[i].b == entries[j].b)
          throw ConfigError("palette: duplicate RGB for classes " + std::to_string(i) + " and " +
                            std::to_string(j));
    }
    if (ignore_id >= static_cast<int>(entries.size()))
      throw ConfigError("palette: ignore class out of range");
  }
};

/// Palette file: one "class_id r g b name" row per class, '#' comments.
inline LabelPalette load_palette(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read palette file: " + path.string());
  LabelPalette p;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream row(line);
    int id, r, g, b;
    if (!(row >> id >> r >> g >> b)) continue;
    std::string name;
    std::getline(row, name);
    const auto start = name.find_first_not_of(" \t");
    name = start == std::string::npos ? "" : name.substr(start);
    p.entries.push_back({id, static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                         static_cast<std::uint8_t>(b), name});
  }
  std::sort(p.entries.begin(), p.entries.end(),
            [](const auto& a, const auto& b2) { return a.id < b2.id; });
  p.validate();
  return p;
}

struct LabelMap {
  std::size_t height = 0, width = 0;
  std::vector<std::int32_t> labels;

  LabelMap() = default;
  LabelMap(std::size_t h, std::size_t w) : height(h), width(w), labels(h * w, 0) {}
  std::int32_t& at(std::size_t y, std::size_t x) { return labels[y * width + x]; }
  std::int32_t at(std::size_t y, std::size_t x) const { return labels[y * width + x]; }
};

/// Per pixel, the class whose palette color is nearest in Euclidean RGB
/// distance; ties go to the lowest class id.
inline LabelMap rgb_to_labels(const Image8& img, const LabelPalette& palette) {
  if (palette.entries.empty()) throw ConfigError("rgb_to_labels: empty palette");
  if (img.channels != 3) throw ShapeError("rgb_to_labels: RGB image required");
  LabelMap out(img.height, img.width);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) {
      long best = -1;
      int best_id = 0;
      for (const auto& e : palette.entries) {
        const long dr = static_cast<long>(img.at(y, x, 0)) - e.r;
        const long dg = static_cast<long>(img.at(y, x, 1)) - e.g;
        const long db = static_cast<long>(img.at(y, x, 2)) - e.b;
        const long d = dr * dr + dg * dg + db * db;
        if (best < 0 || d < best) {  // strict <: first (lowest) id wins ties
          best = d;
          best_id = e.id;
        }
      }
      out.at(y, x) = best_id;
    }
  return out;
}

inline Image8 render_labels(const LabelMap& labels, const LabelPalette& palette) {
  Image8 img(labels.height, labels.width, 3);
  for (std::size_t y = 0; y < labels.height; ++y)
    for (std::size_t x = 0; x < labels.width; ++x) {
      const auto& e = palette.entries.at(static_cast<std::size_t>(labels.at(y, x)));
      img.at(y, x, 0) = e.r;
      img.at(y, x, 1) = e.g;
      img.at(y, x, 2) = e.b;
    }
  return img;
}

/// Nearest-neighbor upscale of a label map (for comparing against
/// full-resolution ground truth).
inline LabelMap resize_labels_nearest(const LabelMap& in, std::size_t height, std::size_t width) {
  LabelMap out(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = std::min(in.height - 1, y * in.height / height);
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t sx = std::min(in.width - 1, x * in.width / width);
      out.at(y, x) = in.at(sy, sx);
    }
  }
  return out;
}

struct SegScores {
  double pixel_acc = 0, class_acc = 0, mean_iou = 0;
};

/// Row = ground-truth class, column = predicted class; pixels whose ground
/// truth is the ignored class are dropped entirely.
struct ConfusionMatrix {
  std::size_t n_classes = 0;
  std::vector<std::int64_t> counts;

  explicit ConfusionMatrix(std::size_t n) : n_classes(n), counts(n * n, 0) {}

  std::int64_t& at(std::size_t gt, std::size_t pred) { return counts[gt * n_classes + pred]; }
  std::int64_t at(std::size_t gt, std::size_t pred) const { return counts[gt * n_classes + pred]; }

  void add(const LabelMap& pred, const LabelMap& gt, int ignore_id) {
    if (pred.height != gt.height || pred.width != gt.width)
      throw ShapeError("segmentation: prediction and ground truth shapes differ");
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
      const std::int32_t g = gt.labels[i];
      const std::int32_t p = pred.labels[i];
      if (g == ignore_id) continue;
      if (g < 0 || p < 0 || g >= static_cast<std::int32_t>(n_classes) ||
          p >= static_cast<std::int32_t>(n_classes))
        throw ShapeError("segmentation: label out of range");
      at(static_cast<std::size_t>(g), static_cast<std::size_t>(p)) += 1;
    }
  }

  /// pixel accuracy over all counted pixels; class accuracy averaged over
  /// classes present in the ground truth; IoU averaged over classes with a
  /// nonzero union. The ignore class is excluded from all three.
  SegScores scores(int ignore_id = -1) const {
    std::vector<std::int64_t> row(n_classes, 0), col(n_classes, 0);
    std::int64_t total = 0, correct = 0;
    for (std::size_t g = 0; g < n_classes; ++g) {
      if (static_cast<int>(g) == ignore_id) continue;
      for (std::size_t p = 0; p < n_classes; ++p) {
        row[g] += at(g, p);
        col[p] += at(g, p);
        total += at(g, p);
      }
      correct += at(g, g);
    }
    SegScores s;
    s.pixel_acc = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;

    double acc_sum = 0, iou_sum = 0;
    std::size_t acc_n = 0, iou_n = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (static_cast<int>(c) == ignore_id) continue;
      if (row[c] > 0) {
        acc_sum += static_cast<double>(at(c, c)) / static_cast<double>(row[c]);
        ++acc_n;
      }
      const std::int64_t uni = row[c] + col[c] - at(c, c);
      if (uni > 0) {
        iou_sum += static_cast<double>(at(c, c)) / static_cast<double>(uni);
        ++iou_n;
      }
    }
    s.class_acc = acc_n > 0 ? acc_sum / static_cast<double>(acc_n) : 0.0;
    s.mean_iou = iou_n > 0 ? iou_sum / static_cast<double>(iou_n) : 0.0;
    return s;
  }
};

inline SegScores segmentation_scores(const LabelMap& pred, const LabelMap& gt,
                                     std::size_t n_classes, int ignore_id = -1) {
  ConfusionMatrix cm(n_classes);
  cm.add(pred, gt, ignore_id);
  return cm.scores(ignore_id);
}

/// Fraction of pixels whose maximum per-channel deviation is strictly below
/// delta.
inline double map_accuracy(const Image8& pred, const Image8& gt, int delta) {
  if (pred.height != gt.height || pred.width != gt.width || pred.channels != gt.channels)
    throw ShapeError("map_accuracy: image shapes differ");
  if (delta <= 0) throw ConfigError("map_accuracy: delta must be positive");
  std::size_t hit = 0;
  const std::size_t n = pred.height * pred.width;
  for (std::size_t i = 0; i < n; ++i) {
    int worst = 0;
    for (std::size_t c = 0; c < pred.channels; ++c) {
      const int d = std::abs(static_cast<int>(pred.pixels[i * pred.channels + c]) -
                             static_cast<int>(gt.pixels[i * gt.channels + c]));
      worst = std::max(worst, d);
    }
    if (worst < delta) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(n);
}

/// Root mean squared channel-wise deviation in 8-bit units.
inline double rmse(const Image8& pred, const Image8& gt) {
  if (pred.pixels.size() != gt.pixels.size() || pred.height != gt.height ||
      pred.width != gt.width)
    throw ShapeError("rmse: image shapes differ");
  double acc = 0;
  for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
    const double d = static_cast<double>(pred.pixels[i]) - static_cast<double>(gt.pixels[i]);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.pixels.size()));
}

/// The aggregate parsing score: arithmetic mean of the three metrics.
inline double aggregate_score(const SegScores& s) {
  return (s.pixel_acc + s.class_acc + s.mean_iou) / 3.0;
}

}  // namespace gcgan
