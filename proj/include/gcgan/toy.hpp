#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gcgan/error.hpp"
#include "gcgan/image.hpp"
#include "gcgan/rng.hpp"

namespace gcgan::toy {

namespace fs = std::filesystem;

/// Random sprite image: dark background with a few bright rectangles and
/// discs. Pure integer rasterization, byte-deterministic for a given stream.
inline Image8 sprite(RandomStream& rng, std::size_t size) {
  Image8 img(size, size, 3);
  std::uint8_t bg[3];
  for (auto& c : bg) c = static_cast<std::uint8_t>(rng.uniform_index(60));
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = bg[c];

  const std::size_t n_shapes = 2 + rng.uniform_index(3);
  for (std::size_t s = 0; s < n_shapes; ++s) {
    std::uint8_t col[3];
    for (auto& c : col) c = static_cast<std::uint8_t>(100 + rng.uniform_index(156));
    if (rng.bernoulli(0.5)) {
      // axis-aligned rectangle
      const std::size_t x0 = rng.uniform_index(size - 4);
      const std::size_t y0 = rng.uniform_index(size - 4);
      const std::size_t w = 3 + rng.uniform_index(size / 2);
      const std::size_t h = 3 + rng.uniform_index(size / 2);
      for (std::size_t y = y0; y < std::min(size, y0 + h); ++y)
        for (std::size_t x = x0; x < std::min(size, x0 + w); ++x)
          for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = col[c];
    } else {
      // disc
      const std::ptrdiff_t cx = static_cast<std::ptrdiff_t>(rng.uniform_index(size));
      const std::ptrdiff_t cy = static_cast<std::ptrdiff_t>(rng.uniform_index(size));
      const std::ptrdiff_t r = 2 + static_cast<std::ptrdiff_t>(rng.uniform_index(size / 4));
      for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(0, cy - r);
           y <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(size) - 1, cy + r); ++y)
        for (std::ptrdiff_t x = std::max<std::ptrdiff_t>(0, cx - r);
             x <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(size) - 1, cx + r); ++x)
          if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
            for (std::size_t c = 0; c < 3; ++c)
              img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = col[c];
    }
  }
  return img;
}

/// The fixed analytic recoloring that defines domain Y:
/// (r, g, b) -> (g, b, 255 - r). A per-pixel channel shuffle with one
/// inversion, so it commutes with every spatial permutation.
inline Image8 recolor(const Image8& img) {
  Image8 out(img.height, img.width, 3);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) {
      out.at(y, x, 0) = img.at(y, x, 1);
      out.at(y, x, 1) = img.at(y, x, 2);
      out.at(y, x, 2) = static_cast<std::uint8_t>(255 - img.at(y, x, 0));
    }
  return out;
}

/// Writes the unpaired toy task: trainX/ holds sprites, trainY/ holds the
/// recoloring of an independently drawn sprite set.
inline void write_recolor_dataset(const fs::path& out_dir, std::size_t n, std::uint64_t seed,
                                  std::size_t size = 32) {
  if (n == 0) throw ConfigError("toy dataset: n must be positive");
  if (size < 8) throw ConfigError("toy dataset: size must be at least 8");
  const fs::path dir_x = out_dir / "trainX";
  const fs::path dir_y = out_dir / "trainY";
  fs::create_directories(dir_x);
  fs::create_directories(dir_y);

  RandomStream rng_x = RandomStream::derive(seed, "toy-x");
  RandomStream rng_y = RandomStream::derive(seed, "toy-y");
  char name[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(name, sizeof(name), "x_%04zu.png", i);
    save_image(dir_x / name, sprite(rng_x, size));
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(name, sizeof(name), "y_%04zu.png", i);
    save_image(dir_y / name, recolor(sprite(rng_y, size)));
  }
}

}  // namespace gcgan::toy
