#pragma once

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gcgan/error.hpp"
#include "gcgan/tensor.hpp"

namespace gcgan {

/// 8-bit image, interleaved rows (HWC), RGB channel order for color.
struct Image8 {
  std::size_t height = 0, width = 0, channels = 0;  // channels: 1 or 3
  std::vector<std::uint8_t> pixels;

  Image8() = default;
  Image8(std::size_t h, std::size_t w, std::size_t c)
      : height(h), width(w), channels(c), pixels(h * w * c, 0) {}

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
};

inline Image8 load_image(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw IoError("cannot read image file: " + path.string());
  if (mat.depth() != CV_8U) mat.convertTo(mat, CV_8U);
  if (mat.channels() == 4)
    cv::cvtColor(mat, mat, cv::COLOR_BGRA2BGR);
  if (mat.channels() == 3) cv::cvtColor(mat, mat, cv::COLOR_BGR2RGB);

  Image8 img(static_cast<std::size_t>(mat.rows), static_cast<std::size_t>(mat.cols),
             static_cast<std::size_t>(mat.channels()));
  if (img.channels != 1 && img.channels != 3)
    throw IoError("unsupported channel count in " + path.string());
  for (std::size_t y = 0; y < img.height; ++y) {
    const std::uint8_t* row = mat.ptr<std::uint8_t>(static_cast<int>(y));
    std::copy(row, row + img.width * img.channels,
              img.pixels.begin() + static_cast<std::ptrdiff_t>(y * img.width * img.channels));
  }
  return img;
}

inline void save_image(const std::filesystem::path& path, const Image8& img) {
  cv::Mat mat(static_cast<int>(img.height), static_cast<int>(img.width),
              img.channels == 1 ? CV_8UC1 : CV_8UC3);
  for (std::size_t y = 0; y < img.height; ++y) {
    std::uint8_t* row = mat.ptr<std::uint8_t>(static_cast<int>(y));
    std::copy(img.pixels.begin() + static_cast<std::ptrdiff_t>(y * img.width * img.channels),
              img.pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * img.width * img.channels),
              row);
  }
  if (img.channels == 3) cv::cvtColor(mat, mat, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), mat))
    throw IoError("cannot write image file: " + path.string());
}

inline Image8 resize_image(const Image8& img, std::size_t height, std::size_t width) {
  if (img.height == height && img.width == width) return img;
  cv::Mat mat(static_cast<int>(img.height), static_cast<int>(img.width),
              img.channels == 1 ? CV_8UC1 : CV_8UC3,
              const_cast<std::uint8_t*>(img.pixels.data()));
  cv::Mat out;
  cv::resize(mat, out, cv::Size(static_cast<int>(width), static_cast<int>(height)), 0, 0,
             cv::INTER_LINEAR);
  Image8 res(height, width, img.channels);
  for (std::size_t y = 0; y < height; ++y) {
    const std::uint8_t* row = out.ptr<std::uint8_t>(static_cast<int>(y));
    std::copy(row, row + width * img.channels,
              res.pixels.begin() + static_cast<std::ptrdiff_t>(y * width * img.channels));
  }
  return res;
}

/// Maps an 8-bit value onto the symmetric model range: 2*v/255 - 1.
template <typename T>
T normalize_u8(std::uint8_t v) {
  return static_cast<T>(2.0 * static_cast<double>(v) / 255.0 - 1.0);
}

/// Inverse of normalize_u8 with round-half-away-from-zero, clamped to 8 bits.
template <typename T>
std::uint8_t denormalize_u8(T v) {
  const double x = (static_cast<double>(v) + 1.0) / 2.0 * 255.0;
  const double r = std::round(x);  // rounds halves away from zero
  return static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, r)));
}

/// (C,H,W) tensor in [-1,1] from an 8-bit image, adapting channel count:
/// grayscale is replicated to 3 channels, color reduced to 1 via integer
/// BT.601 luma.
template <typename T>
Tensor<T> image_to_tensor(const Image8& img, std::size_t channels) {
  Tensor<T> t({channels, img.height, img.width});
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) {
      if (channels == img.channels) {
        for (std::size_t c = 0; c < channels; ++c)
          t.at(c, y, x) = normalize_u8<T>(img.at(y, x, c));
      } else if (img.channels == 1) {
        for (std::size_t c = 0; c < channels; ++c)
          t.at(c, y, x) = normalize_u8<T>(img.at(y, x, 0));
      } else if (channels == 1) {
        const unsigned luma = (299u * img.at(y, x, 0) + 587u * img.at(y, x, 1) +
                               114u * img.at(y, x, 2) + 500u) /
                              1000u;
        t.at(0, y, x) = normalize_u8<T>(static_cast<std::uint8_t>(luma));
      } else {
        throw ShapeError("image_to_tensor: unsupported channel conversion");
      }
    }
  return t;
}

template <typename T>
Image8 tensor_to_image(const Tensor<T>& t) {
  if (t.rank() != 3) throw ShapeError("tensor_to_image: expects (C,H,W)");
  const std::size_t c = t.dim(0), h = t.dim(1), w = t.dim(2);
  if (c != 1 && c != 3) throw ShapeError("tensor_to_image: 1 or 3 channels only");
  Image8 img(h, w, c);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) img.at(y, x, ch) = denormalize_u8(t.at(ch, y, x));
  return img;
}

}  // namespace gcgan
