#pragma once

#include <cstddef>
#include <vector>

#include "gcgan/rng.hpp"
#include "gcgan/tensor.hpp"

namespace gcgan {

/// Fixed-capacity history of generated images. Until full, every query
/// stores its input and returns it; afterwards, with probability 0.5 a
/// uniformly chosen stored image is returned and replaced by the input,
/// otherwise the input passes through. Capacity 0 always passes through.
template <typename T>
class ImageBuffer {
 public:
  explicit ImageBuffer(std::size_t capacity, RandomStream rng = RandomStream(0))
      : capacity_(capacity), rng_(rng) {}

  Tensor<T> query(const Tensor<T>& img) {
    if (capacity_ == 0) return img;
    if (store_.size() < capacity_) {
      store_.push_back(img);
      return img;
    }
    if (rng_.bernoulli(0.5)) {
      const std::size_t idx = static_cast<std::size_t>(rng_.uniform_index(store_.size()));
      Tensor<T> out = store_[idx];
      store_[idx] = img;
      return out;
    }
    return img;
  }

  std::size_t size() const { return store_.size(); }
  std::size_t capacity() const { return capacity_; }
  void reseed(RandomStream rng) { rng_ = rng; }

  const std::vector<Tensor<T>>& contents() const { return store_; }
  void restore(std::vector<Tensor<T>> contents) { store_ = std::move(contents); }

 private:
  std::size_t capacity_;
  std::vector<Tensor<T>> store_;
  RandomStream rng_;
};

}  // namespace gcgan
