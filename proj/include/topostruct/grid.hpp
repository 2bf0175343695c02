#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "topostruct/error.hpp"

namespace topostruct {

/// Dense row-major 2D raster. Width and height are in pixels.
template <class T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), data_(width * height, fill) {}
  Grid(std::size_t width, std::size_t height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width_ * height_)
      throw Error(Errc::DimensionMismatch, "grid payload does not match width*height");
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
  const T& at(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  const std::vector<T>& vector() const noexcept { return data_; }

  bool same_shape(const Grid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }
  template <class U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
  }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

/// Likelihood map; values are expected in [0, 1].
using ScalarField2D = Grid<double>;
/// Binary raster; every entry is 0 or 1.
using BinaryMask2D = Grid<std::uint8_t>;

template <class A, class B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(Errc::DimensionMismatch, what);
}

inline std::size_t count_ones(const BinaryMask2D& m) {
  std::size_t n = 0;
  for (auto v : m.values()) n += v != 0;
  return n;
}

}  // namespace topostruct
