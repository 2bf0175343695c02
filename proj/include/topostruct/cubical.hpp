#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "topostruct/error.hpp"
#include "topostruct/grid.hpp"

namespace topostruct {

/// A cell of the cubical complex of a w x h image, addressed in the doubled
/// grid [0, 2w-2] x [0, 2h-2]. Even/even is a vertex (pixel), one odd
/// coordinate an edge, odd/odd a square.
struct Cell {
  std::int32_t x = 0;
  std::int32_t y = 0;

  int dim() const noexcept { return (x & 1) + (y & 1); }
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Fixed-capacity list used for incidence queries.
template <std::size_t N>
class SmallList {
 public:
  void push_back(const Cell& c) { items_[size_++] = c; }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  const Cell& operator[](std::size_t i) const { return items_[i]; }
  const Cell* begin() const noexcept { return items_.data(); }
  const Cell* end() const noexcept { return items_.data() + size_; }
  std::vector<Cell> to_vector() const { return {begin(), end()}; }

 private:
  std::array<Cell, N> items_{};
  std::size_t size_ = 0;
};

/// Incidence structure of the doubled grid, independent of any values.
class CellGrid {
 public:
  CellGrid() = default;
  CellGrid(std::size_t width, std::size_t height) : width_(width), height_(height) {
    if (width_ == 0 || height_ == 0) throw Error(Errc::EmptyField, "field has no pixels");
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::int32_t grid_width() const noexcept { return static_cast<std::int32_t>(2 * width_ - 1); }
  std::int32_t grid_height() const noexcept { return static_cast<std::int32_t>(2 * height_ - 1); }

  std::size_t cell_count() const noexcept { return static_cast<std::size_t>(grid_width()) * grid_height(); }
  std::size_t vertex_count() const noexcept { return width_ * height_; }
  std::size_t edge_count() const noexcept { return width_ * (height_ - 1) + height_ * (width_ - 1); }
  std::size_t square_count() const noexcept { return (width_ - 1) * (height_ - 1); }

  bool contains(const Cell& c) const noexcept {
    return c.x >= 0 && c.y >= 0 && c.x < grid_width() && c.y < grid_height();
  }
  std::size_t index(const Cell& c) const noexcept { return static_cast<std::size_t>(c.y) * grid_width() + c.x; }
  Cell cell_at(std::size_t index) const noexcept {
    return {static_cast<std::int32_t>(index % grid_width()), static_cast<std::int32_t>(index / grid_width())};
  }
  Cell vertex_cell(std::uint32_t pixel) const noexcept {
    return {static_cast<std::int32_t>(2 * (pixel % width_)), static_cast<std::int32_t>(2 * (pixel / width_))};
  }
  std::uint32_t pixel_of(const Cell& vertex) const noexcept {
    return static_cast<std::uint32_t>((vertex.y / 2) * width_ + vertex.x / 2);
  }
  /// Compact index of a square in [0, (w-1)(h-1)).
  std::size_t square_index(const Cell& square) const noexcept {
    return static_cast<std::size_t>((square.y - 1) / 2) * (width_ - 1) + (square.x - 1) / 2;
  }

  /// Vertices in the closure of `c` (1, 2 or 4).
  SmallList<4> vertices(const Cell& c) const noexcept {
    SmallList<4> out;
    const std::int32_t x0 = c.x & ~1, y0 = c.y & ~1;
    const bool ox = c.x & 1, oy = c.y & 1;
    out.push_back({x0, y0});
    if (ox) out.push_back({x0 + 2, y0});
    if (oy) out.push_back({x0, y0 + 2});
    if (ox && oy) out.push_back({x0 + 2, y0 + 2});
    return out;
  }

  /// Codimension-1 faces.
  SmallList<4> faces(const Cell& c) const {
    check(c);
    SmallList<4> out;
    if (c.x & 1) {
      out.push_back({c.x - 1, c.y});
      out.push_back({c.x + 1, c.y});
    }
    if (c.y & 1) {
      out.push_back({c.x, c.y - 1});
      out.push_back({c.x, c.y + 1});
    }
    return out;
  }

  /// Codimension-1 cofaces, truncated at the image boundary.
  SmallList<4> cofaces(const Cell& c) const {
    check(c);
    SmallList<4> out;
    if (!(c.x & 1)) {
      if (c.x - 1 >= 0) out.push_back({c.x - 1, c.y});
      if (c.x + 1 < grid_width()) out.push_back({c.x + 1, c.y});
    }
    if (!(c.y & 1)) {
      if (c.y - 1 >= 0) out.push_back({c.x, c.y - 1});
      if (c.y + 1 < grid_height()) out.push_back({c.x, c.y + 1});
    }
    return out;
  }

  void check(const Cell& c) const {
    if (!contains(c))
      throw Error(Errc::OutOfBounds, "cell (" + std::to_string(c.x) + "," + std::to_string(c.y) + ") outside complex");
  }

  friend bool operator==(const CellGrid&, const CellGrid&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
};

/// Lexicographic key of a cell under the lower-star order: the ranks of its
/// vertices sorted descending. Faces always compare below their cofaces.
struct CellKey {
  std::array<std::uint32_t, 4> ranks{};
  std::uint8_t count = 0;

  friend bool operator<(const CellKey& a, const CellKey& b) {
    const auto n = std::min(a.count, b.count);
    for (std::uint8_t i = 0; i < n; ++i)
      if (a.ranks[i] != b.ranks[i]) return a.ranks[i] < b.ranks[i];
    return a.count < b.count;
  }
  friend bool operator==(const CellKey& a, const CellKey& b) {
    return a.count == b.count && std::equal(a.ranks.begin(), a.ranks.begin() + a.count, b.ranks.begin());
  }
};

/// Implicit 2D cubical complex over a scalar image. Cells are never stored;
/// only the vertex values and their strict total order (value, then
/// row-major index) are kept.
class CubicalComplex {
 public:
  CubicalComplex(std::size_t width, std::size_t height, std::vector<double> values)
      : grid_(width, height), values_(std::move(values)) {
    if (values_.size() != width * height) throw Error(Errc::DimensionMismatch, "values do not match width*height");
    order_.resize(values_.size());
    std::iota(order_.begin(), order_.end(), std::uint32_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [this](std::uint32_t a, std::uint32_t b) { return values_[a] < values_[b]; });
    rank_.resize(values_.size());
    for (std::uint32_t r = 0; r < order_.size(); ++r) rank_[order_[r]] = r;
  }

  const CellGrid& grid() const noexcept { return grid_; }
  std::size_t width() const noexcept { return grid_.width(); }
  std::size_t height() const noexcept { return grid_.height(); }
  std::size_t cell_count() const noexcept { return grid_.cell_count(); }
  std::size_t vertex_count() const noexcept { return grid_.vertex_count(); }
  std::size_t edge_count() const noexcept { return grid_.edge_count(); }
  std::size_t square_count() const noexcept { return grid_.square_count(); }
  bool contains(const Cell& c) const noexcept { return grid_.contains(c); }
  SmallList<4> faces(const Cell& c) const { return grid_.faces(c); }
  SmallList<4> cofaces(const Cell& c) const { return grid_.cofaces(c); }

  std::span<const double> vertex_values() const noexcept { return values_; }
  double pixel_value(std::uint32_t pixel) const { return values_[pixel]; }
  std::uint32_t rank(std::uint32_t pixel) const { return rank_[pixel]; }
  /// Pixels in ascending total order.
  std::span<const std::uint32_t> order() const noexcept { return order_; }

  /// Pixel of the maximal vertex of the closure under the total order.
  std::uint32_t max_vertex(const Cell& c) const noexcept {
    std::uint32_t best = grid_.pixel_of({c.x & ~1, c.y & ~1});
    for (const auto& v : grid_.vertices(c)) {
      const auto p = grid_.pixel_of(v);
      if (rank_[p] > rank_[best]) best = p;
    }
    return best;
  }

  /// Lower-star convention: a cell takes the value of its maximal vertex.
  double value(const Cell& c) const noexcept { return values_[max_vertex(c)]; }

  CellKey key(const Cell& c) const noexcept {
    CellKey k;
    for (const auto& v : grid_.vertices(c)) k.ranks[k.count++] = rank_[grid_.pixel_of(v)];
    std::sort(k.ranks.begin(), k.ranks.begin() + k.count, std::greater<>());
    return k;
  }

  /// Cells whose maximal vertex is `vertex`: the vertex itself, then edges,
  /// then squares.
  SmallList<9> lower_star(const Cell& vertex) const {
    grid_.check(vertex);
    if (vertex.dim() != 0) throw Error(Errc::OutOfBounds, "lower_star expects a vertex cell");
    const auto p = grid_.pixel_of(vertex);
    SmallList<9> out;
    out.push_back(vertex);
    for (const auto& e : grid_.cofaces(vertex))
      if (max_vertex(e) == p) out.push_back(e);
    for (std::int32_t dy = -1; dy <= 1; dy += 2)
      for (std::int32_t dx = -1; dx <= 1; dx += 2) {
        const Cell s{vertex.x + dx, vertex.y + dy};
        if (grid_.contains(s) && max_vertex(s) == p) out.push_back(s);
      }
    return out;
  }

 private:
  CellGrid grid_;
  std::vector<double> values_;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> rank_;
};

inline CubicalComplex build_complex(const ScalarField2D& field) {
  if (field.empty()) throw Error(Errc::EmptyField, "field has no pixels");
  return CubicalComplex(field.width(), field.height(), field.vector());
}

}  // namespace topostruct
