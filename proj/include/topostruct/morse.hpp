#pragma once

// Discrete Morse theory on the cubical complex of a likelihood map.
//
// The gradient is built by per-vertex lower-star processing. Ridges of the
// likelihood f are recovered as descending manifolds of saddles of g = -f:
// each saddle edge flows through (vertex, edge) pairs to two critical
// vertices, which are the peaks of f. Persistence comes from Morse
// cancellation on a working copy of the gradient:
//   * merge saddles cancel against the younger of their two peaks through
//     the unique (vertex, edge) V-path;
//   * the remaining loop saddles cancel against critical squares through
//     the unique (edge, square) V-path, with the region outside the image
//     acting as a root that is never cancelled.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "topostruct/branch.hpp"
#include "topostruct/cubical.hpp"
#include "topostruct/family.hpp"
#include "topostruct/grid.hpp"
#include "topostruct/union_find.hpp"

namespace topostruct {

enum class CriticalKind { Minimum, Saddle, Maximum };

inline CriticalKind classify(const Cell& c) {
  switch (c.dim()) {
    case 0: return CriticalKind::Minimum;
    case 1: return CriticalKind::Saddle;
    default: return CriticalKind::Maximum;
  }
}

/// Partial matching of incident cells (vertex-edge, edge-square). Unmatched
/// cells are critical.
class DiscreteGradientField {
 public:
  explicit DiscreteGradientField(const CellGrid& grid) : grid_(grid), partner_(grid.cell_count(), -1) {}

  const CellGrid& grid() const noexcept { return grid_; }

  std::optional<Cell> partner(const Cell& c) const {
    const auto p = partner_[grid_.index(c)];
    if (p < 0) return std::nullopt;
    return grid_.cell_at(static_cast<std::size_t>(p));
  }
  bool is_critical(const Cell& c) const { return partner_[grid_.index(c)] < 0; }

  /// Matches a face with one of its cofaces, replacing any previous partner.
  void pair(const Cell& face, const Cell& coface) {
    partner_[grid_.index(face)] = static_cast<std::int64_t>(grid_.index(coface));
    partner_[grid_.index(coface)] = static_cast<std::int64_t>(grid_.index(face));
  }

  /// Cell the face is matched upward with, if `face` is the lower cell of its pair.
  std::optional<Cell> head(const Cell& face) const {
    auto p = partner(face);
    if (p && p->dim() == face.dim() + 1) return p;
    return std::nullopt;
  }
  /// Cell the coface is matched downward with, if `coface` is the upper cell of its pair.
  std::optional<Cell> tail(const Cell& coface) const {
    auto p = partner(coface);
    if (p && p->dim() + 1 == coface.dim()) return p;
    return std::nullopt;
  }

  friend bool operator==(const DiscreteGradientField&, const DiscreteGradientField&) = default;

 private:
  CellGrid grid_;
  std::vector<std::int64_t> partner_;
};

/// Lower-star gradient: inside each vertex's lower star, pair the vertex
/// with its steepest edge, then greedily pair cells having exactly one
/// unpaired face, taking the least cell first; leftovers are critical.
inline DiscreteGradientField build_gradient(const CubicalComplex& complex) {
  const auto& grid = complex.grid();
  DiscreteGradientField field(grid);
  std::vector<std::uint8_t> done(grid.cell_count(), 0);

  struct Item {
    CellKey key;
    Cell cell;
  };
  auto pop_min = [](std::vector<Item>& q) {
    auto it = std::min_element(q.begin(), q.end(), [](const Item& a, const Item& b) { return a.key < b.key; });
    Item out = *it;
    q.erase(it);
    return out;
  };

  for (std::uint32_t p = 0; p < grid.vertex_count(); ++p) {
    const Cell x = grid.vertex_cell(p);
    const auto star = complex.lower_star(x);
    if (star.size() == 1) {
      done[grid.index(x)] = 1;
      continue;
    }
    auto in_star = [&](const Cell& c) { return complex.max_vertex(c) == p; };
    auto unpaired_faces = [&](const Cell& c, Cell* last) {
      int n = 0;
      for (const auto& f : grid.faces(c))
        if (in_star(f) && !done[grid.index(f)]) {
          ++n;
          if (last) *last = f;
        }
      return n;
    };

    std::vector<Item> zero, one;
    std::optional<Item> steepest;
    for (const auto& c : star) {
      if (c.dim() != 1) continue;
      Item it{complex.key(c), c};
      if (!steepest || it.key < steepest->key) {
        if (steepest) zero.push_back(*steepest);
        steepest = it;
      } else {
        zero.push_back(it);
      }
    }
    field.pair(x, steepest->cell);
    done[grid.index(x)] = done[grid.index(steepest->cell)] = 1;

    auto push_ready_cofaces = [&](const Cell& c) {
      for (const auto& s : grid.cofaces(c))
        if (in_star(s) && !done[grid.index(s)] && unpaired_faces(s, nullptr) == 1) one.push_back({complex.key(s), s});
    };
    push_ready_cofaces(steepest->cell);

    while (!one.empty() || !zero.empty()) {
      while (!one.empty()) {
        const Item alpha = pop_min(one);
        if (done[grid.index(alpha.cell)]) continue;
        Cell beta{};
        if (unpaired_faces(alpha.cell, &beta) == 0) {
          zero.push_back(alpha);
          continue;
        }
        field.pair(beta, alpha.cell);
        done[grid.index(beta)] = done[grid.index(alpha.cell)] = 1;
        push_ready_cofaces(alpha.cell);
        push_ready_cofaces(beta);
      }
      if (!zero.empty()) {
        const Item gamma = pop_min(zero);
        if (done[grid.index(gamma.cell)]) continue;
        done[grid.index(gamma.cell)] = 1;  // critical
        push_ready_cofaces(gamma.cell);
      }
    }
  }
  return field;
}

struct CriticalCell {
  Cell cell;
  CriticalKind kind;
};

/// Unpaired cells in doubled-grid row-major order.
inline std::vector<CriticalCell> critical_cells(const DiscreteGradientField& field) {
  std::vector<CriticalCell> out;
  const auto& grid = field.grid();
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const Cell c = grid.cell_at(i);
    if (field.is_critical(c)) out.push_back({c, classify(c)});
  }
  return out;
}

namespace detail {

inline Cell other_face(const CellGrid& grid, const Cell& edge, const Cell& face) {
  const auto f = grid.faces(edge);
  return f[0] == face ? f[1] : f[0];
}

inline std::optional<Cell> other_coface(const CellGrid& grid, const Cell& edge, const Cell& coface) {
  for (const auto& s : grid.cofaces(edge))
    if (s != coface) return s;
  return std::nullopt;
}

inline void require_saddle(const DiscreteGradientField& field, const Cell& saddle) {
  field.grid().check(saddle);
  if (saddle.dim() != 1 || !field.is_critical(saddle)) throw Error(Errc::NotASaddle, "cell is not a critical edge");
}

}  // namespace detail

/// Descending manifold of a saddle: from each endpoint of the saddle edge,
/// follow vertex -> matched edge -> other vertex until a critical vertex.
/// Both arms start with the saddle itself.
inline MorseBranch trace_manifold(const DiscreteGradientField& field, const Cell& saddle) {
  detail::require_saddle(field, saddle);
  const auto& grid = field.grid();
  MorseBranch b;
  b.kind = BranchKind::Merge;
  b.saddle = saddle;
  b.persistence = kInfinitePersistence;
  const auto ends = grid.faces(saddle);
  for (std::size_t side = 0; side < 2; ++side) {
    auto& arm = b.arms[side];
    arm.push_back(saddle);
    Cell v = ends[side];
    arm.push_back(v);
    while (auto e = field.head(v)) {
      v = detail::other_face(grid, *e, v);
      arm.push_back(*e);
      arm.push_back(v);
    }
    b.endpoints.push_back(v);
  }
  render_cells(grid, b.arms[0], b.pixels);
  render_cells(grid, b.arms[1], b.pixels);
  sort_unique(b.pixels);
  return b;
}

/// Ascending counterpart: from each coface square of the saddle follow
/// square -> matched edge -> other square until a critical square or the
/// image boundary. A saddle on the boundary yields a single arm.
struct AscendingManifold {
  std::vector<std::vector<Cell>> arms;  // each starts with the saddle
  std::vector<std::optional<Cell>> ends;  // critical square, or nullopt when leaving the image
};

inline AscendingManifold trace_ascending(const DiscreteGradientField& field, const Cell& saddle) {
  detail::require_saddle(field, saddle);
  const auto& grid = field.grid();
  AscendingManifold m;
  for (const auto& start : grid.cofaces(saddle)) {
    std::vector<Cell> arm{saddle, start};
    std::optional<Cell> s = start;
    while (s) {
      auto e = field.tail(*s);
      if (!e) break;  // critical square
      arm.push_back(*e);
      s = detail::other_coface(grid, *e, *s);
      if (s) arm.push_back(*s);
    }
    m.ends.push_back(s);
    m.arms.push_back(std::move(arm));
  }
  return m;
}

/// Outcome of cancelling one saddle.
struct Cancellation {
  Cell saddle;
  std::optional<Cell> partner;  // peak vertex or basin square; nullopt when never cancelled
  BranchKind kind = BranchKind::Merge;
  double persistence = kInfinitePersistence;
};

/// Cancels critical pairs in order of increasing value difference, checking
/// V-path uniqueness at pop time, and returns one record per saddle sorted
/// by persistence. `field` is updated in place to the fully cancelled
/// gradient.
inline std::vector<Cancellation> cancel_pairs(DiscreteGradientField& field, const CubicalComplex& complex) {
  const auto& grid = field.grid();
  const auto n_pix = static_cast<std::uint32_t>(grid.vertex_count());

  std::vector<Cell> saddles;
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const Cell c = grid.cell_at(i);
    if (c.dim() == 1 && field.is_critical(c)) saddles.push_back(c);
  }

  // Terminal critical vertex of every vertex's descending path.
  std::vector<std::uint32_t> down_end(n_pix, UINT32_MAX);
  std::vector<std::uint32_t> trail;
  for (std::uint32_t p = 0; p < n_pix; ++p) {
    std::uint32_t q = p;
    while (down_end[q] == UINT32_MAX) {
      const Cell v = grid.vertex_cell(q);
      auto e = field.head(v);
      if (!e) {
        down_end[q] = q;
        break;
      }
      trail.push_back(q);
      q = grid.pixel_of(detail::other_face(grid, *e, v));
    }
    for (auto t : trail) down_end[t] = down_end[q];
    trail.clear();
  }

  std::vector<Cancellation> out;
  UnionFind peaks(n_pix);
  auto peak_of = [&](const Cell& v) { return peaks.find(down_end[grid.pixel_of(v)]); };

  struct Entry {
    double key;
    CellKey order;
    Cell saddle;
  };
  auto later = [](const Entry& a, const Entry& b) {
    if (a.key != b.key) return a.key > b.key;
    return b.order < a.order;
  };

  // Younger peak = later in the total order. Returns nullopt for a loop.
  auto merge_key = [&](const Cell& e, std::uint32_t& younger, std::uint32_t& older) -> std::optional<double> {
    const auto f = grid.faces(e);
    const auto a = peak_of(f[0]), b = peak_of(f[1]);
    if (a == b) return std::nullopt;
    younger = complex.rank(a) > complex.rank(b) ? a : b;
    older = younger == a ? b : a;
    return complex.value(e) - complex.pixel_value(younger);
  };

  std::priority_queue<Entry, std::vector<Entry>, decltype(later)> merges(later);
  std::vector<Cell> loops;
  for (const auto& e : saddles) {
    std::uint32_t y = 0, o = 0;
    if (auto k = merge_key(e, y, o)) merges.push({*k, complex.key(e), e});
    else loops.push_back(e);
  }

  while (!merges.empty()) {
    const Entry top = merges.top();
    merges.pop();
    std::uint32_t younger = 0, older = 0;
    const auto k = merge_key(top.saddle, younger, older);
    if (!k) {
      loops.push_back(top.saddle);
      continue;
    }
    if (*k > top.key) {
      merges.push({*k, top.order, top.saddle});
      continue;
    }
    // Reverse the unique V-path saddle -> younger peak.
    const auto f = grid.faces(top.saddle);
    Cell v = peak_of(f[0]) == younger ? f[0] : f[1];
    Cell prev = top.saddle;
    for (;;) {
      auto next = field.head(v);
      field.pair(v, prev);
      if (!next) break;
      prev = *next;
      v = detail::other_face(grid, *next, v);
    }
    peaks.attach(younger, older);
    out.push_back({top.saddle, grid.vertex_cell(younger), BranchKind::Merge, *k});
  }

  // Loop saddles against critical squares. Square nodes are compact square
  // indices; `outside` stands for everything beyond the image boundary.
  const auto n_sq = grid.square_count();
  const auto outside = static_cast<std::uint32_t>(n_sq);
  std::vector<std::uint32_t> up_end(n_sq, UINT32_MAX);
  auto square_at = [&](std::size_t idx) {
    const auto w1 = grid.width() - 1;
    return Cell{static_cast<std::int32_t>(2 * (idx % w1) + 1), static_cast<std::int32_t>(2 * (idx / w1) + 1)};
  };
  std::vector<std::uint32_t> sq_trail;
  for (std::uint32_t i = 0; i < n_sq; ++i) {
    if (up_end[i] != UINT32_MAX) continue;
    std::uint32_t q = i;
    std::uint32_t end = outside;
    for (;;) {
      if (up_end[q] != UINT32_MAX) {
        end = up_end[q];
        break;
      }
      const Cell s = square_at(q);
      auto e = field.tail(s);
      if (!e) {
        end = up_end[q] = q;
        break;
      }
      sq_trail.push_back(q);
      auto nxt = detail::other_coface(grid, *e, s);
      if (!nxt) break;
      q = static_cast<std::uint32_t>(grid.square_index(*nxt));
    }
    for (auto t : sq_trail) up_end[t] = end;
    sq_trail.clear();
  }

  UnionFind basins(n_sq + 1);
  auto basin_of = [&](const std::optional<Cell>& s) -> std::uint32_t {
    if (!s) return outside;
    return basins.find(up_end[grid.square_index(*s)]);
  };
  auto square_younger = [&](std::uint32_t a, std::uint32_t b) {
    // younger = lower in the order; outside is the oldest of all
    if (a == outside) return b;
    if (b == outside) return a;
    return complex.key(square_at(a)) < complex.key(square_at(b)) ? a : b;
  };
  auto loop_key = [&](const Cell& e, std::uint32_t& younger, std::uint32_t& older,
                      std::optional<Cell>& via) -> std::optional<double> {
    const auto cof = grid.cofaces(e);
    std::array<std::optional<Cell>, 2> side{cof.size() > 0 ? std::optional<Cell>(cof[0]) : std::nullopt,
                                            cof.size() > 1 ? std::optional<Cell>(cof[1]) : std::nullopt};
    const auto a = basin_of(side[0]), b = basin_of(side[1]);
    if (a == b) return std::nullopt;
    younger = square_younger(a, b);
    older = younger == a ? b : a;
    via = younger == a ? side[0] : side[1];
    return complex.value(square_at(younger)) - complex.value(e);
  };

  std::priority_queue<Entry, std::vector<Entry>, decltype(later)> fills(later);
  std::vector<Cell> unpaired;
  for (const auto& e : loops) {
    std::uint32_t y = 0, o = 0;
    std::optional<Cell> via;
    if (auto k = loop_key(e, y, o, via)) fills.push({*k, complex.key(e), e});
    else unpaired.push_back(e);
  }
  while (!fills.empty()) {
    const Entry top = fills.top();
    fills.pop();
    std::uint32_t younger = 0, older = 0;
    std::optional<Cell> via;
    const auto k = loop_key(top.saddle, younger, older, via);
    if (!k) {
      unpaired.push_back(top.saddle);
      continue;
    }
    if (*k > top.key) {
      fills.push({*k, top.order, top.saddle});
      continue;
    }
    // Reverse the unique V-path basin square -> saddle, walking from the saddle.
    Cell s = *via;
    Cell prev = top.saddle;
    for (;;) {
      auto e = field.tail(s);
      field.pair(prev, s);
      if (!e) break;
      prev = *e;
      s = *detail::other_coface(grid, *e, s);
    }
    basins.attach(younger, older);
    out.push_back({top.saddle, square_at(younger), BranchKind::Loop, *k});
  }

  for (const auto& e : unpaired) out.push_back({e, std::nullopt, BranchKind::Loop, kInfinitePersistence});
  std::stable_sort(out.begin(), out.end(),
                   [](const Cancellation& a, const Cancellation& b) { return a.persistence < b.persistence; });
  return out;
}

/// Traces every saddle's branch in `field` and attaches its persistence.
inline std::vector<MorseBranch> compute_branch_persistence(const DiscreteGradientField& field,
                                                           const CubicalComplex& complex) {
  DiscreteGradientField work = field;
  const auto records = cancel_pairs(work, complex);
  std::vector<MorseBranch> branches;
  branches.reserve(records.size());
  for (const auto& r : records) {
    auto b = trace_manifold(field, r.saddle);
    b.kind = r.kind;
    b.persistence = r.persistence;
    branches.push_back(std::move(b));
  }
  return branches;
}

/// The complete Morse complex of a likelihood map: every saddle branch of
/// the negated field, with persistences on the original value scale.
inline SkeletonFamily extract_morse_complex(const ScalarField2D& field) {
  if (field.empty()) throw Error(Errc::EmptyField, "field has no pixels");
  std::vector<double> negated(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) negated[i] = -field[i];
  const CubicalComplex complex(field.width(), field.height(), std::move(negated));
  const auto gradient = build_gradient(complex);
  return SkeletonFamily(field.width(), field.height(), compute_branch_persistence(gradient, complex));
}

}  // namespace topostruct
