#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "topostruct/cubical.hpp"

namespace topostruct {

/// Persistence of a branch that is never cancelled.
inline constexpr double kInfinitePersistence = std::numeric_limits<double>::infinity();

enum class BranchKind : std::uint8_t {
  Merge,     // saddle joining two peaks; cancelled against a peak
  Loop,      // saddle closing a cycle; cancelled against an enclosed basin
  Membrane,  // watershed pseudo-branch
};

inline const char* to_string(BranchKind k) {
  switch (k) {
    case BranchKind::Merge: return "merge";
    case BranchKind::Loop: return "loop";
    case BranchKind::Membrane: return "membrane";
  }
  return "?";
}

/// One atom of the structure space: the ridge through a saddle (or, for
/// watershed families, one connected piece of membrane).
struct MorseBranch {
  int id = -1;
  BranchKind kind = BranchKind::Merge;
  std::optional<Cell> saddle;
  /// Each arm starts at the saddle and alternates edge / vertex cells until
  /// a critical vertex.
  std::array<std::vector<Cell>, 2> arms;
  /// Critical vertices (peaks of the likelihood) reached by the arms.
  std::vector<Cell> endpoints;
  double persistence = kInfinitePersistence;
  /// Rendered pixels, sorted and unique.
  std::vector<std::uint32_t> pixels;

  bool finite() const noexcept { return persistence < kInfinitePersistence; }
};

/// Vertex -> its pixel, edge -> both endpoints, square -> four corners.
inline void render_cells(const CellGrid& grid, std::span<const Cell> cells, std::vector<std::uint32_t>& out) {
  for (const auto& c : cells)
    for (const auto& v : grid.vertices(c)) out.push_back(grid.pixel_of(v));
}

inline void sort_unique(std::vector<std::uint32_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace topostruct
