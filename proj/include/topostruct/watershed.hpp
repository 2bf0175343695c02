#pragma once

// Persistence-filtered watershed on the 4-connected pixel graph. Basins
// grow in ascending value order; a merge whose younger basin is at least
// theta deep is refused and the joining edge becomes part of the membrane.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "topostruct/branch.hpp"
#include "topostruct/components.hpp"
#include "topostruct/cubical.hpp"
#include "topostruct/diagram.hpp"
#include "topostruct/error.hpp"
#include "topostruct/family.hpp"
#include "topostruct/grid.hpp"
#include "topostruct/union_find.hpp"

namespace topostruct {

enum class EdgeTag : std::uint8_t { Tree, Loop, Watershed };

inline const char* to_string(EdgeTag t) {
  switch (t) {
    case EdgeTag::Tree: return "tree";
    case EdgeTag::Loop: return "loop";
    case EdgeTag::Watershed: return "watershed";
  }
  return "?";
}

struct TaggedEdge {
  std::uint32_t lower = 0;  // pixel seen first
  std::uint32_t upper = 0;  // pixel being processed
  EdgeTag tag = EdgeTag::Tree;
};

struct WatershedResult {
  BinaryMask2D membrane;
  PersistenceDiagram diagram;
  std::vector<TaggedEdge> edges;  // processing order
};

/// Runs the filtered watershed over a prepared complex, reusing its vertex
/// order. A vertex with lower neighbours first joins the basin of the
/// lowest one; its other lower edges are then resolved in ascending order.
inline WatershedResult ph_watershed(const CubicalComplex& complex, double theta) {
  if (!(theta >= 0.0)) throw Error(Errc::InvalidParams, "theta must be non-negative");
  const auto w = complex.width(), h = complex.height();
  WatershedResult out{BinaryMask2D(w, h, 0), {}, {}};
  UnionFind basins(complex.vertex_count());

  std::array<std::uint32_t, 4> lower{};
  for (const auto p : complex.order()) {
    const auto x = p % w, y = p / w;
    std::size_t n = 0;
    auto consider = [&](std::uint32_t q) {
      if (complex.rank(q) < complex.rank(p)) lower[n++] = q;
    };
    if (x > 0) consider(p - 1);
    if (x + 1 < w) consider(p + 1);
    if (y > 0) consider(static_cast<std::uint32_t>(p - w));
    if (y + 1 < h) consider(static_cast<std::uint32_t>(p + w));
    if (n == 0) continue;  // new basin rooted at its minimum
    std::sort(lower.begin(), lower.begin() + n,
              [&](std::uint32_t a, std::uint32_t b) { return complex.rank(a) < complex.rank(b); });

    basins.attach(p, basins.find(lower[0]));
    out.edges.push_back({lower[0], p, EdgeTag::Tree});
    const double t = complex.pixel_value(p);

    for (std::size_t i = 1; i < n; ++i) {
      const auto u = lower[i];
      const auto a = basins.find(u), b = basins.find(p);
      if (a == b) {
        out.edges.push_back({u, p, EdgeTag::Loop});
        continue;
      }
      const auto younger = complex.rank(a) > complex.rank(b) ? a : b;
      const auto older = younger == a ? b : a;
      const double pers = t - complex.pixel_value(younger);
      if (pers >= theta) {
        out.edges.push_back({u, p, EdgeTag::Watershed});
        out.membrane[u] = out.membrane[p] = 1;
        continue;
      }
      basins.attach(younger, older);
      out.diagram.push_back({complex.pixel_value(younger), t});
      out.edges.push_back({u, p, EdgeTag::Tree});
    }
  }
  return out;
}

inline WatershedResult ph_watershed(const ScalarField2D& field, double theta) {
  return ph_watershed(build_complex(field), theta);
}

/// Membrane pixels labelled by the largest theta at which they still appear,
/// grouped into 8-connected pseudo-branches per level.
inline SkeletonFamily boundary_skeleton_family(const ScalarField2D& field, const std::vector<double>& thetas) {
  if (thetas.empty()) throw Error(Errc::EmptyThetaList, "at least one theta is required");
  if (!std::is_sorted(thetas.begin(), thetas.end())) throw Error(Errc::InvalidLevels, "thetas must be ascending");
  const auto complex = build_complex(field);
  const auto w = field.width(), h = field.height();

  std::vector<int> level(field.size(), -1);
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    const auto run = ph_watershed(complex, thetas[k]);
    for (std::size_t i = 0; i < field.size(); ++i)
      if (run.membrane[i]) level[i] = static_cast<int>(k);
  }

  std::vector<MorseBranch> branches;
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    BinaryMask2D at_level(w, h, 0);
    bool any = false;
    for (std::size_t i = 0; i < field.size(); ++i)
      if (level[i] == static_cast<int>(k)) at_level[i] = 1, any = true;
    if (!any) continue;
    const auto comps = label_components(at_level, Connectivity::Eight);
    std::vector<MorseBranch> group(static_cast<std::size_t>(comps.count));
    for (std::size_t i = 0; i < field.size(); ++i) {
      const auto id = comps.labels[i];
      if (id > 0) group[static_cast<std::size_t>(id - 1)].pixels.push_back(static_cast<std::uint32_t>(i));
    }
    for (auto& b : group) {
      b.kind = BranchKind::Membrane;
      b.persistence = thetas[k];
      branches.push_back(std::move(b));
    }
  }
  return SkeletonFamily(w, h, std::move(branches));
}

}  // namespace topostruct
