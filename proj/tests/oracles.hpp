#pragma once

// Reference implementations used only by tests. They share nothing with the
// library beyond the raster containers.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "topostruct/grid.hpp"

namespace oracle {

using topostruct::BinaryMask2D;
using topostruct::ScalarField2D;

struct Dsu {
  std::vector<std::size_t> p;
  explicit Dsu(std::size_t n) : p(n) { std::iota(p.begin(), p.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) { return p[x] == x ? x : p[x] = find(p[x]); }
};

/// Pixels sorted by value (descending when `descending`), ties by index.
inline std::vector<std::size_t> pixel_order(const ScalarField2D& f, bool descending) {
  std::vector<std::size_t> idx(f.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? f[a] > f[b] : f[a] < f[b];
  });
  return idx;
}

struct Pair {
  double birth;
  double death;
};

/// 0-dimensional persistence of the 4-connected pixel graph filtered by
/// value. Elder rule; only merges of two existing components produce pairs.
inline std::vector<Pair> zero_dim_pairs(const ScalarField2D& f, bool superlevel) {
  const auto order = pixel_order(f, superlevel);
  std::vector<std::size_t> pos(f.size());
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  const auto w = f.width(), h = f.height();
  Dsu dsu(f.size());
  std::vector<std::size_t> birth(f.size());  // root -> birth pixel
  std::vector<bool> on(f.size(), false);
  std::vector<Pair> out;
  for (const auto p : order) {
    on[p] = true;
    birth[p] = p;
    std::vector<std::size_t> roots;
    const auto x = p % w, y = p / w;
    if (x > 0 && on[p - 1]) roots.push_back(dsu.find(p - 1));
    if (x + 1 < w && on[p + 1]) roots.push_back(dsu.find(p + 1));
    if (y > 0 && on[p - w]) roots.push_back(dsu.find(p - w));
    if (y + 1 < h && on[p + w]) roots.push_back(dsu.find(p + w));
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    if (roots.empty()) continue;
    std::sort(roots.begin(), roots.end(), [&](std::size_t a, std::size_t b) { return pos[birth[a]] < pos[birth[b]]; });
    const auto eldest = roots[0];
    for (std::size_t k = 1; k < roots.size(); ++k) {
      out.push_back({f[birth[roots[k]]], f[p]});
      dsu.p[roots[k]] = eldest;
    }
    dsu.p[p] = eldest;
  }
  return out;
}

/// Superlevel persistences |birth - death| as a sorted multiset.
inline std::vector<double> superlevel_persistences(const ScalarField2D& f) {
  std::vector<double> out;
  for (const auto& pr : zero_dim_pairs(f, true)) out.push_back(pr.birth - pr.death);
  std::sort(out.begin(), out.end());
  return out;
}

struct ReducedPair {
  int dim;  // dimension of the creating cell
  double persistence;
};

/// Standard Z2 column reduction of the boundary matrix of the cubical
/// complex of `g`, with cells ordered by their vertex ranks sorted
/// descending (lexicographic). Pairs whose two cells have the same maximal
/// vertex are omitted.
inline std::vector<ReducedPair> reduce_boundary(const ScalarField2D& g) {
  const long w = static_cast<long>(g.width()), h = static_cast<long>(g.height());
  const long gw = 2 * w - 1, gh = 2 * h - 1;
  const auto order = pixel_order(g, false);
  std::vector<std::size_t> rank(g.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

  struct C {
    long x, y;
    std::vector<std::size_t> key;  // ranks descending
    std::size_t top;               // pixel with the highest rank
  };
  std::vector<C> cells;
  for (long y = 0; y < gh; ++y)
    for (long x = 0; x < gw; ++x) {
      C c{x, y, {}, 0};
      std::vector<std::size_t> px;
      for (long dy = 0; dy <= (y & 1); ++dy)
        for (long dx = 0; dx <= (x & 1); ++dx) px.push_back(static_cast<std::size_t>(((y & ~1L) / 2 + dy) * w + (x & ~1L) / 2 + dx));
      for (auto p : px) c.key.push_back(rank[p]);
      std::sort(c.key.rbegin(), c.key.rend());
      c.top = order[c.key[0]];
      cells.push_back(std::move(c));
    }
  std::sort(cells.begin(), cells.end(), [](const C& a, const C& b) { return a.key < b.key; });
  std::vector<long> where(static_cast<std::size_t>(gw * gh));
  for (std::size_t i = 0; i < cells.size(); ++i) where[static_cast<std::size_t>(cells[i].y * gw + cells[i].x)] = static_cast<long>(i);

  std::vector<std::vector<long>> col(cells.size());
  for (std::size_t j = 0; j < cells.size(); ++j) {
    const auto& c = cells[j];
    auto add = [&](long x, long y) { col[j].push_back(where[static_cast<std::size_t>(y * gw + x)]); };
    if (c.x & 1) add(c.x - 1, c.y), add(c.x + 1, c.y);
    if (c.y & 1) add(c.x, c.y - 1), add(c.x, c.y + 1);
    std::sort(col[j].begin(), col[j].end());
  }
  std::vector<long> owner(cells.size(), -1);
  std::vector<ReducedPair> out;
  for (std::size_t j = 0; j < cells.size(); ++j) {
    auto& cj = col[j];
    while (!cj.empty() && owner[static_cast<std::size_t>(cj.back())] >= 0) {
      const auto& ck = col[static_cast<std::size_t>(owner[static_cast<std::size_t>(cj.back())])];
      std::vector<long> sum;
      std::set_symmetric_difference(cj.begin(), cj.end(), ck.begin(), ck.end(), std::back_inserter(sum));
      cj.swap(sum);
    }
    if (cj.empty()) continue;
    const auto low = static_cast<std::size_t>(cj.back());
    owner[low] = static_cast<long>(j);
    const auto& a = cells[low];
    const auto& b = cells[j];
    if (a.top == b.top) continue;
    out.push_back({static_cast<int>((a.x & 1) + (a.y & 1)), g[b.top] - g[a.top]});
  }
  return out;
}

inline std::vector<double> reduced_persistences(const ScalarField2D& g, int dim) {
  std::vector<double> out;
  for (const auto& p : reduce_boundary(g))
    if (p.dim == dim) out.push_back(p.persistence);
  std::sort(out.begin(), out.end());
  return out;
}

/// 8-connected foreground labels via union-find; 0 = background.
inline std::vector<std::size_t> label8(const BinaryMask2D& m) {
  const auto w = m.width(), h = m.height();
  Dsu dsu(m.size());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const auto p = y * w + x;
      if (!m[p]) continue;
      for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx) {
          const long nx = static_cast<long>(x) + dx, ny = static_cast<long>(y) + dy;
          if (nx < 0 || ny < 0 || nx >= static_cast<long>(w) || ny >= static_cast<long>(h)) continue;
          const auto q = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
          if (m[q]) dsu.p[dsu.find(p)] = dsu.find(q);
        }
    }
  std::vector<std::size_t> out(m.size(), 0);
  for (std::size_t p = 0; p < m.size(); ++p)
    if (m[p]) out[p] = dsu.find(p) + 1;
  return out;
}

/// Rand F-score by explicit enumeration of ordered foreground pixel pairs.
inline double rand_f_bruteforce(const BinaryMask2D& pred, const BinaryMask2D& gt) {
  const auto lp = label8(pred), lg = label8(gt);
  std::vector<std::size_t> fg;
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (gt[i]) fg.push_back(i);
  std::uint64_t both = 0, same_pred = 0, same_gt = 0;
  for (auto i : fg)
    for (auto j : fg) {
      const bool sp = i == j || (lp[i] != 0 && lp[i] == lp[j]);
      const bool sg = lg[i] == lg[j];
      both += sp && sg;
      same_pred += sp;
      same_gt += sg;
    }
  return 2.0 * static_cast<double>(both) / static_cast<double>(same_pred + same_gt);
}

inline ScalarField2D random_field(std::size_t w, std::size_t h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScalarField2D f(w, h, 0.0);
  for (auto& v : f.values()) v = u(rng);
  return f;
}

inline BinaryMask2D random_mask(std::size_t w, std::size_t h, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution b(density);
  BinaryMask2D m(w, h, 0);
  for (auto& v : m.values()) v = b(rng);
  return m;
}

inline ScalarField2D negate(const ScalarField2D& f) {
  ScalarField2D g = f;
  for (auto& v : g.values()) v = -v;
  return g;
}

}  // namespace oracle
