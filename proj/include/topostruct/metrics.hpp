#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <unordered_map>
#include <utility>
#include <vector>

#include "topostruct/components.hpp"
#include "topostruct/error.hpp"
#include "topostruct/grid.hpp"

namespace topostruct {

/// 2|A∩B| / (|A|+|B|); two empty masks score 1.
inline double dice(const BinaryMask2D& a, const BinaryMask2D& b) {
  require_same_shape(a, b, "dice: mask shapes differ");
  std::size_t both = 0, total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0, y = b[i] != 0;
    both += x && y;
    total += std::size_t{x} + std::size_t{y};
  }
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(total);
}

/// Pair counts behind the foreground-restricted Rand F-score. Pairs are
/// ordered and include self-pairs; pred background pixels are singletons.
struct RandCounts {
  std::uint64_t agree = 0;      // sum of squared joint cluster sizes
  std::uint64_t pred_pairs = 0; // sum of squared pred cluster sizes
  std::uint64_t gt_pairs = 0;   // sum of squared gt cluster sizes
};

inline RandCounts rand_counts(const BinaryMask2D& pred, const BinaryMask2D& gt) {
  require_same_shape(pred, gt, "rand_f_score: mask shapes differ");
  const auto lp = label_components(pred, Connectivity::Eight);
  const auto lg = label_components(gt, Connectivity::Eight);
  std::map<std::pair<std::int32_t, std::int32_t>, std::uint64_t> joint;
  std::unordered_map<std::int32_t, std::uint64_t> ps, gs;
  RandCounts c;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt[i]) continue;
    const auto g = lg.labels[i];
    ++gs[g];
    if (lp.labels[i] == 0) {
      ++c.agree;
      ++c.pred_pairs;
      continue;
    }
    ++ps[lp.labels[i]];
    ++joint[{lp.labels[i], g}];
  }
  if (gs.empty()) throw Error(Errc::EmptyForeground, "ground truth has no foreground");
  for (const auto& [k, n] : joint) c.agree += n * n;
  for (const auto& [k, n] : ps) c.pred_pairs += n * n;
  for (const auto& [k, n] : gs) c.gt_pairs += n * n;
  return c;
}

/// F-score of Rand precision (agree / pred_pairs) and recall (agree / gt_pairs).
inline double rand_f_score(const BinaryMask2D& pred, const BinaryMask2D& gt) {
  const auto c = rand_counts(pred, gt);
  return 2.0 * static_cast<double>(c.agree) / static_cast<double>(c.pred_pairs + c.gt_pairs);
}

/// Foreground components plus one background cluster (label 0).
inline Grid<std::int32_t> voi_clusters(const BinaryMask2D& mask) {
  return label_components(mask, Connectivity::Eight).labels;
}

/// Variation of information H(P|G) + H(G|P), in nats.
inline double voi(const BinaryMask2D& pred, const BinaryMask2D& gt) {
  require_same_shape(pred, gt, "voi: mask shapes differ");
  if (pred.empty()) return 0.0;
  const auto a = voi_clusters(pred), b = voi_clusters(gt);
  std::map<std::pair<std::int32_t, std::int32_t>, double> joint;
  std::unordered_map<std::int32_t, double> pa, pb;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    pa[a[i]] += 1.0;
    pb[b[i]] += 1.0;
  }
  const double n = static_cast<double>(pred.size());
  // summed in sorted order so that voi(a, b) == voi(b, a) exactly
  auto entropy = [n](auto const& counts) {
    std::vector<double> cs;
    for (const auto& [k, c] : counts) cs.push_back(c);
    std::sort(cs.begin(), cs.end());
    double h = 0.0;
    for (double c : cs) h -= c / n * std::log(c / n);
    return h;
  };
  const double v = 2.0 * entropy(joint) - (entropy(pa) + entropy(pb));
  return v < 0.0 ? 0.0 : v;
}

struct BettiNumbers {
  int b0 = 0;
  int b1 = 0;
  friend bool operator==(const BettiNumbers&, const BettiNumbers&) = default;
};

/// b0 from 8-connected foreground, b1 from 4-connected background holes.
inline BettiNumbers betti_numbers(const BinaryMask2D& mask) {
  const auto w = mask.width(), h = mask.height();
  BinaryMask2D padded(w + 2, h + 2, 0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) padded.at(x + 1, y + 1) = mask.at(x, y) ? 1 : 0;
  BettiNumbers out;
  out.b0 = label_components(mask, Connectivity::Eight).count;
  out.b1 = label_components(padded, Connectivity::Four, 0).count - 1;
  return out;
}

/// Euler characteristic V - E + F of the union of closed foreground pixel squares.
inline long euler_characteristic(const BinaryMask2D& mask) {
  const auto w = mask.width(), h = mask.height();
  auto fg = [&](long x, long y) {
    return x >= 0 && y >= 0 && x < static_cast<long>(w) && y < static_cast<long>(h) && mask.at(x, y) != 0;
  };
  long v = 0, e = 0, f = 0;
  for (long y = 0; y <= static_cast<long>(h); ++y)
    for (long x = 0; x <= static_cast<long>(w); ++x) {
      v += fg(x - 1, y - 1) || fg(x, y - 1) || fg(x - 1, y) || fg(x, y);
      e += fg(x, y - 1) || fg(x, y);          // horizontal edge (x,y)-(x+1,y)
      e += fg(x - 1, y) || fg(x, y);          // vertical edge (x,y)-(x,y+1)
      f += fg(x, y);
    }
  return v - e + f;
}

struct BettiError {
  double e0 = 0.0;
  double e1 = 0.0;
};

inline BinaryMask2D crop(const BinaryMask2D& m, std::size_t x0, std::size_t y0, std::size_t size) {
  BinaryMask2D out(size, size, 0);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) out.at(x, y) = m.at(x0 + x, y0 + y);
  return out;
}

/// Mean absolute Betti difference over seeded square patches.
inline BettiError betti_error(const BinaryMask2D& pred, const BinaryMask2D& gt, std::size_t patch_size = 65,
                              std::size_t patches = 100, std::uint64_t seed = 0) {
  require_same_shape(pred, gt, "betti_error: mask shapes differ");
  if (patch_size == 0 || patch_size > pred.width() || patch_size > pred.height())
    throw Error(Errc::PatchTooLarge, "patch size " + std::to_string(patch_size) + " does not fit the image");
  if (patches == 0) return {};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> px(0, pred.width() - patch_size), py(0, pred.height() - patch_size);
  BettiError err;
  for (std::size_t k = 0; k < patches; ++k) {
    const auto x = px(rng), y = py(rng);
    const auto bp = betti_numbers(crop(pred, x, y, patch_size));
    const auto bg = betti_numbers(crop(gt, x, y, patch_size));
    err.e0 += std::abs(bp.b0 - bg.b0);
    err.e1 += std::abs(bp.b1 - bg.b1);
  }
  err.e0 /= static_cast<double>(patches);
  err.e1 /= static_cast<double>(patches);
  return err;
}

struct PatchParams {
  std::size_t size = 65;
  std::size_t count = 100;
  std::uint64_t seed = 0;
};

struct MetricReport {
  double dice = 0.0;
  double ari = 0.0;
  double voi = 0.0;
  double betti0_error = 0.0;
  double betti1_error = 0.0;
  PatchParams patch;
};

inline MetricReport evaluate(const BinaryMask2D& pred, const BinaryMask2D& gt, PatchParams patch = {}) {
  MetricReport r;
  r.dice = dice(pred, gt);
  r.ari = rand_f_score(pred, gt);
  r.voi = voi(pred, gt);
  const auto be = betti_error(pred, gt, patch.size, patch.count, patch.seed);
  r.betti0_error = be.e0;
  r.betti1_error = be.e1;
  r.patch = patch;
  return r;
}

}  // namespace topostruct
