#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "topostruct/components.hpp"
#include "topostruct/error.hpp"
#include "topostruct/family.hpp"
#include "topostruct/grid.hpp"
#include "topostruct/prob.hpp"

namespace topostruct {

inline constexpr int kDefaultSampleCount = 10;

struct StructuralSegmentation {
  BinaryMask2D mask;
  Skeleton source_skeleton;
  std::vector<std::int32_t> kept_components;  // 8-connected labels of the binary input
};

/// 1 where value >= tau.
inline BinaryMask2D binarize(const ScalarField2D& field, double tau = 0.5) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(Errc::InvalidParams, "tau must lie in [0, 1]");
  BinaryMask2D out(field.width(), field.height(), 0);
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = field[i] >= tau;
  return out;
}

/// Keeps the binary components touched by the skeleton, plus the skeleton itself.
inline StructuralSegmentation grow_segmentation(const BinaryMask2D& binary, const Skeleton& skeleton) {
  require_same_shape(binary, skeleton.pixels, "grow: binary and skeleton shapes differ");
  const auto comps = label_components(binary, Connectivity::Eight);
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(comps.count) + 1, 0);
  for (std::size_t i = 0; i < binary.size(); ++i)
    if (skeleton.pixels[i]) keep[static_cast<std::size_t>(comps.labels[i])] = 1;
  keep[0] = 0;

  StructuralSegmentation out{BinaryMask2D(binary.width(), binary.height(), 0), skeleton, {}};
  for (std::int32_t c = 1; c <= comps.count; ++c)
    if (keep[static_cast<std::size_t>(c)]) out.kept_components.push_back(c);
  for (std::size_t i = 0; i < binary.size(); ++i)
    out.mask[i] = skeleton.pixels[i] || keep[static_cast<std::size_t>(comps.labels[i])];
  return out;
}

/// Draws n thresholds and grows each skeleton over binarize(field, tau).
inline std::vector<StructuralSegmentation> sample_segmentations(const ScalarField2D& field,
                                                                const SkeletonFamily& family,
                                                                const ThresholdDistribution& dist, int n, Rng& rng,
                                                                double tau = 0.5) {
  if (n < 1) throw Error(Errc::InvalidParams, "sample count must be at least 1");
  if (family.width() != field.width() || family.height() != field.height())
    throw Error(Errc::DimensionMismatch, "family and field shapes differ");
  const auto binary = binarize(field, tau);
  const double ceiling = epsilon_ceiling(family);
  std::vector<StructuralSegmentation> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out.push_back(grow_segmentation(binary, skeleton_at(family, sample_epsilon(dist, rng, ceiling))));
  return out;
}

/// Per-pixel population variance of the sample masks.
inline ScalarField2D empirical_uncertainty(const std::vector<StructuralSegmentation>& samples) {
  if (samples.size() < 2) throw Error(Errc::TooFewSamples, "need at least 2 samples");
  const auto& first = samples.front().mask;
  ScalarField2D out(first.width(), first.height(), 0.0);
  for (const auto& s : samples) {
    require_same_shape(s.mask, first, "sample shapes differ");
    for (std::size_t i = 0; i < first.size(); ++i) out[i] += s.mask[i];
  }
  const double n = static_cast<double>(samples.size());
  for (auto& v : out.values()) {
    const double p = v / n;
    v = p * (1.0 - p);
  }
  return out;
}

struct AnalyticUncertainty {
  std::map<int, double> table;  // branch id -> uncertainty
  ScalarField2D map;
};

/// Branch uncertainty 0.5 - |Pr(b) - 0.5|, rasterized per branch; where
/// branches overlap the larger value is kept.
inline AnalyticUncertainty analytic_branch_uncertainty(const SkeletonFamily& family, const ThresholdDistribution& dist) {
  require_sigma(dist);
  AnalyticUncertainty out{{}, ScalarField2D(family.width(), family.height(), 0.0)};
  for (const auto& b : family.branches()) {
    const double u = branch_uncertainty(dist, b);
    out.table[b.id] = u;
    for (auto p : b.pixels) out.map[p] = std::max(out.map[p], u);
  }
  return out;
}

}  // namespace topostruct
