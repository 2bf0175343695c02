#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "topostruct/branch.hpp"
#include "topostruct/error.hpp"
#include "topostruct/family.hpp"
#include "topostruct/grid.hpp"
#include "topostruct/metrics.hpp"

namespace topostruct {

using Rng = std::mt19937_64;

/// Gaussian over the pruning threshold.
struct ThresholdDistribution {
  double mu = 0.0;
  double sigma = 1.0;
  friend bool operator==(const ThresholdDistribution&, const ThresholdDistribution&) = default;
};

struct LossConfig {
  double alpha = 1.0;
  double beta = 10.0;
  int mc_samples = 10;
  double bce_clip = 1e-7;

  void validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw Error(Errc::InvalidParams, "loss weights must be non-negative");
    if (mc_samples < 1) throw Error(Errc::InvalidParams, "mc_samples must be at least 1");
    if (!(bce_clip > 0.0 && bce_clip < 0.5)) throw Error(Errc::InvalidParams, "bce_clip must lie in (0, 0.5)");
  }
};

/// Upper clamp for sampled thresholds.
inline double epsilon_ceiling(const SkeletonFamily& family) { return family.max_finite_persistence() + 1.0; }

/// mu + sigma*z clamped to [0, eps_max].
inline double sample_epsilon(const ThresholdDistribution& d, Rng& rng, double eps_max = kInfinitePersistence) {
  double e = d.mu;
  if (d.sigma > 0.0) e += d.sigma * std::normal_distribution<double>(0.0, 1.0)(rng);
  return std::clamp(e, 0.0, eps_max);
}

inline void require_sigma(const ThresholdDistribution& d) {
  if (!(d.sigma > 0.0)) throw Error(Errc::DegenerateSigma, "sigma must be positive");
}

inline double cdf(const ThresholdDistribution& d, double x) {
  require_sigma(d);
  if (x == kInfinitePersistence) return 1.0;
  return 0.5 * std::erfc(-(x - d.mu) / (d.sigma * std::sqrt(2.0)));
}

inline double branch_probability(const ThresholdDistribution& d, const MorseBranch& b) {
  return cdf(d, b.persistence);
}
inline double branch_confidence(const ThresholdDistribution& d, const MorseBranch& b) {
  return std::abs(branch_probability(d, b) - 0.5);
}
inline double branch_uncertainty(const ThresholdDistribution& d, const MorseBranch& b) {
  return 0.5 - branch_confidence(d, b);
}

/// KL(q || p) for univariate Gaussians.
inline double kl_gaussian(const ThresholdDistribution& q, const ThresholdDistribution& p) {
  require_sigma(q);
  require_sigma(p);
  const double dm = q.mu - p.mu;
  return std::log(p.sigma / q.sigma) + (q.sigma * q.sigma + dm * dm) / (2.0 * p.sigma * p.sigma) - 0.5;
}

/// Mean binary cross-entropy over the selected pixels; empty selection gives 0.
template <class Target>
double bce(const Grid<Target>& target, const ScalarField2D& pred, const BinaryMask2D* mask = nullptr,
           double clip = 1e-7) {
  require_same_shape(target, pred, "bce: target and prediction shapes differ");
  if (mask) require_same_shape(*mask, pred, "bce: mask shape differs");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const double y = static_cast<double>(target[i]);
    const double p = std::clamp(pred[i], clip, 1.0 - clip);
    sum -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

/// Masked BCE at one threshold.
inline double skeleton_loss_at(const ScalarField2D& field, const BinaryMask2D& gt, const SkeletonFamily& family,
                               double epsilon, double clip = 1e-7) {
  const auto sk = skeleton_at(family, epsilon);
  return bce(gt, field, &sk.pixels, clip);
}

/// Monte Carlo expectation of the masked BCE over sampled thresholds.
inline double skeleton_loss_mc(const ScalarField2D& field, const BinaryMask2D& gt, const SkeletonFamily& family,
                               const ThresholdDistribution& d, const LossConfig& cfg, Rng& rng) {
  cfg.validate();
  require_same_shape(gt, field, "skeleton loss: gt and field shapes differ");
  if (family.width() != field.width() || family.height() != field.height())
    throw Error(Errc::DimensionMismatch, "skeleton loss: family shape differs");
  const double ceiling = epsilon_ceiling(family);
  if (d.sigma == 0.0) return skeleton_loss_at(field, gt, family, sample_epsilon(d, rng, ceiling), cfg.bce_clip);
  double sum = 0.0;
  for (int k = 0; k < cfg.mc_samples; ++k)
    sum += skeleton_loss_at(field, gt, family, sample_epsilon(d, rng, ceiling), cfg.bce_clip);
  return sum / cfg.mc_samples;
}

struct LossParts {
  double seg = 0.0;
  double skeleton = 0.0;
  double kl = 0.0;
};

struct LossValue {
  double total = 0.0;
  LossParts parts;
};

inline LossValue total_loss(const ScalarField2D& field, const BinaryMask2D& gt, const SkeletonFamily& family,
                            const ThresholdDistribution& q, const ThresholdDistribution& p, const LossConfig& cfg,
                            Rng& rng) {
  LossValue v;
  v.parts.seg = bce(gt, field, nullptr, cfg.bce_clip);
  v.parts.skeleton = skeleton_loss_mc(field, gt, family, q, cfg, rng);
  v.parts.kl = kl_gaussian(q, p);
  v.total = v.parts.seg + cfg.alpha * v.parts.skeleton + cfg.beta * v.parts.kl;
  return v;
}

using Grower = std::function<BinaryMask2D(const Skeleton&)>;

struct FitTrace {
  std::vector<double> epsilons;
  std::vector<double> scores;
};

/// Candidate thresholds: each distinct finite level, midpoints between
/// neighbours, and one point above the top level (the empty-skeleton side).
inline std::vector<double> fit_candidates(const SkeletonFamily& family) {
  const auto levels = family.finite_levels();
  if (levels.empty()) return {0.0};
  std::vector<double> out;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (i > 0) out.push_back(0.5 * (levels[i - 1] + levels[i]));
    out.push_back(levels[i]);
  }
  out.push_back(levels.back() + 0.05);
  return out;
}

/// Picks the threshold maximizing Dice of the grown skeleton against gt.
inline ThresholdDistribution fit_threshold_distribution(const ScalarField2D& field, const BinaryMask2D& gt,
                                                        const SkeletonFamily& family, const Grower& grow,
                                                        FitTrace* trace = nullptr) {
  require_same_shape(gt, field, "fit: gt and field shapes differ");
  const auto eps = fit_candidates(family);
  std::vector<double> score(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) score[i] = dice(grow(skeleton_at(family, eps[i])), gt);
  const auto best = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
  const double floor = score[best] - 0.01;
  std::size_t lo = best, hi = best;
  while (lo > 0 && score[lo - 1] >= floor) --lo;
  while (hi + 1 < eps.size() && score[hi + 1] >= floor) ++hi;
  if (trace) *trace = {eps, score};
  return {eps[best], std::max(0.5 * (eps[hi] - eps[lo]), 1e-3)};
}

}  // namespace topostruct
