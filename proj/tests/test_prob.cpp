#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "test_support.hpp"
#include "topostruct/morse.hpp"
#include "topostruct/prob.hpp"
#include "topostruct/segment.hpp"
#include "topostruct/synth.hpp"

using namespace topostruct;

TEST(Prob, DegenerateSamplerClamps) {
  Rng rng(1);
  EXPECT_EQ(sample_epsilon({0.3, 0.0}, rng), 0.3);
  EXPECT_EQ(sample_epsilon({-1.0, 0.0}, rng), 0.0);
  EXPECT_EQ(sample_epsilon({5.0, 0.0}, rng, 2.0), 2.0);
}

TEST(Prob, SampleMean) {
  Rng rng(2);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_epsilon({0.5, 0.1}, rng);
  EXPECT_NEAR(sum / n, 0.5, 0.002);
}

TEST(Prob, SamplingIsSeeded) {
  Rng a(9), b(9);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_epsilon({0.2, 0.3}, a), sample_epsilon({0.2, 0.3}, b));
}

TEST(Prob, CdfValues) {
  EXPECT_EQ(cdf({0.5, 0.1}, 0.5), 0.5);
  EXPECT_NEAR(cdf({0.0, 1.0}, 1.0), 0.8413447460685429, 1e-12);
  EXPECT_NEAR(cdf({0.0, 1.0}, -1.96), 0.024997895148220435, 1e-12);
  EXPECT_EQ(cdf({0.0, 1.0}, kInfinitePersistence), 1.0);
  EXPECT_ERRC(cdf({0.0, 0.0}, 1.0), Errc::DegenerateSigma);
}

TEST(Prob, CdfMatchesEmpiricalFrequency) {
  Rng rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  const ThresholdDistribution d{0.4, 0.2};
  const int n = 1000000;
  int below = 0;
  for (int i = 0; i < n; ++i) below += d.mu + d.sigma * z(rng) <= 0.5;
  EXPECT_NEAR(static_cast<double>(below) / n, cdf(d, 0.5), 0.002);
}

TEST(Prob, BranchProbabilityAndConfidence) {
  const ThresholdDistribution d{0.3, 0.1};
  MorseBranch b;
  b.persistence = 0.3;
  EXPECT_EQ(branch_probability(d, b), 0.5);
  EXPECT_EQ(branch_confidence(d, b), 0.0);
  EXPECT_EQ(branch_uncertainty(d, b), 0.5);
  b.persistence = kInfinitePersistence;
  EXPECT_EQ(branch_probability(d, b), 1.0);
  EXPECT_EQ(branch_confidence(d, b), 0.5);
  EXPECT_EQ(branch_uncertainty(d, b), 0.0);
  double prev = 0.0;
  for (double e = 0.0; e < 1.0; e += 0.05) {
    b.persistence = e;
    const double p = branch_probability(d, b);
    EXPECT_GE(p, prev);
    EXPECT_NEAR(branch_confidence(d, b) + branch_uncertainty(d, b), 0.5, 1e-15);
    prev = p;
  }
}

TEST(Prob, BernoulliInclusionFrequency) {
  std::mt19937_64 frng(4);
  const auto fam = extract_morse_complex(oracle::random_field(10, 10, frng));
  const ThresholdDistribution d{0.2, 0.1};
  Rng rng(5);
  const int n = 10000;
  std::vector<int> hits(fam.size(), 0);
  for (int i = 0; i < n; ++i)
    for (int id : skeleton_at(fam, sample_epsilon(d, rng, epsilon_ceiling(fam))).branch_ids) ++hits[static_cast<std::size_t>(id)];
  for (const auto& b : fam.branches()) {
    const double p = branch_probability(d, b);
    const double sd = std::sqrt(p * (1 - p) / n);
    EXPECT_LE(std::abs(hits[static_cast<std::size_t>(b.id)] / double(n) - p), std::max(3 * sd, 1e-12) + 1e-4);
  }
}

TEST(Prob, KlClosedForm) {
  EXPECT_EQ(kl_gaussian({1.0, 1.0}, {0.0, 1.0}), 0.5);
  for (double a : {-1.0, 0.0, 0.3})
    for (double s : {0.01, 0.5, 2.0}) EXPECT_NEAR(kl_gaussian({a, s}, {a, s}), 0.0, 1e-12);
  EXPECT_ERRC(kl_gaussian({0.0, 0.0}, {0.0, 1.0}), Errc::DegenerateSigma);
  EXPECT_ERRC(kl_gaussian({0.0, 1.0}, {0.0, 0.0}), Errc::DegenerateSigma);
  for (double mq : {-0.5, 0.0, 0.7})
    for (double sq : {0.2, 1.0})
      for (double sp : {0.3, 1.5}) {
        const double v = kl_gaussian({mq, sq}, {0.1, sp});
        EXPECT_GT(v, 0.0);
      }
}

TEST(Prob, KlMatchesMonteCarlo) {
  const ThresholdDistribution q{0.3, 0.2}, p{0.1, 0.35};
  Rng rng(6);
  std::normal_distribution<double> z(0.0, 1.0);
  auto logpdf = [](const ThresholdDistribution& d, double x) {
    const double u = (x - d.mu) / d.sigma;
    return -0.5 * u * u - std::log(d.sigma);
  };
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x = q.mu + q.sigma * z(rng);
    sum += logpdf(q, x) - logpdf(p, x);
  }
  EXPECT_NEAR(sum / n, kl_gaussian(q, p), 0.01);
}

TEST(Prob, BceConventions) {
  BinaryMask2D t(2, 2, std::vector<std::uint8_t>{0, 1, 1, 0});
  ScalarField2D exact(2, 2, std::vector<double>{0.0, 1.0, 1.0, 0.0});
  EXPECT_LE(bce(t, exact), 1e-6);
  EXPECT_EQ(bce(t, ScalarField2D(2, 2, 0.5)), std::log(2.0));
  BinaryMask2D none(2, 2, 0);
  EXPECT_EQ(bce(t, exact, &none), 0.0);
  BinaryMask2D one(2, 2, std::vector<std::uint8_t>{0, 1, 0, 0});
  ScalarField2D pred(2, 2, 0.25);
  EXPECT_DOUBLE_EQ(bce(t, pred, &one), -std::log(0.25));
  EXPECT_ERRC(bce(t, ScalarField2D(3, 1, 0.5)), Errc::DimensionMismatch);
  // soft targets are accepted too
  EXPECT_EQ(bce(ScalarField2D(1, 1, 0.5), ScalarField2D(1, 1, 0.5)), std::log(2.0));
}

namespace {

struct Instance {
  ScalarField2D field;
  BinaryMask2D gt;
  SkeletonFamily family;
};

Instance noisy_grid(std::uint64_t seed) {
  auto lg = line_grid(24, 24, 8, 0.8, 0.2, 0.15, seed);
  auto fam = extract_morse_complex(lg.field);
  return {lg.field, lg.gt, std::move(fam)};
}

}  // namespace

TEST(Prob, SkeletonLossDegenerateIsExact) {
  const auto in = noisy_grid(1);
  LossConfig cfg;
  cfg.mc_samples = 7;
  Rng rng(1);
  for (double mu : {-0.2, 0.0, 0.05, 0.3, 5.0}) {
    const double mc = skeleton_loss_mc(in.field, in.gt, in.family, {mu, 0.0}, cfg, rng);
    const double eps = std::clamp(mu, 0.0, epsilon_ceiling(in.family));
    EXPECT_EQ(mc, skeleton_loss_at(in.field, in.gt, in.family, eps, cfg.bce_clip));
  }
}

TEST(Prob, SkeletonLossEmptyFamilyIsZero) {
  SkeletonFamily empty(3, 3, {});
  Rng rng(1);
  EXPECT_EQ(skeleton_loss_mc(ScalarField2D(3, 3, 0.3), BinaryMask2D(3, 3, 1), empty, {0.1, 0.1}, {}, rng), 0.0);
}

TEST(Prob, SkeletonLossMonteCarloConverges) {
  const auto in = noisy_grid(2);
  const ThresholdDistribution d{0.1, 0.08};
  auto run = [&](int k, std::uint64_t seed, double* se) {
    Rng rng(seed);
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < k; ++i) {
      const double v = skeleton_loss_at(in.field, in.gt, in.family, sample_epsilon(d, rng, epsilon_ceiling(in.family)));
      s += v;
      s2 += v * v;
    }
    const double m = s / k;
    *se = std::sqrt(std::max(0.0, s2 / k - m * m) / k);
    return m;
  };
  double se1 = 0, se2 = 0;
  const double a = run(10000, 3, &se1), b = run(100000, 4, &se2);
  EXPECT_LT(std::abs(a - b), 3.0 * std::hypot(se1, se2) + 1e-12);
  LossConfig cfg;
  cfg.mc_samples = 200;
  Rng rng(5);
  EXPECT_NEAR(skeleton_loss_mc(in.field, in.gt, in.family, d, cfg, rng), b, 6.0 * se2 * std::sqrt(500.0));
}

TEST(Prob, TotalLossRecombines) {
  const auto in = noisy_grid(3);
  const ThresholdDistribution q{0.1, 0.05}, p{0.2, 0.1};
  LossConfig cfg;
  EXPECT_EQ(cfg.alpha, 1.0);
  EXPECT_EQ(cfg.beta, 10.0);
  Rng r1(7);
  const auto v = total_loss(in.field, in.gt, in.family, q, p, cfg, r1);
  EXPECT_LT(std::abs(v.total - (v.parts.seg + cfg.alpha * v.parts.skeleton + cfg.beta * v.parts.kl)), 1e-12);

  cfg.alpha = 0.0;
  cfg.beta = 0.0;
  Rng r2(7);
  const auto z = total_loss(in.field, in.gt, in.family, q, p, cfg, r2);
  EXPECT_EQ(z.total, z.parts.seg);

  Rng r3(7);
  EXPECT_EQ(total_loss(in.field, in.gt, in.family, q, q, LossConfig{}, r3).parts.kl, 0.0);

  // linear in the weights
  cfg.alpha = 2.0;
  cfg.beta = 3.0;
  Rng r4(7);
  const auto w = total_loss(in.field, in.gt, in.family, q, p, cfg, r4);
  EXPECT_NEAR(w.total - v.total, (2.0 - 1.0) * v.parts.skeleton + (3.0 - 10.0) * v.parts.kl, 1e-12);
}

TEST(Prob, LossConfigValidation) {
  LossConfig c;
  c.mc_samples = 0;
  EXPECT_ERRC(c.validate(), Errc::InvalidParams);
  c = {};
  c.bce_clip = 0.6;
  EXPECT_ERRC(c.validate(), Errc::InvalidParams);
  c = {};
  c.alpha = -1;
  EXPECT_ERRC(c.validate(), Errc::InvalidParams);
}

TEST(Prob, FitRecoversConstructedGroundTruth) {
  const auto in = noisy_grid(4);
  const auto binary = binarize(in.field);
  const Grower grow = [&](const Skeleton& s) { return grow_segmentation(binary, s).mask; };
  const auto levels = in.family.finite_levels();
  ASSERT_GT(levels.size(), 3u);
  const double target = levels[levels.size() / 2];
  const auto gt = grow(skeleton_at(in.family, target));
  FitTrace trace;
  const auto d = fit_threshold_distribution(in.field, gt, in.family, grow, &trace);
  EXPECT_EQ(grow(skeleton_at(in.family, d.mu)), gt);
  EXPECT_GE(d.sigma, 1e-3);
  EXPECT_EQ(trace.epsilons.size(), trace.scores.size());
}

TEST(Prob, FitEmptyGroundTruthPrefersEmptySkeleton) {
  const auto tb = two_bump(12, 9, 1.0, 0.8, 0.6);
  const auto fam = extract_morse_complex(tb.field);
  const auto binary = binarize(tb.field);
  const Grower grow = [&](const Skeleton& s) { return grow_segmentation(binary, s).mask; };
  const auto d = fit_threshold_distribution(tb.field, BinaryMask2D(12, 9, 0), fam, grow);
  EXPECT_GT(d.mu, fam.max_finite_persistence());
}

TEST(Prob, FitFlatScoreTakesSmallestLevel) {
  MorseBranch a, b;
  a.persistence = 0.2;
  b.persistence = 0.6;
  a.pixels = {0};
  b.pixels = {1};
  SkeletonFamily fam(3, 1, {a, b});
  const Grower constant = [](const Skeleton&) { return BinaryMask2D(3, 1, 1); };
  const auto d = fit_threshold_distribution(ScalarField2D(3, 1, 0.5), BinaryMask2D(3, 1, 1), fam, constant);
  const auto eps = fit_candidates(fam);
  EXPECT_EQ(d.mu, eps.front());
  EXPECT_EQ(d.sigma, 0.5 * (eps.back() - eps.front()));
}

TEST(Prob, FitIsDeterministic) {
  const auto in = noisy_grid(5);
  const auto binary = binarize(in.field);
  const Grower grow = [&](const Skeleton& s) { return grow_segmentation(binary, s).mask; };
  EXPECT_EQ(fit_threshold_distribution(in.field, in.gt, in.family, grow),
            fit_threshold_distribution(in.field, in.gt, in.family, grow));
  EXPECT_ERRC(fit_threshold_distribution(in.field, BinaryMask2D(2, 2, 0), in.family, grow), Errc::DimensionMismatch);
}
