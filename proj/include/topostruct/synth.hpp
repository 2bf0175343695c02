#pragma once

// Deterministic fixtures with known topology.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "topostruct/error.hpp"
#include "topostruct/grid.hpp"
#include "topostruct/metrics.hpp"

namespace topostruct {

struct TwoBump {
  ScalarField2D field;
  double expected_persistence = 0.0;
  std::size_t peak1_x = 0, peak2_x = 0, saddle_x = 0, row = 0;
};

/// Two maxima on the centre row joined by a straight ridge that dips to
/// exactly `saddle_value` halfway between them. Values fall off away from
/// the centre row by a Gaussian factor.
inline TwoBump two_bump(std::size_t width, std::size_t height, double peak1, double peak2, double saddle_value) {
  if (!(0.0 <= saddle_value && saddle_value < peak2 && peak2 <= peak1 && peak1 <= 1.0))
    throw Error(Errc::InvalidLevels, "two_bump needs 0 <= saddle < peak2 <= peak1 <= 1");
  if (width < 5 || height < 1) throw Error(Errc::InvalidParams, "two_bump needs width >= 5");
  const std::size_t span = std::max<std::size_t>(2, 2 * ((width - 1) / 3));
  TwoBump out;
  out.peak1_x = (width - 1 - span) / 2;
  out.peak2_x = out.peak1_x + span;
  out.saddle_x = out.peak1_x + span / 2;
  out.row = height / 2;
  out.expected_persistence = peak2 - saddle_value;

  const double half = static_cast<double>(span / 2);
  std::vector<double> profile(width);
  for (std::size_t x = 0; x < width; ++x) {
    const double dx = static_cast<double>(x);
    if (x < out.peak1_x)
      profile[x] = peak1 * (1.0 - 0.5 * (static_cast<double>(out.peak1_x) - dx) / (static_cast<double>(out.peak1_x) + 1.0));
    else if (x < out.saddle_x)
      profile[x] = peak1 + (saddle_value - peak1) * (dx - static_cast<double>(out.peak1_x)) / half;
    else if (x == out.saddle_x)
      profile[x] = saddle_value;
    else if (x <= out.peak2_x)
      profile[x] = peak2 + (saddle_value - peak2) * (static_cast<double>(out.peak2_x) - dx) / half;
    else
      profile[x] = peak2 * (1.0 - 0.5 * (dx - static_cast<double>(out.peak2_x)) /
                                      (static_cast<double>(width - 1 - out.peak2_x) + 1.0));
  }
  const double s = std::max(1.0, static_cast<double>(height) / 4.0);
  out.field = ScalarField2D(width, height, 0.0);
  for (std::size_t y = 0; y < height; ++y) {
    const double dy = static_cast<double>(y) - static_cast<double>(out.row);
    const double decay = std::exp(-dy * dy / (2.0 * s * s));
    for (std::size_t x = 0; x < width; ++x) out.field.at(x, y) = profile[x] * decay;
  }
  return out;
}

/// Plus-shaped ridge through the image centre. Each arm brightens towards
/// its tip (reaching `line_value`); the background decays away from the arms.
inline ScalarField2D cross_ridge(std::size_t size, double line_value = 0.9, double bg_value = 0.1) {
  if (size < 5) throw Error(Errc::InvalidParams, "cross needs size >= 5");
  if (!(bg_value < line_value)) throw Error(Errc::InvalidLevels, "line must be brighter than background");
  const auto c = static_cast<long>(size / 2);
  const double reach = static_cast<double>(std::max(c, static_cast<long>(size) - 1 - c));
  ScalarField2D f(size, size, 0.0);
  for (long y = 0; y < static_cast<long>(size); ++y)
    for (long x = 0; x < static_cast<long>(size); ++x) {
      const long dx = std::labs(x - c), dy = std::labs(y - c);
      if (dx == 0 || dy == 0) {
        const double along = static_cast<double>(std::max(dx, dy)) / reach;
        f.at(x, y) = line_value - 0.2 * (line_value - bg_value) * (1.0 - along);
      } else {
        const double d = static_cast<double>(std::min(dx, dy));
        f.at(x, y) = bg_value * std::exp(-d / static_cast<double>(size));
      }
    }
  return f;
}

struct LineGrid {
  ScalarField2D field;
  BinaryMask2D gt;
  BettiNumbers betti;
  std::size_t horizontal = 0, vertical = 0;
};

/// One-pixel lines at spacing/2 + k*spacing in both directions, spanning the
/// image, plus seeded uniform noise in [-noise_amp, noise_amp] (clamped to [0, 1]).
inline LineGrid line_grid(std::size_t width, std::size_t height, std::size_t spacing, double line_value, double bg_value,
                          double noise_amp, std::uint64_t seed) {
  if (spacing < 3) throw Error(Errc::InvalidParams, "spacing must be at least 3");
  if (!(noise_amp >= 0.0) || !(line_value > bg_value + noise_amp))
    throw Error(Errc::InvalidParams, "line_value must exceed bg_value + noise_amp");
  const std::size_t offset = spacing / 2;
  if (width <= offset || height <= offset) throw Error(Errc::InvalidParams, "image too small for one line");

  LineGrid out;
  out.gt = BinaryMask2D(width, height, 0);
  for (std::size_t y = offset; y < height; y += spacing, ++out.horizontal)
    for (std::size_t x = 0; x < width; ++x) out.gt.at(x, y) = 1;
  for (std::size_t x = offset; x < width; x += spacing, ++out.vertical)
    for (std::size_t y = 0; y < height; ++y) out.gt.at(x, y) = 1;
  out.betti = {1, static_cast<int>((out.horizontal - 1) * (out.vertical - 1))};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-noise_amp, noise_amp);
  out.field = ScalarField2D(width, height, 0.0);
  for (std::size_t i = 0; i < out.field.size(); ++i) {
    const double base = out.gt[i] ? line_value : bg_value;
    const double n = noise_amp > 0.0 ? noise(rng) : 0.0;
    out.field[i] = std::clamp(base + n, 0.0, 1.0);
  }
  return out;
}

}  // namespace topostruct
