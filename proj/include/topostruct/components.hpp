#pragma once

#include <cstdint>
#include <vector>

#include "topostruct/grid.hpp"

namespace topostruct {

enum class Connectivity { Four = 4, Eight = 8 };

struct Labeling {
  Grid<std::int32_t> labels;  // 0 = not selected, components numbered from 1
  std::int32_t count = 0;
};

/// Labels the connected components of the pixels equal to `value`, in
/// row-major order of their first pixel.
inline Labeling label_components(const BinaryMask2D& mask, Connectivity conn,
                                 std::uint8_t value = 1) {
  const auto w = static_cast<std::int64_t>(mask.width());
  const auto h = static_cast<std::int64_t>(mask.height());
  Labeling out{Grid<std::int32_t>(mask.width(), mask.height(), 0), 0};
  std::vector<std::int64_t> stack;
  const bool eight = conn == Connectivity::Eight;

  for (std::int64_t start = 0; start < w * h; ++start) {
    if ((mask[start] != 0) != (value != 0) || out.labels[start] != 0) continue;
    const std::int32_t id = ++out.count;
    out.labels[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::int64_t p = stack.back();
      stack.pop_back();
      const std::int64_t x = p % w, y = p / w;
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (!eight && dx != 0 && dy != 0) continue;
          const std::int64_t nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::int64_t q = ny * w + nx;
          if ((mask[q] != 0) != (value != 0) || out.labels[q] != 0) continue;
          out.labels[q] = id;
          stack.push_back(q);
        }
      }
    }
  }
  return out;
}

}  // namespace topostruct
