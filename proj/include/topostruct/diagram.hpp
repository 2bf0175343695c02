#pragma once

#include <vector>

namespace topostruct {

struct PersistencePair {
  double birth = 0.0;
  double death = 0.0;
  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

using PersistenceDiagram = std::vector<PersistencePair>;

}  // namespace topostruct
