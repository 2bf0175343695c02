#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace topostruct {

// Path-halving union-find. attach(child, root) always keeps `root` as the
// representative so callers can encode the elder rule in argument order.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n = 0) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
  }

  std::uint32_t find(std::uint32_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  void attach(std::uint32_t child_root, std::uint32_t root) { parent_[child_root] = root; }

  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace topostruct
