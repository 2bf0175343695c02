#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iterator>
#include <span>
#include <vector>

#include "topostruct/branch.hpp"
#include "topostruct/error.hpp"
#include "topostruct/grid.hpp"
#include "topostruct/raster_io.hpp"

namespace topostruct {

/// A chosen subset of branches and its pixel rendering.
struct Skeleton {
  std::vector<int> branch_ids;  // ascending
  BinaryMask2D pixels;
};

/// The complete set of branches of one image, sorted by ascending
/// persistence. A branch's id equals its position and never changes.
class SkeletonFamily {
 public:
  SkeletonFamily() = default;
  SkeletonFamily(std::size_t width, std::size_t height, std::vector<MorseBranch> branches)
      : width_(width), height_(height), branches_(std::move(branches)) {
    std::stable_sort(branches_.begin(), branches_.end(),
                     [](const MorseBranch& a, const MorseBranch& b) { return a.persistence < b.persistence; });
    for (std::size_t i = 0; i < branches_.size(); ++i) {
      branches_[i].id = static_cast<int>(i);
      sort_unique(branches_[i].pixels);
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return branches_.size(); }
  bool empty() const noexcept { return branches_.empty(); }
  std::span<const MorseBranch> branches() const noexcept { return branches_; }

  const MorseBranch& branch(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= branches_.size())
      throw Error(Errc::UnknownBranch, "branch " + std::to_string(id));
    return branches_[static_cast<std::size_t>(id)];
  }
  bool has_branch(int id) const noexcept { return id >= 0 && static_cast<std::size_t>(id) < branches_.size(); }

  /// Distinct finite persistence values, ascending.
  std::vector<double> finite_levels() const {
    std::vector<double> out;
    for (const auto& b : branches_)
      if (b.finite() && (out.empty() || out.back() != b.persistence)) out.push_back(b.persistence);
    return out;
  }

  double max_finite_persistence() const {
    double m = 0.0;
    for (const auto& b : branches_)
      if (b.finite()) m = std::max(m, b.persistence);
    return m;
  }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<MorseBranch> branches_;
};

inline Skeleton render_skeleton(const SkeletonFamily& family, std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  Skeleton s{std::move(ids), BinaryMask2D(family.width(), family.height(), 0)};
  for (int id : s.branch_ids)
    for (auto p : family.branch(id).pixels) s.pixels[p] = 1;
  return s;
}

/// Branches with persistence >= epsilon.
inline Skeleton skeleton_at(const SkeletonFamily& family, double epsilon) {
  const auto branches = family.branches();
  auto first = std::lower_bound(branches.begin(), branches.end(), epsilon,
                                [](const MorseBranch& b, double e) { return b.persistence < e; });
  std::vector<int> ids;
  for (auto it = first; it != branches.end(); ++it) ids.push_back(it->id);
  return render_skeleton(family, std::move(ids));
}

/// Lazily enumerates all 2^N branch subsets as skeletons, subset k holding
/// the branches whose bit is set in k.
class StructureRange {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Skeleton;
    using difference_type = std::ptrdiff_t;
    using pointer = void;
    using reference = Skeleton;

    iterator(const SkeletonFamily* family, std::uint64_t subset) : family_(family), subset_(subset) {}
    Skeleton operator*() const {
      std::vector<int> ids;
      for (std::size_t i = 0; i < family_->size(); ++i)
        if (subset_ >> i & 1u) ids.push_back(static_cast<int>(i));
      return render_skeleton(*family_, std::move(ids));
    }
    iterator& operator++() {
      ++subset_;
      return *this;
    }
    iterator operator++(int) {
      auto old = *this;
      ++subset_;
      return old;
    }
    bool operator==(const iterator& o) const { return subset_ == o.subset_; }

   private:
    const SkeletonFamily* family_;
    std::uint64_t subset_;
  };

  explicit StructureRange(const SkeletonFamily& family) : family_(&family) {}
  iterator begin() const { return {family_, 0}; }
  iterator end() const { return {family_, std::uint64_t{1} << family_->size()}; }
  std::uint64_t size() const { return std::uint64_t{1} << family_->size(); }

 private:
  const SkeletonFamily* family_;
};

inline StructureRange enumerate_structures(const SkeletonFamily& family, std::size_t max_branches = 12) {
  if (family.size() > max_branches || family.size() >= 63)
    throw Error(Errc::TooManyBranches, std::to_string(family.size()) + " branches exceed limit " + std::to_string(max_branches));
  return StructureRange(family);
}

struct BranchRow {
  int id = 0;
  double persistence = 0.0;
  std::size_t pixel_count = 0;
  std::vector<Cell> endpoints;
};

/// One row per branch, by descending persistence; ties by ascending id.
inline std::vector<BranchRow> branch_table(const SkeletonFamily& family) {
  std::vector<BranchRow> rows;
  for (const auto& b : family.branches()) rows.push_back({b.id, b.persistence, b.pixels.size(), b.endpoints});
  std::stable_sort(rows.begin(), rows.end(), [](const BranchRow& a, const BranchRow& b) {
    if (a.persistence != b.persistence) return a.persistence > b.persistence;
    return a.id < b.id;
  });
  return rows;
}

inline std::vector<SkeletonPoint> skeleton_points(const SkeletonFamily& family) {
  std::vector<SkeletonPoint> pts;
  for (const auto& b : family.branches())
    for (auto p : b.pixels) pts.push_back({p % family.width(), p / family.width(), b.id});
  return pts;
}

inline void export_skeleton(const SkeletonFamily& family, const std::filesystem::path& path) {
  write_skeleton_csv(skeleton_points(family), path);
}

}  // namespace topostruct
