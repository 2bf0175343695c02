#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "topostruct/error.hpp"
#include "topostruct/family.hpp"
#include "topostruct/grid.hpp"
#include "topostruct/metrics.hpp"
#include "topostruct/prob.hpp"
#include "topostruct/segment.hpp"

namespace topostruct {

enum class Decision : std::uint8_t { Undecided, Keep, Drop };

inline const char* to_string(Decision d) {
  switch (d) {
    case Decision::Undecided: return "undecided";
    case Decision::Keep: return "keep";
    case Decision::Drop: return "drop";
  }
  return "?";
}

inline Decision parse_action(const std::string& s) {
  if (s == "keep") return Decision::Keep;
  if (s == "drop") return Decision::Drop;
  throw Error(Errc::InvalidParams, "action must be keep or drop, got '" + s + "'");
}

/// true = branch belongs to the ground-truth structure.
using BranchLabel = std::vector<bool>;

inline BinaryMask2D dilate_square(const BinaryMask2D& m, int radius) {
  const auto w = static_cast<long>(m.width()), h = static_cast<long>(m.height());
  BinaryMask2D rows(m.width(), m.height(), 0), out(m.width(), m.height(), 0);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (long d = -radius; d <= radius && !rows.at(x, y); ++d)
        if (x + d >= 0 && x + d < w && m.at(x + d, y)) rows.at(x, y) = 1;
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (long d = -radius; d <= radius && !out.at(x, y); ++d)
        if (y + d >= 0 && y + d < h && rows.at(x, y + d)) out.at(x, y) = 1;
  return out;
}

/// A branch is true iff at least `rho` of its pixels lie within Chebyshev
/// distance `tol` of the ground-truth foreground.
inline BranchLabel label_branches(const SkeletonFamily& family, const BinaryMask2D& gt, double rho = 0.5, int tol = 2) {
  if (gt.width() != family.width() || gt.height() != family.height())
    throw Error(Errc::DimensionMismatch, "gt and family shapes differ");
  const auto near = dilate_square(gt, tol);
  BranchLabel out(family.size());
  for (const auto& b : family.branches()) {
    std::size_t hit = 0;
    for (auto p : b.pixels) hit += near[p];
    out[static_cast<std::size_t>(b.id)] = static_cast<double>(hit) >= rho * static_cast<double>(b.pixels.size());
  }
  return out;
}

struct Click {
  int branch_id = 0;
  Decision action = Decision::Keep;
  friend bool operator==(const Click&, const Click&) = default;
};

/// Interactive keep/drop state over one family. Not internally synchronized.
class ProofreadSession {
 public:
  ProofreadSession(std::shared_ptr<const SkeletonFamily> family, const ScalarField2D& field, double epsilon,
                   std::optional<BinaryMask2D> gt = std::nullopt, double tau = 0.5)
      : family_(std::move(family)), binary_(binarize(field, tau)), epsilon_(epsilon), gt_(std::move(gt)),
        decisions_(family_->size(), Decision::Undecided) {
    if (family_->width() != field.width() || family_->height() != field.height())
      throw Error(Errc::DimensionMismatch, "family and field shapes differ");
    if (gt_) require_same_shape(*gt_, binary_, "gt and field shapes differ");
    refresh();
  }

  const SkeletonFamily& family() const noexcept { return *family_; }
  double epsilon() const noexcept { return epsilon_; }
  const std::optional<BinaryMask2D>& gt() const noexcept { return gt_; }
  const std::vector<Decision>& decisions() const noexcept { return decisions_; }
  const std::vector<Click>& click_log() const noexcept { return clicks_; }
  const std::vector<double>& voi_history() const noexcept { return voi_history_; }
  const BinaryMask2D& segmentation() const noexcept { return segmentation_; }
  const Skeleton& skeleton() const noexcept { return skeleton_; }
  std::optional<double> current_voi() const {
    if (voi_history_.empty()) return std::nullopt;
    return voi_history_.back();
  }

  bool included(int id) const {
    const auto& b = family_->branch(id);
    switch (decisions_[static_cast<std::size_t>(id)]) {
      case Decision::Keep: return true;
      case Decision::Drop: return false;
      case Decision::Undecided: break;
    }
    return b.persistence >= epsilon_;
  }

  void apply_decision(int id, Decision action) {
    if (!family_->has_branch(id)) throw Error(Errc::UnknownBranch, "branch " + std::to_string(id));
    if (action == Decision::Undecided) throw Error(Errc::InvalidParams, "action must be keep or drop");
    if (included(id) == (action == Decision::Keep))
      throw Error(Errc::NoOpDecision, std::string("branch ") + std::to_string(id) + " is already " +
                                          (action == Decision::Keep ? "included" : "excluded"));
    decisions_[static_cast<std::size_t>(id)] = action;
    clicks_.push_back({id, action});
    refresh();
  }

 private:
  void refresh() {
    std::vector<int> ids;
    for (const auto& b : family_->branches())
      if (included(b.id)) ids.push_back(b.id);
    skeleton_ = render_skeleton(*family_, std::move(ids));
    segmentation_ = grow_segmentation(binary_, skeleton_).mask;
    if (gt_) voi_history_.push_back(voi(segmentation_, *gt_));
  }

  std::shared_ptr<const SkeletonFamily> family_;
  BinaryMask2D binary_;
  double epsilon_;
  std::optional<BinaryMask2D> gt_;
  std::vector<Decision> decisions_;
  std::vector<Click> clicks_;
  std::vector<double> voi_history_;
  Skeleton skeleton_;
  BinaryMask2D segmentation_;
};

inline ProofreadSession new_session(std::shared_ptr<const SkeletonFamily> family, const ScalarField2D& field,
                                    const ThresholdDistribution& start, std::optional<BinaryMask2D> gt = std::nullopt) {
  return ProofreadSession(std::move(family), field, start.mu, std::move(gt));
}

inline nlohmann::json session_to_json(const ProofreadSession& s) {
  nlohmann::json j;
  j["epsilon"] = s.epsilon();
  auto& d = j["decisions"] = nlohmann::json::object();
  for (std::size_t i = 0; i < s.decisions().size(); ++i)
    if (s.decisions()[i] != Decision::Undecided) d[std::to_string(i)] = to_string(s.decisions()[i]);
  j["click_log"] = nlohmann::json::array();
  for (const auto& c : s.click_log()) j["click_log"].push_back({{"branch_id", c.branch_id}, {"action", to_string(c.action)}});
  j["voi_history"] = s.voi_history();
  return j;
}

/// Rebuilds a session by replaying the stored click log on a fresh one.
inline ProofreadSession session_from_json(const nlohmann::json& j, std::shared_ptr<const SkeletonFamily> family,
                                          const ScalarField2D& field, std::optional<BinaryMask2D> gt = std::nullopt) {
  ProofreadSession s(std::move(family), field, j.at("epsilon").get<double>(), std::move(gt));
  for (const auto& c : j.at("click_log"))
    s.apply_decision(c.at("branch_id").get<int>(), parse_action(c.at("action").get<std::string>()));
  return s;
}

enum class ClickOrder { UncertaintyDesc, Random };

/// Branch ids by descending analytic uncertainty; ties by higher persistence, then id.
inline std::vector<int> uncertainty_order(const SkeletonFamily& family, const ThresholdDistribution& dist) {
  std::vector<int> ids(family.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<double> u(family.size());
  for (const auto& b : family.branches()) u[static_cast<std::size_t>(b.id)] = branch_uncertainty(dist, b);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    const auto ua = u[static_cast<std::size_t>(a)], ub = u[static_cast<std::size_t>(b)];
    if (ua != ub) return ua > ub;
    const auto pa = family.branch(a).persistence, pb = family.branch(b).persistence;
    if (pa != pb) return pa > pb;
    return a < b;
  });
  return ids;
}

inline std::vector<int> random_order(const SkeletonFamily& family, std::uint64_t seed) {
  std::vector<int> ids(family.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  return ids;
}

struct SimulationResult {
  std::vector<double> voi_curve;  // initial VOI, then one entry per click
  std::vector<Click> clicks;
  std::size_t inspections = 0;    // branches looked at, including correct ones
  BinaryMask2D final_segmentation;
};

/// Walks branches in the given order and corrects each misclassified one.
inline SimulationResult simulate(const ScalarField2D& field, std::shared_ptr<const SkeletonFamily> family,
                                 const ThresholdDistribution& dist, const BinaryMask2D& gt, ClickOrder order,
                                 std::size_t max_clicks = SIZE_MAX, std::uint64_t seed = 0,
                                 const BranchLabel* labels = nullptr) {
  const BranchLabel own = labels ? BranchLabel{} : label_branches(*family, gt);
  const BranchLabel& truth = labels ? *labels : own;
  const auto ids = order == ClickOrder::UncertaintyDesc ? uncertainty_order(*family, dist) : random_order(*family, seed);
  ProofreadSession s = new_session(family, field, dist, gt);
  SimulationResult r;
  for (int id : ids) {
    if (s.click_log().size() >= max_clicks) break;
    ++r.inspections;
    const bool want = truth[static_cast<std::size_t>(id)];
    if (s.included(id) == want) continue;
    s.apply_decision(id, want ? Decision::Keep : Decision::Drop);
  }
  r.voi_curve = s.voi_history();
  r.clicks = s.click_log();
  r.final_segmentation = s.segmentation();
  return r;
}

/// First click index whose VOI is within `tol` of the curve's final value.
inline std::size_t clicks_to_reach(const std::vector<double>& curve, double tol = 0.05) {
  if (curve.empty()) return 0;
  for (std::size_t k = 0; k < curve.size(); ++k)
    if (std::abs(curve[k] - curve.back()) <= tol) return k;
  return curve.size() - 1;
}

}  // namespace topostruct
