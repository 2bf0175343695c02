#pragma once

// Batch driver: load -> family -> threshold distribution -> samples ->
// artifacts on disk.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "topostruct/error.hpp"
#include "topostruct/family.hpp"
#include "topostruct/metrics.hpp"
#include "topostruct/morse.hpp"
#include "topostruct/prob.hpp"
#include "topostruct/raster_io.hpp"
#include "topostruct/segment.hpp"
#include "topostruct/watershed.hpp"

namespace topostruct {

enum class FamilyMode { Morse, Watershed };

/// Prior used when no ground truth is available to fit against.
inline constexpr ThresholdDistribution kDefaultPrior{0.1, 0.05};

struct PipelineConfig {
  fs::path input;
  std::optional<fs::path> gt;
  fs::path output_dir = "out";
  FamilyMode mode = FamilyMode::Morse;
  double tau = 0.5;
  LossConfig loss;
  int samples = kDefaultSampleCount;
  PatchParams patch;
  std::vector<double> thetas;
  std::uint64_t seed = 0;
  std::optional<double> mu;
  std::optional<double> sigma;

  void validate() const {
    loss.validate();
    if (!(tau >= 0.0 && tau <= 1.0)) throw Error(Errc::InvalidConfig, "tau must lie in [0, 1]");
    if (samples < 1) throw Error(Errc::InvalidConfig, "samples must be at least 1");
    if (mode == FamilyMode::Watershed && thetas.empty()) throw Error(Errc::EmptyThetaList, "watershed mode needs thetas");
    if (sigma && !(*sigma >= 0.0)) throw Error(Errc::InvalidConfig, "sigma must be non-negative");
  }
};

/// A failure tied to the file it concerns (empty path when none).
class PipelineError : public Error {
 public:
  PipelineError(const Error& e, fs::path path) : Error(e), path_(std::move(path)) {}
  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

inline PipelineConfig parse_config(const nlohmann::json& j, const fs::path& base = {}) {
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
  };
  try {
    PipelineConfig c;
    if (!j.is_object()) throw Error(Errc::InvalidConfig, "config must be a JSON object");
    if (!j.contains("input")) throw Error(Errc::InvalidConfig, "config needs \"input\"");
    c.input = resolve(j.at("input").get<std::string>());
    if (j.contains("gt") && !j.at("gt").is_null()) c.gt = resolve(j.at("gt").get<std::string>());
    c.output_dir = resolve(j.value("output_dir", std::string("out")));
    const auto mode = j.value("mode", std::string("morse"));
    if (mode == "morse") c.mode = FamilyMode::Morse;
    else if (mode == "watershed") c.mode = FamilyMode::Watershed;
    else throw Error(Errc::InvalidConfig, "mode must be morse or watershed");
    c.tau = j.value("tau", c.tau);
    c.loss.alpha = j.value("alpha", c.loss.alpha);
    c.loss.beta = j.value("beta", c.loss.beta);
    c.loss.mc_samples = j.value("mc_samples", c.loss.mc_samples);
    c.samples = j.value("samples", c.samples);
    c.patch.size = j.value("patch_size", c.patch.size);
    c.patch.count = j.value("patches", c.patch.count);
    c.seed = j.value("seed", c.seed);
    c.patch.seed = c.seed;
    if (j.contains("thetas")) c.thetas = j.at("thetas").get<std::vector<double>>();
    if (j.contains("mu")) c.mu = j.at("mu").get<double>();
    if (j.contains("sigma")) c.sigma = j.at("sigma").get<double>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }
}

inline PipelineConfig load_config(const fs::path& path) {
  try {
    const auto text = detail::read_bytes(path);
    return parse_config(nlohmann::json::parse(text), path.parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw PipelineError(Error(Errc::InvalidConfig, e.what()), path);
  } catch (const Error& e) {
    throw PipelineError(e, path);
  }
}

inline nlohmann::json to_json(const ThresholdDistribution& d) { return {{"mu", d.mu}, {"sigma", d.sigma}}; }

inline nlohmann::json to_json(const MetricReport& r) {
  return {{"dice", r.dice},
          {"ari", r.ari},
          {"voi", r.voi},
          {"betti0_error", r.betti0_error},
          {"betti1_error", r.betti1_error},
          {"patch", {{"size", r.patch.size}, {"count", r.patch.count}, {"seed", r.patch.seed}}}};
}

inline std::string persistence_csv(const SkeletonFamily& family) {
  std::string out = "branch_id,persistence\n";
  for (const auto& b : family.branches()) out += std::to_string(b.id) + "," + format_real(b.persistence) + "\n";
  return out;
}

struct RunSummary {
  std::size_t branches = 0;
  ThresholdDistribution distribution;
  std::optional<MetricReport> metrics;
  std::vector<fs::path> artifacts;
};

namespace detail {

template <class F>
auto at_path(const fs::path& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PipelineError&) {
    throw;
  } catch (const Error& e) {
    throw PipelineError(e, path);
  }
}

}  // namespace detail

inline RunSummary run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  RunSummary summary;
  const auto field = detail::at_path(cfg.input, [&] { return load_field(cfg.input).field; });
  std::optional<BinaryMask2D> gt;
  if (cfg.gt) {
    gt = detail::at_path(*cfg.gt, [&] { return load_mask(*cfg.gt); });
    detail::at_path(*cfg.gt, [&] { require_same_shape(*gt, field, "gt and input shapes differ"); return 0; });
  }
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw PipelineError(Error(Errc::IoFailure, "cannot create output directory: " + ec.message()), cfg.output_dir);

  auto out = [&](const std::string& name) {
    summary.artifacts.push_back(cfg.output_dir / name);
    return cfg.output_dir / name;
  };
  auto write = [&](const std::string& name, const std::string& text) {
    const auto p = out(name);
    detail::at_path(p, [&] { detail::write_bytes(p, text); return 0; });
  };

  const auto family = cfg.mode == FamilyMode::Morse ? extract_morse_complex(field)
                                                    : boundary_skeleton_family(field, cfg.thetas);
  summary.branches = family.size();
  if (cfg.mode == FamilyMode::Watershed) {
    const auto p = out("diagram.csv");
    detail::at_path(p, [&] { export_diagram(ph_watershed(field, cfg.thetas.back()).diagram, p); return 0; });
  }

  const auto binary = binarize(field, cfg.tau);
  const Grower grow = [&](const Skeleton& s) { return grow_segmentation(binary, s).mask; };
  ThresholdDistribution dist = kDefaultPrior;
  if (gt) dist = fit_threshold_distribution(field, *gt, family, grow);
  if (cfg.mu) dist.mu = *cfg.mu;
  if (cfg.sigma) dist.sigma = *cfg.sigma;
  summary.distribution = dist;

  Rng rng(cfg.seed);
  const auto samples = sample_segmentations(field, family, dist, cfg.samples, rng, cfg.tau);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "sample_%03zu.pgm", k);
    const auto p = out(name);
    detail::at_path(p, [&] { save_mask(samples[k].mask, p); return 0; });
  }
  if (samples.size() >= 2) write("uncertainty_empirical.rawf", encode_raw_float(empirical_uncertainty(samples)));
  if (dist.sigma > 0.0)
    write("uncertainty_analytic.rawf", encode_raw_float(analytic_branch_uncertainty(family, dist).map));

  const auto segmentation = grow(skeleton_at(family, dist.mu));
  {
    const auto p = out("segmentation.pgm");
    detail::at_path(p, [&] { save_mask(segmentation, p); return 0; });
  }
  write("persistence.csv", persistence_csv(family));
  {
    const auto p = out("skeleton.csv");
    detail::at_path(p, [&] { export_skeleton(family, p); return 0; });
  }
  write("distribution.json", to_json(dist).dump(2) + "\n");

  nlohmann::json report = {{"branches", family.size()}, {"mode", cfg.mode == FamilyMode::Morse ? "morse" : "watershed"}};
  report["distribution"] = to_json(dist);
  if (gt) {
    auto patch = cfg.patch;
    const auto m = detail::at_path(*cfg.gt, [&] { return evaluate(segmentation, *gt, patch); });
    summary.metrics = m;
    report["metrics"] = to_json(m);
    if (dist.sigma > 0.0) {
      const auto loss = total_loss(field, *gt, family, dist, dist, cfg.loss, rng);
      report["loss"] = {{"total", loss.total}, {"seg", loss.parts.seg}, {"skeleton", loss.parts.skeleton}, {"kl", loss.parts.kl}};
    }
  }
  write("metrics.json", report.dump(2) + "\n");
  return summary;
}

inline nlohmann::json error_json(const Error& e, const fs::path& path = {}) {
  return {{"error", to_string(e.code())}, {"message", e.what()}, {"path", path.empty() ? nlohmann::json(nullptr) : nlohmann::json(path.string())}};
}

/// Runs a config file; on failure prints an error object to `err` and returns 1.
inline int cli_run(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  try {
    const auto summary = run_pipeline(load_config(config_path));
    out << nlohmann::json{{"status", "ok"}, {"branches", summary.branches}, {"distribution", to_json(summary.distribution)}}.dump()
        << "\n";
    return 0;
  } catch (const PipelineError& e) {
    err << error_json(e, e.path()).dump() << "\n";
  } catch (const Error& e) {
    err << error_json(e).dump() << "\n";
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", "Internal"}, {"message", e.what()}, {"path", nullptr}}.dump() << "\n";
  }
  return 1;
}

}  // namespace topostruct
