#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "topostruct/metrics.hpp"
#include "topostruct/pipeline.hpp"
#include "topostruct/raster_io.hpp"
#include "topostruct/service.hpp"
#include "topostruct/synth.hpp"

namespace ts = topostruct;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

int serve(const std::string& workspace, int port, const std::string& host) {
  ts::Service service(workspace, env_or("AUTH_TOKEN", ""));
  httplib::Server server;
  ts::mount(server, service);
  std::cerr << "serving " << workspace << " on " << host << ":" << port << "\n";
  if (!server.listen(host, port)) {
    std::cerr << ts::Json{{"error", "IoFailure"}, {"message", "cannot listen on port " + std::to_string(port)}}.dump() << "\n";
    return 1;
  }
  return 0;
}

int metrics(const std::string& pred, const std::string& gt, ts::PatchParams patch) {
  try {
    const auto p = ts::load_mask(pred), g = ts::load_mask(gt);
    std::cout << ts::to_json(ts::evaluate(p, g, patch)).dump(2) << "\n";
    return 0;
  } catch (const ts::Error& e) {
    std::cerr << ts::error_json(e).dump() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persistence-based structure space for likelihood maps"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the batch pipeline from a JSON config");
  std::string config;
  run->add_option("config", config, "Config file")->required();

  auto* srv = app.add_subcommand("serve", "Serve a workspace over HTTP");
  std::string workspace = env_or("WORKSPACE_DIR", "workspace");
  int port = std::atoi(env_or("PORT", "8080").c_str());
  std::string host = "127.0.0.1";
  srv->add_option("--workspace", workspace, "Workspace directory");
  srv->add_option("--port", port, "Port");
  srv->add_option("--host", host, "Bind address");

  auto* met = app.add_subcommand("metrics", "Compare a predicted mask against ground truth");
  std::string pred, gt;
  ts::PatchParams patch;
  met->add_option("--pred", pred, "Predicted mask (PGM)")->required();
  met->add_option("--gt", gt, "Ground-truth mask (PGM)")->required();
  met->add_option("--patch-size", patch.size, "Betti patch size");
  met->add_option("--patches", patch.count, "Betti patch count");
  met->add_option("--seed", patch.seed, "Patch seed");

  auto* syn = app.add_subcommand("synth", "Write a synthetic fixture");
  std::string kind = "line-grid", out_dir = ".", name = "synth";
  std::size_t width = 48, height = 48, spacing = 12;
  double noise = 0.1, peak1 = 1.0, peak2 = 0.8, saddle = 0.6;
  std::uint64_t seed = 0;
  syn->add_option("kind", kind, "two-bump | line-grid | cross")->check(CLI::IsMember({"two-bump", "line-grid", "cross"}));
  syn->add_option("--out", out_dir, "Output directory");
  syn->add_option("--name", name, "Image id");
  syn->add_option("--width", width);
  syn->add_option("--height", height);
  syn->add_option("--spacing", spacing);
  syn->add_option("--noise", noise);
  syn->add_option("--peak1", peak1);
  syn->add_option("--peak2", peak2);
  syn->add_option("--saddle", saddle);
  syn->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  if (*run) return ts::cli_run(config, std::cout, std::cerr);
  if (*srv) return serve(workspace, port, host);
  if (*met) return metrics(pred, gt, patch);

  try {
    const ts::fs::path dir(out_dir);
    ts::fs::create_directories(dir);
    if (kind == "two-bump") {
      const auto tb = ts::two_bump(width, height, peak1, peak2, saddle);
      ts::save_field_raw(tb.field, dir / (name + ".rawf"));
      std::cout << ts::Json{{"expected_persistence", tb.expected_persistence}}.dump() << "\n";
    } else if (kind == "cross") {
      ts::save_field_raw(ts::cross_ridge(width), dir / (name + ".rawf"));
    } else {
      const auto lg = ts::line_grid(width, height, spacing, 0.9, 0.1, noise, seed);
      ts::save_field_raw(lg.field, dir / (name + ".rawf"));
      ts::save_mask(lg.gt, dir / (name + ".gt.pgm"));
      std::cout << ts::Json{{"b0", lg.betti.b0}, {"b1", lg.betti.b1}}.dump() << "\n";
    }
  } catch (const ts::Error& e) {
    std::cerr << ts::error_json(e).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << ts::Json{{"error", "IoFailure"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
