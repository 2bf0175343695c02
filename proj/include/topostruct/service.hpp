#pragma once

// JSON service over a workspace directory. Each image `<id>` is stored as
// `<id>.pgm` or `<id>.rawf`, with an optional `<id>.gt.pgm` ground truth;
// its proofreading session is persisted to `<id>.session.json`.

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "topostruct/error.hpp"
#include "topostruct/morse.hpp"
#include "topostruct/pipeline.hpp"
#include "topostruct/proofread.hpp"
#include "topostruct/raster_io.hpp"
#include "topostruct/segment.hpp"

namespace topostruct {

using Json = nlohmann::json;

struct Request {
  std::string method;
  std::string path;
  std::string body;
  std::string authorization;  // raw Authorization header value
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Runs of set pixels as [[start, length], ...] over row-major indices.
inline Json rle_mask(const BinaryMask2D& m) {
  Json runs = Json::array();
  std::size_t i = 0;
  while (i < m.size()) {
    if (!m[i]) {
      ++i;
      continue;
    }
    const auto start = i;
    while (i < m.size() && m[i]) ++i;
    runs.push_back({start, i - start});
  }
  return runs;
}

/// Same encoding for a sorted list of pixel indices.
inline Json rle_pixels(const std::vector<std::uint32_t>& px) {
  Json runs = Json::array();
  for (std::size_t i = 0; i < px.size();) {
    std::size_t j = i + 1;
    while (j < px.size() && px[j] == px[j - 1] + 1) ++j;
    runs.push_back({px[i], j - i});
    i = j;
  }
  return runs;
}

inline Json json_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline std::string float_payload_base64(const ScalarField2D& f) {
  std::string bytes(f.size() * 4, '\0');
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto v = static_cast<float>(f[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<char>(bits >> (8 * b) & 0xffu);
  }
  return httplib::detail::base64_encode(bytes);
}

class Service {
 public:
  explicit Service(fs::path workspace, std::string auth_token = {})
      : workspace_(std::move(workspace)), token_(std::move(auth_token)) {}

  const fs::path& workspace() const noexcept { return workspace_; }

  /// Image ids present in the workspace, sorted.
  std::vector<std::string> image_ids() const {
    std::vector<std::string> ids;
    std::error_code ec;
    if (!fs::is_directory(workspace_, ec)) return ids;
    for (const auto& entry : fs::directory_iterator(workspace_, ec)) {
      if (!entry.is_regular_file()) continue;
      const auto name = entry.path().filename().string();
      const auto ext = entry.path().extension().string();
      if (ext != ".pgm" && ext != ".rawf") continue;
      const auto stem = entry.path().stem().string();
      if (stem.size() > 3 && stem.ends_with(".gt")) continue;
      ids.push_back(stem);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  }

  Response handle(const Request& req) {
    if (!token_.empty() && req.authorization != "Bearer " + token_) return error(401, "Unauthorized", "missing or wrong bearer token");
    try {
      const auto parts = split(req.path);
      if (parts.empty() || parts[0] != "images") return error(404, "NotFound", "no route " + req.path);
      if (parts.size() == 1 && req.method == "GET") return list_images();
      if (parts.size() != 3) return error(404, "NotFound", "no route " + req.path);
      auto* img = image(parts[1]);
      if (!img) return error(404, "NotFound", "unknown image " + parts[1]);
      const auto& what = parts[2];
      if (req.method == "GET" && what == "branches") return branches(*img);
      if (req.method == "GET" && what == "segmentation") return segmentation(*img);
      if (req.method == "GET" && what == "uncertainty") return uncertainty(*img);
      if (req.method == "GET" && what == "history") return history(*img);
      if (req.method == "POST" && what == "decisions") return decide(*img, req.body);
      return error(404, "NotFound", "no route " + req.method + " " + req.path);
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::UnknownBranch: return error(404, to_string(e.code()), e.what());
        case Errc::NoOpDecision: return error(409, to_string(e.code()), e.what());
        case Errc::InvalidParams: return error(400, to_string(e.code()), e.what());
        default: return error(500, to_string(e.code()), e.what());
      }
    }
  }

 private:
  struct Image {
    std::string id;
    ScalarField2D field;
    std::optional<BinaryMask2D> gt;
    std::shared_ptr<const SkeletonFamily> family;
    ThresholdDistribution dist;
    std::unique_ptr<ProofreadSession> session;
    std::shared_mutex lock;
  };

  static std::vector<std::string> split(const std::string& path) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < path.size()) {
      while (i < path.size() && path[i] == '/') ++i;
      const auto j = path.find('/', i);
      const auto end = j == std::string::npos ? path.size() : j;
      if (end > i) out.push_back(path.substr(i, end - i));
      i = end;
    }
    return out;
  }

  static Response error(int status, const std::string& code, const std::string& message) {
    return {status, Json{{"error", code}, {"message", message}}.dump()};
  }
  static Response ok(const Json& j) { return {200, j.dump()}; }

  fs::path session_path(const std::string& id) const { return workspace_ / (id + ".session.json"); }

  Image* image(const std::string& id) {
    std::lock_guard guard(images_mutex_);
    if (auto it = images_.find(id); it != images_.end()) return it->second.get();
    const auto ids = image_ids();
    if (!std::binary_search(ids.begin(), ids.end(), id)) return nullptr;

    auto img = std::make_unique<Image>();
    img->id = id;
    const auto raw = workspace_ / (id + ".rawf");
    img->field = load_field(fs::exists(raw) ? raw : workspace_ / (id + ".pgm")).field;
    if (const auto g = workspace_ / (id + ".gt.pgm"); fs::exists(g)) img->gt = load_mask(g);
    img->family = std::make_shared<const SkeletonFamily>(extract_morse_complex(img->field));
    img->dist = kDefaultPrior;
    if (img->gt) {
      const auto binary = binarize(img->field);
      img->dist = fit_threshold_distribution(img->field, *img->gt, *img->family,
                                             [&](const Skeleton& s) { return grow_segmentation(binary, s).mask; });
    }
    if (const auto sp = session_path(id); fs::exists(sp))
      img->session = std::make_unique<ProofreadSession>(
          session_from_json(Json::parse(detail::read_bytes(sp)), img->family, img->field, img->gt));
    else
      img->session = std::make_unique<ProofreadSession>(new_session(img->family, img->field, img->dist, img->gt));
    return (images_[id] = std::move(img)).get();
  }

  Response list_images() {
    Json out = Json::array();
    for (const auto& id : image_ids()) {
      const bool gt = fs::exists(workspace_ / (id + ".gt.pgm"));
      out.push_back({{"id", id}, {"has_gt", gt}});
    }
    return ok(out);
  }

  Response branches(Image& img) {
    std::shared_lock guard(img.lock);
    Json out = Json::array();
    const auto& s = *img.session;
    for (int id : uncertainty_order(*img.family, img.dist)) {
      const auto& b = img.family->branch(id);
      out.push_back({{"id", id},
                     {"persistence", json_real(b.persistence)},
                     {"probability", branch_probability(img.dist, b)},
                     {"uncertainty", branch_uncertainty(img.dist, b)},
                     {"included", s.included(id)},
                     {"decision", to_string(s.decisions()[static_cast<std::size_t>(id)])},
                     {"pixels", rle_pixels(b.pixels)}});
    }
    return ok(out);
  }

  Json segmentation_json(const Image& img) const {
    const auto& s = *img.session;
    const auto v = s.current_voi();
    return {{"width", img.field.width()},
            {"height", img.field.height()},
            {"mask", rle_mask(s.segmentation())},
            {"voi", v ? Json(*v) : Json(nullptr)},
            {"clicks", s.click_log().size()}};
  }

  Response segmentation(Image& img) {
    std::shared_lock guard(img.lock);
    return ok(segmentation_json(img));
  }

  Response uncertainty(Image& img) {
    std::shared_lock guard(img.lock);
    const auto u = analytic_branch_uncertainty(*img.family, img.dist);
    return ok({{"width", img.field.width()},
               {"height", img.field.height()},
               {"encoding", "float32le-base64"},
               {"data", float_payload_base64(u.map)}});
  }

  Response history(Image& img) {
    std::shared_lock guard(img.lock);
    const auto j = session_to_json(*img.session);
    return ok({{"click_log", j["click_log"]}, {"voi_history", j["voi_history"]}});
  }

  Response decide(Image& img, const std::string& body) {
    Json j;
    try {
      j = Json::parse(body);
      if (!j.contains("branch_id") || !j.contains("action")) throw Error(Errc::InvalidParams, "need branch_id and action");
      const int id = j.at("branch_id").get<int>();
      const auto action = parse_action(j.at("action").get<std::string>());
      std::unique_lock guard(img.lock);
      img.session->apply_decision(id, action);
      detail::write_bytes(session_path(img.id), session_to_json(*img.session).dump(2) + "\n");
      return ok(segmentation_json(img));
    } catch (const Json::exception& e) {
      return error(400, "InvalidParams", e.what());
    }
  }

  fs::path workspace_;
  std::string token_;
  std::mutex images_mutex_;
  std::map<std::string, std::unique_ptr<Image>> images_;
};

/// Routes every request of `server` through `service`.
inline void mount(httplib::Server& server, Service& service) {
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = service.handle({req.method, req.path, req.body, req.get_header_value("Authorization")});
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get(R"(/images(/.*)?)", forward);
  server.Post(R"(/images/.*)", forward);
}

}  // namespace topostruct
