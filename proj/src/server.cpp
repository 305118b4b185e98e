#include "bruv/server.hpp"

#include <fmt/format.h>

#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>

#include "bruv/annotation_store.hpp"
#include "bruv/errors.hpp"
#include "bruv/pipeline.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that breaks Eigen headers.
#include <httplib.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace bruv {

struct ReviewServer::Impl {
  fs::path run_dir;
  RunManifest manifest;
  std::map<std::string, std::vector<Track>> tracks;  // kept tracks per video
  std::vector<std::string> species;
  AnnotationStore store;
  httplib::Server http;

  Impl(fs::path dir, const fs::path& species_list)
      : run_dir(std::move(dir)), manifest(read_manifest(run_dir)),
        store(annotation_log_path(run_dir)) {
    for (const auto& r : manifest.videos) {
      if (!r.done(Stage::exported)) {
        throw SequencingError("video " + r.video.video_id + " has not been exported yet");
      }
      tracks[r.video.video_id] = load_kept_tracks(run_dir, r.video.video_id);
    }
    if (!species_list.empty()) {
      std::ifstream in(species_list);
      if (!in) throw Error("cannot open species list " + species_list.string());
      for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (SpeciesLabel::is_valid(line)) species.push_back(line);
      }
    }
    routes();
  }

  const Track* find_track(const std::string& video, std::int64_t id) const {
    auto it = tracks.find(video);
    if (it == tracks.end()) return nullptr;
    for (const auto& t : it->second) {
      if (t.track_id == id) return &t;
    }
    return nullptr;
  }

  // Store verdicts layered over filesystem ones; the store wins per track.
  std::map<std::pair<std::string, std::int64_t>, Annotation> verdict_view() const {
    std::map<std::pair<std::string, std::int64_t>, Annotation> view;
    for (auto& a : collect_filesystem_annotations(run_dir).annotations) {
      view.insert_or_assign({a.video_id, a.track_id}, a);
    }
    for (auto& a : store.latest()) view.insert_or_assign({a.video_id, a.track_id}, a);
    return view;
  }

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message,
                         json fields = json::object()) {
    send_json(res, status, {{"error", message}, {"fields", std::move(fields)}});
  }

  static std::optional<std::int64_t> parse_id(const std::string& s) {
    if (s.empty() || s.size() > 18) return std::nullopt;
    for (char c : s) {
      if (c < '0' || c > '9') return std::nullopt;
    }
    return std::stoll(s);
  }

  static json verdict_json(const std::optional<Annotation>& a) {
    if (!a) return {{"verdict", "unreviewed"}, {"species", nullptr}};
    if (a->verdict == Verdict::rejected) return {{"verdict", "rejected"}, {"species", nullptr}};
    return {{"verdict", "labeled"}, {"species", a->species->name()}};
  }

  void routes() {
    http.Get("/api/videos", [this](const httplib::Request&, httplib::Response& res) {
      const auto view = verdict_view();
      json videos = json::array();
      for (const auto& r : manifest.videos) {
        const auto& list = tracks.at(r.video.video_id);
        int labeled = 0, rejected = 0;
        for (const auto& t : list) {
          auto it = view.find({r.video.video_id, t.track_id});
          if (it == view.end()) continue;
          (it->second.verdict == Verdict::labeled ? labeled : rejected)++;
        }
        videos.push_back({{"video_id", r.video.video_id},
                          {"duration_ms", r.video.duration_ms},
                          {"track_count", list.size()},
                          {"reviewed", labeled + rejected},
                          {"labeled", labeled},
                          {"rejected", rejected}});
      }
      send_json(res, 200, {{"videos", videos}});
    });

    http.Get(R"(/api/videos/([^/]+)/tracks)", [this](const httplib::Request& req,
                                                     httplib::Response& res) {
      const std::string video = req.matches[1];
      auto it = tracks.find(video);
      if (it == tracks.end()) return send_error(res, 404, "unknown video '" + video + "'");
      const auto view = verdict_view();
      json list = json::array();
      for (const auto& t : it->second) {
        auto v = view.find({video, t.track_id});
        json card = {{"track_id", t.track_id},
                     {"first_frame", t.detections.front().frame_index},
                     {"last_frame", t.detections.back().frame_index},
                     {"detections", t.detections.size()},
                     {"span_s", track_span_s(t)},
                     {"max_confidence", t.max_confidence()},
                     {"image_url", fmt::format("/api/tracks/{}/{}/image", video, t.track_id)}};
        card.update(verdict_json(v == view.end() ? std::nullopt : std::optional(v->second)));
        list.push_back(std::move(card));
      }
      send_json(res, 200, {{"video_id", video}, {"tracks", list}});
    });

    http.Get(R"(/api/tracks/([^/]+)/([^/]+)/image)", [this](const httplib::Request& req,
                                                           httplib::Response& res) {
      const std::string video = req.matches[1];
      const auto id = parse_id(req.matches[2]);
      if (!id || !find_track(video, *id)) return send_error(res, 404, "unknown track");
      // The file may have been renamed to carry a species.
      fs::path image = track_image_path(run_dir, video, *id);
      std::error_code ec;
      if (!fs::exists(image, ec)) {
        image.clear();
        const std::string prefix = std::to_string(*id) + "-";
        if (fs::is_directory(track_image_dir(run_dir, video), ec)) {
          for (const auto& e : fs::directory_iterator(track_image_dir(run_dir, video))) {
            if (e.path().filename().string().rfind(prefix, 0) == 0) image = e.path();
          }
        }
      }
      if (image.empty()) return send_error(res, 404, "no image for this track");
      std::ifstream in(image, std::ios::binary);
      std::ostringstream bytes;
      bytes << in.rdbuf();
      res.status = 200;
      res.set_content(bytes.str(), "image/jpeg");
    });

    http.Put(R"(/api/tracks/([^/]+)/([^/]+)/annotation)", [this](const httplib::Request& req,
                                                                httplib::Response& res) {
      const std::string video = req.matches[1];
      const auto id = parse_id(req.matches[2]);
      if (!id || !find_track(video, *id)) return send_error(res, 404, "unknown track");

      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error&) {
        return send_error(res, 400, "body is not valid JSON");
      }
      if (!body.is_object()) return send_error(res, 400, "body must be a JSON object");
      json fields = json::object();
      const auto verdict_it = body.find("verdict");
      if (verdict_it == body.end() || !verdict_it->is_string()) {
        fields["verdict"] = "required: 'labeled' or 'rejected'";
        return send_error(res, 400, "malformed annotation", fields);
      }
      const auto verdict = verdict_it->get<std::string>();
      const auto species_it = body.find("species");
      if (verdict == "rejected") {
        if (species_it != body.end() && !species_it->is_null()) {
          fields["species"] = "must be absent when the verdict is 'rejected'";
          return send_error(res, 400, "malformed annotation", fields);
        }
      } else if (verdict == "labeled") {
        if (species_it == body.end() || !species_it->is_string()) {
          fields["species"] = "required string when the verdict is 'labeled'";
          return send_error(res, 400, "malformed annotation", fields);
        }
        if (!SpeciesLabel::is_valid(species_it->get<std::string>())) {
          fields["species"] = "must match [a-z0-9_]+";
          return send_error(res, 422, "invalid species label", fields);
        }
      } else {
        fields["verdict"] = "must be 'labeled' or 'rejected'";
        return send_error(res, 400, "malformed annotation", fields);
      }

      const Annotation a =
          verdict == "labeled"
              ? Annotation::labeled(video, *id, SpeciesLabel(species_it->get<std::string>()))
              : Annotation::rejected(video, *id);
      AnnotationStore::Record rec;
      try {
        rec = store.append(a);
      } catch (const Error& e) {
        return send_error(res, 500, e.what());
      }
      json out = {{"video_id", video}, {"track_id", *id}, {"seq", rec.seq},
                  {"timestamp_ms", rec.timestamp_ms}};
      out.update(verdict_json(a));
      send_json(res, 200, out);
    });

    http.Get(R"(/api/videos/([^/]+)/maxn)", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
      const std::string video = req.matches[1];
      const VideoRecord* record = manifest.find(video);
      if (!record) return send_error(res, 404, "unknown video '" + video + "'");
      MaxNReport report;
      try {
        report = maxn_for_video(run_dir, *record, gather_verdicts(run_dir));
      } catch (const ConflictError& e) {
        return send_error(res, 409, e.what());
      }
      json rows = json::array();
      for (const auto& r : report) {
        rows.push_back({{"species", r.species},
                        {"maxn", r.maxn},
                        {"frame_index_at_max", r.frame_index_at_max},
                        {"time_ms_at_max", r.time_ms_at_max}});
      }
      send_json(res, 200, {{"video_id", video}, {"rows", rows}});
    });

    http.Get("/api/species", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"species", species}});
    });
  }
};

ReviewServer::ReviewServer(fs::path run_dir, fs::path species_list)
    : impl_(std::make_unique<Impl>(std::move(run_dir), species_list)) {}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool ReviewServer::listen() { return impl_->http.listen_after_bind(); }

void ReviewServer::stop() {
  if (impl_) impl_->http.stop();
}

}  // namespace bruv
