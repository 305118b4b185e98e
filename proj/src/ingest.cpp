#include "bruv/ingest.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string_view>

#include "bruv/csv.hpp"
#include "bruv/errors.hpp"

namespace bruv {

SamplingSchedule build_schedule(const VideoMeta& video, double fps) {
  if (!(fps > 0.0) || !std::isfinite(fps)) {
    throw std::invalid_argument("sampling fps must be positive, got " + std::to_string(fps));
  }
  SamplingSchedule s{video, fps, {}};
  const auto duration = static_cast<double>(video.duration_ms);
  for (std::int64_t i = 0;; ++i) {
    const double t_ms = static_cast<double>(i) * 1000.0 / fps;
    if (!(t_ms < duration)) break;
    s.frames.push_back({i, std::llround(t_ms)});
  }
  return s;
}

std::string format_fixed6(double v) { return fmt::format("{:.6f}", v); }


FrameDetections parse_detections(std::istream& in, const SamplingSchedule& schedule,
                                 double conf_threshold) {
  FrameDetections frames(schedule.size());
  csv::Reader reader(in);
  reader.expect_header(kDetectionFileHeader);
  std::vector<std::string_view> f;
  while (reader.next(f, 7)) {
    const auto line_no = reader.line();
    Detection d;
    d.video_id = schedule.video.video_id;
    d.frame_index = csv::parse_int(f[0], "frame_index", line_no);
    d.time_ms = csv::parse_int(f[1], "time_ms", line_no);
    d.box = {csv::parse_fixed6(f[2], "x1", line_no), csv::parse_fixed6(f[3], "y1", line_no),
             csv::parse_fixed6(f[4], "x2", line_no), csv::parse_fixed6(f[5], "y2", line_no)};
    d.confidence = csv::parse_fixed6(f[6], "confidence", line_no);

    if (d.frame_index < 0 || d.frame_index >= static_cast<std::int64_t>(schedule.size())) {
      throw RangeError(fmt::format("frame_index {} outside schedule of {} frames", d.frame_index,
                                   schedule.size()),
                       line_no);
    }
    if (!d.box.valid()) {
      throw ValidationError("box must satisfy 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1", line_no);
    }
    if (d.confidence < 0.0 || d.confidence > 1.0) {
      throw ValidationError("confidence outside [0,1]", line_no);
    }
    if (d.confidence < conf_threshold) continue;
    frames[static_cast<std::size_t>(d.frame_index)].push_back(std::move(d));
  }
  return frames;
}

FrameDetections load_detection_file(const std::filesystem::path& path,
                                    const SamplingSchedule& schedule, double conf_threshold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open detection file " + path.string());
  return parse_detections(in, schedule, conf_threshold);
}

void write_detections(std::ostream& out, const FrameDetections& frames) {
  out << kDetectionFileHeader << '\n';
  for (const auto& frame : frames) {
    for (const auto& d : frame) {
      out << d.frame_index << ',' << d.time_ms << ',' << format_fixed6(d.box.x1) << ','
          << format_fixed6(d.box.y1) << ',' << format_fixed6(d.box.x2) << ','
          << format_fixed6(d.box.y2) << ',' << format_fixed6(d.confidence) << '\n';
    }
  }
}

std::vector<std::pair<BBox, double>> PrecomputedBackend::detect(const std::string&,
                                                                std::int64_t frame_index,
                                                                std::int64_t) const {
  std::vector<std::pair<BBox, double>> out;
  if (frame_index < 0 || frame_index >= static_cast<std::int64_t>(frames_.size())) return out;
  for (const auto& d : frames_[static_cast<std::size_t>(frame_index)]) {
    out.emplace_back(d.box, d.confidence);
  }
  return out;
}

FrameDetections collect_detections(const DetectorBackend& backend,
                                   const SamplingSchedule& schedule, double conf_threshold) {
  FrameDetections frames(schedule.size());
  for (const auto& f : schedule.frames) {
    for (const auto& [box, conf] : backend.detect(schedule.video.video_id, f.frame_index, f.time_ms)) {
      if (conf < conf_threshold) continue;
      frames[static_cast<std::size_t>(f.frame_index)].push_back(
          {schedule.video.video_id, f.frame_index, f.time_ms, box, conf});
    }
  }
  return frames;
}

// ---- synthetic scenes -------------------------------------------------------

BBox ScriptedActor::box_at(std::int64_t time_ms) const {
  const double dt = static_cast<double>(time_ms - entry_ms) / 1000.0;
  return BBox::from_center(cx + vx * dt, cy + vy * dt, width, height);
}

bool ScriptedActor::visible_at(std::int64_t time_ms) const {
  if (time_ms < entry_ms || time_ms >= exit_ms) return false;
  return std::none_of(occlusions.begin(), occlusions.end(),
                      [&](const Interval& o) { return o.contains(time_ms); });
}

void ScenarioSpec::validate() const {
  if (video.duration_ms < 0) throw ValidationError("video duration_ms must be >= 0");
  if (video.frame_width_px <= 0 || video.frame_height_px <= 0) {
    throw ValidationError("video dimensions must be positive");
  }
  auto inside = [](const BBox& b) {
    constexpr double eps = 1e-12;
    return b.x1 >= -eps && b.y1 >= -eps && b.x2 <= 1.0 + eps && b.y2 <= 1.0 + eps;
  };
  for (std::size_t i = 0; i < actors.size(); ++i) {
    const auto& a = actors[i];
    const auto where = fmt::format("actor {}: ", i);
    if (!SpeciesLabel::is_valid(a.species)) throw ValidationError(where + "invalid species");
    if (a.entry_ms >= a.exit_ms) throw ValidationError(where + "entry_ms must precede exit_ms");
    if (!(a.width > 0.0 && a.height > 0.0)) throw ValidationError(where + "size must be positive");
    if (a.confidence < 0.0 || a.confidence > 1.0) {
      throw ValidationError(where + "confidence outside [0,1]");
    }
    if (a.jitter < 0.0) throw ValidationError(where + "jitter must be >= 0");
    // Linear motion: the extremes of the path are its endpoints.
    if (!inside(a.box_at(a.entry_ms)) || !inside(a.box_at(a.exit_ms))) {
      throw ValidationError(where + "box leaves the frame during its lifetime");
    }
  }
  for (std::size_t i = 0; i < clutter.size(); ++i) {
    const auto& c = clutter[i];
    const auto where = fmt::format("clutter {}: ", i);
    if (c.start_ms > c.end_ms) throw ValidationError(where + "start_ms after end_ms");
    if (c.kind == ClutterEmitter::Kind::fixed) {
      if (!c.box.valid()) throw ValidationError(where + "invalid box");
      if (c.confidence < 0.0 || c.confidence > 1.0) {
        throw ValidationError(where + "confidence outside [0,1]");
      }
    } else {
      if (c.rate < 0.0 || c.rate > 1.0) throw ValidationError(where + "rate outside [0,1]");
      if (c.min_conf < 0.0 || c.max_conf > 1.0 || c.min_conf > c.max_conf) {
        throw ValidationError(where + "invalid confidence range");
      }
      if (!(c.min_size > 0.0) || c.max_size > 1.0 || c.min_size > c.max_size) {
        throw ValidationError(where + "invalid size range");
      }
    }
  }
}

namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

}  // namespace

ScenarioSpec parse_scenario(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  ScenarioSpec s;
  try {
    const auto& v = j.at("video");
    s.video.video_id = v.at("video_id").get<std::string>();
    s.video.duration_ms = v.at("duration_ms").get<std::int64_t>();
    s.video.frame_width_px = get_or(v, "width", 640);
    s.video.frame_height_px = get_or(v, "height", 360);

    for (const auto& a : j.value("actors", json::array())) {
      ScriptedActor act;
      act.species = a.at("species").get<std::string>();
      act.entry_ms = a.at("entry_ms").get<std::int64_t>();
      act.exit_ms = a.at("exit_ms").get<std::int64_t>();
      const auto c = a.at("center").get<std::vector<double>>();
      const auto sz = a.at("size").get<std::vector<double>>();
      const auto vel = get_or(a, "velocity", std::vector<double>{0.0, 0.0});
      if (c.size() != 2 || sz.size() != 2 || vel.size() != 2) {
        throw ParseError("scenario: center, size and velocity take two numbers");
      }
      act.cx = c[0], act.cy = c[1];
      act.width = sz[0], act.height = sz[1];
      act.vx = vel[0], act.vy = vel[1];
      act.confidence = get_or(a, "confidence", 0.9);
      act.jitter = get_or(a, "jitter", 0.0);
      for (const auto& o : a.value("occlusions", json::array())) {
        act.occlusions.push_back({o.at(0).get<std::int64_t>(), o.at(1).get<std::int64_t>()});
      }
      s.actors.push_back(std::move(act));
    }

    for (const auto& c : j.value("clutter", json::array())) {
      ClutterEmitter e;
      const auto kind = c.at("kind").get<std::string>();
      if (kind == "fixed") {
        e.kind = ClutterEmitter::Kind::fixed;
      } else if (kind == "noise") {
        e.kind = ClutterEmitter::Kind::noise;
      } else {
        throw ParseError("scenario: clutter kind must be 'fixed' or 'noise', got '" + kind + "'");
      }
      e.start_ms = get_or<std::int64_t>(c, "start_ms", 0);
      e.end_ms = get_or<std::int64_t>(c, "end_ms", s.video.duration_ms);
      if (e.kind == ClutterEmitter::Kind::fixed) {
        const auto b = c.at("box").get<std::vector<double>>();
        if (b.size() != 4) throw ParseError("scenario: clutter box takes four numbers");
        e.box = {b[0], b[1], b[2], b[3]};
        e.confidence = get_or(c, "confidence", 0.5);
      } else {
        e.rate = get_or(c, "rate", 0.1);
        const auto cr = get_or(c, "confidence_range", std::vector<double>{0.2, 0.5});
        const auto sr = get_or(c, "size_range", std::vector<double>{0.02, 0.08});
        if (cr.size() != 2 || sr.size() != 2) throw ParseError("scenario: ranges take two numbers");
        e.min_conf = cr[0], e.max_conf = cr[1];
        e.min_size = sr[0], e.max_size = sr[1];
      }
      s.clutter.push_back(e);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file " + path.string());
  return parse_scenario(in);
}

SynthesisResult synthesize(const ScenarioSpec& spec, const SamplingSchedule& schedule,
                           std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SynthesisResult out;
  out.detections.resize(schedule.size());
  out.truth_boxes.resize(schedule.size());
  std::vector<Track> truth(spec.actors.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i].track_id = static_cast<std::int64_t>(i) + 1;
    truth[i].status = TrackStatus::finished;
    truth[i].label = SpeciesLabel(spec.actors[i].species);
  }

  const auto& vid = schedule.video.video_id;
  for (const auto& f : schedule.frames) {
    auto& emitted = out.detections[static_cast<std::size_t>(f.frame_index)];
    std::map<std::string, int> per_species;

    for (std::size_t i = 0; i < spec.actors.size(); ++i) {
      const auto& a = spec.actors[i];
      if (!a.visible_at(f.time_ms)) continue;
      const BBox exact = a.box_at(f.time_ms);
      truth[i].detections.push_back({vid, f.frame_index, f.time_ms, exact, 1.0});
      out.truth_boxes[static_cast<std::size_t>(f.frame_index)].push_back(
          {truth[i].track_id, exact});
      ++per_species[a.species];

      BBox seen = exact;
      if (a.jitter > 0.0) {
        const double dx = std::clamp(a.jitter * unit_normal(rng), -seen.x1, 1.0 - seen.x2);
        const double dy = std::clamp(a.jitter * unit_normal(rng), -seen.y1, 1.0 - seen.y2);
        seen = {seen.x1 + dx, seen.y1 + dy, seen.x2 + dx, seen.y2 + dy};
      }
      seen = {std::clamp(seen.x1, 0.0, 1.0), std::clamp(seen.y1, 0.0, 1.0),
              std::clamp(seen.x2, 0.0, 1.0), std::clamp(seen.y2, 0.0, 1.0)};
      emitted.push_back({vid, f.frame_index, f.time_ms, seen, a.confidence});
    }

    for (const auto& c : spec.clutter) {
      if (f.time_ms < c.start_ms || f.time_ms >= c.end_ms) continue;
      if (c.kind == ClutterEmitter::Kind::fixed) {
        emitted.push_back({vid, f.frame_index, f.time_ms, c.box, c.confidence});
        continue;
      }
      if (unit(rng) >= c.rate) continue;
      const double w = c.min_size + (c.max_size - c.min_size) * unit(rng);
      const double h = c.min_size + (c.max_size - c.min_size) * unit(rng);
      const double x1 = (1.0 - w) * unit(rng);
      const double y1 = (1.0 - h) * unit(rng);
      const double conf = c.min_conf + (c.max_conf - c.min_conf) * unit(rng);
      emitted.push_back({vid, f.frame_index, f.time_ms, {x1, y1, x1 + w, y1 + h}, conf});
    }

    for (const auto& [species, n] : per_species) {
      auto& best = out.truth_ssmaxn[species];
      best = std::max(best, n);
    }
  }

  for (auto& t : truth) {
    if (!t.detections.empty()) out.truth_tracks.push_back(std::move(t));
  }
  return out;
}

}  // namespace bruv
