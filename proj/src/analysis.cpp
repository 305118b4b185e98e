#include "bruv/analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "bruv/csv.hpp"
#include "bruv/errors.hpp"

namespace fs = std::filesystem;

namespace bruv {

void write_maxn_report(std::ostream& out, const MaxNReport& report) {
  out << kMaxNFileHeader << '\n';
  for (const auto& r : report) {
    out << r.video_id << ',' << r.species << ',' << r.maxn << ',' << r.frame_index_at_max << ','
        << r.time_ms_at_max << '\n';
  }
}

MaxNReport read_maxn_report(std::istream& in) {
  csv::Reader reader(in);
  reader.expect_header(kMaxNFileHeader);
  MaxNReport out;
  std::vector<std::string_view> f;
  while (reader.next(f, 5)) {
    const auto line = reader.line();
    out.push_back({std::string(f[0]), std::string(f[1]),
                   static_cast<int>(csv::parse_int(f[2], "maxn", line)),
                   csv::parse_int(f[3], "frame_index_at_max", line),
                   csv::parse_int(f[4], "time_ms_at_max", line)});
  }
  return out;
}

fs::path track_image_dir(const fs::path& run_dir, const std::string& video_id) {
  return run_dir / "tracks" / video_id;
}

fs::path track_image_path(const fs::path& run_dir, const std::string& video_id,
                          std::int64_t track_id) {
  return track_image_dir(run_dir, video_id) / (std::to_string(track_id) + ".jpg");
}

fs::path exported_list_path(const fs::path& run_dir, const std::string& video_id) {
  return run_dir / "videos" / video_id / "exported_tracks.txt";
}

const Detection& representative_detection(const Track& t) {
  const Detection* best = &t.detections.front();
  for (const auto& d : t.detections) {
    if (d.confidence > best->confidence) best = &d;
  }
  return *best;
}

std::optional<RasterImage> DirectoryFrameStore::load(const std::string& video_id,
                                                     std::int64_t frame_index) const {
  const fs::path p = root_ / video_id / (std::to_string(frame_index) + ".ppm");
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return std::nullopt;
  try {
    return read_ppm(p);
  } catch (const Error&) {
    return std::nullopt;
  }
}

PixelRect to_pixels(const BBox& box, int width, int height) {
  auto px = [](double v, int extent) {
    return std::clamp(static_cast<int>(std::floor(v * extent)), 0, extent - 1);
  };
  return {px(box.y1, height), px(box.x1, width), px(box.y2, height), px(box.x2, width)};
}

std::optional<RasterImage> SyntheticFrameStore::load(const std::string& video_id,
                                                     std::int64_t frame_index) const {
  if (video_id != video_.video_id || frame_index < 0 ||
      frame_index >= static_cast<std::int64_t>(frames_.size())) {
    return std::nullopt;
  }
  RasterImage img(video_.frame_width_px, video_.frame_height_px, Rgb{18, 60, 92});
  for (const auto& d : frames_[static_cast<std::size_t>(frame_index)]) {
    const PixelRect r = to_pixels(d.box, img.width(), img.height());
    for (int row = r.top; row <= r.bottom; ++row) {
      for (int col = r.left; col <= r.right; ++col) img.at(row, col) = Rgb{150, 160, 170};
    }
  }
  return img;
}

ExportResult export_track_images(const std::vector<Track>& tracks, const FrameStore& frames,
                                 const fs::path& run_dir) {
  std::set<std::string> videos;
  for (const auto& t : tracks) videos.insert(t.video_id());
  for (const auto& v : videos) {
    fs::create_directories(track_image_dir(run_dir, v));
    fs::create_directories(exported_list_path(run_dir, v).parent_path());
  }

  const long long n = static_cast<long long>(tracks.size());
  std::vector<char> written(tracks.size(), 0);
  std::vector<std::string> warning(tracks.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    const Track& t = tracks[static_cast<std::size_t>(i)];
    const Detection& rep = representative_detection(t);
    auto img = frames.load(rep.video_id, rep.frame_index);
    if (!img) {
      warning[i] = fmt::format("video {} track {}: frame {} unavailable, image skipped",
                               rep.video_id, t.track_id, rep.frame_index);
      continue;
    }
    draw_rect(*img, to_pixels(rep.box, img->width(), img->height()), Rgb{255, 64, 0});
    try {
      write_jpeg(track_image_path(run_dir, rep.video_id, t.track_id), *img);
      written[i] = 1;
    } catch (const Error& e) {
      warning[i] = e.what();
    }
  }

  ExportResult result;
  std::map<std::string, std::vector<std::int64_t>> per_video;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (written[i]) {
      result.exported.push_back(tracks[i].track_id);
      per_video[tracks[i].video_id()].push_back(tracks[i].track_id);
    }
    if (!warning[i].empty()) result.warnings.push_back(std::move(warning[i]));
  }
  std::sort(result.exported.begin(), result.exported.end());
  for (const auto& v : videos) {
    auto& ids = per_video[v];
    std::sort(ids.begin(), ids.end());
    std::ofstream out(exported_list_path(run_dir, v));
    for (auto id : ids) out << id << '\n';
  }
  return result;
}

namespace {

std::optional<std::int64_t> parse_track_id(const std::string& s) {
  if (s.empty() || s.size() > 18 ||
      !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  return std::stoll(s);
}

}  // namespace

CollectedAnnotations collect_filesystem_annotations(const fs::path& run_dir) {
  CollectedAnnotations out;
  const fs::path root = run_dir / "tracks";
  std::error_code ec;
  if (!fs::is_directory(root, ec)) return out;

  std::vector<fs::path> video_dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) video_dirs.push_back(e.path());
  }
  std::sort(video_dirs.begin(), video_dirs.end());

  for (const auto& dir : video_dirs) {
    const std::string video_id = dir.filename().string();
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::set<std::int64_t> present;
    std::map<std::int64_t, SpeciesLabel> labels;
    for (const auto& f : files) {
      const std::string name = f.filename().string();
      const auto bad = [&] {
        out.warnings.push_back(
            fmt::format("{}: expected <track_id>.jpg or <track_id>-<species>.jpg", f.string()));
      };
      if (f.extension() != ".jpg") {
        bad();
        continue;
      }
      const std::string stem = f.stem().string();
      const auto dash = stem.find('-');
      const auto id = parse_track_id(stem.substr(0, dash));
      if (!id) {
        bad();
        continue;
      }
      if (dash == std::string::npos) {
        present.insert(*id);
        continue;
      }
      const std::string species = stem.substr(dash + 1);
      if (!SpeciesLabel::is_valid(species)) {
        bad();
        continue;
      }
      if (labels.count(*id)) {
        out.warnings.push_back(fmt::format("{}: track {} already labeled {}, file ignored",
                                           f.string(), *id, labels.at(*id).name()));
        continue;
      }
      labels.emplace(*id, SpeciesLabel(species));
    }

    std::set<std::int64_t> exported;
    std::ifstream list(exported_list_path(run_dir, video_id));
    for (std::string line; std::getline(list, line);) {
      if (auto id = parse_track_id(line)) exported.insert(*id);
    }

    std::set<std::int64_t> ids(exported);
    for (const auto& [id, label] : labels) ids.insert(id);
    for (auto id : ids) {
      if (auto it = labels.find(id); it != labels.end()) {
        out.annotations.push_back(Annotation::labeled(video_id, id, it->second));
      } else if (!present.count(id)) {
        out.annotations.push_back(Annotation::rejected(video_id, id));
      }
    }
  }
  return out;
}

std::vector<Track> reconcile(const std::vector<Track>& tracks,
                             const std::vector<Annotation>& annotations) {
  std::map<std::pair<std::string, std::int64_t>, const Annotation*> latest;
  std::set<std::pair<std::string, std::int64_t>> known;
  for (const auto& t : tracks) known.insert({t.video_id(), t.track_id});

  std::vector<std::string> unknown;
  for (const auto& a : annotations) {
    const auto key = std::make_pair(a.video_id, a.track_id);
    if (!known.count(key)) {
      unknown.push_back(fmt::format("{}/{}", a.video_id, a.track_id));
      continue;
    }
    latest[key] = &a;
  }
  if (!unknown.empty()) {
    throw ValidationError(fmt::format("annotations reference unknown tracks: {}",
                                      fmt::join(unknown, ", ")));
  }

  std::vector<Track> out;
  for (const auto& t : tracks) {
    auto it = latest.find({t.video_id(), t.track_id});
    if (it != latest.end() && it->second->verdict == Verdict::rejected) continue;
    Track labeled = t;
    labeled.rejected = false;
    labeled.label = it != latest.end() ? *it->second->species : SpeciesLabel::unclassified();
    out.push_back(std::move(labeled));
  }
  return out;
}

MaxNReport compute_ssmaxn(const std::vector<Track>& labeled_tracks,
                          const SamplingSchedule& schedule) {
  const auto& video_id = schedule.video.video_id;
  // species -> frame_index -> detections on that frame
  std::map<std::string, std::map<std::int64_t, int>> counts;
  for (const auto& t : labeled_tracks) {
    if (t.rejected || t.detections.empty() || t.video_id() != video_id) continue;
    const std::string species = t.label ? t.label->name() : SpeciesLabel::unclassified().name();
    auto& per_frame = counts[species];
    for (const auto& d : t.detections) ++per_frame[d.frame_index];
  }

  MaxNReport report;
  for (const auto& [species, per_frame] : counts) {
    MaxNRow row{video_id, species, 0, 0, 0};
    for (const auto& [frame, n] : per_frame) {
      if (n > row.maxn) {
        row.maxn = n;
        row.frame_index_at_max = frame;
      }
    }
    if (row.maxn == 0) continue;
    const auto fi = static_cast<std::size_t>(row.frame_index_at_max);
    row.time_ms_at_max = fi < schedule.frames.size()
                             ? schedule.frames[fi].time_ms
                             : std::llround(static_cast<double>(fi) * 1000.0 / schedule.fps);
    report.push_back(std::move(row));
  }
  return report;
}

}  // namespace bruv
