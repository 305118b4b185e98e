#include "bruv/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bruv/annotation_store.hpp"
#include "bruv/csv.hpp"
#include "bruv/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bruv {

// ---- configuration ----------------------------------------------------------

void PipelineConfig::validate() const {
  tracker.validate();
  postfilter.validate();
  if (conf_threshold < 0.0 || conf_threshold > 1.0) {
    throw std::invalid_argument("conf_threshold must lie in [0,1]");
  }
  if (!(fps > 0.0)) throw std::invalid_argument("fps must be positive");
}

void set_parameter(PipelineConfig& cfg, const std::string& name, double value) {
  auto& t = cfg.tracker;
  auto& p = cfg.postfilter;
  if (name == "high_conf_thresh") t.high_conf_thresh = value;
  else if (name == "low_conf_floor") t.low_conf_floor = value;
  else if (name == "match_iou_stage1") t.match_iou_stage1 = value;
  else if (name == "match_iou_stage2") t.match_iou_stage2 = value;
  else if (name == "new_track_thresh") t.new_track_thresh = value;
  else if (name == "lost_buffer_frames") t.lost_buffer_frames = static_cast<int>(std::lround(value));
  else if (name == "position_noise_scale") t.position_noise_scale = value;
  else if (name == "velocity_noise_scale") t.velocity_noise_scale = value;
  else if (name == "min_span_s") p.min_span_s = value;
  else if (name == "min_displacement") p.min_displacement = value;
  else if (name == "keep_conf") p.keep_conf = value;
  else if (name == "conf_threshold") cfg.conf_threshold = value;
  else if (name == "fps") cfg.fps = value;
  else throw std::invalid_argument("unknown parameter '" + name + "'");
}

namespace {

json config_to_json(const PipelineConfig& c) {
  return {{"tracker",
           {{"high_conf_thresh", c.tracker.high_conf_thresh},
            {"low_conf_floor", c.tracker.low_conf_floor},
            {"match_iou_stage1", c.tracker.match_iou_stage1},
            {"match_iou_stage2", c.tracker.match_iou_stage2},
            {"new_track_thresh", c.tracker.new_track_thresh},
            {"lost_buffer_frames", c.tracker.lost_buffer_frames},
            {"position_noise_scale", c.tracker.position_noise_scale},
            {"velocity_noise_scale", c.tracker.velocity_noise_scale}}},
          {"postfilter",
           {{"min_span_s", c.postfilter.min_span_s},
            {"min_displacement", c.postfilter.min_displacement},
            {"keep_conf", c.postfilter.keep_conf}}},
          {"conf_threshold", c.conf_threshold},
          {"fps", c.fps}};
}

void apply_config_json(PipelineConfig& cfg, const json& j) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "tracker" || key == "postfilter") {
      if (!value.is_object()) throw ParseError("config: '" + key + "' must be an object");
      for (const auto& [name, v] : value.items()) {
        if (!v.is_number()) throw ParseError("config: '" + key + "." + name + "' must be a number");
        try {
          set_parameter(cfg, name, v.get<double>());
        } catch (const std::invalid_argument& e) {
          throw ParseError(std::string("config: ") + e.what());
        }
      }
    } else if (key == "conf_threshold" || key == "fps") {
      if (!value.is_number()) throw ParseError("config: '" + key + "' must be a number");
      set_parameter(cfg, key, value.get<double>());
    } else {
      throw ParseError("config: unknown key '" + key + "'");
    }
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace

PipelineConfig load_pipeline_config(const fs::path& path, PipelineConfig base) {
  auto in = open_input(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  apply_config_json(base, j);
  base.validate();
  return base;
}

// ---- run directory ----------------------------------------------------------

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::detected: return "detected";
    case Stage::tracked: return "tracked";
    case Stage::filtered: return "filtered";
    case Stage::exported: return "exported";
    case Stage::reconciled: return "reconciled";
    case Stage::maxn: return "maxn";
  }
  return "?";
}

bool VideoRecord::done(Stage s) const {
  return std::find(completed.begin(), completed.end(), s) != completed.end();
}

namespace {

void mark_done(VideoRecord& r, Stage s) {
  if (r.done(s)) return;
  const auto idx = static_cast<std::size_t>(s);
  if (r.completed.size() != idx) {
    throw SequencingError(fmt::format("video {}: stage '{}' completed out of order",
                                      r.video.video_id, stage_name(s)));
  }
  r.completed.push_back(s);
}

}  // namespace

const VideoRecord* RunManifest::find(const std::string& video_id) const {
  for (const auto& v : videos) {
    if (v.video.video_id == video_id) return &v;
  }
  return nullptr;
}

RunManifest read_manifest(const fs::path& run_dir) {
  auto in = open_input(run_dir / "manifest.json");
  RunManifest m;
  try {
    const json j = json::parse(in);
    m.run_id = j.at("run_id").get<std::string>();
    for (const auto& v : j.at("videos")) {
      VideoRecord r;
      const auto& meta = v.at("video");
      r.video = {meta.at("video_id").get<std::string>(), meta.at("duration_ms").get<std::int64_t>(),
                 meta.at("width").get<int>(), meta.at("height").get<int>()};
      const auto& src = v.at("source");
      r.source.kind = src.at("kind").get<std::string>() == "scenario"
                          ? VideoSource::Kind::scenario
                          : VideoSource::Kind::detection_file;
      r.source.path = src.at("path").get<std::string>();
      r.source.seed = src.value("seed", std::uint64_t{0});
      apply_config_json(r.config, v.at("config"));
      const auto& stages = v.at("stages");
      for (Stage s : kStages) {
        if (stages.value(stage_name(s), false)) r.completed.push_back(s);
      }
      for (std::size_t i = 0; i < r.completed.size(); ++i) {
        if (r.completed[i] != kStages[i]) throw ParseError("manifest: stages out of order");
      }
      m.videos.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const fs::path& run_dir, const RunManifest& m) {
  json videos = json::array();
  for (const auto& r : m.videos) {
    json stages = json::object();
    for (Stage s : kStages) stages[stage_name(s)] = r.done(s);
    json src = {{"kind", r.source.kind == VideoSource::Kind::scenario ? "scenario" : "detections"},
                {"path", r.source.path.string()}};
    if (r.source.kind == VideoSource::Kind::scenario) src["seed"] = r.source.seed;
    videos.push_back({{"video",
                       {{"video_id", r.video.video_id},
                        {"duration_ms", r.video.duration_ms},
                        {"width", r.video.frame_width_px},
                        {"height", r.video.frame_height_px}}},
                      {"source", src},
                      {"config", config_to_json(r.config)},
                      {"stages", stages}});
  }
  const json j = {{"run_id", m.run_id}, {"videos", videos}};
  write_text_atomic(run_dir / "manifest.json", j.dump(2) + "\n");
}

fs::path video_dir(const fs::path& run_dir, const std::string& video_id) {
  return run_dir / "videos" / video_id;
}

fs::path tracked_path(const fs::path& run_dir, const std::string& video_id) {
  return video_dir(run_dir, video_id) / "tracked.csv";
}

fs::path annotation_log_path(const fs::path& run_dir) { return run_dir / "annotations.jsonl"; }

fs::path maxn_report_path(const fs::path& run_dir) { return run_dir / "maxn.csv"; }

// ---- commands ---------------------------------------------------------------

std::vector<VideoInput> read_video_list(const fs::path& path) {
  auto in = open_input(path);
  csv::Reader reader(in);
  reader.expect_header("video_id,duration_ms,width,height,detections");
  std::vector<VideoInput> out;
  std::vector<std::string_view> f;
  while (reader.next(f, 5)) {
    const auto line = reader.line();
    VideoInput v;
    v.video.video_id = std::string(f[0]);
    v.video.duration_ms = csv::parse_int(f[1], "duration_ms", line);
    v.video.frame_width_px = static_cast<int>(csv::parse_int(f[2], "width", line));
    v.video.frame_height_px = static_cast<int>(csv::parse_int(f[3], "height", line));
    if (v.video.video_id.empty()) throw ValidationError("empty video_id", line);
    if (v.video.duration_ms < 0 || v.video.frame_width_px <= 0 || v.video.frame_height_px <= 0) {
      throw ValidationError("duration must be >= 0 and dimensions positive", line);
    }
    fs::path det{std::string(f[4])};
    if (det.is_relative()) det = path.parent_path() / det;
    v.source = {VideoSource::Kind::detection_file, det, 0};
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

std::string to_text(const std::vector<Track>& tracks) {
  std::ostringstream os;
  write_tracked_detections(os, tracks);
  return os.str();
}

std::vector<Track> read_tracks_file(const fs::path& path) {
  auto in = open_input(path);
  try {
    return read_tracked_detections(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string summary_text(const PostFilterResult& r, const PostFilterConfig& cfg) {
  std::vector<std::pair<const Track*, bool>> rows;
  for (const auto& t : r.kept) rows.emplace_back(&t, true);
  for (const auto& t : r.removed) rows.emplace_back(&t, false);
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first->track_id < b.first->track_id; });
  std::ostringstream os;
  os << "track_id,first_frame,last_frame,detections,span_s,max_displacement,max_confidence,"
        "suspect,status\n";
  for (const auto& [t, kept] : rows) {
    os << t->track_id << ',' << t->detections.front().frame_index << ','
       << t->detections.back().frame_index << ',' << t->detections.size() << ','
       << fmt::format("{:.3f}", track_span_s(*t)) << ','
       << format_fixed6(track_max_center_displacement(*t)) << ','
       << format_fixed6(t->max_confidence()) << ',' << (is_suspect(*t, cfg) ? 1 : 0) << ','
       << (kept ? "kept" : "removed") << '\n';
  }
  return os.str();
}

SynthesisResult synthesize_source(const VideoSource& src, const SamplingSchedule& schedule) {
  return synthesize(load_scenario(src.path), schedule, src.seed);
}

}  // namespace

std::vector<TruthMotRow> truth_rows(const SynthesisResult& synth, const std::string& video_id) {
  std::vector<TruthMotRow> rows;
  for (std::size_t f = 0; f < synth.truth_boxes.size(); ++f) {
    for (const auto& g : synth.truth_boxes[f]) {
      rows.push_back({video_id, static_cast<std::int64_t>(f), g.gt_id, g.box});
    }
  }
  return rows;
}

AnalyzeSummary cmd_analyze(const AnalyzeOptions& options, const fs::path& run_dir) {
  options.config.validate();
  std::vector<VideoInput> inputs = options.inputs;
  std::set<std::string> ids;
  for (auto& in : inputs) {
    if (in.source.kind == VideoSource::Kind::scenario) in.video = load_scenario(in.source.path).video;
    const auto& id = in.video.video_id;
    if (id.empty() || id == "." || id == ".." || id.find_first_of("/\\,") != std::string::npos) {
      throw ValidationError("video_id '" + id + "' is not usable as a file name");
    }
    if (!ids.insert(id).second) throw ValidationError("duplicate video_id '" + id + "'");
  }

  RunManifest manifest;
  std::error_code ec;
  if (fs::exists(run_dir / "manifest.json")) {
    manifest = read_manifest(run_dir);
  } else if (fs::exists(run_dir, ec) && !fs::is_empty(run_dir, ec)) {
    throw Error("output directory " + run_dir.string() + " is not empty and holds no run");
  } else {
    fs::create_directories(run_dir);
    manifest.run_id = fs::absolute(run_dir).lexically_normal().filename().string();
  }

  AnalyzeSummary summary;
  for (const auto& input : inputs) {
    const VideoMeta& meta = input.video;

    auto it = std::find_if(manifest.videos.begin(), manifest.videos.end(),
                           [&](const VideoRecord& r) { return r.video.video_id == meta.video_id; });
    if (it == manifest.videos.end()) {
      manifest.videos.push_back({meta, input.source, options.config, {}});
      it = std::prev(manifest.videos.end());
    } else if (!(it->config == options.config) || it->source.kind != input.source.kind ||
               it->source.seed != input.source.seed) {
      throw Error(fmt::format("video {}: run was started with different inputs or configuration",
                              meta.video_id));
    }
    VideoRecord& rec = *it;
    const PipelineConfig& cfg = rec.config;
    const auto schedule = build_schedule(rec.video, cfg.fps);
    const fs::path vdir = video_dir(run_dir, rec.video.video_id);
    fs::create_directories(vdir);
    VideoSummary vs{rec.video.video_id};

    // detected
    FrameDetections frames;
    std::optional<SynthesisResult> synth;
    if (rec.source.kind == VideoSource::Kind::scenario) synth = synthesize_source(rec.source, schedule);
    if (!rec.done(Stage::detected)) {
      if (synth) {
        frames = collect_detections(PrecomputedBackend(synth->detections), schedule,
                                    cfg.conf_threshold);
        std::ostringstream mot, maxn;
        write_truth_mot(mot, truth_rows(*synth, rec.video.video_id));
        maxn << kTruthMaxNHeader << '\n';
        for (const auto& [species, n] : synth->truth_ssmaxn) {
          maxn << rec.video.video_id << ',' << species << ',' << n << '\n';
        }
        write_text_atomic(vdir / "truth_mot.csv", mot.str());
        write_text_atomic(vdir / "truth_maxn.csv", maxn.str());
      } else {
        frames = load_detection_file(rec.source.path, schedule, cfg.conf_threshold);
      }
      std::ostringstream os;
      write_detections(os, frames);
      write_text_atomic(vdir / "detections.csv", os.str());
      mark_done(rec, Stage::detected);
      write_manifest(run_dir, manifest);
    } else {
      frames = load_detection_file(vdir / "detections.csv", schedule, 0.0);
    }
    for (const auto& f : frames) vs.detections += f.size();

    // tracked
    std::vector<Track> tracks;
    if (!rec.done(Stage::tracked)) {
      tracks = run_tracker(frames, cfg.tracker);
      write_text_atomic(vdir / "tracks_all.csv", to_text(tracks));
      mark_done(rec, Stage::tracked);
      write_manifest(run_dir, manifest);
    } else {
      tracks = read_tracks_file(vdir / "tracks_all.csv");
    }
    vs.tracks = tracks.size();

    // filtered
    std::vector<Track> kept;
    if (!rec.done(Stage::filtered)) {
      auto filtered = apply_postfilter(tracks, cfg.postfilter);
      write_text_atomic(tracked_path(run_dir, rec.video.video_id), to_text(filtered.kept));
      write_text_atomic(vdir / "track_summary.csv", summary_text(filtered, cfg.postfilter));
      kept = std::move(filtered.kept);
      mark_done(rec, Stage::filtered);
      write_manifest(run_dir, manifest);
    } else {
      kept = read_tracks_file(tracked_path(run_dir, rec.video.video_id));
    }
    vs.kept = kept.size();
    vs.removed = vs.tracks - vs.kept;

    // exported
    if (!rec.done(Stage::exported)) {
      std::unique_ptr<FrameStore> store;
      if (options.frames_dir) {
        store = std::make_unique<DirectoryFrameStore>(*options.frames_dir);
      } else if (synth) {
        store = std::make_unique<SyntheticFrameStore>(rec.video, synth->detections);
      }
      ExportResult exported;
      if (store) {
        exported = export_track_images(kept, *store, run_dir);
      } else {
        fs::create_directories(exported_list_path(run_dir, rec.video.video_id).parent_path());
        write_text_atomic(exported_list_path(run_dir, rec.video.video_id), "");
        if (!kept.empty()) {
          exported.warnings.push_back(fmt::format(
              "video {}: no frame rasters supplied, {} track images skipped", rec.video.video_id,
              kept.size()));
        }
      }
      vs.images = exported.exported.size();
      summary.warnings.insert(summary.warnings.end(), exported.warnings.begin(),
                              exported.warnings.end());
      mark_done(rec, Stage::exported);
      write_manifest(run_dir, manifest);
    } else {
      std::ifstream list(exported_list_path(run_dir, rec.video.video_id));
      for (std::string line; std::getline(list, line);) vs.images += line.empty() ? 0 : 1;
    }
    summary.videos.push_back(vs);
  }
  write_manifest(run_dir, manifest);
  return summary;
}

std::vector<Annotation> gather_verdicts(const fs::path& run_dir, std::vector<std::string>* warnings) {
  auto collected = collect_filesystem_annotations(run_dir);
  if (warnings) {
    warnings->insert(warnings->end(), collected.warnings.begin(), collected.warnings.end());
  }
  const AnnotationStore store(annotation_log_path(run_dir));

  std::map<std::pair<std::string, std::int64_t>, Annotation> merged;
  for (auto& a : collected.annotations) merged.insert_or_assign({a.video_id, a.track_id}, a);

  std::vector<std::string> conflicts;
  for (auto& a : store.latest()) {
    const auto key = std::make_pair(a.video_id, a.track_id);
    auto it = merged.find(key);
    if (it != merged.end() && !(it->second == a)) {
      conflicts.push_back(fmt::format("{}/{}", a.video_id, a.track_id));
      continue;
    }
    merged.insert_or_assign(key, a);
  }
  if (!conflicts.empty()) {
    throw ConflictError(fmt::format(
        "renamed images and stored annotations disagree on tracks: {}", fmt::join(conflicts, ", ")));
  }
  std::vector<Annotation> out;
  for (auto& [key, a] : merged) out.push_back(std::move(a));
  return out;
}

std::vector<Track> load_kept_tracks(const fs::path& run_dir, const std::string& video_id) {
  return read_tracks_file(tracked_path(run_dir, video_id));
}

namespace {

std::vector<Track> reconcile_video(const fs::path& run_dir, const VideoRecord& record,
                                   const std::vector<Annotation>& verdicts) {
  std::vector<Annotation> mine;
  for (const auto& a : verdicts) {
    if (a.video_id == record.video.video_id) mine.push_back(a);
  }
  return reconcile(load_kept_tracks(run_dir, record.video.video_id), mine);
}

}  // namespace

MaxNReport maxn_for_video(const fs::path& run_dir, const VideoRecord& record,
                          const std::vector<Annotation>& verdicts) {
  return compute_ssmaxn(reconcile_video(run_dir, record, verdicts),
                        build_schedule(record.video, record.config.fps));
}

MaxNReport cmd_finalize(const fs::path& run_dir, std::vector<std::string>* warnings) {
  RunManifest manifest = read_manifest(run_dir);
  for (const auto& r : manifest.videos) {
    if (!r.done(Stage::exported)) {
      throw SequencingError(fmt::format("video {}: analysis has not reached the export stage",
                                        r.video.video_id));
    }
  }
  const auto verdicts = gather_verdicts(run_dir, warnings);

  MaxNReport report;
  for (auto& r : manifest.videos) {
    const auto labeled = reconcile_video(run_dir, r, verdicts);
    write_text_atomic(video_dir(run_dir, r.video.video_id) / "labeled.csv", to_text(labeled));
    mark_done(r, Stage::reconciled);
    const auto rows = compute_ssmaxn(labeled, build_schedule(r.video, r.config.fps));
    report.insert(report.end(), rows.begin(), rows.end());
    mark_done(r, Stage::maxn);
  }
  std::sort(report.begin(), report.end(), [](const MaxNRow& a, const MaxNRow& b) {
    return std::tie(a.video_id, a.species) < std::tie(b.video_id, b.species);
  });
  std::ostringstream os;
  write_maxn_report(os, report);
  write_text_atomic(maxn_report_path(run_dir), os.str());
  write_manifest(run_dir, manifest);
  return report;
}

// ---- tuning -----------------------------------------------------------------

GridRunner make_tracking_runner(std::vector<TuningSequence> sequences, const GridSpec& grid,
                                PipelineConfig base) {
  std::vector<std::string> names;
  for (const auto& a : grid.axes) {
    PipelineConfig probe = base;
    set_parameter(probe, a.name, a.values.front());
    names.push_back(a.name);
  }
  return [sequences = std::move(sequences), names = std::move(names),
          base = std::move(base)](const std::vector<double>& values) {
    PipelineConfig cfg = base;
    for (std::size_t i = 0; i < names.size(); ++i) set_parameter(cfg, names[i], values[i]);
    cfg.validate();
    std::vector<MotaResult> parts;
    for (const auto& seq : sequences) {
      FrameDetections dets = seq.detections;
      for (auto& f : dets) {
        std::erase_if(f, [&](const Detection& d) { return d.confidence < cfg.conf_threshold; });
      }
      const auto kept = apply_postfilter(run_tracker(dets, cfg.tracker), cfg.postfilter).kept;
      const auto eval = build_mot_eval(seq.truth, kept, seq.video_id,
                                       static_cast<std::int64_t>(dets.size()));
      MotaResult part;
      try {
        part = mota(eval);
      } catch (const Error&) {
        // A sequence without ground truth contributes only its false positives.
        for (const auto& f : eval.frames) part.fp += static_cast<std::int64_t>(f.predictions.size());
      }
      parts.push_back(part);
    }
    return combine_mota(parts);
  };
}

GridSpec load_grid(const fs::path& path) {
  auto in = open_input(path);
  GridSpec grid;
  try {
    const json j = json::parse(in);
    for (const auto& a : j.at("axes")) {
      grid.axes.push_back({a.at("name").get<std::string>(), a.at("values").get<std::vector<double>>()});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("grid: ") + e.what());
  }
  grid.validate();
  return grid;
}

}  // namespace bruv
