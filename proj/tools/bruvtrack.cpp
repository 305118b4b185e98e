#include <CLI11.hpp>
#include <fmt/format.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "bruv/errors.hpp"
#include "bruv/inpaint.hpp"
#include "bruv/metrics.hpp"
#include "bruv/pipeline.hpp"
#include "bruv/server.hpp"

namespace fs = std::filesystem;
using namespace bruv;

namespace {

std::ifstream open_or_throw(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open " + p.string());
  return in;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

// Optional numeric overrides shared by analyze and tune.
struct Overrides {
  std::optional<double> min_span_s, min_displacement, keep_conf, conf_threshold, fps;
  std::vector<std::string> set;

  void add_to(CLI::App* app) {
    app->add_option("--min-span-s", min_span_s, "Post-filter: tracks shorter than this are suspect");
    app->add_option("--min-displacement", min_displacement,
                    "Post-filter: tracks whose center moves less than this are suspect");
    app->add_option("--keep-conf", keep_conf, "Post-filter: suspects at or above this confidence survive");
    app->add_option("--conf-threshold", conf_threshold, "Drop detections below this confidence");
    app->add_option("--fps", fps, "Sampling rate in frames per second");
    app->add_option("--set", set, "Override any parameter, e.g. --set match_iou_stage1=0.4");
  }

  PipelineConfig apply(PipelineConfig cfg) const {
    if (min_span_s) cfg.postfilter.min_span_s = *min_span_s;
    if (min_displacement) cfg.postfilter.min_displacement = *min_displacement;
    if (keep_conf) cfg.postfilter.keep_conf = *keep_conf;
    if (conf_threshold) cfg.conf_threshold = *conf_threshold;
    if (fps) cfg.fps = *fps;
    for (const auto& kv : set) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects name=value, got " + kv);
      set_parameter(cfg, kv.substr(0, eq), std::stod(kv.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
  }
};

std::vector<VideoInput> gather_inputs(const std::optional<fs::path>& videos,
                                      const std::vector<fs::path>& scenarios, std::uint64_t seed) {
  std::vector<VideoInput> inputs;
  if (videos) inputs = read_video_list(*videos);
  for (const auto& s : scenarios) {
    VideoInput in;
    in.source = {VideoSource::Kind::scenario, fs::absolute(s), seed};
    inputs.push_back(std::move(in));
  }
  if (inputs.empty()) throw std::invalid_argument("no inputs: pass --videos and/or --scenario");
  return inputs;
}

int run_analyze(const std::optional<fs::path>& videos, const std::vector<fs::path>& scenarios,
                std::uint64_t seed, const std::optional<fs::path>& config,
                const std::optional<fs::path>& frames, const fs::path& out, const Overrides& ov) {
  AnalyzeOptions opts;
  opts.inputs = gather_inputs(videos, scenarios, seed);
  opts.config = ov.apply(config ? load_pipeline_config(*config) : PipelineConfig{});
  opts.frames_dir = frames;
  const auto summary = cmd_analyze(opts, out);
  print_warnings(summary.warnings);
  fmt::print("{:<24} {:>10} {:>7} {:>6} {:>8} {:>7}\n", "video", "detections", "tracks", "kept",
             "removed", "images");
  for (const auto& v : summary.videos) {
    fmt::print("{:<24} {:>10} {:>7} {:>6} {:>8} {:>7}\n", v.video_id, v.detections, v.tracks, v.kept,
               v.removed, v.images);
  }
  fmt::print("run written to {}\n", out.string());
  return 0;
}

void print_report(const MaxNReport& report) {
  fmt::print("{:<24} {:<32} {:>5} {:>7} {:>9}\n", "video", "species", "maxn", "frame", "time_ms");
  for (const auto& r : report) {
    fmt::print("{:<24} {:<32} {:>5} {:>7} {:>9}\n", r.video_id, r.species, r.maxn,
               r.frame_index_at_max, r.time_ms_at_max);
  }
}

int run_finalize(const fs::path& run) {
  std::vector<std::string> warnings;
  const auto report = cmd_finalize(run, &warnings);
  print_warnings(warnings);
  print_report(report);
  fmt::print("report written to {}\n", maxn_report_path(run).string());
  return 0;
}

int run_eval_maxn(const fs::path& pred, const fs::path& truth) {
  auto pin = open_or_throw(pred);
  auto tin = open_or_throw(truth);
  const auto acc = maxn_accuracy(compare_maxn(read_maxn_report(pin), read_truth_maxn(tin)));
  print_warnings(acc.warnings);
  for (const auto& [video, a] : acc.per_video) fmt::print("{:<24} {:.4f}\n", video, a);
  fmt::print("mean {:.4f}  sd {:.4f}  videos {}\n", acc.aggregate.mean, acc.aggregate.sd,
             acc.per_video.size());
  return 0;
}

int run_eval_det(const fs::path& truth, const fs::path& pred, double iou_thr, double conf) {
  auto tin = open_or_throw(truth);
  auto pin = open_or_throw(pred);
  const auto eval = read_detection_eval(tin, pin, iou_thr);
  const auto ap = map50(eval);
  print_warnings(ap.warnings);
  for (const auto& [cls, v] : ap.per_class) fmt::print("AP {:<28} {:.4f}\n", cls, v);
  fmt::print("mAP {:.4f}\n", ap.mean);
  const auto prf = detection_prf(eval, conf);
  fmt::print("at confidence >= {}: precision {:.4f}  recall {:.4f}  F1 {:.4f}\n", conf,
             prf.precision, prf.recall, prf.f1);
  return 0;
}

int run_eval_mot(const fs::path& truth, const fs::path& tracked, double iou_thr) {
  auto tin = open_or_throw(truth);
  auto kin = open_or_throw(tracked);
  const auto rows = read_truth_mot(tin);
  const auto tracks = read_tracked_detections(kin);
  std::map<std::string, std::int64_t> frames;
  for (const auto& r : rows) frames[r.video_id] = std::max(frames[r.video_id], r.frame_index + 1);
  for (const auto& t : tracks)
    for (const auto& d : t.detections) frames[d.video_id] = std::max(frames[d.video_id], d.frame_index + 1);

  std::vector<MotaResult> parts;
  fmt::print("{:<24} {:>8} {:>6} {:>6} {:>6} {:>6}\n", "video", "mota", "fp", "fn", "idsw", "gt");
  for (const auto& [video, n] : frames) {
    MotaResult r;
    const auto eval = build_mot_eval(rows, tracks, video, n, iou_thr);
    try {
      r = mota(eval);
    } catch (const Error&) {
      for (const auto& f : eval.frames) r.fp += static_cast<std::int64_t>(f.predictions.size());
      std::cerr << "warning: " << video << ": no ground truth, only false positives counted\n";
    }
    if (r.gt_count) fmt::print("{:<24} {:>8.4f} {:>6} {:>6} {:>6} {:>6}\n", video, r.mota, r.fp, r.fn, r.idsw, r.gt_count);
    parts.push_back(r);
  }
  const auto all = combine_mota(parts);
  fmt::print("{:<24} {:>8.4f} {:>6} {:>6} {:>6} {:>6}\n", "all", all.mota, all.fp, all.fn, all.idsw,
             all.gt_count);
  return 0;
}

int run_tune(const fs::path& grid_path, const std::optional<fs::path>& videos,
             const std::optional<fs::path>& truth, const std::vector<fs::path>& scenarios,
             std::uint64_t seed, const std::optional<fs::path>& config,
             const std::optional<fs::path>& table, const Overrides& ov) {
  const GridSpec grid = load_grid(grid_path);
  const PipelineConfig base = ov.apply(config ? load_pipeline_config(*config) : PipelineConfig{});

  std::vector<TuningSequence> seqs;
  for (const auto& s : scenarios) {
    const auto spec = load_scenario(s);
    const auto sched = build_schedule(spec.video, base.fps);
    const auto synth = synthesize(spec, sched, seed);
    seqs.push_back({spec.video.video_id, synth.detections, truth_rows(synth, spec.video.video_id)});
  }
  if (videos) {
    if (!truth) throw std::invalid_argument("--videos needs --truth with ground-truth MOT rows");
    auto tin = open_or_throw(*truth);
    const auto rows = read_truth_mot(tin);
    for (const auto& in : read_video_list(*videos)) {
      const auto sched = build_schedule(in.video, base.fps);
      seqs.push_back({in.video.video_id, load_detection_file(in.source.path, sched, 0.0), rows});
    }
  }
  if (seqs.empty()) throw std::invalid_argument("no sequences: pass --scenario or --videos");

  const auto result = grid_search(grid, make_tracking_runner(std::move(seqs), grid, base));
  if (table) {
    std::ofstream out(*table);
    if (!out) throw Error("cannot write " + table->string());
    write_grid_table(out, grid, result);
  } else {
    write_grid_table(std::cout, grid, result);
  }
  for (const auto& c : result.table) {
    if (!c.ok) std::cerr << "warning: cell failed: " << c.error << '\n';
  }
  if (!result.best) throw Error("every grid cell failed");
  const auto& best = result.table[*result.best];
  std::string values;
  for (std::size_t i = 0; i < grid.axes.size(); ++i) {
    values += fmt::format("{}{}={}", i ? " " : "", grid.axes[i].name, best.values[i]);
  }
  fmt::print(stderr, "best: {}  mota {:.4f}  idsw {}\n", values, best.result.mota, best.result.idsw);
  return 0;
}

int run_inpaint(const fs::path& in_dir, const fs::path& out_dir, int threshold) {
  if (!fs::is_directory(in_dir)) throw Error(in_dir.string() + " is not a directory");
  if (fs::exists(out_dir) && fs::equivalent(in_dir, out_dir)) {
    throw Error("--out must differ from --in");
  }
  fs::create_directories(out_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::size_t patches = 0;
  for (const auto& f : files) {
    const auto img = read_ppm(f);
    patches += find_bright_components(img, threshold).size();
    write_ppm(out_dir / f.filename(), inpaint(img, threshold));
  }
  fmt::print("{} images, {} patches\n", files.size(), patches);
  return 0;
}

ReviewServer* g_server = nullptr;

int run_serve(const fs::path& run, const std::string& host, int port, const fs::path& species) {
  ReviewServer server(run, species);
  const int bound = server.bind(host, port);
  if (bound < 0) throw Error(fmt::format("cannot bind {}:{}", host, port));
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  fmt::print("serving {} on http://{}:{}/api/videos\n", run.string(), host, bound);
  std::fflush(stdout);
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Track, review and count animals in baited underwater video detections"};
  app.require_subcommand(1);
  std::function<int()> action;

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Detect, track, filter and export track images");
  std::optional<fs::path> a_videos, a_config, a_frames;
  std::vector<fs::path> a_scenarios;
  std::uint64_t a_seed = 0;
  fs::path a_out;
  Overrides a_ov;
  analyze->add_option("--videos", a_videos, "Video list CSV (video_id,duration_ms,width,height,detections)");
  analyze->add_option("--scenario", a_scenarios, "Synthetic scenario JSON (repeatable)");
  analyze->add_option("--seed", a_seed, "Seed for synthetic scenarios");
  analyze->add_option("--config", a_config, "Pipeline configuration JSON");
  analyze->add_option("--frames", a_frames, "Directory of extracted frames <video_id>/<frame>.ppm");
  analyze->add_option("--out", a_out, "Run directory")->required();
  a_ov.add_to(analyze);
  analyze->callback([&] {
    action = [&] { return run_analyze(a_videos, a_scenarios, a_seed, a_config, a_frames, a_out, a_ov); };
  });

  // finalize
  auto* finalize = app.add_subcommand("finalize", "Apply expert verdicts and write the MaxN report");
  fs::path f_run;
  finalize->add_option("--run", f_run, "Run directory")->required();
  finalize->callback([&] { action = [&] { return run_finalize(f_run); }; });

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->require_subcommand(1);
  auto* e_maxn = eval->add_subcommand("maxn", "MaxN accuracy per video");
  fs::path em_pred, em_truth;
  e_maxn->add_option("--pred", em_pred, "MaxN report CSV")->required();
  e_maxn->add_option("--truth", em_truth, "Ground-truth MaxN CSV (video_id,species,maxn)")->required();
  e_maxn->callback([&] { action = [&] { return run_eval_maxn(em_pred, em_truth); }; });

  auto* e_det = eval->add_subcommand("det", "Per-class AP, mAP and precision/recall/F1");
  fs::path ed_truth, ed_pred;
  double ed_iou = 0.5, ed_conf = 0.5;
  e_det->add_option("--truth", ed_truth, "Ground-truth boxes CSV")->required();
  e_det->add_option("--pred", ed_pred, "Predicted boxes CSV")->required();
  e_det->add_option("--iou", ed_iou, "IoU threshold")->capture_default_str();
  e_det->add_option("--conf", ed_conf, "Confidence cut for precision/recall/F1")->capture_default_str();
  e_det->callback([&] { action = [&] { return run_eval_det(ed_truth, ed_pred, ed_iou, ed_conf); }; });

  auto* e_mot = eval->add_subcommand("mot", "CLEAR-MOT accuracy of tracked detections");
  fs::path et_truth, et_tracks;
  double et_iou = 0.5;
  e_mot->add_option("--truth", et_truth, "Ground-truth MOT CSV")->required();
  e_mot->add_option("--tracks", et_tracks, "Tracked detections CSV")->required();
  e_mot->add_option("--iou", et_iou, "IoU threshold")->capture_default_str();
  e_mot->callback([&] { action = [&] { return run_eval_mot(et_truth, et_tracks, et_iou); }; });

  // tune
  auto* tune = app.add_subcommand("tune", "Grid search tracker and post-filter parameters for MOTA");
  fs::path t_grid;
  std::optional<fs::path> t_videos, t_truth, t_config, t_table;
  std::vector<fs::path> t_scenarios;
  std::uint64_t t_seed = 0;
  Overrides t_ov;
  tune->add_option("--grid", t_grid, "Grid JSON {\"axes\": [{\"name\", \"values\"}]}")->required();
  tune->add_option("--scenario", t_scenarios, "Synthetic scenario JSON (repeatable)");
  tune->add_option("--seed", t_seed, "Seed for synthetic scenarios");
  tune->add_option("--videos", t_videos, "Video list CSV with detection files");
  tune->add_option("--truth", t_truth, "Ground-truth MOT CSV for --videos");
  tune->add_option("--config", t_config, "Base pipeline configuration JSON");
  tune->add_option("--table", t_table, "Write the result table here instead of stdout");
  t_ov.add_to(tune);
  tune->callback([&] {
    action = [&] { return run_tune(t_grid, t_videos, t_truth, t_scenarios, t_seed, t_config, t_table, t_ov); };
  });

  // inpaint
  auto* inp = app.add_subcommand("inpaint", "Black out bright burned-in text in PPM frames");
  fs::path i_in, i_out;
  int i_thr = kDefaultBrightThreshold;
  inp->add_option("--in", i_in, "Input directory of .ppm files")->required();
  inp->add_option("--out", i_out, "Output directory")->required();
  inp->add_option("--threshold", i_thr, "Brightness threshold")->capture_default_str()->check(CLI::Range(0, 255));
  inp->callback([&] { action = [&] { return run_inpaint(i_in, i_out, i_thr); }; });

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the review API over a run directory");
  fs::path s_run, s_species;
  std::string s_host = "127.0.0.1";
  int s_port = 8080;
  serve->add_option("--run", s_run, "Run directory")->required();
  serve->add_option("--host", s_host)->capture_default_str();
  serve->add_option("--port", s_port)->capture_default_str();
  serve->add_option("--species", s_species, "Species list, one per line");
  serve->callback([&] { action = [&] { return run_serve(s_run, s_host, s_port, s_species); }; });

  CLI11_PARSE(app, argc, argv);
  try {
    return action ? action() : 1;
  } catch (const std::exception& e) {
    std::cerr << "bruvtrack: error: " << e.what() << '\n';
    return 2;
  }
}
