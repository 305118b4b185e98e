#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bruv/analysis.hpp"
#include "bruv/ingest.hpp"
#include "bruv/metrics.hpp"
#include "bruv/postfilter.hpp"
#include "bruv/tracker.hpp"

namespace bruv {

// ---- configuration ----------------------------------------------------------

struct PipelineConfig {
  TrackerConfig tracker;
  PostFilterConfig postfilter;
  double conf_threshold = kDefaultConfThreshold;
  double fps = kDefaultSamplingFps;

  void validate() const;
  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Overrides any subset of fields from a JSON object shaped like
/// {"tracker": {...}, "postfilter": {...}, "conf_threshold": x, "fps": x}.
/// Unknown keys are rejected.
PipelineConfig load_pipeline_config(const std::filesystem::path& path, PipelineConfig base = {});

/// Sets a tracker or post-filter field by name (e.g. "match_iou_stage1",
/// "keep_conf"). Throws std::invalid_argument for unknown names.
void set_parameter(PipelineConfig& cfg, const std::string& name, double value);

// ---- run directory ----------------------------------------------------------

enum class Stage { detected, tracked, filtered, exported, reconciled, maxn };
inline constexpr Stage kStages[] = {Stage::detected, Stage::tracked,    Stage::filtered,
                                    Stage::exported, Stage::reconciled, Stage::maxn};
const char* stage_name(Stage s);

struct VideoSource {
  enum class Kind { detection_file, scenario };
  Kind kind = Kind::detection_file;
  std::filesystem::path path;
  std::uint64_t seed = 0;  // scenario only
};

struct VideoRecord {
  VideoMeta video;
  VideoSource source;
  PipelineConfig config;
  std::vector<Stage> completed;  // always a prefix of kStages

  bool done(Stage s) const;
};

struct RunManifest {
  std::string run_id;
  std::vector<VideoRecord> videos;

  const VideoRecord* find(const std::string& video_id) const;
};

RunManifest read_manifest(const std::filesystem::path& run_dir);
void write_manifest(const std::filesystem::path& run_dir, const RunManifest& manifest);

std::filesystem::path video_dir(const std::filesystem::path& run_dir, const std::string& video_id);
/// Kept tracks after post-filtering, in the tracked-detection format.
std::filesystem::path tracked_path(const std::filesystem::path& run_dir, const std::string& video_id);
std::filesystem::path annotation_log_path(const std::filesystem::path& run_dir);
std::filesystem::path maxn_report_path(const std::filesystem::path& run_dir);

// ---- commands ---------------------------------------------------------------

struct VideoInput {
  VideoMeta video;
  VideoSource source;
};

/// Reads `video_id,duration_ms,width,height,detections` rows; relative
/// detection paths resolve against the list file's directory.
std::vector<VideoInput> read_video_list(const std::filesystem::path& path);

struct AnalyzeOptions {
  std::vector<VideoInput> inputs;
  PipelineConfig config;
  /// Pre-extracted frame rasters (`<dir>/<video_id>/<frame_index>.ppm`).
  /// Scenario inputs fall back to rendered frames when absent.
  std::optional<std::filesystem::path> frames_dir;
};

struct VideoSummary {
  std::string video_id;
  std::size_t detections = 0;
  std::size_t tracks = 0;
  std::size_t kept = 0;
  std::size_t removed = 0;
  std::size_t images = 0;
};

struct AnalyzeSummary {
  std::vector<VideoSummary> videos;
  std::vector<std::string> warnings;
};

/// Detect, track, filter and export images for every input into `run_dir`.
/// Resumes an existing run with the same inputs and configuration, skipping
/// completed stages; refuses a non-empty directory that is not a run.
AnalyzeSummary cmd_analyze(const AnalyzeOptions& options, const std::filesystem::path& run_dir);

/// Merged verdicts from renamed images and the annotation store. Throws
/// ConflictError naming every track on which the two disagree.
std::vector<Annotation> gather_verdicts(const std::filesystem::path& run_dir,
                                        std::vector<std::string>* warnings = nullptr);

/// Kept tracks of one video as written by analyze.
std::vector<Track> load_kept_tracks(const std::filesystem::path& run_dir,
                                    const std::string& video_id);

/// ssMaxN of one video under the given verdicts.
MaxNReport maxn_for_video(const std::filesystem::path& run_dir, const VideoRecord& record,
                          const std::vector<Annotation>& verdicts);

/// Reconciles verdicts, writes labeled detections and `<run>/maxn.csv`.
MaxNReport cmd_finalize(const std::filesystem::path& run_dir,
                        std::vector<std::string>* warnings = nullptr);

// ---- tuning -----------------------------------------------------------------

struct TuningSequence {
  std::string video_id;
  FrameDetections detections;
  std::vector<TruthMotRow> truth;
};

/// Runs tracker and post-filter with the grid's parameters applied on top of
/// `base`, scoring MOTA over all sequences.
GridRunner make_tracking_runner(std::vector<TuningSequence> sequences, const GridSpec& grid,
                                PipelineConfig base);

GridSpec load_grid(const std::filesystem::path& path);

/// Ground-truth rows for a synthetic scene, in the MOT truth format.
std::vector<TruthMotRow> truth_rows(const SynthesisResult& synth, const std::string& video_id);

}  // namespace bruv
