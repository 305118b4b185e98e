#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bruv/core.hpp"

namespace bruv {

inline constexpr double kDefaultSamplingFps = 3.0;
inline constexpr double kDefaultConfThreshold = 0.2;

struct SampledFrame {
  std::int64_t frame_index = 0;
  std::int64_t time_ms = 0;
};

struct SamplingSchedule {
  VideoMeta video;
  double fps = kDefaultSamplingFps;
  std::vector<SampledFrame> frames;

  std::size_t size() const { return frames.size(); }
};

/// Sample times i/fps strictly inside [0, duration). time_ms is rounded to
/// nearest, ties away from zero. Throws std::invalid_argument on fps <= 0.
SamplingSchedule build_schedule(const VideoMeta& video, double fps = kDefaultSamplingFps);

/// Detections grouped by frame_index; one (possibly empty) list per
/// scheduled frame.
using FrameDetections = std::vector<std::vector<Detection>>;

inline constexpr const char* kDetectionFileHeader = "frame_index,time_ms,x1,y1,x2,y2,confidence";

FrameDetections parse_detections(std::istream& in, const SamplingSchedule& schedule,
                                 double conf_threshold = kDefaultConfThreshold);
FrameDetections load_detection_file(const std::filesystem::path& path,
                                    const SamplingSchedule& schedule,
                                    double conf_threshold = kDefaultConfThreshold);
void write_detections(std::ostream& out, const FrameDetections& frames);

/// Fixed six-decimal rendering used by every detection-bearing file.
std::string format_fixed6(double v);

/// A source of raw per-frame detections (a file, a synthetic scene, or an
/// adapter around an external model runner).
class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual std::vector<std::pair<BBox, double>> detect(const std::string& video_id,
                                                      std::int64_t frame_index,
                                                      std::int64_t time_ms) const = 0;
};

/// Runs a backend over a schedule and applies the confidence threshold.
FrameDetections collect_detections(const DetectorBackend& backend,
                                   const SamplingSchedule& schedule,
                                   double conf_threshold = kDefaultConfThreshold);

/// Serves previously computed per-frame detections.
class PrecomputedBackend : public DetectorBackend {
 public:
  explicit PrecomputedBackend(FrameDetections frames) : frames_(std::move(frames)) {}
  std::vector<std::pair<BBox, double>> detect(const std::string& video_id,
                                              std::int64_t frame_index,
                                              std::int64_t time_ms) const override;

 private:
  FrameDetections frames_;
};

// ---- synthetic scenes -------------------------------------------------------

struct Interval {
  std::int64_t begin_ms = 0;
  std::int64_t end_ms = 0;  // exclusive

  bool contains(std::int64_t t) const { return t >= begin_ms && t < end_ms; }
};

/// A scripted animal moving at constant velocity while present.
struct ScriptedActor {
  std::string species;
  std::int64_t entry_ms = 0;
  std::int64_t exit_ms = 0;
  double cx = 0.5, cy = 0.5;  // center at entry
  double vx = 0, vy = 0;      // normalized units per second
  double width = 0.1, height = 0.1;
  double confidence = 0.9;
  double jitter = 0;          // std-dev of emitted center noise
  std::vector<Interval> occlusions;

  BBox box_at(std::int64_t time_ms) const;
  bool visible_at(std::int64_t time_ms) const;
};

/// A false-positive source: a fixed box (algae, debris) or random flicker.
struct ClutterEmitter {
  enum class Kind { fixed, noise };
  Kind kind = Kind::fixed;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  BBox box{0.1, 0.1, 0.2, 0.2};  // fixed only
  double confidence = 0.5;       // fixed only
  double rate = 0.1;             // noise: emission probability per frame
  double min_conf = 0.2, max_conf = 0.5;
  double min_size = 0.02, max_size = 0.08;
};

struct ScenarioSpec {
  VideoMeta video;
  std::vector<ScriptedActor> actors;
  std::vector<ClutterEmitter> clutter;

  /// Throws ValidationError describing the first violated constraint.
  void validate() const;
};

ScenarioSpec parse_scenario(std::istream& in);
ScenarioSpec load_scenario(const std::filesystem::path& path);

struct GroundTruthBox {
  std::int64_t gt_id = 0;
  BBox box;
};

struct SynthesisResult {
  FrameDetections detections;
  /// One per actor that is visible on at least one frame; track_id = actor index + 1.
  std::vector<Track> truth_tracks;
  std::vector<std::vector<GroundTruthBox>> truth_boxes;  // per frame
  std::map<std::string, int> truth_ssmaxn;               // species -> MaxN
};

SynthesisResult synthesize(const ScenarioSpec& spec, const SamplingSchedule& schedule,
                           std::uint64_t seed);

}  // namespace bruv
