#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "bruv/assignment.hpp"
#include "bruv/core.hpp"
#include "bruv/ingest.hpp"
#include "bruv/kalman.hpp"

namespace bruv {

struct TrackerConfig {
  double high_conf_thresh = 0.5;
  double low_conf_floor = 0.2;
  double match_iou_stage1 = 0.3;
  double match_iou_stage2 = 0.5;
  double new_track_thresh = 0.6;
  int lost_buffer_frames = 9;
  double position_noise_scale = 1.0 / 20.0;
  double velocity_noise_scale = 1.0 / 160.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  friend bool operator==(const TrackerConfig&, const TrackerConfig&) = default;
};

/// A track as seen by association: its id and predicted box.
struct PredictedTrack {
  std::int64_t track_id = 0;
  BBox box;
};

struct AssociationResult {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (track index, detection index)
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_detections;
};

/// Two-stage IoU association. High-confidence detections are assigned first
/// against every track; low-confidence ones (>= low_conf_floor) then compete
/// for the remaining tracks under the stricter stage-2 gate. Detections below
/// low_conf_floor are never matched.
AssociationResult associate(const std::vector<PredictedTrack>& tracks,
                            const std::vector<Detection>& detections, const TrackerConfig& cfg);

struct TrackerFrame {
  std::int64_t frame_index = 0;
  std::vector<Detection> detections;
};

class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {});

  /// Processes one sampled frame. Returns, per input detection, the id of the
  /// track it was assigned to, or nullopt if discarded. Throws
  /// SequencingError unless frame_index exceeds every earlier frame.
  std::vector<std::optional<std::int64_t>> step(const TrackerFrame& frame);

  /// Marks every live track finished and returns all finished tracks
  /// ordered by id.
  std::vector<Track> finish();

  const std::vector<Track>& active() const { return active_; }
  const std::vector<Track>& lost() const { return lost_; }
  const std::vector<int>& lost_counters() const { return lost_misses_; }
  std::int64_t next_id() const { return next_id_; }
  const TrackerConfig& config() const { return cfg_; }

 private:
  struct Motion {
    std::int64_t track_id;
    KalmanState state;
  };

  KalmanState& motion_of(std::int64_t track_id);

  TrackerConfig cfg_;
  BoxKalmanFilter filter_;
  std::vector<Track> active_;
  std::vector<Track> lost_;
  std::vector<int> lost_misses_;  // parallel to lost_
  std::vector<Track> finished_;
  std::vector<Motion> motion_;
  std::int64_t next_id_ = 1;
  std::optional<std::int64_t> last_frame_;
};

/// Runs the tracker over every frame in order and returns all tracks.
std::vector<Track> run_tracker(const FrameDetections& frames, const TrackerConfig& cfg);

inline constexpr const char* kTrackedFileHeader =
    "video_id,frame_index,time_ms,track_id,x1,y1,x2,y2,confidence,label";

/// Tracked detections, ordered by (frame_index, track_id). The label column
/// carries the species name once tracks are labeled.
void write_tracked_detections(std::ostream& out, const std::vector<Track>& tracks);
std::vector<Track> read_tracked_detections(std::istream& in);

}  // namespace bruv
