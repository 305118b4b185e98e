#include "bruv/tracker.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include "bruv/csv.hpp"
#include "bruv/errors.hpp"

namespace bruv {

void TrackerConfig::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument(fmt::format("tracker: {} must lie in [0,1], got {}", name, v));
    }
  };
  unit(high_conf_thresh, "high_conf_thresh");
  unit(low_conf_floor, "low_conf_floor");
  unit(match_iou_stage1, "match_iou_stage1");
  unit(match_iou_stage2, "match_iou_stage2");
  unit(new_track_thresh, "new_track_thresh");
  if (low_conf_floor > high_conf_thresh) {
    throw std::invalid_argument("tracker: low_conf_floor must not exceed high_conf_thresh");
  }
  if (lost_buffer_frames < 0) throw std::invalid_argument("tracker: lost_buffer_frames must be >= 0");
  if (!(position_noise_scale > 0.0) || !(velocity_noise_scale > 0.0)) {
    throw std::invalid_argument("tracker: noise scales must be positive");
  }
}

namespace {

// Assigns `dets` (indices into `detections`) to `tracks` (indices into
// `all_tracks`) with IoU gating at `min_iou`.
void match_stage(const std::vector<PredictedTrack>& all_tracks,
                 const std::vector<Detection>& detections, std::vector<std::size_t>& tracks,
                 std::vector<std::size_t>& dets, double min_iou,
                 std::vector<std::pair<std::size_t, std::size_t>>& matches) {
  if (tracks.empty() || dets.empty()) return;
  CostMatrix cost(tracks.size(), dets.size());
  for (std::size_t r = 0; r < tracks.size(); ++r) {
    for (std::size_t c = 0; c < dets.size(); ++c) {
      const double o = iou(all_tracks[tracks[r]].box, detections[dets[c]].box);
      cost(r, c) = o >= min_iou ? 1.0 - o : 2.0;
    }
  }
  const Assignment a = assign_with_limit(cost, 1.0 - min_iou);
  for (const auto& [r, c] : a.pairs) matches.emplace_back(tracks[r], dets[c]);

  std::vector<std::size_t> rest_tracks, rest_dets;
  for (auto r : a.unmatched_rows) rest_tracks.push_back(tracks[r]);
  for (auto c : a.unmatched_cols) rest_dets.push_back(dets[c]);
  tracks = std::move(rest_tracks);
  dets = std::move(rest_dets);
}

}  // namespace

AssociationResult associate(const std::vector<PredictedTrack>& tracks,
                            const std::vector<Detection>& detections, const TrackerConfig& cfg) {
  AssociationResult out;
  std::vector<std::size_t> open_tracks(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) open_tracks[i] = i;

  std::vector<std::size_t> high, low;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const double conf = detections[i].confidence;
    if (conf >= cfg.high_conf_thresh) {
      high.push_back(i);
    } else if (conf >= cfg.low_conf_floor) {
      low.push_back(i);
    } else {
      out.unmatched_detections.push_back(i);
    }
  }

  match_stage(tracks, detections, open_tracks, high, cfg.match_iou_stage1, out.matches);
  match_stage(tracks, detections, open_tracks, low, cfg.match_iou_stage2, out.matches);

  out.unmatched_tracks = std::move(open_tracks);
  out.unmatched_detections.insert(out.unmatched_detections.end(), high.begin(), high.end());
  out.unmatched_detections.insert(out.unmatched_detections.end(), low.begin(), low.end());
  std::sort(out.matches.begin(), out.matches.end());
  std::sort(out.unmatched_tracks.begin(), out.unmatched_tracks.end());
  std::sort(out.unmatched_detections.begin(), out.unmatched_detections.end());
  return out;
}

Tracker::Tracker(TrackerConfig cfg)
    : cfg_(cfg), filter_(MotionNoise{cfg.position_noise_scale, cfg.velocity_noise_scale}) {
  cfg_.validate();
}

KalmanState& Tracker::motion_of(std::int64_t track_id) {
  auto it = std::find_if(motion_.begin(), motion_.end(),
                         [&](const Motion& m) { return m.track_id == track_id; });
  return it->state;
}

std::vector<std::optional<std::int64_t>> Tracker::step(const TrackerFrame& frame) {
  if (last_frame_ && frame.frame_index <= *last_frame_) {
    throw SequencingError(fmt::format("frame {} received after frame {}", frame.frame_index,
                                      *last_frame_));
  }
  last_frame_ = frame.frame_index;

  // Pool live tracks in id order; the pool index is the association row.
  struct Live {
    Track track;
    bool was_lost;
    int misses;
  };
  std::vector<Live> pool;
  pool.reserve(active_.size() + lost_.size());
  for (auto& t : active_) pool.push_back({std::move(t), false, 0});
  for (std::size_t i = 0; i < lost_.size(); ++i) {
    pool.push_back({std::move(lost_[i]), true, lost_misses_[i]});
  }
  active_.clear();
  lost_.clear();
  lost_misses_.clear();
  std::sort(pool.begin(), pool.end(),
            [](const Live& a, const Live& b) { return a.track.track_id < b.track.track_id; });

  std::vector<PredictedTrack> predicted;
  predicted.reserve(pool.size());
  for (const auto& live : pool) {
    KalmanState& s = motion_of(live.track.track_id);
    s = filter_.predict(s);
    predicted.push_back({live.track.track_id, s.box()});
  }

  const AssociationResult assoc = associate(predicted, frame.detections, cfg_);
  std::vector<std::optional<std::int64_t>> assigned(frame.detections.size());
  std::vector<char> matched(pool.size(), 0);

  for (const auto& [ti, di] : assoc.matches) {
    const Detection& d = frame.detections[di];
    Live& live = pool[ti];
    KalmanState& s = motion_of(live.track.track_id);
    s = filter_.update(s, d.box);
    live.track.detections.push_back(d);
    live.track.status = TrackStatus::active;
    matched[ti] = 1;
    assigned[di] = live.track.track_id;
  }

  std::vector<std::int64_t> retired;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    Live& live = pool[i];
    if (matched[i]) {
      active_.push_back(std::move(live.track));
      continue;
    }
    const int misses = live.was_lost ? live.misses + 1 : 1;
    if (misses > cfg_.lost_buffer_frames) {
      live.track.status = TrackStatus::finished;
      retired.push_back(live.track.track_id);
      finished_.push_back(std::move(live.track));
    } else {
      live.track.status = TrackStatus::lost;
      lost_.push_back(std::move(live.track));
      lost_misses_.push_back(misses);
    }
  }
  std::erase_if(motion_, [&](const Motion& m) {
    return std::find(retired.begin(), retired.end(), m.track_id) != retired.end();
  });

  const double start_thresh = std::max(cfg_.new_track_thresh, cfg_.low_conf_floor);
  for (const auto di : assoc.unmatched_detections) {
    const Detection& d = frame.detections[di];
    if (d.confidence < start_thresh) continue;
    Track t;
    t.track_id = next_id_++;
    t.detections.push_back(d);
    t.status = TrackStatus::active;
    motion_.push_back({t.track_id, filter_.initiate(d.box)});
    assigned[di] = t.track_id;
    active_.push_back(std::move(t));
  }
  return assigned;
}

std::vector<Track> Tracker::finish() {
  for (auto* group : {&active_, &lost_}) {
    for (auto& t : *group) {
      t.status = TrackStatus::finished;
      finished_.push_back(std::move(t));
    }
    group->clear();
  }
  lost_misses_.clear();
  motion_.clear();
  std::sort(finished_.begin(), finished_.end(),
            [](const Track& a, const Track& b) { return a.track_id < b.track_id; });
  return finished_;
}

std::vector<Track> run_tracker(const FrameDetections& frames, const TrackerConfig& cfg) {
  Tracker tracker(cfg);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    tracker.step({static_cast<std::int64_t>(i), frames[i]});
  }
  return tracker.finish();
}

void write_tracked_detections(std::ostream& out, const std::vector<Track>& tracks) {
  struct Row {
    const Detection* d;
    const Track* t;
  };
  std::vector<Row> rows;
  for (const auto& t : tracks) {
    for (const auto& d : t.detections) rows.push_back({&d, &t});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.d->video_id, a.d->frame_index, a.t->track_id) <
           std::tie(b.d->video_id, b.d->frame_index, b.t->track_id);
  });
  out << kTrackedFileHeader << '\n';
  for (const auto& [d, t] : rows) {
    out << d->video_id << ',' << d->frame_index << ',' << d->time_ms << ',' << t->track_id << ','
        << format_fixed6(d->box.x1) << ',' << format_fixed6(d->box.y1) << ','
        << format_fixed6(d->box.x2) << ',' << format_fixed6(d->box.y2) << ','
        << format_fixed6(d->confidence) << ',' << (t->label ? t->label->name() : "") << '\n';
  }
}

std::vector<Track> read_tracked_detections(std::istream& in) {
  csv::Reader reader(in);
  reader.expect_header(kTrackedFileHeader);
  std::map<std::pair<std::string, std::int64_t>, Track> by_id;
  std::vector<std::string_view> f;
  while (reader.next(f, 10)) {
    const auto line = reader.line();
    Detection d;
    d.video_id = std::string(f[0]);
    d.frame_index = csv::parse_int(f[1], "frame_index", line);
    d.time_ms = csv::parse_int(f[2], "time_ms", line);
    const auto track_id = csv::parse_int(f[3], "track_id", line);
    d.box = {csv::parse_fixed6(f[4], "x1", line), csv::parse_fixed6(f[5], "y1", line),
             csv::parse_fixed6(f[6], "x2", line), csv::parse_fixed6(f[7], "y2", line)};
    d.confidence = csv::parse_fixed6(f[8], "confidence", line);
    if (!d.box.valid()) throw ValidationError("invalid box", line);

    Track& t = by_id[{d.video_id, track_id}];
    if (t.detections.empty()) {
      t.track_id = track_id;
      t.status = TrackStatus::finished;
      if (!f[9].empty()) t.label = SpeciesLabel(std::string(f[9]));
    } else if (d.frame_index <= t.detections.back().frame_index) {
      throw ValidationError(fmt::format("track {} detections not in frame order", track_id), line);
    }
    t.detections.push_back(std::move(d));
  }
  std::vector<Track> out;
  out.reserve(by_id.size());
  for (auto& [key, t] : by_id) out.push_back(std::move(t));
  return out;
}

}  // namespace bruv
