#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bruv {

/// Axis-aligned box in frame-normalized coordinates (x right, y down).
struct BBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }

  bool valid() const;
  static BBox from_center(double cx, double cy, double w, double h);

  friend bool operator==(const BBox&, const BBox&) = default;
};

class SpeciesLabel {
 public:
  /// Throws ValidationError unless `name` matches [a-z0-9_]+.
  explicit SpeciesLabel(std::string name);

  static bool is_valid(std::string_view name);
  static SpeciesLabel unclassified() { return SpeciesLabel("unclassified"); }

  const std::string& name() const { return name_; }
  friend bool operator==(const SpeciesLabel&, const SpeciesLabel&) = default;
  friend auto operator<=>(const SpeciesLabel&, const SpeciesLabel&) = default;

 private:
  std::string name_;
};

struct VideoMeta {
  std::string video_id;
  std::int64_t duration_ms = 0;
  int frame_width_px = 1;
  int frame_height_px = 1;
};

struct Detection {
  std::string video_id;
  std::int64_t frame_index = 0;
  std::int64_t time_ms = 0;
  BBox box;
  double confidence = 0;
};

enum class TrackStatus { active, lost, finished };

struct Track {
  std::int64_t track_id = 0;
  std::vector<Detection> detections;
  TrackStatus status = TrackStatus::active;
  std::optional<SpeciesLabel> label;
  bool rejected = false;

  const std::string& video_id() const { return detections.front().video_id; }
  double max_confidence() const;
};

/// Intersection over union; 0 when the boxes only touch.
double iou(const BBox& a, const BBox& b);

/// Seconds between the first and last detection.
double track_span_s(const Track& t);

/// Largest Euclidean distance from the first detection's center to any
/// detection's center.
double track_max_center_displacement(const Track& t);

}  // namespace bruv
