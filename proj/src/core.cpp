#include "bruv/core.hpp"

#include <algorithm>
#include <cmath>

#include "bruv/errors.hpp"

namespace bruv {

bool BBox::valid() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  return in_unit(x1) && in_unit(y1) && in_unit(x2) && in_unit(y2) && x1 < x2 && y1 < y2;
}

BBox BBox::from_center(double cx, double cy, double w, double h) {
  return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

SpeciesLabel::SpeciesLabel(std::string name) : name_(std::move(name)) {
  if (!is_valid(name_)) throw ValidationError("invalid species label '" + name_ + "'");
}

bool SpeciesLabel::is_valid(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

double Track::max_confidence() const {
  double best = 0.0;
  for (const auto& d : detections) best = std::max(best, d.confidence);
  return best;
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

double track_span_s(const Track& t) {
  if (t.detections.empty()) return 0.0;
  return static_cast<double>(t.detections.back().time_ms - t.detections.front().time_ms) / 1000.0;
}

double track_max_center_displacement(const Track& t) {
  if (t.detections.empty()) return 0.0;
  const BBox& first = t.detections.front().box;
  double best = 0.0;
  for (const auto& d : t.detections) {
    best = std::max(best, std::hypot(d.box.cx() - first.cx(), d.box.cy() - first.cy()));
  }
  return best;
}

}  // namespace bruv
