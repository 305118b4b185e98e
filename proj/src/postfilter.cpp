#include "bruv/postfilter.hpp"

#include <stdexcept>

namespace bruv {

void PostFilterConfig::validate() const {
  if (min_span_s < 0.0 || min_displacement < 0.0 || keep_conf < 0.0) {
    throw std::invalid_argument("postfilter: thresholds must be >= 0");
  }
  if (keep_conf > 1.0) throw std::invalid_argument("postfilter: keep_conf must be <= 1");
}

bool is_suspect(const Track& t, const PostFilterConfig& cfg) {
  return track_span_s(t) < cfg.min_span_s || track_max_center_displacement(t) < cfg.min_displacement;
}

std::vector<Track> select_suspects(const std::vector<Track>& tracks, const PostFilterConfig& cfg) {
  std::vector<Track> out;
  for (const auto& t : tracks) {
    if (is_suspect(t, cfg)) out.push_back(t);
  }
  return out;
}

PostFilterResult apply_postfilter(const std::vector<Track>& tracks, const PostFilterConfig& cfg) {
  PostFilterResult r;
  for (const auto& t : tracks) {
    if (is_suspect(t, cfg) && t.max_confidence() < cfg.keep_conf) {
      r.removed.push_back(t);
    } else {
      r.kept.push_back(t);
    }
  }
  return r;
}

}  // namespace bruv
