#pragma once

#include <vector>

#include "bruv/core.hpp"

namespace bruv {

/// False-positive track rejection. A track is suspect when it is short-lived
/// or nearly stationary; a suspect is removed unless one of its detections
/// is confident enough to vouch for it. All comparisons are strict.
struct PostFilterConfig {
  double min_span_s = 1.0;
  double min_displacement = 0.0008;
  double keep_conf = 0.7;

  void validate() const;
  friend bool operator==(const PostFilterConfig&, const PostFilterConfig&) = default;
};

bool is_suspect(const Track& t, const PostFilterConfig& cfg);

std::vector<Track> select_suspects(const std::vector<Track>& tracks, const PostFilterConfig& cfg);

struct PostFilterResult {
  std::vector<Track> kept;
  std::vector<Track> removed;
};

/// Partitions `tracks`, preserving input order within each side.
PostFilterResult apply_postfilter(const std::vector<Track>& tracks, const PostFilterConfig& cfg);

}  // namespace bruv
