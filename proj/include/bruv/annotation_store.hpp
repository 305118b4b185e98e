#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <vector>

#include "bruv/analysis.hpp"

namespace bruv {

/// Append-only JSON-lines log of expert verdicts. The current verdict of a
/// track is the fold of its records ordered by (timestamp, sequence number).
/// Appends are flushed to disk before they return. Thread-safe.
class AnnotationStore {
 public:
  struct Record {
    std::int64_t seq = 0;
    std::int64_t timestamp_ms = 0;
    Annotation annotation;
  };

  /// Opens (and replays) the log at `path`; a missing file is an empty log.
  explicit AnnotationStore(std::filesystem::path path);

  /// Durably appends one verdict. Without a timestamp the wall clock is used.
  Record append(const Annotation& annotation, std::optional<std::int64_t> timestamp_ms = {});

  std::vector<Record> records() const;
  /// Latest verdict per track, ordered by (video_id, track_id).
  std::vector<Annotation> latest() const;
  std::optional<Annotation> latest_for(const std::string& video_id, std::int64_t track_id) const;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::vector<Record> records_;
  std::int64_t next_seq_ = 1;
};

}  // namespace bruv
