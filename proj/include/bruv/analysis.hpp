#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bruv/core.hpp"
#include "bruv/ingest.hpp"
#include "bruv/raster.hpp"

namespace bruv {

enum class Verdict { labeled, rejected };

struct Annotation {
  std::string video_id;
  std::int64_t track_id = 0;
  Verdict verdict = Verdict::rejected;
  std::optional<SpeciesLabel> species;  // set iff labeled

  static Annotation labeled(std::string video_id, std::int64_t track_id, SpeciesLabel species) {
    return {std::move(video_id), track_id, Verdict::labeled, std::move(species)};
  }
  static Annotation rejected(std::string video_id, std::int64_t track_id) {
    return {std::move(video_id), track_id, Verdict::rejected, std::nullopt};
  }
  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct MaxNRow {
  std::string video_id;
  std::string species;
  int maxn = 0;
  std::int64_t frame_index_at_max = 0;
  std::int64_t time_ms_at_max = 0;

  friend bool operator==(const MaxNRow&, const MaxNRow&) = default;
};

/// Rows ordered by (video_id, species).
using MaxNReport = std::vector<MaxNRow>;

inline constexpr const char* kMaxNFileHeader =
    "video_id,species,maxn,frame_index_at_max,time_ms_at_max";

void write_maxn_report(std::ostream& out, const MaxNReport& report);
MaxNReport read_maxn_report(std::istream& in);

// ---- run-directory layout ---------------------------------------------------

std::filesystem::path track_image_dir(const std::filesystem::path& run_dir,
                                      const std::string& video_id);
std::filesystem::path track_image_path(const std::filesystem::path& run_dir,
                                       const std::string& video_id, std::int64_t track_id);
/// Ids whose image was written, one per line; lets a deleted file be told
/// apart from one never exported.
std::filesystem::path exported_list_path(const std::filesystem::path& run_dir,
                                         const std::string& video_id);

// ---- representative images --------------------------------------------------

/// Highest-confidence detection; the earliest one on ties.
const Detection& representative_detection(const Track& t);

class FrameStore {
 public:
  virtual ~FrameStore() = default;
  /// The sampled frame raster, or nullopt if unavailable. Must be safe to
  /// call concurrently.
  virtual std::optional<RasterImage> load(const std::string& video_id,
                                          std::int64_t frame_index) const = 0;
};

/// Pre-extracted frames at `<root>/<video_id>/<frame_index>.ppm`.
class DirectoryFrameStore : public FrameStore {
 public:
  explicit DirectoryFrameStore(std::filesystem::path root) : root_(std::move(root)) {}
  std::optional<RasterImage> load(const std::string& video_id,
                                  std::int64_t frame_index) const override;

 private:
  std::filesystem::path root_;
};

/// Renders flat frames with every detection painted as a light patch; stands
/// in for real footage when the input is a synthetic scene.
class SyntheticFrameStore : public FrameStore {
 public:
  SyntheticFrameStore(VideoMeta video, FrameDetections frames)
      : video_(std::move(video)), frames_(std::move(frames)) {}
  std::optional<RasterImage> load(const std::string& video_id,
                                  std::int64_t frame_index) const override;

 private:
  VideoMeta video_;
  FrameDetections frames_;
};

PixelRect to_pixels(const BBox& box, int width, int height);

struct ExportResult {
  std::vector<std::int64_t> exported;  // ascending
  std::vector<std::string> warnings;
};

/// Writes `<run>/tracks/<video_id>/<track_id>.jpg` for every track: the frame
/// of its representative detection with that box outlined. Tracks whose
/// frame is missing are skipped with a warning. Images are encoded in
/// parallel.
ExportResult export_track_images(const std::vector<Track>& tracks, const FrameStore& frames,
                                 const std::filesystem::path& run_dir);

// ---- annotations ------------------------------------------------------------

struct CollectedAnnotations {
  std::vector<Annotation> annotations;  // ordered by (video_id, track_id)
  std::vector<std::string> warnings;
};

/// Reads expert verdicts from the image directories: `<id>-<species>.jpg`
/// labels a track, a deleted `<id>.jpg` rejects it, an untouched one says
/// nothing.
CollectedAnnotations collect_filesystem_annotations(const std::filesystem::path& run_dir);

/// Applies verdicts: labeled tracks take the species, rejected tracks are
/// dropped, the rest become `unclassified`. The last annotation for a track
/// wins. Throws ValidationError listing annotations for unknown tracks.
std::vector<Track> reconcile(const std::vector<Track>& tracks,
                             const std::vector<Annotation>& annotations);

/// Per species, the largest number of detections on one sampled frame and
/// the earliest frame reaching it. Only tracks of `schedule.video` count.
MaxNReport compute_ssmaxn(const std::vector<Track>& labeled_tracks,
                          const SamplingSchedule& schedule);

}  // namespace bruv
