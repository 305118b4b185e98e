#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace bruv {

/// HTTP API over a run directory for the review gallery:
///
///   GET /api/videos                        videos with track counts and progress
///   GET /api/videos/{v}/tracks             track summaries with current verdicts
///   GET /api/tracks/{v}/{id}/image         representative JPEG
///   PUT /api/tracks/{v}/{id}/annotation    {"verdict": "labeled"|"rejected", "species"?}
///   GET /api/videos/{v}/maxn               ssMaxN under the verdicts so far
///   GET /api/species                       species suggestions
///
/// Bodies are JSON. Verdicts go to the run's annotation log and are on disk
/// before the response is sent.
class ReviewServer {
 public:
  /// Loads the run; throws unless every video reached the export stage.
  /// `species_list` is an optional text file with one species per line.
  explicit ReviewServer(std::filesystem::path run_dir,
                        std::filesystem::path species_list = {});
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Binds to `port` (0 picks a free port) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bruv
