#pragma once
// Scenario files and small runs shared by the service and acceptance tests.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "bruv/pipeline.hpp"

namespace fixture {

namespace fs = std::filesystem;
using nlohmann::json;

inline json actor(const std::string& species, std::int64_t entry, std::int64_t exit, double cx,
                  double cy, double vx = 0.02) {
  return {{"species", species},
          {"entry_ms", entry},
          {"exit_ms", exit},
          {"center", {cx, cy}},
          {"size", {0.08, 0.08}},
          {"velocity", {vx, 0.0}},
          {"confidence", 0.9}};
}

inline fs::path write_scenario(const fs::path& path, const std::string& video_id,
                               std::int64_t duration_ms, json actors,
                               json clutter = json::array()) {
  const json doc = {{"video", {{"video_id", video_id}, {"duration_ms", duration_ms}, {"width", 96}, {"height", 54}}},
                    {"actors", std::move(actors)},
                    {"clutter", std::move(clutter)}};
  std::ofstream(path) << doc.dump(2);
  return path;
}

inline bruv::VideoInput scenario_input(const fs::path& path, std::uint64_t seed = 1) {
  bruv::VideoInput in;
  in.source.kind = bruv::VideoSource::Kind::scenario;
  in.source.path = path;
  in.source.seed = seed;
  return in;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Three well separated actors of two species; the first two overlap in time.
inline fs::path three_actor_scenario(const fs::path& dir, const std::string& video_id = "reef_a") {
  return write_scenario(dir / (video_id + ".json"), video_id, 12000,
                        json::array({actor("carcharhinus_perezi", 0, 8000, 0.15, 0.2),
                                     actor("carcharhinus_perezi", 2000, 10000, 0.15, 0.5),
                                     actor("ginglymostoma_cirratum", 4000, 11000, 0.15, 0.8)}));
}

}  // namespace fixture
