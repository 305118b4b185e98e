#include <doctest.h>

#include <random>
#include <sstream>

#include "bruv/errors.hpp"
#include "bruv/ingest.hpp"
#include "oracles.hpp"

using namespace bruv;

namespace {

VideoMeta video(std::int64_t duration_ms) { return {"v1", duration_ms, 640, 360}; }

FrameDetections parse(const std::string& text, const SamplingSchedule& s, double thr = 0.2) {
  std::istringstream in(text);
  return parse_detections(in, s, thr);
}

const std::string kHeader = std::string(kDetectionFileHeader) + "\n";

}  // namespace

TEST_CASE("schedule at 3 fps over 10 s") {
  const auto s = build_schedule(video(10000), 3.0);
  REQUIRE(s.size() == 30);
  // i/3 s for i < 30, rounded to ms
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.frames[i].frame_index == static_cast<std::int64_t>(i));
    CHECK(s.frames[i].time_ms == std::llround(1000.0 * static_cast<double>(i) / 3.0));
  }
  CHECK(s.frames[1].time_ms == 333);
  CHECK(s.frames[2].time_ms == 667);
  CHECK(s.frames.back().time_ms == 9667);
}

TEST_CASE("schedule boundaries") {
  CHECK(build_schedule(video(0), 3.0).size() == 0);
  const auto one = build_schedule(video(1000), 1.0);
  REQUIRE(one.size() == 1);
  CHECK(one.frames[0].time_ms == 0);
  CHECK(build_schedule(video(1001), 1.0).size() == 2);
  CHECK_THROWS_AS(build_schedule(video(1000), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(video(1000), -3.0), std::invalid_argument);
}

TEST_CASE("schedules are reproducible and strictly increasing") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> dur(0, 200000);
  std::uniform_real_distribution<double> fps(0.1, 30.0);
  for (int i = 0; i < 100; ++i) {
    const auto v = video(dur(rng));
    const double f = fps(rng);
    const auto a = build_schedule(v, f), b = build_schedule(v, f);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a.frames[k].time_ms == b.frames[k].time_ms);
      if (k) CHECK(a.frames[k].time_ms > a.frames[k - 1].time_ms);
      CHECK(static_cast<double>(k) / f * 1000.0 < static_cast<double>(v.duration_ms));
    }
    CHECK_FALSE(static_cast<double>(a.size()) / f * 1000.0 < static_cast<double>(v.duration_ms));
  }
}

TEST_CASE("detection file confidence threshold") {
  const auto s = build_schedule(video(10000), 3.0);
  const auto frames = parse(kHeader +
                                "0,0,0.100000,0.100000,0.200000,0.200000,0.190000\n"
                                "0,0,0.300000,0.300000,0.400000,0.400000,0.200000\n",
                            s);
  REQUIRE(frames[0].size() == 1);
  CHECK(frames[0][0].confidence == 0.2);
}

TEST_CASE("header-only file yields empty frames") {
  const auto s = build_schedule(video(10000), 3.0);
  const auto frames = parse(kHeader, s);
  CHECK(frames.size() == 30);
  for (const auto& f : frames) CHECK(f.empty());
}

TEST_CASE("rows group by frame in order") {
  const auto s = build_schedule(video(10000), 3.0);
  const auto frames = parse(kHeader +
                                "5,1667,0.300000,0.300000,0.400000,0.400000,0.900000\n"
                                "2,667,0.100000,0.100000,0.200000,0.200000,0.500000\n"
                                "5,1667,0.100000,0.100000,0.200000,0.200000,0.800000\n"
                                "5,1667,0.500000,0.500000,0.600000,0.600000,0.700000\n",
                            s);
  REQUIRE(frames[5].size() == 3);
  CHECK(frames[5][0].confidence == 0.9);
  CHECK(frames[5][1].confidence == 0.8);
  CHECK(frames[5][2].confidence == 0.7);
  CHECK(frames[5][0].video_id == "v1");
  CHECK(frames[2].size() == 1);
}

TEST_CASE("detection file errors name the line") {
  const auto s = build_schedule(video(10000), 3.0);
  auto line_of = [&](const std::string& body) -> std::size_t {
    try {
      parse(kHeader + body, s);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("0,0,0.1,0.1,0.2,0.2,0.9\n") == 2);
  CHECK(line_of("0,0,0.100000,0.100000,0.200000,0.200000,0.900000\nx,0,0.1,0.1,0.2,0.2,0.9\n") == 3);
  CHECK(line_of("0,0,0.100000,0.100000,0.200000\n") == 2);
  CHECK_THROWS_AS(parse(kHeader + "30,10000,0.100000,0.100000,0.200000,0.200000,0.900000\n", s),
                  RangeError);
  CHECK_THROWS_AS(parse(kHeader + "1,333,0.300000,0.100000,0.200000,0.200000,0.900000\n", s),
                  ValidationError);
  CHECK_THROWS_AS(parse(kHeader + "1,333,0.100000,0.100000,1.200000,0.200000,0.900000\n", s),
                  ValidationError);
  CHECK_THROWS_AS(parse("frame,time\n", s), ParseError);
}

TEST_CASE("surviving rows round-trip bit-exactly") {
  const auto s = build_schedule(video(60000), 3.0);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> frame(0, static_cast<std::int64_t>(s.size()) - 1);
  std::uniform_int_distribution<int> micro(0, 1000000);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<std::int64_t, std::string>> rows;
    for (int i = 0; i < 50; ++i) {
      int a = micro(rng), b = micro(rng), c = micro(rng), d = micro(rng);
      if (a > b) std::swap(a, b);
      if (c > d) std::swap(c, d);
      if (a == b || c == d) continue;
      const auto f = frame(rng);
      char buf[160];
      std::snprintf(buf, sizeof buf, "%lld,%lld,%d.%06d,%d.%06d,%d.%06d,%d.%06d,0.%06d\n",
                    static_cast<long long>(f), static_cast<long long>(s.frames[f].time_ms),
                    a / 1000000, a % 1000000, c / 1000000, c % 1000000, b / 1000000, b % 1000000,
                    d / 1000000, d % 1000000, micro(rng) % 1000000);
      rows.emplace_back(f, buf);
    }
    std::string text = kHeader;
    for (const auto& r : rows) text += r.second;
    const auto frames = parse(text, s, 0.0);
    std::ostringstream out;
    write_detections(out, frames);

    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    std::string expected = kHeader;
    for (const auto& r : rows) expected += r.second;
    CHECK(out.str() == expected);
  }
}

TEST_CASE("precomputed backend with threshold") {
  const auto s = build_schedule(video(2000), 3.0);
  FrameDetections raw(s.size());
  raw[1].push_back({"v1", 1, 333, {0.1, 0.1, 0.2, 0.2}, 0.1});
  raw[1].push_back({"v1", 1, 333, {0.3, 0.3, 0.4, 0.4}, 0.6});
  const auto got = collect_detections(PrecomputedBackend(raw), s, 0.2);
  REQUIRE(got[1].size() == 1);
  CHECK(got[1][0].confidence == 0.6);
  CHECK(got[1][0].time_ms == 333);
}

// ---- synthetic scenes -------------------------------------------------------

namespace {

ScriptedActor crosser(std::string species, std::int64_t entry, std::int64_t exit, double cy) {
  ScriptedActor a;
  a.species = std::move(species);
  a.entry_ms = entry;
  a.exit_ms = exit;
  a.cx = 0.1;
  a.cy = cy;
  a.vx = 0.1;
  a.width = 0.1;
  a.height = 0.1;
  return a;
}

}  // namespace

TEST_CASE("single actor crossing for 5 s") {
  ScenarioSpec spec{video(10000), {crosser("carcharhinus_perezi", 1000, 6000, 0.5)}, {}};
  const auto s = build_schedule(spec.video, 3.0);
  const auto r = synthesize(spec, s, 1);
  CHECK(r.truth_tracks.size() == 1);
  CHECK(r.truth_ssmaxn.at("carcharhinus_perezi") == 1);
  std::size_t n = 0;
  for (const auto& f : r.detections) n += f.size();
  CHECK(n == r.truth_tracks[0].detections.size());
}

TEST_CASE("two overlapping actors of one species") {
  ScenarioSpec spec{video(10000),
                    {crosser("ginglymostoma_cirratum", 0, 6000, 0.3),
                     crosser("ginglymostoma_cirratum", 3000, 9000, 0.7)},
                    {}};
  const auto r = synthesize(spec, build_schedule(spec.video, 3.0), 1);
  CHECK(r.truth_ssmaxn.at("ginglymostoma_cirratum") == 2);
}

TEST_CASE("static clutter only") {
  ClutterEmitter c;
  c.start_ms = 0;
  c.end_ms = 10000;
  ScenarioSpec spec{video(10000), {}, {c}};
  const auto r = synthesize(spec, build_schedule(spec.video, 3.0), 1);
  CHECK(r.truth_tracks.empty());
  CHECK(r.truth_ssmaxn.empty());
  std::size_t n = 0;
  for (const auto& f : r.detections) n += f.size();
  CHECK(n == 30);
}

TEST_CASE("actor leaving the frame is rejected") {
  auto a = crosser("x", 0, 10000, 0.5);  // 0.1 + 0.1*10 = 1.1
  ScenarioSpec spec{video(10000), {a}, {}};
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  CHECK_THROWS_AS(synthesize(spec, build_schedule(spec.video, 3.0), 1), ValidationError);
}

TEST_CASE("synthesis is deterministic per seed and ssMaxN matches a brute-force count") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const char* species[] = {"a", "b", "c"};
  for (int trial = 0; trial < 60; ++trial) {
    ScenarioSpec spec{video(20000), {}, {}};
    const int n = 1 + static_cast<int>(u(rng) * 7);
    for (int i = 0; i < n; ++i) {
      ScriptedActor a;
      a.species = species[static_cast<int>(u(rng) * 3)];
      a.entry_ms = static_cast<std::int64_t>(u(rng) * 15000);
      a.exit_ms = a.entry_ms + 500 + static_cast<std::int64_t>(u(rng) * 5000);
      a.width = a.height = 0.05;
      a.cx = 0.2 + 0.6 * u(rng);
      a.cy = 0.2 + 0.6 * u(rng);
      a.vx = 0.02 * (u(rng) - 0.5);
      a.vy = 0.02 * (u(rng) - 0.5);
      a.jitter = 0.002;
      if (u(rng) < 0.3) a.occlusions.push_back({a.entry_ms + 200, a.entry_ms + 900});
      spec.actors.push_back(a);
    }
    ClutterEmitter noise;
    noise.kind = ClutterEmitter::Kind::noise;
    noise.end_ms = 20000;
    noise.rate = 0.3;
    spec.clutter.push_back(noise);

    const auto s = build_schedule(spec.video, 3.0);
    const auto seed = static_cast<std::uint64_t>(trial);
    const auto r1 = synthesize(spec, s, seed), r2 = synthesize(spec, s, seed);
    std::ostringstream o1, o2;
    write_detections(o1, r1.detections);
    write_detections(o2, r2.detections);
    CHECK(o1.str() == o2.str());

    // Count scripted actors per species per scheduled frame.
    std::map<std::string, int> expected;
    for (const auto& f : s.frames) {
      std::map<std::string, int> here;
      for (const auto& a : spec.actors) here[a.species] += a.visible_at(f.time_ms) ? 1 : 0;
      for (const auto& [sp, k] : here) {
        if (k > 0) expected[sp] = std::max(expected[sp], k);
      }
    }
    CHECK(r1.truth_ssmaxn == expected);
    CHECK(oracle::brute_ssmaxn(r1.truth_tracks) == expected);
  }
}

TEST_CASE("scenario file parsing") {
  std::istringstream in(R"({
    "video": {"video_id": "bruv_07", "duration_ms": 12000, "width": 320, "height": 180},
    "actors": [
      {"species": "carcharhinus_perezi", "entry_ms": 0, "exit_ms": 6000,
       "center": [0.2, 0.5], "velocity": [0.05, 0.0], "size": [0.1, 0.08],
       "confidence": 0.85, "occlusions": [[1000, 2000]]}
    ],
    "clutter": [
      {"kind": "fixed", "box": [0.8, 0.8, 0.9, 0.9], "confidence": 0.4},
      {"kind": "noise", "rate": 0.2, "confidence_range": [0.2, 0.5]}
    ]
  })");
  const auto spec = parse_scenario(in);
  CHECK(spec.video.video_id == "bruv_07");
  CHECK(spec.video.frame_width_px == 320);
  REQUIRE(spec.actors.size() == 1);
  CHECK(spec.actors[0].occlusions.size() == 1);
  CHECK_FALSE(spec.actors[0].visible_at(1500));
  CHECK(spec.actors[0].visible_at(2000));
  REQUIRE(spec.clutter.size() == 2);
  CHECK(spec.clutter[0].end_ms == 12000);
  CHECK(spec.clutter[1].kind == ClutterEmitter::Kind::noise);

  std::istringstream bad(R"({"video": {"video_id": "x", "duration_ms": 10}, "clutter": [{"kind": "ghost"}]})");
  CHECK_THROWS_AS(parse_scenario(bad), ParseError);
}
