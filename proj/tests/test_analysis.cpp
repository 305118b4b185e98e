#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "bruv/analysis.hpp"
#include "bruv/errors.hpp"
#include "bruv/ingest.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace bruv;
namespace fs = std::filesystem;

namespace {

Track track(std::int64_t id, std::vector<std::pair<std::int64_t, double>> frames_conf,
            const std::string& video = "v1") {
  Track t;
  t.track_id = id;
  t.status = TrackStatus::finished;
  for (auto [f, c] : frames_conf) {
    t.detections.push_back({video, f, f * 333, BBox::from_center(0.1 + 0.01 * static_cast<double>(id), 0.5, 0.05, 0.05), c});
  }
  return t;
}

Track labeled(Track t, const std::string& species) {
  t.label = SpeciesLabel(species);
  return t;
}

SamplingSchedule schedule(std::int64_t duration_ms = 20000) {
  return build_schedule({"v1", duration_ms, 64, 36}, 3.0);
}

}  // namespace

TEST_CASE("representative detection") {
  CHECK(representative_detection(track(1, {{0, 0.3}, {1, 0.9}, {2, 0.5}})).frame_index == 1);
  CHECK(representative_detection(track(1, {{0, 0.3}, {4, 0.8}, {6, 0.8}})).frame_index == 4);
}

TEST_CASE("export writes one image per track and skips missing frames") {
  TempDir tmp;
  const auto s = schedule();
  FrameDetections frames(s.size());
  std::vector<Track> tracks;
  for (int i = 1; i <= 12; ++i) {
    tracks.push_back(track(i, {{i, 0.4}, {i + 1, 0.8}}));
    for (const auto& d : tracks.back().detections) frames[d.frame_index].push_back(d);
  }
  const auto r = export_track_images(tracks, SyntheticFrameStore(s.video, frames), tmp.path());
  CHECK(r.exported.size() == 12);
  CHECK(r.warnings.empty());
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(track_image_dir(tmp.path(), "v1"))) {
    CHECK(e.path().extension() == ".jpg");
    ++files;
  }
  CHECK(files == 12);
  CHECK(fs::exists(track_image_path(tmp.path(), "v1", 7)));

  TempDir tmp2;
  fs::create_directories(tmp2.path() / "frames" / "v1");
  write_ppm(tmp2.path() / "frames" / "v1" / "3.ppm", RasterImage(64, 36, {10, 20, 30}));
  const auto r2 = export_track_images({track(1, {{3, 0.9}}), track(2, {{5, 0.9}})},
                                      DirectoryFrameStore(tmp2.path() / "frames"), tmp2.path() / "run");
  CHECK(r2.exported == std::vector<std::int64_t>{1});
  CHECK(r2.warnings.size() == 1);
}

TEST_CASE("filesystem verdicts") {
  TempDir tmp;
  const auto s = schedule();
  FrameDetections frames(s.size());
  std::vector<Track> tracks;
  for (int i : {3, 7, 8, 9}) {
    tracks.push_back(track(i, {{i, 0.9}}));
    frames[i].push_back(tracks.back().detections[0]);
  }
  export_track_images(tracks, SyntheticFrameStore(s.video, frames), tmp.path());
  const auto dir = track_image_dir(tmp.path(), "v1");
  fs::rename(dir / "7.jpg", dir / "7-carcharhinus_perezi.jpg");
  fs::remove(dir / "3.jpg");
  fs::rename(dir / "9.jpg", dir / "9-Bad Name.jpg");
  std::ofstream(dir / "notes.txt") << "x";

  const auto c = collect_filesystem_annotations(tmp.path());
  REQUIRE(c.annotations.size() == 3);
  CHECK(c.annotations[0] == Annotation::rejected("v1", 3));
  CHECK(c.annotations[1] == Annotation::labeled("v1", 7, SpeciesLabel("carcharhinus_perezi")));
  // a file with an unparseable name no longer vouches for its track
  CHECK(c.annotations[2] == Annotation::rejected("v1", 9));
  CHECK(c.warnings.size() == 2);
  for (const auto& a : c.annotations) CHECK(a.track_id != 8);
}

TEST_CASE("reconcile") {
  std::vector<Track> tracks;
  tracks.push_back(track(7, {}));
  for (int f = 0; f < 40; ++f) tracks.back().detections.push_back(track(7, {{f, 0.5}}).detections[0]);
  tracks.push_back(track(3, {{1, 0.9}, {2, 0.9}}));
  tracks.push_back(track(4, {{1, 0.9}}));

  SUBCASE("labels, rejections, unclassified") {
    const auto r = reconcile(tracks, {Annotation::labeled("v1", 7, SpeciesLabel("x")),
                                      Annotation::rejected("v1", 3)});
    REQUIRE(r.size() == 2);
    CHECK(r[0].track_id == 7);
    CHECK(r[0].label->name() == "x");
    CHECK(r[0].detections.size() == 40);
    CHECK(r[1].track_id == 4);
    CHECK(r[1].label->name() == "unclassified");
  }
  SUBCASE("identity pass") {
    const auto r = reconcile(tracks, {});
    REQUIRE(r.size() == 3);
    for (const auto& t : r) CHECK(t.label->name() == "unclassified");
  }
  SUBCASE("last annotation wins and reconcile is idempotent") {
    const std::vector<Annotation> anns{Annotation::rejected("v1", 4),
                                       Annotation::labeled("v1", 4, SpeciesLabel("y"))};
    const auto once = reconcile(tracks, anns);
    const auto twice = reconcile(once, anns);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(once[i].track_id == twice[i].track_id);
      CHECK(once[i].label == twice[i].label);
      CHECK(once[i].detections.size() == twice[i].detections.size());
    }
    CHECK(once[2].label->name() == "y");
  }
  SUBCASE("unknown ids") {
    try {
      reconcile(tracks, {Annotation::rejected("v1", 99), Annotation::rejected("v2", 3)});
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      const std::string what = e.what();
      CHECK(what.find("v1/99") != std::string::npos);
      CHECK(what.find("v2/3") != std::string::npos);
    }
  }
}

TEST_CASE("ssMaxN examples") {
  const auto s = schedule();
  SUBCASE("counts 1,2,1") {
    const auto r = compute_ssmaxn({labeled(track(1, {{0, .9}, {1, .9}, {2, .9}}), "s"),
                                   labeled(track(2, {{1, .9}}), "s")},
                                  s);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == MaxNRow{"v1", "s", 2, 1, 333});
  }
  SUBCASE("disjoint peaks") {
    const auto r = compute_ssmaxn({labeled(track(1, {{0, .9}, {1, .9}}), "a"),
                                   labeled(track(2, {{1, .9}}), "a"),
                                   labeled(track(3, {{5, .9}, {6, .9}}), "b"),
                                   labeled(track(4, {{6, .9}}), "b"),
                                   labeled(track(5, {{6, .9}}), "b")},
                                  s);
    REQUIRE(r.size() == 2);
    CHECK(r[0].species == "a");
    CHECK(r[0].maxn == 2);
    CHECK(r[0].frame_index_at_max == 1);
    CHECK(r[1].species == "b");
    CHECK(r[1].maxn == 3);
    CHECK(r[1].frame_index_at_max == 6);
    CHECK(r[1].time_ms_at_max == 2000);
  }
  SUBCASE("empty") { CHECK(compute_ssmaxn({}, s).empty()); }
  SUBCASE("unclassified is its own row") {
    const auto r = compute_ssmaxn({track(1, {{0, .9}})}, s);
    REQUIRE(r.size() == 1);
    CHECK(r[0].species == "unclassified");
  }
}

TEST_CASE("ssMaxN equals brute-force counting on random sets") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> frame(0, 59), len(1, 20), ntracks(0, 30), sp(0, 3);
  const auto s = schedule();
  const char* names[] = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Track> tracks;
    const int n = ntracks(rng);
    for (int i = 0; i < n; ++i) {
      const int start = frame(rng);
      std::vector<std::pair<std::int64_t, double>> fc;
      for (int f = start; f < std::min(60, start + len(rng)); ++f) fc.emplace_back(f, 0.5);
      Track t = track(i + 1, fc);
      if (sp(rng) < 3) t.label = SpeciesLabel(names[sp(rng)]);
      tracks.push_back(t);
    }
    const auto report = compute_ssmaxn(tracks, s);
    const auto expected = oracle::brute_ssmaxn(tracks);
    std::map<std::string, int> got;
    for (const auto& row : report) {
      got[row.species] = row.maxn;
      CHECK(row.maxn >= 1);
      // the reported frame attains the maximum and no earlier one does
      int at = 0, earlier = 0;
      for (const auto& t : tracks) {
        const std::string name = t.label ? t.label->name() : "unclassified";
        if (name != row.species) continue;
        for (const auto& d : t.detections) {
          at += d.frame_index == row.frame_index_at_max;
        }
      }
      CHECK(at == row.maxn);
      for (std::int64_t f = 0; f < row.frame_index_at_max; ++f) {
        int c = 0;
        for (const auto& t : tracks) {
          const std::string name = t.label ? t.label->name() : "unclassified";
          if (name != row.species) continue;
          for (const auto& d : t.detections) c += d.frame_index == f;
        }
        earlier = std::max(earlier, c);
      }
      CHECK(earlier < row.maxn);
      int carrying = 0;
      for (const auto& t : tracks) carrying += (t.label ? t.label->name() : "unclassified") == row.species;
      CHECK(row.maxn <= carrying);
    }
    CHECK(got == expected);
  }
}

TEST_CASE("maxn report round trip") {
  const MaxNReport r{{"v1", "a", 2, 4, 1333}, {"v1", "b", 1, 0, 0}};
  std::ostringstream out;
  write_maxn_report(out, r);
  CHECK(out.str() == std::string(kMaxNFileHeader) + "\nv1,a,2,4,1333\nv1,b,1,0,0\n");
  std::istringstream in(out.str());
  CHECK(read_maxn_report(in) == r);
}
