#include <doctest.h>

#include <random>

#include "bruv/core.hpp"
#include "bruv/errors.hpp"
#include "oracles.hpp"

using namespace bruv;

namespace {

Track track_at(std::initializer_list<std::pair<std::int64_t, BBox>> dets) {
  Track t;
  t.track_id = 1;
  std::int64_t frame = 0;
  for (const auto& [ms, box] : dets) t.detections.push_back({"v", frame++, ms, box, 0.9});
  return t;
}

BBox centered(double cx, double cy) { return BBox::from_center(cx, cy, 0.1, 0.1); }

BBox random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
  if (a > b) std::swap(a, b);
  if (c > d) std::swap(c, d);
  if (b - a < 1e-3) b = std::min(1.0, a + 1e-3), a = b - 1e-3;
  if (d - c < 1e-3) d = std::min(1.0, c + 1e-3), c = d - 1e-3;
  return {a, c, b, d};
}

}  // namespace

TEST_CASE("iou examples") {
  CHECK(iou({0, 0, 1, 1}, {0, 0, 1, 1}) == 1.0);
  CHECK(iou({0, 0, 0.1, 0.1}, {0.5, 0.5, 0.6, 0.6}) == 0.0);
  // intersection 0.02, union 0.06
  CHECK(iou({0, 0, 0.2, 0.2}, {0.1, 0, 0.3, 0.2}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // edge contact only
  CHECK(iou({0, 0, 0.5, 0.5}, {0.5, 0, 1, 0.5}) == 0.0);
}

TEST_CASE("iou properties on random boxes") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const BBox a = random_box(rng), b = random_box(rng);
    const double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(ab == doctest::Approx(oracle::overlap_ratio(a, b)).epsilon(1e-12));
    CHECK(iou(a, a) == 1.0);
    if (!(a == b)) CHECK(ab < 1.0);
    const bool disjoint = std::min(a.x2, b.x2) <= std::max(a.x1, b.x1) ||
                          std::min(a.y2, b.y2) <= std::max(a.y1, b.y1);
    CHECK((ab == 0.0) == disjoint);
  }
}

TEST_CASE("track span") {
  CHECK(track_span_s(track_at({{0, centered(0.5, 0.5)}, {667, centered(0.5, 0.5)}})) ==
        doctest::Approx(0.667));
  CHECK(track_span_s(track_at({{1234, centered(0.5, 0.5)}})) == 0.0);
  CHECK(track_span_s(track_at({{1000, centered(0.5, 0.5)},
                               {1333, centered(0.5, 0.5)},
                               {2000, centered(0.5, 0.5)}})) == 1.0);

  auto t = track_at({{0, centered(0.5, 0.5)}});
  double prev = track_span_s(t);
  for (std::int64_t ms = 333; ms < 5000; ms += 333) {
    t.detections.push_back({"v", ms / 333, ms, centered(0.5, 0.5), 0.5});
    CHECK(track_span_s(t) >= prev);
    prev = track_span_s(t);
  }
}

TEST_CASE("max center displacement") {
  CHECK(track_max_center_displacement(
            track_at({{0, centered(0.5, 0.5)}, {333, centered(0.5, 0.5)}})) == 0.0);
  CHECK(track_max_center_displacement(
            track_at({{0, centered(0.5, 0.5)}, {333, centered(0.5, 0.6)}})) ==
        doctest::Approx(0.1).epsilon(1e-12));
  CHECK(track_max_center_displacement(track_at({{0, centered(0.5, 0.5)},
                                                {333, centered(0.53, 0.54)},
                                                {667, centered(0.5, 0.5)}})) ==
        doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("displacement is translation invariant") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.2, 0.8), shift(-0.1, 0.1);
  for (int trial = 0; trial < 200; ++trial) {
    Track t;
    for (int i = 0; i < 6; ++i) t.detections.push_back({"v", i, i * 333, centered(u(rng), u(rng)), 0.5});
    const double dx = shift(rng), dy = shift(rng);
    Track moved = t;
    for (auto& d : moved.detections) d.box = {d.box.x1 + dx, d.box.y1 + dy, d.box.x2 + dx, d.box.y2 + dy};
    CHECK(track_max_center_displacement(moved) ==
          doctest::Approx(track_max_center_displacement(t)).epsilon(1e-9));
    CHECK(track_max_center_displacement(t) >= 0.0);
  }
}

TEST_CASE("species label grammar") {
  CHECK(SpeciesLabel::is_valid("carcharhinus_perezi"));
  CHECK(SpeciesLabel::is_valid("ray2"));
  CHECK_FALSE(SpeciesLabel::is_valid(""));
  CHECK_FALSE(SpeciesLabel::is_valid("Carcharhinus"));
  CHECK_FALSE(SpeciesLabel::is_valid("tiger-shark"));
  CHECK_THROWS_AS(SpeciesLabel("bad name"), ValidationError);
}

TEST_CASE("box validity") {
  CHECK(BBox{0, 0, 1, 1}.valid());
  CHECK_FALSE(BBox{0.5, 0, 0.5, 1}.valid());
  CHECK_FALSE(BBox{0, 0, 1.1, 1}.valid());
  CHECK_FALSE(BBox{-0.1, 0, 0.5, 1}.valid());
}
