#include <doctest.h>

#include <random>

#include "bruv/inpaint.hpp"
#include "bruv/raster.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace bruv;

namespace {

RasterImage random_image(std::mt19937_64& rng, int w, int h) {
  std::uniform_int_distribution<int> v(0, 255), coin(0, 9);
  RasterImage img(w, h);
  for (auto& p : img.pixels()) {
    if (coin(rng) < 2) {
      p = {static_cast<std::uint8_t>(235 + v(rng) % 21), static_cast<std::uint8_t>(235 + v(rng) % 21),
           static_cast<std::uint8_t>(200 + v(rng) % 56)};
    } else {
      p = {static_cast<std::uint8_t>(v(rng)), static_cast<std::uint8_t>(v(rng) / 2),
           static_cast<std::uint8_t>(v(rng) / 2)};
    }
  }
  return img;
}

std::int64_t masked_area(const RasterImage& img, int thr) {
  std::int64_t a = 0;
  for (const auto& r : find_bright_components(img, thr)) a += r.area();
  return a;
}

}  // namespace

TEST_CASE("luma") {
  CHECK(luma({255, 255, 255}) == 255);
  CHECK(luma({0, 0, 0}) == 0);
  CHECK(luma({128, 128, 128}) == 128);
  // 0.299*231 + 0.587*231 + 0.114*230 = 230.886
  CHECK(luma({231, 231, 230}) == 231);
}

TEST_CASE("uniform gray has no components") {
  CHECK(find_bright_components(RasterImage(40, 30, {128, 128, 128})).empty());
}

TEST_CASE("single white block") {
  RasterImage img(40, 30);
  for (int r = 10; r <= 14; ++r)
    for (int c = 5; c <= 20; ++c) img.at(r, c) = {255, 255, 255};
  const auto comps = find_bright_components(img);
  REQUIRE(comps.size() == 1);
  CHECK(comps[0] == PixelRect{10, 5, 14, 20});
  CHECK(comps == oracle::brute_components(img, 230));
}

TEST_CASE("diagonal neighbours join") {
  RasterImage img(10, 10);
  img.at(3, 3) = {255, 255, 255};
  img.at(4, 4) = {255, 255, 255};
  const auto comps = find_bright_components(img);
  REQUIRE(comps.size() == 1);
  CHECK(comps[0] == PixelRect{3, 3, 4, 4});
}

TEST_CASE("threshold is strict") {
  RasterImage img(4, 4, {230, 230, 230});
  CHECK(find_bright_components(img, 230).empty());
  CHECK(find_bright_components(img, 229).size() == 1);
}

TEST_CASE("inpaint examples") {
  RasterImage plain(20, 20, {90, 120, 60});
  CHECK(inpaint(plain) == plain);

  RasterImage text(30, 20, {40, 80, 100});
  for (int c = 4; c <= 10; ++c) text.at(5, c) = {250, 250, 250};
  for (int r = 5; r <= 9; ++r) text.at(r, 7) = {250, 250, 250};
  const auto out = inpaint(text);
  for (int r = 0; r < 20; ++r) {
    for (int c = 0; c < 30; ++c) {
      const bool inside = r >= 5 && r <= 9 && c >= 4 && c <= 10;
      if (inside) {
        CHECK(out.at(r, c) == Rgb{0, 0, 0});
      } else {
        CHECK(out.at(r, c) == text.at(r, c));
      }
    }
  }
  CHECK_THROWS_AS(inpaint(text, 256), std::invalid_argument);
  CHECK_THROWS_AS(find_bright_components(text, -1), std::invalid_argument);
}

TEST_CASE("random images: oracle agreement, idempotence, monotonicity") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(1, 60), thr(150, 250);
  for (int trial = 0; trial < 150; ++trial) {
    const auto img = random_image(rng, dim(rng), dim(rng));
    const int t = thr(rng);
    const auto comps = find_bright_components(img, t);
    CHECK(comps == oracle::brute_components(img, t));

    const auto once = inpaint(img, t);
    CHECK(once.width() == img.width());
    CHECK(once.height() == img.height());
    CHECK(inpaint(once, t) == once);
    CHECK(serial::inpaint(img, t) == once);
    CHECK(serial::bright_mask(img, t) == bright_mask(img, t));
    for (const auto& r : comps)
      for (int y = r.top; y <= r.bottom; ++y)
        for (int x = r.left; x <= r.right; ++x) CHECK(luma(once.at(y, x)) <= t);
    CHECK(masked_area(img, t - 10) >= masked_area(img, t));
  }
}

TEST_CASE("ppm round trip is bit exact") {
  TempDir tmp;
  std::mt19937_64 rng(6);
  const auto img = random_image(rng, 37, 23);
  write_ppm(tmp.path() / "a.ppm", img);
  CHECK(read_ppm(tmp.path() / "a.ppm") == img);
}
