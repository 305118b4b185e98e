#include "bruv/inpaint.hpp"

#include <algorithm>
#include <stdexcept>

namespace bruv {

namespace {

void check_threshold(int threshold) {
  if (threshold < 0 || threshold > 255) {
    throw std::invalid_argument("brightness threshold must lie in [0,255]");
  }
}

std::vector<PixelRect> label_components(const std::vector<std::uint8_t>& mask, int width,
                                        int height) {
  std::vector<PixelRect> rects;
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<int> stack;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const auto idx = static_cast<std::size_t>(r) * width + c;
      if (!mask[idx] || seen[idx]) continue;
      PixelRect box{r, c, r, c};
      seen[idx] = 1;
      stack.push_back(static_cast<int>(idx));
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cr = cur / width, cc = cur % width;
        box.top = std::min(box.top, cr);
        box.bottom = std::max(box.bottom, cr);
        box.left = std::min(box.left, cc);
        box.right = std::max(box.right, cc);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = cr + dr, nc = cc + dc;
            if (nr < 0 || nr >= height || nc < 0 || nc >= width) continue;
            const auto n = static_cast<std::size_t>(nr) * width + nc;
            if (mask[n] && !seen[n]) {
              seen[n] = 1;
              stack.push_back(static_cast<int>(n));
            }
          }
        }
      }
      rects.push_back(box);
    }
  }
  std::sort(rects.begin(), rects.end());
  return rects;
}

void fill_black(RasterImage& img, const std::vector<PixelRect>& rects) {
  for (const auto& rect : rects) {
    for (int r = rect.top; r <= rect.bottom; ++r) {
      std::fill_n(&img.at(r, rect.left), rect.right - rect.left + 1, Rgb{});
    }
  }
}

}  // namespace

std::vector<std::uint8_t> bright_mask(const RasterImage& img, int threshold) {
  check_threshold(threshold);
  const auto& px = img.pixels();
  std::vector<std::uint8_t> mask(px.size());
  const long long n = static_cast<long long>(px.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) mask[i] = luma(px[i]) > threshold ? 1 : 0;
  return mask;
}

std::vector<PixelRect> find_bright_components(const RasterImage& img, int threshold) {
  return label_components(bright_mask(img, threshold), img.width(), img.height());
}

RasterImage inpaint(const RasterImage& img, int threshold) {
  RasterImage out = img;
  fill_black(out, find_bright_components(img, threshold));
  return out;
}

namespace serial {

std::vector<std::uint8_t> bright_mask(const RasterImage& img, int threshold) {
  check_threshold(threshold);
  std::vector<std::uint8_t> mask;
  mask.reserve(img.pixels().size());
  for (const auto& p : img.pixels()) mask.push_back(luma(p) > threshold ? 1 : 0);
  return mask;
}

RasterImage inpaint(const RasterImage& img, int threshold) {
  RasterImage out = img;
  fill_black(out, label_components(serial::bright_mask(img, threshold), img.width(), img.height()));
  return out;
}

}  // namespace serial

}  // namespace bruv
