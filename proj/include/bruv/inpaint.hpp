#pragma once

#include <cstdint>
#include <vector>

#include "bruv/raster.hpp"

namespace bruv {

inline constexpr int kDefaultBrightThreshold = 230;

/// round(0.299 R + 0.587 G + 0.114 B), computed exactly in integers.
inline int luma(Rgb p) { return (299 * p.r + 587 * p.g + 114 * p.b + 500) / 1000; }

/// 1 where luma > threshold. Rows are processed in parallel.
std::vector<std::uint8_t> bright_mask(const RasterImage& img, int threshold);

/// Tight bounding rectangles of the 8-connected components of the bright
/// mask, sorted by (top, left).
std::vector<PixelRect> find_bright_components(const RasterImage& img,
                                              int threshold = kDefaultBrightThreshold);

/// Covers every bright component's rectangle with black.
RasterImage inpaint(const RasterImage& img, int threshold = kDefaultBrightThreshold);

namespace serial {

std::vector<std::uint8_t> bright_mask(const RasterImage& img, int threshold);
RasterImage inpaint(const RasterImage& img, int threshold = kDefaultBrightThreshold);

}  // namespace serial

}  // namespace bruv
