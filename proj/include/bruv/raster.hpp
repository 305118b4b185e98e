#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace bruv {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major 8-bit RGB image.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  Rgb& at(int row, int col) { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }
  const Rgb& at(int row, int col) const {
    return pixels_[static_cast<std::size_t>(row) * width_ + col];
  }
  std::vector<Rgb>& pixels() { return pixels_; }
  const std::vector<Rgb>& pixels() const { return pixels_; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_ = 0, height_ = 0;
  std::vector<Rgb> pixels_;
};

/// Inclusive pixel rectangle.
struct PixelRect {
  int top = 0, left = 0, bottom = 0, right = 0;

  long long area() const {
    return static_cast<long long>(bottom - top + 1) * (right - left + 1);
  }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
  friend auto operator<=>(const PixelRect&, const PixelRect&) = default;
};

/// Binary (P6) portable pixmap, maxval 255.
RasterImage read_ppm(std::istream& in);
RasterImage read_ppm(const std::filesystem::path& path);
void write_ppm(std::ostream& out, const RasterImage& img);
void write_ppm(const std::filesystem::path& path, const RasterImage& img);

/// Baseline JPEG via libjpeg.
void write_jpeg(const std::filesystem::path& path, const RasterImage& img, int quality = 90);

/// Outline of `rect` clipped to the image.
void draw_rect(RasterImage& img, const PixelRect& rect, Rgb color, int thickness = 2);

}  // namespace bruv
