#include "bruv/raster.hpp"

#include <jpeglib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <string>

#include "bruv/errors.hpp"

namespace bruv {

RasterImage::RasterImage(int width, int height, Rgb fill)
    : width_(width), height_(height),
      pixels_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {
  if (width <= 0 || height <= 0) throw ValidationError("image dimensions must be positive");
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string ppm_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  // The single whitespace after maxval has been consumed here.
  return tok;
}

}  // namespace

RasterImage read_ppm(std::istream& in) {
  if (ppm_token(in) != "P6") throw ParseError("ppm: expected P6 magic");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(ppm_token(in));
    h = std::stoi(ppm_token(in));
    maxval = std::stoi(ppm_token(in));
  } catch (const std::exception&) {
    throw ParseError("ppm: malformed header");
  }
  if (w <= 0 || h <= 0) throw ParseError("ppm: non-positive dimensions");
  if (maxval != 255) throw ParseError("ppm: only maxval 255 is supported");
  RasterImage img(w, h);
  static_assert(sizeof(Rgb) == 3);
  in.read(reinterpret_cast<char*>(img.pixels().data()),
          static_cast<std::streamsize>(img.pixels().size() * 3));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels().size() * 3)) {
    throw ParseError("ppm: truncated pixel data");
  }
  return img;
}

RasterImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_ppm(in);
}

void write_ppm(std::ostream& out, const RasterImage& img) {
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.pixels().size() * 3));
}

void write_ppm(const std::filesystem::path& path, const RasterImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_ppm(out, img);
}

void write_jpeg(const std::filesystem::path& path, const RasterImage& img, int quality) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw Error("cannot write " + path.string());

  jpeg_compress_struct cinfo{};
  jpeg_error_mgr jerr{};
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, file.get());
  cinfo.image_width = static_cast<JDIMENSION>(img.width());
  cinfo.image_height = static_cast<JDIMENSION>(img.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPLE*>(
        reinterpret_cast<const JSAMPLE*>(&img.at(static_cast<int>(cinfo.next_scanline), 0)));
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
}

void draw_rect(RasterImage& img, const PixelRect& rect, Rgb color, int thickness) {
  const int top = std::clamp(rect.top, 0, img.height() - 1);
  const int bottom = std::clamp(rect.bottom, 0, img.height() - 1);
  const int left = std::clamp(rect.left, 0, img.width() - 1);
  const int right = std::clamp(rect.right, 0, img.width() - 1);
  for (int r = top; r <= bottom; ++r) {
    for (int c = left; c <= right; ++c) {
      const bool edge = r - top < thickness || bottom - r < thickness || c - left < thickness ||
                        right - c < thickness;
      if (edge) img.at(r, c) = color;
    }
  }
}

}  // namespace bruv
