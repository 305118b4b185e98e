#include "bruv/csv.hpp"

#include <fmt/format.h>

#include <charconv>

#include "bruv/errors.hpp"

namespace bruv::csv {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::int64_t parse_int(std::string_view s, std::string_view field, std::size_t line) {
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError(fmt::format("field '{}' is not an integer: '{}'", field, s), line);
  }
  return v;
}

double parse_real(std::string_view s, std::string_view field, std::size_t line) {
  double v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError(fmt::format("field '{}' is not a number: '{}'", field, s), line);
  }
  return v;
}

double parse_fixed6(std::string_view s, std::string_view field, std::size_t line) {
  const auto dot = s.find('.');
  const bool shaped = dot != std::string_view::npos && dot > 0 && s.size() - dot - 1 == 6;
  double v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::fixed);
  if (!shaped || ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError(fmt::format("field '{}' must be a real with 6 decimals: '{}'", field, s), line);
  }
  return v;
}

void Reader::expect_header(std::string_view expected) {
  if (!std::getline(in_, buf_)) throw ParseError("missing header row", 1);
  ++line_;
  if (!buf_.empty() && buf_.back() == '\r') buf_.pop_back();
  if (buf_ != expected) throw ParseError(fmt::format("expected header '{}'", expected), line_);
}

bool Reader::next(std::vector<std::string_view>& row, std::size_t fields) {
  while (std::getline(in_, buf_)) {
    ++line_;
    if (!buf_.empty() && buf_.back() == '\r') buf_.pop_back();
    if (buf_.empty()) continue;
    row = split(buf_);
    if (row.size() != fields) {
      throw ParseError(fmt::format("expected {} fields, found {}", fields, row.size()), line_);
    }
    return true;
  }
  return false;
}

}  // namespace bruv::csv
