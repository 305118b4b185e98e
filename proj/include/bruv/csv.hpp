#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace bruv::csv {

std::vector<std::string_view> split(std::string_view line);

std::int64_t parse_int(std::string_view s, std::string_view field, std::size_t line);
double parse_real(std::string_view s, std::string_view field, std::size_t line);
/// Exactly "<digits>.<6 digits>".
double parse_fixed6(std::string_view s, std::string_view field, std::size_t line);

/// Line reader that strips a trailing CR and counts 1-based line numbers.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Reads the header and throws ParseError unless it equals `expected`.
  void expect_header(std::string_view expected);
  /// Next non-blank row split on commas; false at end of input. Throws
  /// ParseError when the row does not have `fields` columns.
  bool next(std::vector<std::string_view>& row, std::size_t fields);
  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::string buf_;
  std::size_t line_ = 0;
};

}  // namespace bruv::csv
