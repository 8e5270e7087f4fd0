#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace doslab::io {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// RFC 4180 writer: CRLF line endings, fields quoted when they contain a
/// comma, quote or line break.
class CsvWriter {
public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);

  CsvWriter& field(std::string_view text);
  CsvWriter& field(double v);
  template <class I>
    requires std::is_integral_v<I>
  CsvWriter& field(I v) {
    return field(std::string_view(std::to_string(v)));
  }
  /// Ends the current row; throws when the field count differs from the header.
  void end_row();

private:
  std::ostream& out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

}  // namespace doslab::io
