#pragma once

// Minimal RFC 4180 reader/writer.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nameprobe/core.hpp"

namespace nameprobe::csv {

class ParseError : public Error {
 public:
  using Error::Error;
};

using Row = std::vector<std::string>;

/// Parses the whole document. Accepts LF or CRLF line endings and a leading
/// UTF-8 BOM. Quoted fields may contain commas, doubled quotes and newlines.
/// A trailing newline does not produce an empty row; blank lines are skipped.
std::vector<Row> parse(std::string_view text);

/// Quotes the field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);
/// Joined, escaped fields terminated by '\n'.
std::string format_row(std::span<const std::string> fields);

}  // namespace nameprobe::csv
