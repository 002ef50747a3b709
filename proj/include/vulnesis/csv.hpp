#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vulnesis::csv {

using Record = std::vector<std::string>;

/// RFC 4180 reader. Quoted fields may contain separators, doubled quotes and
/// line breaks; CRLF and LF endings are accepted. Records consisting of a
/// single empty field (blank lines) are dropped. `line` is the 1-based source
/// line where each record starts.
struct ParsedRecord {
  Record fields;
  std::size_t line = 0;
};

std::vector<ParsedRecord> read(std::string_view text, char separator = ',');

/// Quotes a field when it holds a separator, quote or line break.
std::string escape(std::string_view field, char separator = ',');

std::string format_row(const Record& fields, char separator = ',');

std::string_view trim(std::string_view text);

}  // namespace vulnesis::csv
