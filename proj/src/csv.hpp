#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace morphkit::csv {

using Row = std::vector<std::string>;

/// Splits CSV text into rows. Fields may be double-quoted with "" escapes;
/// CRLF line endings and a trailing newline are accepted; blank lines are
/// skipped. Throws Error(Format) on an unterminated quote.
std::vector<Row> parse(std::string_view text);

/// Quotes a field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

std::string join(const Row& fields);

/// Throws Error(Format) unless `row` equals the comma-separated `expected`.
void require_header(const Row& row, std::string_view expected, std::string_view what);

}  // namespace morphkit::csv
