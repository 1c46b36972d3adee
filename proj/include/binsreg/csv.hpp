#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace binsreg::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of the named column, or -1.
  int column(std::string_view name) const;
};

/// Comma-delimited, header row required, RFC 4180 double-quote escaping.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

/// `NA`, empty cells and anything non-numeric map to nullopt.
std::optional<double> parse_double(std::string_view cell);

/// Shortest representation that round-trips exactly; NaN is written as "".
std::string format_double(double value);

/// Quotes the cell only when it contains a delimiter, quote or newline.
std::string escape(std::string_view cell);

}  // namespace binsreg::csv
