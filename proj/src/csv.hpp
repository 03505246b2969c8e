#pragma once

// Minimal CSV reader shared by the dataset loaders. Fields are split on
// commas with RFC 4180 quoting; unquoted fields are trimmed of surrounding
// whitespace.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace discern::csv {

std::vector<std::string> split_line(std::string_view line);

// Parses a finite double occupying the whole field.
std::optional<double> parse_double(std::string_view field);

std::string_view trim(std::string_view s);

struct Document {
  std::vector<std::string> header;
  // rows[i] is file row i + 1 (header is row 0); blank lines are skipped but
  // still counted in row_numbers.
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_numbers;
};

Document read(const std::filesystem::path& path);

}  // namespace discern::csv
