#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace voxelval::pipeline {

/// Comma-separated, header row, UTF-8, LF line endings.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find_column(std::string_view name) const;
  /// Throws FormatError when the column is missing.
  std::size_t column(std::string_view name) const;
};

/// Throws FormatError naming the 1-based line of any malformed row.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text, std::string_view source = "<memory>");
std::string to_csv_text(const CsvTable& table);
void write_text_atomically(const std::filesystem::path& path, std::string_view text);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Shortest representation that round-trips exactly.
std::string format_number(double value);
/// Empty string for an absent value.
std::string format_optional(const std::optional<double>& value);
/// Empty cell -> nullopt; anything unparsable throws FormatError.
std::optional<double> parse_optional_number(std::string_view cell, std::size_t line, std::string_view column);

}  // namespace voxelval::pipeline
