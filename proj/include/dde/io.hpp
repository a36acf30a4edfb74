#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dde::io {

/// Decimal text with 17 significant digits; parses back to the same double.
std::string
format_double(double v);

/// Numeric CSV table with a header row.
struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index for a header name, or throws FormatError.
  std::size_t column(std::string_view name) const;
};

CsvTable
read_csv(const std::filesystem::path& path);

void
write_csv(const std::filesystem::path& path, const CsvTable& table);

void
write_csv(std::ostream& os, const CsvTable& table);

std::string
read_text(const std::filesystem::path& path);

void
write_text(const std::filesystem::path& path, std::string_view text);

} // namespace dde::io
