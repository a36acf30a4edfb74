#include "dde/io.hpp"

#include "dde/error.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dde::io {
namespace {

std::vector<std::string_view>
split_fields(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

std::string_view
trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

} // namespace

std::string
format_double(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t
CsvTable::column(std::string_view name) const
{
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name)
      return i;
  throw FormatError("missing CSV column '" + std::string(name) + "'");
}

CsvTable
read_csv(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw FormatError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = trim(line);
    if (view.empty())
      continue;
    const auto fields = split_fields(view);
    if (t.header.empty()) {
      for (auto f : fields)
        t.header.emplace_back(trim(f));
      continue;
    }
    if (fields.size() != t.header.size())
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected " + std::to_string(t.header.size()) +
                        " fields");
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::string field(trim(fields[i]));
      char* end = nullptr;
      errno = 0;
      row[i] = std::strtod(field.c_str(), &end);
      if (field.empty() || end != field.c_str() + field.size())
        throw FormatError(path.string() + ":" + std::to_string(lineno) +
                          ": not a number '" + field + "'");
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty())
    throw FormatError(path.string() + ": empty CSV file");
  return t;
}

void
write_csv(std::ostream& os, const CsvTable& table)
{
  for (std::size_t i = 0; i < table.header.size(); ++i)
    os << (i ? "," : "") << table.header[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
}

void
write_csv(const std::filesystem::path& path, const CsvTable& table)
{
  std::ofstream out(path);
  if (!out)
    throw FormatError("cannot write " + path.string());
  write_csv(out, table);
}

std::string
read_text(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void
write_text(const std::filesystem::path& path, std::string_view text)
{
  std::ofstream out(path);
  if (!out)
    throw FormatError("cannot write " + path.string());
  out << text;
}

} // namespace dde::io
