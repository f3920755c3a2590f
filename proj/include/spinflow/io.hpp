#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace spinflow::io {

/// Shortest round-trippable decimal form used in every CSV/JSON output.
std::string format_number(double v);

/// Header plus rows of pre-formatted cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells);
  std::string to_string() const;
};

/// Numeric CSV with a mandatory header row.
struct NumericCsv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  /// Column by header name; std::out_of_range when absent.
  const std::vector<double>& column(const std::string& name) const;
  bool has(const std::string& name) const;
};

NumericCsv read_numeric_csv(const std::filesystem::path& path);

/// Writes to `<path>.tmp` and renames into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// Lower-case hex SHA-256 of a byte string / file.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

} // namespace spinflow::io
