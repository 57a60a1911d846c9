#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dmtrack {

/// Formats a double with 17 significant digits, enough to round-trip any
/// IEEE-754 binary64 value through text exactly.
std::string format_g17(double value);

/// Strict double parse; throws std::runtime_error on trailing garbage.
double parse_double(const std::string& text);

/// Writes content atomically: temp file in the same directory + rename.
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& content);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

/// Reads a comma-separated file with a mandatory header row. Throws on
/// missing file or ragged rows.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace dmtrack
