#pragma once

#include <span>
#include <string>
#include <vector>

namespace statsamp {

/// Shortest representation at 6 significant digits ("%.6g"); the one number
/// format used in every CSV the tools emit.
std::string fmt_g6(double v);

/// Full-precision round-trippable representation ("%.17g"); used where
/// byte-identical replay matters more than readability.
std::string fmt_g17(double v);

void write_text_file(const std::string& path, const std::string& content);

struct CsvTable {
  std::vector<std::string> comments;  // emitted first, prefixed with "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const;
};

/// Parsed CSV with optional '#' comment lines. Fields stay strings; number()
/// converts on demand and reports the 1-based source line on failure.
struct ParsedCsv {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // source line of each row

  int column(const std::string& name) const;  // -1 when absent
  double number(std::size_t row, int col) const;
};

/// Throws std::runtime_error naming the 1-based line number on malformed
/// input (wrong field count).
ParsedCsv read_csv(const std::string& path);

}  // namespace statsamp
