#pragma once

#include <string>
#include <vector>

namespace lhfi {

// Minimal RFC-4180 reader: quoted fields, doubled quotes, embedded commas
// and newlines. Missing cells are empty strings or "NA".
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv_file(const std::string& path);
CsvTable parse_csv(const std::string& text);

bool csv_cell_missing(const std::string& cell);

}  // namespace lhfi
