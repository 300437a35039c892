#include "lhfi/csv.hpp"

#include <fstream>
#include <sstream>

#include "lhfi/stochastics.hpp"

namespace lhfi {

int CsvTable::column_index(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open CSV file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(record);
    record.clear();
  };

  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      // swallow; handled with the following \n (or treated as bare EOL)
      if (i + 1 >= text.size() || text[i + 1] != '\n') end_record();
    } else if (c == '\n') {
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) throw Error("CSV parse error: unterminated quoted field");
  if (field_started || !record.empty()) end_record();

  CsvTable out;
  if (records.empty()) throw Error("CSV parse error: empty input");
  out.header = records.front();
  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() == 1 && records[r][0].empty()) continue;  // blank line
    if (records[r].size() != out.header.size()) {
      throw Error("CSV parse error: row " + std::to_string(r + 1) + " has " +
                  std::to_string(records[r].size()) + " fields, header has " +
                  std::to_string(out.header.size()));
    }
    out.rows.push_back(records[r]);
  }
  return out;
}

bool csv_cell_missing(const std::string& cell) {
  return cell.empty() || cell == "NA";
}

}  // namespace lhfi
