#ifndef MIXSEL_CSV_HPP
#define MIXSEL_CSV_HPP

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mixsel {

// RFC-4180-style CSV: comma-separated, CRLF record ends (bare LF accepted on
// input), double-quoted fields with "" escapes. First record is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&]() {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&]() {
    end_field();
    if (table.header.empty())
      table.header = std::move(record);
    else
      table.rows.push_back(std::move(record));
    record.clear();
  };

  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field += '"';
          i += 2;
        } else {
          quoted = false;
          ++i;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
        ++i;
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field.empty() && !field_started) {
          quoted = true;
          field_started = true;
          ++i;
        } else {
          throw std::invalid_argument("CSV line " + std::to_string(line) +
                                      ": quote inside unquoted field");
        }
        break;
      case ',':
        end_field();
        ++i;
        break;
      case '\r':
        if (i + 1 >= n || text[i + 1] != '\n')
          throw std::invalid_argument("CSV line " + std::to_string(line) + ": bare CR");
        end_record();
        ++line;
        i += 2;
        break;
      case '\n':
        end_record();
        ++line;
        ++i;
        break;
      default:
        field += ch;
        field_started = true;
        ++i;
        break;
    }
  }
  if (quoted)
    throw std::invalid_argument("CSV line " + std::to_string(line) + ": unterminated quote");
  if (field_started || !field.empty() || !record.empty()) end_record();

  if (table.header.empty()) throw std::invalid_argument("CSV: missing header row");
  const std::size_t width = table.header.size();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != width)
      throw std::invalid_argument("CSV line " + std::to_string(r + 2) + ": expected " +
                                  std::to_string(width) + " fields, got " +
                                  std::to_string(table.rows[r].size()));
  }
  return table;
}

inline std::string csv_escape(const std::string& field) {
  const bool needs_quote = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quote) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string to_csv(const CsvTable& table) {
  std::string out;
  auto write_record = [&out](const std::vector<std::string>& rec) {
    for (std::size_t i = 0; i < rec.size(); ++i) {
      if (i > 0) out += ',';
      out += csv_escape(rec[i]);
    }
    out += "\r\n";
  };
  write_record(table.header);
  for (const auto& row : table.rows) write_record(row);
  return out;
}

}  // namespace mixsel

#endif
