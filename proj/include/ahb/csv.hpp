#ifndef AHB_CSV_HPP
#define AHB_CSV_HPP

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ahb::csv {

// A parsed CSV file: the mandatory header plus string cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, or nullopt when absent.
  std::optional<std::size_t> column(std::string_view name) const;
};

// RFC 4180 style reader (quoted fields, doubled quotes, CRLF tolerated).
// Every row must have as many cells as the header.
Table parse(std::string_view text);
Table read_file(const std::string& path);

// Strict numeric conversion; throws ParseError mentioning `where`.
double parse_number(std::string_view cell, const std::string& where);

// Shortest round-trip decimal representation of a double.
std::string format_number(double value);

std::string escape(std::string_view cell);

// Writes one CSV record followed by '\n'. Cells are escaped when needed.
void write_row(std::ostream& out, const std::vector<std::string>& cells);

}  // namespace ahb::csv

#endif  // AHB_CSV_HPP
