#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mdta2g {

/// Rectangular table of preformatted cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;  // emitted as leading "# " lines in CSV

  void add_row(std::vector<std::string> row);
  std::string to_csv() const;
  /// Space-aligned columns for terminal output.
  std::string to_text() const;
};

/// RFC 4180 quoting when the cell holds a comma, quote or newline.
std::string csv_escape(const std::string& cell);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Self-contained SVG line chart with axes, min/max tick labels and a legend.
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series, int width = 640, int height = 400);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mdta2g
