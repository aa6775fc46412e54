#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ffr {

/// Shortest decimal representation that round-trips the exact double.
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

/// FNV-1a 64 over the exact bytes, as 16 hex digits.
std::string content_hash(const std::string& bytes);
std::string file_hash(const std::string& path);

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(const std::string& name) const;
    std::string cell(std::size_t row, const std::string& column) const;
};

std::string csv_to_string(const CsvTable& t);
CsvTable csv_from_string(const std::string& text);
CsvTable csv_from_file(const std::string& path);

/// One series of an accuracy-vs-dp scatter.
struct PlotSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;       // (dp, accuracy)
    std::vector<std::pair<double, double>> front_points; // emphasized subset
};

/// Hand-rolled SVG scatter: accuracy (y) against demographic parity distance
/// (x), one marker element per point, front points emphasized and joined.
/// Output bytes are a pure function of the input.
std::string render_pareto_svg(const std::vector<PlotSeries>& series);

} // namespace ffr
