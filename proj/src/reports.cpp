#include "ffr/reports.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ffr {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("short write to " + path);
}

std::string content_hash(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) buf[i] = hex[(h >> (60 - 4 * i)) & 0xf];
    buf[16] = 0;
    return std::string(buf);
}

std::string file_hash(const std::string& path) { return content_hash(read_file(path)); }

std::size_t CsvTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw std::invalid_argument("csv: no column named '" + name + "'");
}

std::string CsvTable::cell(std::size_t row, const std::string& column) const {
    return rows.at(row).at(column_index(column));
}

std::string csv_to_string(const CsvTable& t) {
    std::ostringstream os;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) os << ',';
        os << t.columns[i];
    }
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << row[i];
        }
        os << '\n';
    }
    return os.str();
}

CsvTable csv_from_string(const std::string& text) {
    CsvTable t;
    std::istringstream is(text);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        cells.push_back(cur);
        if (first) {
            t.columns = std::move(cells);
            first = false;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

CsvTable csv_from_file(const std::string& path) { return csv_from_string(read_file(path)); }

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
    // Fixed layout for plot coordinates keeps the byte stream stable.
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace

std::string render_pareto_svg(const std::vector<PlotSeries>& series) {
    const double w = 640, h = 480;
    const double ml = 70, mr = 160, mt = 30, mb = 55;
    double max_dp = 0.0, min_acc = 1.0, max_acc = 0.0;
    for (const auto& s : series) {
        for (const auto& [dp, acc] : s.points) {
            max_dp = std::max(max_dp, dp);
            min_acc = std::min(min_acc, acc);
            max_acc = std::max(max_acc, acc);
        }
    }
    if (max_dp <= 0.0) max_dp = 1.0;
    max_dp *= 1.05;
    min_acc = std::max(0.0, min_acc - 0.02);
    max_acc = std::min(1.0, max_acc + 0.02);
    if (max_acc <= min_acc) {
        min_acc = 0.0;
        max_acc = 1.0;
    }
    auto px = [&](double dp) { return ml + dp / max_dp * (w - ml - mr); };
    auto py = [&](double acc) { return h - mb - (acc - min_acc) / (max_acc - min_acc) * (h - mt - mb); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    // Axes.
    os << "<line x1=\"" << num(ml) << "\" y1=\"" << num(h - mb) << "\" x2=\"" << num(w - mr) << "\" y2=\""
       << num(h - mb) << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(ml) << "\" y2=\""
       << num(h - mb) << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double dp = max_dp * i / 5.0;
        const double acc = min_acc + (max_acc - min_acc) * i / 5.0;
        os << "<text x=\"" << num(px(dp)) << "\" y=\"" << num(h - mb + 18)
           << "\" font-size=\"11\" text-anchor=\"middle\">" << num(dp) << "</text>\n";
        os << "<text x=\"" << num(ml - 8) << "\" y=\"" << num(py(acc) + 4)
           << "\" font-size=\"11\" text-anchor=\"end\">" << num(acc) << "</text>\n";
        os << "<line x1=\"" << num(px(dp)) << "\" y1=\"" << num(h - mb) << "\" x2=\"" << num(px(dp))
           << "\" y2=\"" << num(h - mb + 4) << "\" stroke=\"black\"/>\n";
    }
    os << "<text x=\"" << num((ml + w - mr) / 2) << "\" y=\"" << num(h - 12)
       << "\" font-size=\"13\" text-anchor=\"middle\">demographic parity distance</text>\n";
    os << "<text x=\"16\" y=\"" << num((mt + h - mb) / 2)
       << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << num((mt + h - mb) / 2)
       << ")\">accuracy</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % 6];
        // Front polyline, dp-ascending.
        if (s.front_points.size() > 1) {
            auto fp = s.front_points;
            std::sort(fp.begin(), fp.end());
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [dp, acc] : fp) os << num(px(dp)) << "," << num(py(acc)) << " ";
            os << "\"/>\n";
        }
        for (const auto& [dp, acc] : s.points) {
            os << "<circle cx=\"" << num(px(dp)) << "\" cy=\"" << num(py(acc)) << "\" r=\"3\" fill=\""
               << color << "\" fill-opacity=\"0.45\"/>\n";
        }
        for (const auto& [dp, acc] : s.front_points) {
            os << "<circle cx=\"" << num(px(dp)) << "\" cy=\"" << num(py(acc)) << "\" r=\"4.5\" fill=\""
               << color << "\" stroke=\"black\"/>\n";
        }
        os << "<text x=\"" << num(w - mr + 14) << "\" y=\"" << num(mt + 16 + 18 * static_cast<double>(si))
           << "\" font-size=\"12\" fill=\"" << color << "\">" << s.name << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace ffr
