// Minimal CSV support: header row, comma separated, '.' decimal point.
// Empty cells and NA/NaN mark missing values. Cells are kept as text so a
// non-numeric time column (e.g. dates) survives a round trip.

#ifndef TLPRED_CSV_HPP
#define TLPRED_CSV_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tlpred/error.hpp"

namespace tlpred {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan") return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  static CsvTable parse(std::istream& in, const std::string& source = "<stream>") {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw IoError(source + ": empty file, a header row is required");
    strip_bom(line);
    t.header_ = split(line);
    for (auto& h : t.header_) h = trim(h);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto cells = split(line);
      if (cells.size() != t.header_.size())
        throw IoError(source + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header_.size()) + " cells, found " +
                      std::to_string(cells.size()));
      t.rows_.push_back(std::move(cells));
    }
    return t;
  }

  static CsvTable read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return parse(in, path);
  }

  /// Numeric matrix with generated column names prefix1..prefixN.
  static CsvTable from_matrix(const Eigen::MatrixXd& m, const std::string& prefix) {
    std::vector<std::string> header;
    for (Eigen::Index j = 0; j < m.cols(); ++j) header.push_back(prefix + std::to_string(j + 1));
    CsvTable t(std::move(header));
    t.rows_.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<std::string> row;
      row.reserve(static_cast<std::size_t>(m.cols()));
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(format_double(m(i, j)));
      t.rows_.push_back(std::move(row));
    }
    return t;
  }

  void write(std::ostream& out) const {
    write_row(out, header_);
    for (const auto& r : rows_) write_row(out, r);
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write(out);
    if (!out) throw IoError("write to '" + path + "' failed");
  }

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw ArgumentError("CsvTable: row width mismatch");
    rows_.push_back(std::move(cells));
  }

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t rows() const noexcept { return rows_.size(); }
  std::size_t cols() const noexcept { return header_.size(); }
  const std::string& cell(std::size_t r, std::size_t c) const { return rows_.at(r).at(c); }

  std::optional<std::size_t> find(const std::string& name) const {
    const auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header_.begin());
  }

  std::size_t index_of(const std::string& name) const {
    if (auto i = find(name)) return *i;
    throw ArgumentError("column '" + name + "' not found");
  }

  /// Column values with NaN for missing cells. Non-numeric text is an error.
  std::vector<double> numeric_column(std::size_t c) const {
    std::vector<double> out(rows_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const std::string& s = rows_[r][c];
      auto v = parse_double(s);
      if (!v) {
        const std::string t = trim(s);
        if (!(t.empty() || t == "NA" || t == "na" || t == "NaN" || t == "nan"))
          throw IoError("column '" + header_[c] + "', row " + std::to_string(r + 1) +
                        ": '" + s + "' is not a number");
        out[r] = std::numeric_limits<double>::quiet_NaN();
      } else {
        out[r] = *v;
      }
    }
    return out;
  }

  std::vector<std::string> text_column(std::size_t c) const {
    std::vector<std::string> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(trim(r[c]));
    return out;
  }

 private:
  static void strip_bom(std::string& s) {
    if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF &&
        static_cast<unsigned char>(s[1]) == 0xBB && static_cast<unsigned char>(s[2]) == 0xBF)
      s.erase(0, 3);
    if (!s.empty() && s.back() == '\r') s.pop_back();
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\"");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\"");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        out.push_back(std::move(cur));
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    out.push_back(std::move(cur));
    return out;
  }

  static void write_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace tlpred

#endif  // TLPRED_CSV_HPP
