#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "symlin.hpp"

namespace oedkit::csv {

// 17 significant digits: round-trips every double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Row = std::vector<std::string>;

class Writer {
 public:
  explicit Writer(std::vector<std::string> header) : header_(std::move(header)) {}

  void row(const Row& cells) {
    if (cells.size() != header_.size())
      throw Error(ErrorKind::DimensionMismatch, "csv row has " + std::to_string(cells.size()) +
                                                    " cells, header has " +
                                                    std::to_string(header_.size()));
    rows_.push_back(cells);
  }

  std::string str() const {
    std::ostringstream os;
    put(os, header_);
    for (const Row& r : rows_) put(os, r);
    return os.str();
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
    out << str();
  }

 private:
  static void put(std::ostream& os, const Row& r) {
    for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << r[k];
    os << '\n';
  }

  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidArgument, where + ": '" + s + "' is not a number");
  }
}

// Numeric CSV with a header row; blank lines and '#' lines are skipped.
inline Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read " + path);
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto cells = split(s);
    if (!have_header) {
      t.header = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(ErrorKind::InvalidArgument, path + ":" + std::to_string(lineno) + ": expected " +
                                                  std::to_string(t.header.size()) + " columns");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c, path + ":" + std::to_string(lineno)));
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw Error(ErrorKind::InvalidArgument, path + ": empty file");
  return t;
}

// Square matrix CSV (header row of labels), symmetrized.
inline SymMatrix read_sym_matrix(const std::string& path) {
  const Table t = read_table(path);
  const std::size_t p = t.header.size();
  if (t.rows.size() != p)
    throw Error(ErrorKind::InvalidArgument, path + ": expected a " + std::to_string(p) + "x" +
                                                std::to_string(p) + " matrix");
  Matrix a(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) a(i, j) = t.rows[i][j];
  return SymMatrix::from_full(a);
}

inline Writer matrix_writer(const SymMatrix& m, const std::vector<std::string>& labels) {
  Writer w(labels);
  for (std::size_t i = 0; i < m.dim(); ++i) {
    Row r;
    for (std::size_t j = 0; j < m.dim(); ++j) r.push_back(fmt(m(i, j)));
    w.row(r);
  }
  return w;
}

}  // namespace oedkit::csv
