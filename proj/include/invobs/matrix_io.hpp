#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "invobs/types.hpp"

namespace invobs {

/// 12-significant-digit scientific formatting used for every CSV cell;
/// identical inputs always produce identical bytes.
inline std::string format_sig12(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.11e", v);
  return buf;
}

/// Full-precision value for matrix files (round-trips exactly).
inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Matrix text format: one "rows cols" line, then one whitespace-delimited
/// row per line, row-major.
inline void write_matrix(std::ostream& os, const Matrix& m) {
  os << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << " ";
      os << format_full(m(i, j));
    }
    os << "\n";
  }
}

inline Matrix read_matrix(std::istream& is) {
  Eigen::Index rows = 0, cols = 0;
  require(static_cast<bool>(is >> rows >> cols), errc::io_failure, "bad matrix header");
  require(rows >= 0 && cols >= 0, errc::io_failure, "negative matrix dimensions");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      require(static_cast<bool>(is >> m(i, j)), errc::io_failure, "truncated matrix body");
  return m;
}

inline void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream os(path);
  require(os.good(), errc::io_failure, "cannot open " + path + " for writing");
  write_matrix(os, m);
  require(os.good(), errc::io_failure, "write failed for " + path);
}

inline Matrix load_matrix(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), errc::io_failure, "cannot open " + path);
  return read_matrix(is);
}

/// Bracketed row-major matrix literal, e.g. [0 0; 1 0]. Used by config files.
inline Matrix parse_matrix_literal(const std::string& text) {
  std::string t = text;
  require(!t.empty() && t.front() == '[' && t.back() == ']', errc::bad_config,
          "matrix literal must be bracketed: " + text);
  t = t.substr(1, t.size() - 2);
  std::vector<std::vector<double>> rows;
  std::stringstream row_stream(t);
  std::string row_text;
  while (std::getline(row_stream, row_text, ';')) {
    std::vector<double> row;
    std::stringstream cell_stream(row_text);
    double v = 0.0;
    while (cell_stream >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(row);
  }
  require(!rows.empty(), errc::bad_config, "empty matrix literal: " + text);
  const std::size_t cols = rows.front().size();
  for (const auto& r : rows)
    require(r.size() == cols, errc::bad_config, "ragged matrix literal: " + text);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

inline std::string format_matrix_literal(const Matrix& m) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += " ";
      out += format_full(m(i, j));
    }
  }
  out += "]";
  return out;
}

/// Trace CSV: header "k,component_0,..."; one row per step, the index
/// column carrying the trace's own (possibly delayed) time index.
inline void write_trace_csv(std::ostream& os, const SignalTrace& trace) {
  os << "k";
  for (Eigen::Index c = 0; c < trace.dim(); ++c) os << ",component_" << c;
  os << "\n";
  for (std::int64_t i = 0; i < trace.size(); ++i) {
    os << trace.start_index() + i;
    const Vector& v = trace.sample(i);
    for (Eigen::Index c = 0; c < v.size(); ++c) os << "," << format_sig12(v(c));
    os << "\n";
  }
}

inline void emit_csv(const SignalTrace& trace, const std::string& path) {
  std::ofstream os(path);
  require(os.good(), errc::io_failure, "cannot open " + path + " for writing");
  write_trace_csv(os, trace);
  require(os.good(), errc::io_failure, "write failed for " + path);
}

/// Curve CSV for parameter sweeps: header "n_d,value".
inline void emit_bound_curve(const std::vector<std::pair<std::int64_t, double>>& values,
                             const std::string& path) {
  std::ofstream os(path);
  require(os.good(), errc::io_failure, "cannot open " + path + " for writing");
  os << "n_d,value\n";
  for (const auto& [nd, v] : values) os << nd << "," << format_sig12(v) << "\n";
  require(os.good(), errc::io_failure, "write failed for " + path);
}

}  // namespace invobs
