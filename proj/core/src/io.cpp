#include "coresketch/io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "coresketch/errors.hpp"

namespace coresketch::io {

namespace {

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
  throw ContractError(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<double> parse_row(const std::string& text, const std::string& path,
                              std::size_t line) {
  std::string buf = text;
  for (char& c : buf)
    if (c == ',' || c == ';' || c == '\t') c = ' ';
  std::istringstream ss(buf);
  std::vector<double> row;
  double v;
  while (ss >> v) {
    if (!std::isfinite(v)) fail(path, line, "non-finite value");
    row.push_back(v);
  }
  std::string rest;
  if (ss.clear(), ss >> rest) fail(path, line, "unparseable token '" + rest + "'");
  return row;
}

bool blank_or_comment(const std::string& s) {
  for (char c : s) {
    if (c == '#' || c == '%') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

DenseMatrix read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("read_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_or_comment(line)) continue;
    std::vector<double> row = parse_row(line, path, lineno);
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      fail(path, lineno, "inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ContractError("read_csv: no data in " + path);
  DenseMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

DenseMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("read_matrix_market: cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  // skip banner and comments
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    if (blank_or_comment(line)) continue;
    break;
  }
  std::istringstream head(line);
  long rows = 0, cols = 0, nnz = 0;
  if (!(head >> rows >> cols >> nnz) || rows < 1 || cols < 1 || nnz < 0)
    fail(path, lineno, "malformed size header");
  DenseMatrix m = DenseMatrix::Zero(rows, cols);
  long seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_or_comment(line)) continue;
    std::istringstream ss(line);
    long i = 0, j = 0;
    double v = 0.0;
    if (!(ss >> i >> j >> v)) fail(path, lineno, "malformed entry");
    if (!std::isfinite(v)) fail(path, lineno, "non-finite value");
    if (i < 1 || i > rows || j < 1 || j > cols) fail(path, lineno, "index out of bounds");
    m(i - 1, j - 1) = v;
    ++seen;
  }
  if (seen != nnz) throw ContractError(path + ": entry count disagrees with header");
  return m;
}

Tensor3 read_tensor3(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("read_tensor3: cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!blank_or_comment(line)) break;
  }
  std::istringstream head(line);
  long n1 = 0, n2 = 0, n3 = 0, nnz = 0;
  if (!(head >> n1 >> n2 >> n3 >> nnz) || n1 < 1 || n2 < 1 || n3 < 1 || nnz < 0)
    fail(path, lineno, "malformed tensor header");
  Tensor3 t(n1, n2, n3);
  long seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_or_comment(line)) continue;
    std::istringstream ss(line);
    long i = 0, j = 0, l = 0;
    double v = 0.0;
    if (!(ss >> i >> j >> l >> v)) fail(path, lineno, "malformed tensor entry");
    if (!std::isfinite(v)) fail(path, lineno, "non-finite value");
    if (i < 1 || i > n1 || j < 1 || j > n2 || l < 1 || l > n3)
      fail(path, lineno, "index out of bounds");
    t(i - 1, j - 1, l - 1) = v;
    ++seen;
  }
  if (seen != nnz) throw ContractError(path + ": entry count disagrees with header");
  return t;
}

void write_csv(const std::string& path, const DenseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw ContractError("write_csv: cannot open " + path);
  out.precision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

}  // namespace coresketch::io
