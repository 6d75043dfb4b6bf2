#include "mahnmf/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace mahnmf::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view token, std::size_t line) {
  token = trim(token);
  // from_chars rejects a leading '+'.
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    fail(ErrorCode::kIo, "line " + std::to_string(line) + ": cannot parse number '" +
                             std::string(token) + "'");
  }
  return value;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Matrix read_csv(std::istream& in) {
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    Index count = 0;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = view.find(',', start);
      std::string_view token = view.substr(start, comma == std::string_view::npos ? view.npos : comma - start);
      values.push_back(parse_double(token, lineno));
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols < 0) {
      cols = count;
    } else if (count != cols) {
      fail(ErrorCode::kIo, "line " + std::to_string(lineno) + ": expected " +
                               std::to_string(cols) + " fields, got " + std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) return Matrix(0, 0);
  Matrix A(rows, cols);
  std::copy(values.begin(), values.end(), A.data());
  return A;
}

void write_csv(std::ostream& out, const Matrix& A) {
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) {
      if (j) out << ',';
      out << format_double(A(i, j));
    }
    out << '\n';
  }
}

Matrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kIo, "empty MatrixMarket stream");
  std::istringstream banner(lower(line));
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%matrixmarket" || object != "matrix") {
    fail(ErrorCode::kIo, "missing MatrixMarket banner");
  }
  if (field != "real" && field != "double" && field != "integer") {
    fail(ErrorCode::kIo, "unsupported MatrixMarket field '" + field + "'");
  }
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general") {
    fail(ErrorCode::kIo, "unsupported MatrixMarket symmetry '" + symmetry + "'");
  }

  std::size_t lineno = 1;
  auto next_data_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++lineno;
      std::string_view v = trim(out);
      if (v.empty() || v.front() == '%') continue;
      return true;
    }
    return false;
  };

  if (!next_data_line(line)) fail(ErrorCode::kIo, "missing MatrixMarket size line");
  std::istringstream size_line(line);
  long long rows = 0, cols = 0, nnz = 0;
  size_line >> rows >> cols;
  if (format == "coordinate") size_line >> nnz;
  if (!size_line || rows < 0 || cols < 0) fail(ErrorCode::kIo, "bad MatrixMarket size line");

  Matrix A = Matrix::Zero(rows, cols);
  if (format == "array") {
    // Column-major order; symmetric arrays store the lower triangle only.
    for (Index j = 0; j < cols; ++j) {
      for (Index i = symmetric ? j : 0; i < rows; ++i) {
        if (!next_data_line(line)) fail(ErrorCode::kIo, "truncated MatrixMarket array");
        A(i, j) = parse_double(line, lineno);
        if (symmetric) A(j, i) = A(i, j);
      }
    }
  } else if (format == "coordinate") {
    for (long long k = 0; k < nnz; ++k) {
      if (!next_data_line(line)) fail(ErrorCode::kIo, "truncated MatrixMarket coordinate list");
      std::istringstream entry(line);
      long long i = 0, j = 0;
      std::string value;
      entry >> i >> j >> value;
      if (!entry || i < 1 || j < 1 || i > rows || j > cols) {
        fail(ErrorCode::kIo, "line " + std::to_string(lineno) + ": bad coordinate entry");
      }
      const double v = parse_double(value, lineno);
      A(i - 1, j - 1) += v;
      if (symmetric && i != j) A(j - 1, i - 1) += v;
    }
  } else {
    fail(ErrorCode::kIo, "unsupported MatrixMarket format '" + format + "'");
  }
  return A;
}

void write_matrix_market(std::ostream& out, const Matrix& A) {
  out << "%%MatrixMarket matrix array real general\n";
  out << A.rows() << ' ' << A.cols() << '\n';
  for (Index j = 0; j < A.cols(); ++j) {
    for (Index i = 0; i < A.rows(); ++i) out << format_double(A(i, j)) << '\n';
  }
}

Matrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  return ends_with(lower(path), ".mtx") ? read_matrix_market(in) : read_csv(in);
}

void write_matrix(const std::string& path, const Matrix& A) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  if (ends_with(lower(path), ".mtx")) {
    write_matrix_market(out, A);
  } else {
    write_csv(out, A);
  }
  if (!out) fail(ErrorCode::kIo, "write to '" + path + "' failed");
}

}  // namespace mahnmf::io
