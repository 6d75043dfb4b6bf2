#pragma once

#include <iosfwd>
#include <string>

#include "mahnmf/matrix.hpp"

namespace mahnmf::io {

// Header-less comma-separated rows. Values are written with 17 significant
// digits so that a write/read cycle reproduces every double exactly.
Matrix read_csv(std::istream& in);
void write_csv(std::ostream& out, const Matrix& A);

// MatrixMarket "matrix array real general" and "matrix coordinate real
// {general,symmetric}". Coordinate entries are materialized densely.
Matrix read_matrix_market(std::istream& in);
void write_matrix_market(std::ostream& out, const Matrix& A);

/// Dispatches on the extension: ".mtx" is MatrixMarket, anything else CSV.
Matrix read_matrix(const std::string& path);
void write_matrix(const std::string& path, const Matrix& A);

/// "%.17g": enough digits to round-trip any double.
std::string format_double(double v);

}  // namespace mahnmf::io
