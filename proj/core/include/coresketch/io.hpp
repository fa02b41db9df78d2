#pragma once

#include <string>

#include "coresketch/linalg.hpp"
#include "coresketch/tensor3.hpp"

namespace coresketch::io {

// Comma-separated numeric rows; also accepts whitespace separation.
DenseMatrix read_csv(const std::string& path);

// MatrixMarket coordinate format, 1-indexed, densified.
DenseMatrix read_matrix_market(const std::string& path);

// Sparse tensor file: header "n1 n2 n3 nnz", then nnz lines "i j k value"
// (1-indexed); unspecified entries are zero.
Tensor3 read_tensor3(const std::string& path);

void write_csv(const std::string& path, const DenseMatrix& m);

}  // namespace coresketch::io
