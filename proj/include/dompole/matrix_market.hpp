#pragma once

// Matrix Market (.mtx) reader and writer. Coordinate and array layouts;
// real, integer, pattern and complex fields; general, symmetric,
// skew-symmetric and hermitian symmetry. Values are written with 17
// significant digits so that a save/load cycle is bit-exact.

#include <filesystem>

#include "dompole/kernels.hpp"

namespace dompole::mm {

SparseMatrix read_sparse(const std::filesystem::path& path);
CMatrix read_dense(const std::filesystem::path& path);

/// Coordinate layout; the field is "real" when every entry has zero
/// imaginary part and "complex" otherwise.
void write_sparse(const std::filesystem::path& path, const SparseMatrix& M);

/// Array layout, column-major.
void write_dense(const std::filesystem::path& path, const CMatrix& M);

}  // namespace dompole::mm
