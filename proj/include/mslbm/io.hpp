#ifndef MSLBM_IO_HPP
#define MSLBM_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "mslbm/linalg.hpp"
#include "mslbm/metrics.hpp"
#include "mslbm/model.hpp"
#include "mslbm/sppmi.hpp"

namespace mslbm {

enum class MatrixFormat { dense_csv, dense_binary, matrix_market };

/// Dense CSV, one row per line, comma separated, %.17g formatting
/// (lossless round trip). Trailing newline optional on read.
Matrix read_dense_csv(const std::filesystem::path& path);
void write_dense_csv(const std::filesystem::path& path, const Matrix& m);

Vector read_vector_csv(const std::filesystem::path& path);
void write_vector_csv(const std::filesystem::path& path, const Vector& v);

std::vector<int> read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(const std::filesystem::path& path, const std::vector<int>& labels);

/// Dense binary: 16-byte header (magic "MSLB", u32 n, u32 flags, u32
/// reserved), then n*n little-endian doubles in row-major order.
Matrix read_dense_binary(const std::filesystem::path& path);
void write_dense_binary(const std::filesystem::path& path, const Matrix& m);

/// Matrix Market coordinate real symmetric; entries from either triangle
/// are mirrored, duplicates rejected.
SparseDeviation read_matrix_market_sym(const std::filesystem::path& path);
void write_matrix_market_sym(const std::filesystem::path& path, const SparseDeviation& s);

/// Sparse nonnegative-integer counts in Matrix Market coordinate format
/// (real or integer field).
std::vector<CountEntry> read_matrix_market_counts(const std::filesystem::path& path, int* n_out);

SymMatrix read_sym_matrix(const std::filesystem::path& path, MatrixFormat format);
void write_sym_matrix(const std::filesystem::path& path, const SymMatrix& m, MatrixFormat format);

/// Two-column CSV of vertex indices.
std::vector<std::pair<int, int>> read_pairs_csv(const std::filesystem::path& path);

/// Three-column CSV (i, j, value).
struct AnnotatedPair {
    int i = 0;
    int j = 0;
    double value = 0.0;
};
std::vector<AnnotatedPair> read_annotated_pairs_csv(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace mslbm

#endif
