#pragma once

#include <carnot/operators.hpp>

#include <cstdint>
#include <string>

namespace carnot
{

// CGOP binary tables, little-endian:
//   char[4] "CGOP", u32 version (1), u32 kind, u32 reserved (0), then per kind
//   GridFunction: u32 m, f64 radius, f64 spacing, u32 offset, u64 n, n x (m coords f64, value f64)
//   SparseOperator: u64 rows, u64 cols, u64 nnz, nnz x (u64 row, u64 col, f64 value)
//   DenseMatrix: u64 rows, u64 cols, rows*cols f64 in column order
enum class TableKind : std::uint32_t
{
  GridFunction = 1,
  SparseOperator = 2,
  DenseMatrix = 3,
};

void write_grid_binary(const std::string &path, const Lattice &latt, const Vec &u);
void write_operator_binary(const std::string &path, const SpMat &a);
void write_dense_binary(const std::string &path, const Mat &a);

struct GridTable
{
  int dim = 0;
  LatticeSpec spec;
  Mat coords;  // n x m
  Vec values;
};

// IoError on a short read, bad magic, version or kind.
TableKind peek_kind(const std::string &path);
GridTable read_grid_binary(const std::string &path);
SpMat read_operator_binary(const std::string &path);
Mat read_dense_binary(const std::string &path);

// Comma-separated, header row, shortest round-trip formatting.
void write_grid_csv(const std::string &path, const Lattice &latt, const Vec &u);
void write_operator_csv(const std::string &path, const SpMat &a);

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

}  // namespace carnot
