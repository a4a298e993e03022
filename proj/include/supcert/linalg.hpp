#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace supcert {

using Vector = std::vector<double>;
using IndexSet = std::vector<std::size_t>;

struct SingularMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense real matrix, row-major storage. Entries must stay finite; the
/// factorization entry points reject NaN/Inf inputs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---- element/vector helpers ------------------------------------------------

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

bool all_finite(const Vector& v);
double dot(const Vector& a, const Vector& b);
double norm_l1(const Vector& v);
double norm_l2(const Vector& v);
double norm_linf(const Vector& v);
// l_alpha norm with alpha in [1, inf]; alpha = INFINITY gives the max norm.
double norm_lp(const Vector& v, double alpha);

Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scale(const Vector& a, double s);
Vector canonical_vector(std::size_t length, std::size_t index);

// ---- matrix algebra ----------------------------------------------------------

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix multiply(const Matrix& a, const Matrix& b);
Vector multiply(const Matrix& a, const Vector& x);
// A^T x without forming the transpose.
Vector multiply_transpose(const Matrix& a, const Vector& x);

Matrix select(const Matrix& a, const IndexSet& row_idx, const IndexSet& col_idx);
Matrix select_rows(const Matrix& a, const IndexSet& row_idx);
Matrix select_cols(const Matrix& a, const IndexSet& col_idx);
Vector select(const Vector& v, const IndexSet& idx);
IndexSet complement(const IndexSet& idx, std::size_t universe);

// Induced operator norms used by the stability constants.
double op_norm_inf_inf(const Matrix& a);  // max row absolute sum
double op_norm_1_inf(const Matrix& a);    // max absolute entry
// Max Euclidean row norm, i.e. the l2 -> linf induced norm.
double op_norm_2_inf(const Matrix& a);

// ---- factorizations ----------------------------------------------------------

// Solves Ax = b for square A by partially pivoted LU. Throws SingularMatrix
// when a pivot falls below 1e-12 relative to the largest entry of A.
Vector solve_square(const Matrix& a, const Vector& b);

// Explicit inverse through the same LU path; throws SingularMatrix.
Matrix invert_square(const Matrix& a);

struct SvdResult {
  Matrix u;       // m x r
  Vector sigma;   // r singular values, descending
  Matrix v;       // n x r
};

// Thin SVD by one-sided Jacobi rotations. Deterministic; intended for the
// dense desk-scale matrices this project manipulates.
SvdResult svd(const Matrix& a);

inline constexpr double kDefaultRankTol = 1e-10;

Matrix pseudo_inverse(const Matrix& a, double tol = kDefaultRankTol);
std::size_t numerical_rank(const Matrix& a, double tol = kDefaultRankTol);

// ---- text formats -------------------------------------------------------------

// Matrix file: first line "rows cols", then rows of whitespace-separated
// decimals. Vector file: first line "length", then the entries.
Matrix read_matrix(std::istream& in);
Matrix read_matrix_file(const std::string& path);
void write_matrix(std::ostream& out, const Matrix& a);
Vector read_vector(std::istream& in);
Vector read_vector_file(const std::string& path);
void write_vector(std::ostream& out, const Vector& v);

}  // namespace supcert
