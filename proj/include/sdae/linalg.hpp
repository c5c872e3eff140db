#pragma once

// Small dense real linear algebra for the SDAE integrators: a row-major
// matrix type, Jacobi SVD, Moore-Penrose pseudo-inverse, the projector
// bundle (P, Q, R) of a singular leading matrix, and LU solves.
//
// Sizes here are tiny (d <= 10), so everything favors accuracy and
// simplicity over blocking or vectorization.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdae {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }
  bool empty() const { return entries_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  std::span<const double> entries() const { return entries_; }
  std::span<double> entries() { return entries_; }

  Matrix transposed() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

/// |B| = sqrt(trace(B^T B)).
double frobenius_norm(const Matrix& a);
double norm_inf(std::span<const double> x);
double norm2(std::span<const double> x);
bool all_finite(std::span<const double> x);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
Vector subtract(std::span<const double> a, std::span<const double> b);

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public LinalgError {
 public:
  SingularMatrixError(std::size_t column, double pivot);
  std::size_t column() const { return column_; }
  double pivot() const { return pivot_; }

 private:
  std::size_t column_;
  double pivot_;
};

class SvdConvergenceError : public LinalgError {
 public:
  explicit SvdConvergenceError(double off_diagonal);
  double off_diagonal() const { return off_diagonal_; }

 private:
  double off_diagonal_;
};

inline constexpr double kDefaultRankTol = 1e-10;

/// a = left * diag(singular_values) * right, with left and right orthogonal
/// and singular values in nonincreasing order. `right` is stored as N (not
/// N^T), matching the A = M Sigma N convention.
struct SvdFactors {
  Matrix left;
  Vector singular_values;
  Matrix right;
  std::size_t rank = 0;
};

/// One-sided (Hestenes) Jacobi SVD of a square matrix. The rank counts the
/// singular values strictly above rank_tol * sigma_max.
SvdFactors svd(const Matrix& a, double rank_tol = kDefaultRankTol);

/// N^T diag(1/sigma_1, ..., 1/sigma_r, 0, ..., 0) M^T.
Matrix pinv(const SvdFactors& f);

struct ProjectorBundle {
  Matrix a;
  Matrix a_pinv;
  Matrix p;       // A^- A, projector along Ker(A)
  Matrix q;       // I - P, onto Ker(A)
  Matrix r_proj;  // I - A A^-, along Im(A)
  std::size_t rank = 0;
  // Orthonormal columns spanning Ker(A) = Im(Q) and Ker(A^T) = Im(R). Only
  // the spans are meaningful; individual columns depend on the SVD's
  // choice of signs and ordering.
  Matrix kernel_basis;
  Matrix cokernel_basis;
};

ProjectorBundle projectors(const Matrix& a, double rank_tol = kDefaultRankTol);

/// Gaussian elimination with partial pivoting. A pivot whose magnitude is at
/// most 1e-13 times the largest entry of its original row is treated as
/// singular and reported through SingularMatrixError.
Vector solve_linear(const Matrix& a, std::span<const double> b);

/// Columnwise solve of a X = b.
Matrix solve_linear(const Matrix& a, const Matrix& b);

}  // namespace sdae
