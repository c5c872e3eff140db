#include "sdae/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace sdae {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), entries_(std::move(row_major)) {
  if (entries_.size() != rows_ * cols_) {
    throw std::invalid_argument("Matrix: entry count does not match shape");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  entries_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) throw std::invalid_argument("Matrix: ragged initializer");
    entries_.insert(entries_.end(), row.begin(), row.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool Matrix::all_finite() const { return sdae::all_finite(entries_); }

Matrix& Matrix::operator+=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw std::invalid_argument("Matrix +=: shape mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += other.entries_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw std::invalid_argument("Matrix -=: shape mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= other.entries_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& e : entries_) e *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("Matrix *: shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("Matrix * vector: shape mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

double frobenius_norm(const Matrix& a) { return norm2(a.entries()); }

double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double norm2(std::span<const double> x) {
  // Scaled accumulation keeps squares of large entries from overflowing.
  double scale = norm_inf(x);
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double v : x) s += (v / scale) * (v / scale);
  return scale * std::sqrt(s);
}

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

namespace {

std::string describe_pivot(std::size_t column, double pivot) {
  std::ostringstream os;
  os << "singular matrix: pivot " << pivot << " in column " << column;
  return os.str();
}

std::string describe_svd(double off) {
  std::ostringstream os;
  os << "Jacobi SVD did not converge (max normalized off-diagonal " << off << ")";
  return os.str();
}

double column_dot(const Matrix& m, std::size_t p, std::size_t q) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, p) * m(i, q);
  return s;
}

void rotate_columns(Matrix& m, std::size_t p, std::size_t q, double c, double s) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double mp = m(i, p);
    const double mq = m(i, q);
    m(i, p) = c * mp - s * mq;
    m(i, q) = s * mp + c * mq;
  }
}

// Fill columns [first, d) of `basis` with an orthonormal completion of the
// leading columns, drawing candidates from the standard basis.
void complete_orthonormal(Matrix& basis, std::size_t first) {
  const std::size_t d = basis.rows();
  std::size_t filled = first;
  for (std::size_t e = 0; e < d && filled < d; ++e) {
    Vector cand(d, 0.0);
    cand[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < filled; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) dot += basis(i, j) * cand[i];
        for (std::size_t i = 0; i < d; ++i) cand[i] -= dot * basis(i, j);
      }
    }
    const double nrm = norm2(cand);
    if (nrm < 1e-6) continue;
    for (std::size_t i = 0; i < d; ++i) basis(i, filled) = cand[i] / nrm;
    ++filled;
  }
}

}  // namespace

SingularMatrixError::SingularMatrixError(std::size_t column, double pivot)
    : LinalgError(describe_pivot(column, pivot)), column_(column), pivot_(pivot) {}

SvdConvergenceError::SvdConvergenceError(double off_diagonal)
    : LinalgError(describe_svd(off_diagonal)), off_diagonal_(off_diagonal) {}

SvdFactors svd(const Matrix& a, double rank_tol) {
  if (!a.is_square() || a.rows() == 0) throw std::invalid_argument("svd: matrix must be square and non-empty");
  if (!a.all_finite()) throw std::invalid_argument("svd: non-finite entries");
  const std::size_t d = a.rows();
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr int kMaxSweeps = 80;

  Matrix u = a;
  Matrix v = Matrix::identity(d);
  const double skip_tol = eps * static_cast<double>(d);
  double off = 0.0;
  bool converged = d == 1;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    off = 0.0;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double alpha = column_dot(u, p, p);
        const double beta = column_dot(u, q, q);
        const double gamma = column_dot(u, p, q);
        if (gamma == 0.0) continue;
        const double scale = std::sqrt(alpha * beta);
        if (scale == 0.0) continue;
        const double rel = std::abs(gamma) / scale;
        off = std::max(off, rel);
        if (rel <= skip_tol) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate_columns(u, p, q, c, s);
        rotate_columns(v, p, q, c, s);
      }
    }
    converged = !rotated;
  }
  if (!converged) throw SvdConvergenceError(off);

  Vector sigma(d);
  for (std::size_t j = 0; j < d; ++j) sigma[j] = std::sqrt(column_dot(u, j, j));
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  SvdFactors f;
  f.singular_values.resize(d);
  f.left = Matrix(d, d);
  f.right = Matrix(d, d);
  const double sigma_max = sigma[order[0]];
  // Columns with singular values at roundoff level carry no usable direction;
  // they are replaced by an orthonormal completion.
  const double usable = sigma_max * eps * static_cast<double>(d) * 8.0;
  std::size_t normalized = 0;
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t j = order[k];
    f.singular_values[k] = sigma[j];
    for (std::size_t i = 0; i < d; ++i) f.right(k, i) = v(i, j);
    if (sigma[j] > usable && sigma[j] > 0.0) {
      for (std::size_t i = 0; i < d; ++i) f.left(i, k) = u(i, j) / sigma[j];
      normalized = k + 1;
    }
  }
  complete_orthonormal(f.left, normalized);

  f.rank = 0;
  for (double s : f.singular_values)
    if (s > rank_tol * sigma_max) ++f.rank;
  return f;
}

Matrix pinv(const SvdFactors& f) {
  const std::size_t d = f.left.rows();
  Matrix out(d, d);
  for (std::size_t k = 0; k < f.rank; ++k) {
    const double inv = 1.0 / f.singular_values[k];
    for (std::size_t i = 0; i < d; ++i) {
      const double ni = f.right(k, i) * inv;
      for (std::size_t j = 0; j < d; ++j) out(i, j) += ni * f.left(j, k);
    }
  }
  return out;
}

ProjectorBundle projectors(const Matrix& a, double rank_tol) {
  const SvdFactors f = svd(a, rank_tol);
  const std::size_t d = a.rows();
  const std::size_t r = f.rank;

  ProjectorBundle b;
  b.a = a;
  b.a_pinv = pinv(f);
  b.rank = r;
  // P = N^T diag(I_r, 0) N and I - R = M diag(I_r, 0) M^T, built from the
  // factors so both are symmetric to the last bit.
  b.p = Matrix(d, d);
  b.r_proj = Matrix::identity(d);
  for (std::size_t k = 0; k < r; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        b.p(i, j) += f.right(k, i) * f.right(k, j);
        b.r_proj(i, j) -= f.left(i, k) * f.left(j, k);
      }
    }
  }
  b.q = Matrix::identity(d) - b.p;
  b.kernel_basis = Matrix(d, d - r);
  b.cokernel_basis = Matrix(d, d - r);
  for (std::size_t k = r; k < d; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      b.kernel_basis(i, k - r) = f.right(k, i);
      b.cokernel_basis(i, k - r) = f.left(i, k);
    }
  }
  return b;
}

namespace {

struct LuFactors {
  Matrix lu;
  std::vector<std::size_t> perm;
};

LuFactors lu_factor(const Matrix& a) {
  if (!a.is_square()) throw std::invalid_argument("solve_linear: matrix must be square");
  const std::size_t n = a.rows();
  LuFactors f{a, std::vector<std::size_t>(n)};
  std::iota(f.perm.begin(), f.perm.end(), 0);
  Vector row_max(n);
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0;
    for (std::size_t j = 0; j < n; ++j) m = std::max(m, std::abs(a(i, j)));
    row_max[i] = m;
  }
  Matrix& lu = f.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
    }
    const double pivot = lu(k, k);
    if (!(std::abs(pivot) > 1e-13 * row_max[f.perm[k]])) throw SingularMatrixError(k, pivot);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = lu(i, k) / pivot;
      lu(i, k) = l;
      if (l == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= l * lu(k, j);
    }
  }
  return f;
}

Vector lu_solve(const LuFactors& f, std::span<const double> b) {
  const std::size_t n = f.lu.rows();
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[f.perm[i]];
    for (std::size_t j = 0; j < i; ++j) s -= f.lu(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= f.lu(i, j) * x[j];
    x[i] = s / f.lu(i, i);
  }
  return x;
}

}  // namespace

Vector solve_linear(const Matrix& a, std::span<const double> b) {
  if (b.size() != a.rows()) throw std::invalid_argument("solve_linear: right-hand side size mismatch");
  return lu_solve(lu_factor(a), b);
}

Matrix solve_linear(const Matrix& a, const Matrix& b) {
  if (b.rows() != a.rows()) throw std::invalid_argument("solve_linear: right-hand side size mismatch");
  const LuFactors f = lu_factor(a);
  Matrix x(b.rows(), b.cols());
  Vector col(b.rows());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
    const Vector sol = lu_solve(f, col);
    for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = sol[i];
  }
  return x;
}

}  // namespace sdae
