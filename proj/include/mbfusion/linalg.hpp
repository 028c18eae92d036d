#pragma once

#include <span>
#include <vector>

// Small dense routines for the band-space matrices (a few hundred square at
// most): Cholesky, SPD solves/inverse, and a cyclic Jacobi eigensolver for
// symmetric matrices. The bulk per-pixel work lives in kernels.hpp; nothing
// here is performance critical beyond the test-scale dense oracle.

namespace mbfusion::linalg {

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // row-major

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  static Matrix identity(int n);
  static Matrix zeros(int r, int c) { return Matrix(r, c); }

  bool square() const { return rows == cols; }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
void matvec(const Matrix& a, std::span<const double> x, std::span<double> y);

/// Lower Cholesky factor of an SPD matrix; returns false if not PD.
bool cholesky(const Matrix& spd, Matrix& lower);
Matrix cholesky_or_throw(const Matrix& spd);

/// In-place solve L x = b (forward substitution), L lower triangular.
void solve_lower(const Matrix& lower, std::span<double> x);
/// In-place solve L^T x = b (back substitution).
void solve_lower_transposed(const Matrix& lower, std::span<double> x);
/// Solve (L L^T) x = b in place.
void solve_llt(const Matrix& lower, std::span<double> x);

/// Inverse of an SPD matrix via its Cholesky factor.
Matrix spd_inverse(const Matrix& spd);
/// log det of the SPD matrix with the given lower Cholesky factor.
double logdet_from_cholesky(const Matrix& lower);

bool is_symmetric(const Matrix& a, double tol);
double frobenius_norm(const Matrix& a);

struct SymEig {
  std::vector<double> values;  // descending; ties keep original index order
  Matrix vectors;              // column j is the eigenvector for values[j]
};

/// Cyclic Jacobi for symmetric matrices. Off-diagonal driven below
/// ~1e-14 * ||A||_F, so residuals are near machine precision.
SymEig sym_eig(const Matrix& sym);

}  // namespace mbfusion::linalg
