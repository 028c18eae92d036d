#include "mbfusion/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mbfusion/errors.hpp"
#include "mbfusion/kernels.hpp"

namespace mbfusion::linalg {

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      kernels::axpy(aik, &b.a[static_cast<std::size_t>(k) * b.cols],
                    &c.a[static_cast<std::size_t>(i) * c.cols], b.cols);
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

void matvec(const Matrix& a, std::span<const double> x, std::span<double> y) {
  if (static_cast<int>(x.size()) != a.cols || static_cast<int>(y.size()) != a.rows)
    throw ShapeError("matvec: size mismatch");
  for (int i = 0; i < a.rows; ++i)
    y[i] = kernels::dot(&a.a[static_cast<std::size_t>(i) * a.cols], x.data(), a.cols);
}

bool cholesky(const Matrix& spd, Matrix& lower) {
  if (!spd.square()) throw ShapeError("cholesky: matrix not square");
  const int n = spd.rows;
  lower = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    double d = spd(j, j);
    for (int k = 0; k < j; ++k) d -= lower(j, k) * lower(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    lower(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = spd(i, j);
      for (int k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / ljj;
    }
  }
  return true;
}

Matrix cholesky_or_throw(const Matrix& spd) {
  Matrix lower;
  if (!cholesky(spd, lower)) throw NumericalError("cholesky: matrix is not positive definite");
  return lower;
}

void solve_lower(const Matrix& lower, std::span<double> x) {
  const int n = lower.rows;
  for (int i = 0; i < n; ++i) {
    double s = x[i];
    for (int k = 0; k < i; ++k) s -= lower(i, k) * x[k];
    x[i] = s / lower(i, i);
  }
}

void solve_lower_transposed(const Matrix& lower, std::span<double> x) {
  const int n = lower.rows;
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int k = i + 1; k < n; ++k) s -= lower(k, i) * x[k];
    x[i] = s / lower(i, i);
  }
}

void solve_llt(const Matrix& lower, std::span<double> x) {
  solve_lower(lower, x);
  solve_lower_transposed(lower, x);
}

Matrix spd_inverse(const Matrix& spd) {
  const Matrix lower = cholesky_or_throw(spd);
  const int n = spd.rows;
  Matrix inv(n, n);
  std::vector<double> col(n);
  for (int j = 0; j < n; ++j) {
    std::fill(col.begin(), col.end(), 0.0);
    col[j] = 1.0;
    solve_llt(lower, col);
    for (int i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  // Symmetrize away substitution round-off.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = v;
      inv(j, i) = v;
    }
  return inv;
}

double logdet_from_cholesky(const Matrix& lower) {
  double s = 0.0;
  for (int i = 0; i < lower.rows; ++i) s += std::log(lower(i, i));
  return 2.0 * s;
}

bool is_symmetric(const Matrix& a, double tol) {
  if (!a.square()) return false;
  for (int i = 0; i < a.rows; ++i)
    for (int j = i + 1; j < a.cols; ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

double frobenius_norm(const Matrix& a) {
  return std::sqrt(kernels::sumsq(a.a.data(), a.a.size()));
}

SymEig sym_eig(const Matrix& sym) {
  if (!sym.square()) throw ShapeError("sym_eig: matrix not square");
  const int n = sym.rows;
  Matrix a = sym;
  Matrix v = Matrix::identity(n);

  auto offdiag_norm = [&] {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  const double norm = std::max(frobenius_norm(a), 1e-300);
  const double target = 1e-14 * norm;
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps && offdiag_norm() > target; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a(p, p), aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i) > a(j, j); });

  SymEig out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (int i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

}  // namespace mbfusion::linalg
