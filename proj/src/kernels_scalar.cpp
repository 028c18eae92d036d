#include "mbfusion/kernels.hpp"

namespace mbfusion::kernels::ref {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sumsq(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void axpby(double alpha, const double* x, double beta, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = alpha * x[i] + beta * y[i];
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void vsub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void band_scale(double* v, const double* w, std::size_t n_pixels, std::size_t n_bands) {
  for (std::size_t p = 0; p < n_pixels; ++p) {
    double* vp = v + p * n_bands;
    for (std::size_t k = 0; k < n_bands; ++k) vp[k] *= w[k];
  }
}

void band_sumsq(const double* v, double* acc, std::size_t n_pixels, std::size_t n_bands) {
  for (std::size_t k = 0; k < n_bands; ++k) acc[k] = 0.0;
  for (std::size_t p = 0; p < n_pixels; ++p) {
    const double* vp = v + p * n_bands;
    for (std::size_t k = 0; k < n_bands; ++k) acc[k] += vp[k] * vp[k];
  }
}

void pixelwise_matvec(const double* mat, std::size_t out_dim, std::size_t in_dim,
                      const double* in, double* out, std::size_t n_pixels) {
  for (std::size_t p = 0; p < n_pixels; ++p) {
    const double* x = in + p * in_dim;
    double* y = out + p * out_dim;
    for (std::size_t r = 0; r < out_dim; ++r) {
      const double* row = mat + r * in_dim;
      double s = 0.0;
      for (std::size_t c = 0; c < in_dim; ++c) s += row[c] * x[c];
      y[r] = s;
    }
  }
}

}  // namespace mbfusion::kernels::ref
