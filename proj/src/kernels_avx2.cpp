// AVX2 kernel variants. Compiled with -mavx2 -mfma only on x86-64; the
// dispatcher checks cpu support at runtime before routing here.

#if defined(__AVX2__)

#include <immintrin.h>

#include <cstddef>

namespace mbfusion::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sw = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sw));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sumsq(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d v0 = _mm256_loadu_pd(a + i);
    __m256d v1 = _mm256_loadu_pd(a + i + 4);
    acc0 = _mm256_fmadd_pd(v0, v0, acc0);
    acc1 = _mm256_fmadd_pd(v1, v1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(a + i);
    acc0 = _mm256_fmadd_pd(v, v, acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * a[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpby(double alpha, const double* x, double beta, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                _mm256_mul_pd(vb, _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] = alpha * x[i] + beta * y[i];
}

void scale(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void vsub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void band_scale(double* v, const double* w, std::size_t n_pixels, std::size_t n_bands) {
  for (std::size_t p = 0; p < n_pixels; ++p) {
    double* vp = v + p * n_bands;
    std::size_t k = 0;
    for (; k + 4 <= n_bands; k += 4)
      _mm256_storeu_pd(vp + k, _mm256_mul_pd(_mm256_loadu_pd(vp + k), _mm256_loadu_pd(w + k)));
    for (; k < n_bands; ++k) vp[k] *= w[k];
  }
}

void band_sumsq(const double* v, double* acc, std::size_t n_pixels, std::size_t n_bands) {
  for (std::size_t k = 0; k < n_bands; ++k) acc[k] = 0.0;
  for (std::size_t p = 0; p < n_pixels; ++p) {
    const double* vp = v + p * n_bands;
    std::size_t k = 0;
    for (; k + 4 <= n_bands; k += 4) {
      __m256d x = _mm256_loadu_pd(vp + k);
      _mm256_storeu_pd(acc + k, _mm256_fmadd_pd(x, x, _mm256_loadu_pd(acc + k)));
    }
    for (; k < n_bands; ++k) acc[k] += vp[k] * vp[k];
  }
}

void pixelwise_matvec(const double* mat, std::size_t out_dim, std::size_t in_dim,
                      const double* in, double* out, std::size_t n_pixels) {
  for (std::size_t p = 0; p < n_pixels; ++p) {
    const double* x = in + p * in_dim;
    double* y = out + p * out_dim;
    for (std::size_t r = 0; r < out_dim; ++r) {
      const double* row = mat + r * in_dim;
      __m256d acc = _mm256_setzero_pd();
      std::size_t c = 0;
      for (; c + 4 <= in_dim; c += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + c), _mm256_loadu_pd(x + c), acc);
      double s = hsum(acc);
      for (; c < in_dim; ++c) s += row[c] * x[c];
      y[r] = s;
    }
  }
}

}  // namespace mbfusion::kernels::avx2

#endif  // __AVX2__
