#include "mbfusion/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

#include "mbfusion/errors.hpp"

#if defined(MBFUSION_HAVE_AVX2)
namespace mbfusion::kernels::avx2 {
double dot(const double*, const double*, std::size_t);
double sumsq(const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void axpby(double, const double*, double, double*, std::size_t);
void scale(double, double*, std::size_t);
void vsub(const double*, const double*, double*, std::size_t);
void band_scale(double*, const double*, std::size_t, std::size_t);
void band_sumsq(const double*, double*, std::size_t, std::size_t);
void pixelwise_matvec(const double*, std::size_t, std::size_t, const double*, double*, std::size_t);
}  // namespace mbfusion::kernels::avx2
#endif

namespace mbfusion::kernels {

namespace {

struct Table {
  std::string name;
  double (*dot)(const double*, const double*, std::size_t);
  double (*sumsq)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*axpby)(double, const double*, double, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  void (*vsub)(const double*, const double*, double*, std::size_t);
  void (*band_scale)(double*, const double*, std::size_t, std::size_t);
  void (*band_sumsq)(const double*, double*, std::size_t, std::size_t);
  void (*pixelwise_matvec)(const double*, std::size_t, std::size_t, const double*, double*, std::size_t);
};

Table scalar_table() {
  return {"scalar", ref::dot,        ref::sumsq,      ref::axpy,
          ref::axpby, ref::scale,    ref::vsub,       ref::band_scale,
          ref::band_sumsq,           ref::pixelwise_matvec};
}

#if defined(MBFUSION_HAVE_AVX2)
Table avx2_table() {
  return {"avx2",  avx2::dot,        avx2::sumsq,     avx2::axpy,
          avx2::axpby, avx2::scale,  avx2::vsub,      avx2::band_scale,
          avx2::band_sumsq,          avx2::pixelwise_matvec};
}

bool cpu_has_avx2() {
#if defined(__GNUC__) || defined(__clang__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
#endif

Table resolve() {
  const char* env = std::getenv("MBFUSION_KERNELS");
  std::string want = env ? env : "";
  if (want == "scalar") return scalar_table();
#if defined(MBFUSION_HAVE_AVX2)
  if (want == "avx2") {
    if (!cpu_has_avx2()) throw ParamError("MBFUSION_KERNELS=avx2 but the cpu lacks avx2/fma");
    return avx2_table();
  }
  if (!want.empty()) throw ParamError("unknown MBFUSION_KERNELS backend: " + want);
  if (cpu_has_avx2()) return avx2_table();
#else
  if (want == "avx2") throw ParamError("this build has no avx2 kernels");
  if (!want.empty() && want != "scalar")
    throw ParamError("unknown MBFUSION_KERNELS backend: " + want);
#endif
  return scalar_table();
}

const Table& table() {
  static Table t = resolve();
  return t;
}

int resolve_threads() {
  const char* env = std::getenv("MBFUSION_THREADS");
  if (!env) return 1;
  int n = std::atoi(env);
  if (n < 1) return 1;
  unsigned hw = std::thread::hardware_concurrency();
  return std::min<int>(n, hw > 0 ? static_cast<int>(hw) * 4 : n);
}

}  // namespace

const std::string& backend_name() { return table().name; }

int thread_count() {
  static int n = resolve_threads();
  return n;
}

double dot(const double* a, const double* b, std::size_t n) { return table().dot(a, b, n); }
double sumsq(const double* a, std::size_t n) { return table().sumsq(a, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { table().axpy(alpha, x, y, n); }
void axpby(double alpha, const double* x, double beta, double* y, std::size_t n) {
  table().axpby(alpha, x, beta, y, n);
}
void scale(double alpha, double* x, std::size_t n) { table().scale(alpha, x, n); }
void vsub(const double* a, const double* b, double* out, std::size_t n) { table().vsub(a, b, out, n); }
void band_scale(double* v, const double* w, std::size_t n_pixels, std::size_t n_bands) {
  table().band_scale(v, w, n_pixels, n_bands);
}
void band_sumsq(const double* v, double* acc, std::size_t n_pixels, std::size_t n_bands) {
  table().band_sumsq(v, acc, n_pixels, n_bands);
}

void pixelwise_matvec(const double* mat, std::size_t out_dim, std::size_t in_dim,
                      const double* in, double* out, std::size_t n_pixels) {
  const int nthreads = thread_count();
  // Pixel blocks are disjoint in the output, so chunking over pixels is
  // deterministic for any worker count.
  if (nthreads <= 1 || n_pixels < 1024) {
    table().pixelwise_matvec(mat, out_dim, in_dim, in, out, n_pixels);
    return;
  }
  const std::size_t chunk = (n_pixels + nthreads - 1) / nthreads;
  std::vector<std::thread> workers;
  workers.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) {
    std::size_t lo = static_cast<std::size_t>(t) * chunk;
    if (lo >= n_pixels) break;
    std::size_t len = std::min(chunk, n_pixels - lo);
    workers.emplace_back([=] {
      table().pixelwise_matvec(mat, out_dim, in_dim, in + lo * in_dim, out + lo * out_dim, len);
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace mbfusion::kernels
