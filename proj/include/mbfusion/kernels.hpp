#pragma once

#include <cstddef>
#include <string>

// Flat double-precision kernels behind every bulk loop in the library.
// Each kernel has a scalar reference implementation (kernels::ref) and an
// AVX2 variant; the unprefixed entry points dispatch to the backend picked
// once per process (CPU probe, overridable with MBFUSION_KERNELS=scalar|avx2).
// Reductions may reassociate, so backends agree to ~1e-14 relative, not bit
// for bit; the dispatched results are deterministic for a fixed backend.

namespace mbfusion::kernels {

namespace ref {

double dot(const double* a, const double* b, std::size_t n);
double sumsq(const double* a, std::size_t n);

/// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
/// y = alpha * x + beta * y
void axpby(double alpha, const double* x, double beta, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
/// out = a - b
void vsub(const double* a, const double* b, double* out, std::size_t n);

/// v[p*n_bands + k] *= w[k] for every pixel p.
void band_scale(double* v, const double* w, std::size_t n_pixels, std::size_t n_bands);
/// acc[k] = sum over pixels of v[p*n_bands + k]^2 (acc is overwritten).
void band_sumsq(const double* v, double* acc, std::size_t n_pixels, std::size_t n_bands);

/// out_i = M x_i for every pixel: M is row-major out_dim x in_dim,
/// in has n_pixels blocks of in_dim, out has n_pixels blocks of out_dim.
void pixelwise_matvec(const double* mat, std::size_t out_dim, std::size_t in_dim,
                      const double* in, double* out, std::size_t n_pixels);

}  // namespace ref

double dot(const double* a, const double* b, std::size_t n);
double sumsq(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void axpby(double alpha, const double* x, double beta, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
void vsub(const double* a, const double* b, double* out, std::size_t n);
void band_scale(double* v, const double* w, std::size_t n_pixels, std::size_t n_bands);
void band_sumsq(const double* v, double* acc, std::size_t n_pixels, std::size_t n_bands);
void pixelwise_matvec(const double* mat, std::size_t out_dim, std::size_t in_dim,
                      const double* in, double* out, std::size_t n_pixels);

/// Name of the active backend ("scalar" or "avx2").
const std::string& backend_name();

/// Worker count resolved from MBFUSION_THREADS (>= 1). Only kernels with
/// disjoint output blocks (pixelwise_matvec) ever run threaded, so results
/// do not depend on the thread count.
int thread_count();

}  // namespace mbfusion::kernels
