#pragma once

#include <span>
#include <vector>

#include "mbfusion/errors.hpp"

namespace mbfusion {

// Pixel order is row-major everywhere: pixel index i = r * cols + c with the
// row varying slowest. Storage is band-interleaved by pixel (all bands of a
// pixel contiguous), so cube <-> flat-vector conversion is a plain copy.

/// rows x cols x bands radiance block. data[(r*cols + c)*bands + b].
struct ImageCube {
  int rows = 0;
  int cols = 0;
  int bands = 0;
  std::vector<double> data;

  ImageCube() = default;
  ImageCube(int rows, int cols, int bands);

  int n_pixels() const { return rows * cols; }

  double& at(int r, int c, int b) {
    return data[(static_cast<std::size_t>(r) * cols + c) * bands + b];
  }
  double at(int r, int c, int b) const {
    return data[(static_cast<std::size_t>(r) * cols + c) * bands + b];
  }

  std::span<double> pixel(int r, int c) {
    return {&data[(static_cast<std::size_t>(r) * cols + c) * bands], static_cast<std::size_t>(bands)};
  }
  std::span<const double> pixel(int r, int c) const {
    return {&data[(static_cast<std::size_t>(r) * cols + c) * bands], static_cast<std::size_t>(bands)};
  }

  /// Throws ShapeError on inconsistent sizes, NumericalError on NaN/Inf.
  void validate() const;
};

/// Flat vector in band-interleaved-by-pixel order.
struct BipVector {
  int n_pixels = 0;
  int n_bands = 0;
  std::vector<double> data;

  BipVector() = default;
  BipVector(int n_pixels, int n_bands);

  std::size_t size() const { return data.size(); }

  std::span<double> pixel(int i) {
    return {&data[static_cast<std::size_t>(i) * n_bands], static_cast<std::size_t>(n_bands)};
  }
  std::span<const double> pixel(int i) const {
    return {&data[static_cast<std::size_t>(i) * n_bands], static_cast<std::size_t>(n_bands)};
  }

  void validate() const;
};

/// Row-orthonormal projection onto the spectral subspace (V of the model:
/// u_i = V x_i). reduced_dim x full_dim, row-major.
struct SubspaceBasis {
  int full_dim = 0;
  int reduced_dim = 0;
  std::vector<double> rows;

  SubspaceBasis() = default;
  SubspaceBasis(int full_dim, int reduced_dim);

  static SubspaceBasis identity(int dim);

  double& at(int r, int c) { return rows[static_cast<std::size_t>(r) * full_dim + c]; }
  double at(int r, int c) const { return rows[static_cast<std::size_t>(r) * full_dim + c]; }

  /// Column-major transpose (i.e. V^T as a row-major full_dim x reduced_dim
  /// matrix), for the lift x_i = V^T u_i.
  std::vector<double> transposed() const;

  /// Throws unless rows are orthonormal to `tol` and reduced_dim <= full_dim.
  void check_orthonormal(double tol = 1e-10) const;
};

BipVector vectorize_bip(const ImageCube& cube);
ImageCube devectorize_bip(const BipVector& v, int rows, int cols);

/// u_i = V x_i per pixel.
BipVector project(const BipVector& v, const SubspaceBasis& basis);
/// x_i = V^T u_i per pixel.
BipVector backproject(const BipVector& u, const SubspaceBasis& basis);

}  // namespace mbfusion
