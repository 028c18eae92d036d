#include "mbfusion/core.hpp"

#include <cmath>
#include <string>

#include "mbfusion/kernels.hpp"

namespace mbfusion {

ImageCube::ImageCube(int rows_, int cols_, int bands_)
    : rows(rows_), cols(cols_), bands(bands_) {
  if (rows < 1 || cols < 1 || bands < 1)
    throw ShapeError("ImageCube: dimensions must be positive");
  data.assign(static_cast<std::size_t>(rows) * cols * bands, 0.0);
}

void ImageCube::validate() const {
  if (rows < 1 || cols < 1 || bands < 1)
    throw ShapeError("ImageCube: dimensions must be positive");
  if (data.size() != static_cast<std::size_t>(rows) * cols * bands)
    throw ShapeError("ImageCube: data length " + std::to_string(data.size()) +
                     " != rows*cols*bands");
  for (double v : data)
    if (!std::isfinite(v)) throw NumericalError("ImageCube: non-finite value");
}

BipVector::BipVector(int n_pixels_, int n_bands_) : n_pixels(n_pixels_), n_bands(n_bands_) {
  if (n_pixels < 1 || n_bands < 1)
    throw ShapeError("BipVector: dimensions must be positive");
  data.assign(static_cast<std::size_t>(n_pixels) * n_bands, 0.0);
}

void BipVector::validate() const {
  if (n_pixels < 1 || n_bands < 1)
    throw ShapeError("BipVector: dimensions must be positive");
  if (data.size() != static_cast<std::size_t>(n_pixels) * n_bands)
    throw ShapeError("BipVector: data length != n_pixels*n_bands");
}

SubspaceBasis::SubspaceBasis(int full_dim_, int reduced_dim_)
    : full_dim(full_dim_), reduced_dim(reduced_dim_) {
  if (full_dim < 1 || reduced_dim < 1 || reduced_dim > full_dim)
    throw ShapeError("SubspaceBasis: need 1 <= reduced_dim <= full_dim");
  rows.assign(static_cast<std::size_t>(reduced_dim) * full_dim, 0.0);
}

SubspaceBasis SubspaceBasis::identity(int dim) {
  SubspaceBasis b(dim, dim);
  for (int i = 0; i < dim; ++i) b.at(i, i) = 1.0;
  return b;
}

std::vector<double> SubspaceBasis::transposed() const {
  std::vector<double> t(rows.size());
  for (int r = 0; r < reduced_dim; ++r)
    for (int c = 0; c < full_dim; ++c)
      t[static_cast<std::size_t>(c) * reduced_dim + r] = at(r, c);
  return t;
}

void SubspaceBasis::check_orthonormal(double tol) const {
  if (reduced_dim > full_dim) throw ShapeError("SubspaceBasis: reduced_dim > full_dim");
  for (int i = 0; i < reduced_dim; ++i) {
    for (int j = i; j < reduced_dim; ++j) {
      const double g = kernels::dot(&rows[static_cast<std::size_t>(i) * full_dim],
                                    &rows[static_cast<std::size_t>(j) * full_dim], full_dim);
      const double expect = (i == j) ? 1.0 : 0.0;
      if (std::abs(g - expect) > tol)
        throw NumericalError("SubspaceBasis: rows not orthonormal (gram[" + std::to_string(i) +
                             "][" + std::to_string(j) + "] = " + std::to_string(g) + ")");
    }
  }
}

BipVector vectorize_bip(const ImageCube& cube) {
  if (cube.data.size() != static_cast<std::size_t>(cube.rows) * cube.cols * cube.bands)
    throw ShapeError("vectorize_bip: inconsistent cube");
  BipVector v(cube.n_pixels(), cube.bands);
  v.data = cube.data;  // same layout by construction
  return v;
}

ImageCube devectorize_bip(const BipVector& v, int rows, int cols) {
  if (v.n_pixels != rows * cols)
    throw ShapeError("devectorize_bip: n_pixels != rows*cols");
  ImageCube cube(rows, cols, v.n_bands);
  cube.data = v.data;
  return cube;
}

BipVector project(const BipVector& v, const SubspaceBasis& basis) {
  if (v.n_bands != basis.full_dim)
    throw ShapeError("project: vector bands != basis full_dim");
  BipVector u(v.n_pixels, basis.reduced_dim);
  kernels::pixelwise_matvec(basis.rows.data(), basis.reduced_dim, basis.full_dim,
                            v.data.data(), u.data.data(), v.n_pixels);
  return u;
}

BipVector backproject(const BipVector& u, const SubspaceBasis& basis) {
  if (u.n_bands != basis.reduced_dim)
    throw ShapeError("backproject: vector bands != basis reduced_dim");
  const std::vector<double> vt = basis.transposed();
  BipVector x(u.n_pixels, basis.full_dim);
  kernels::pixelwise_matvec(vt.data(), basis.full_dim, basis.reduced_dim,
                            u.data.data(), x.data.data(), u.n_pixels);
  return x;
}

}  // namespace mbfusion
