#include "mbfusion/forward.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mbfusion/kernels.hpp"

namespace mbfusion {

namespace {

int map_boundary(int i, int n, BoundaryMode mode) {
  if (i >= 0 && i < n) return i;
  switch (mode) {
    case BoundaryMode::zero:
      return -1;
    case BoundaryMode::periodic:
      return ((i % n) + n) % n;
    case BoundaryMode::symmetric:
      while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
      }
      return i;
  }
  return -1;
}

BipVector blur_apply(const SpatialBlur& blur, const BipVector& x, int rows, int cols) {
  const int nb = x.n_bands;
  const int hr = blur.krows / 2, hc = blur.kcols / 2;
  BipVector out(x.n_pixels, nb);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double* op = &out.data[(static_cast<std::size_t>(r) * cols + c) * nb];
      for (int kr = 0; kr < blur.krows; ++kr) {
        const int sr = map_boundary(r + kr - hr, rows, blur.boundary);
        if (sr < 0) continue;
        for (int kc = 0; kc < blur.kcols; ++kc) {
          const int sc = map_boundary(c + kc - hc, cols, blur.boundary);
          if (sc < 0) continue;
          const double w = blur.kernel[static_cast<std::size_t>(kr) * blur.kcols + kc];
          kernels::axpy(w, &x.data[(static_cast<std::size_t>(sr) * cols + sc) * nb], op, nb);
        }
      }
    }
  }
  return out;
}

// Exact transpose of blur_apply: scatter through the same index map.
BipVector blur_adjoint(const SpatialBlur& blur, const BipVector& y, int rows, int cols) {
  const int nb = y.n_bands;
  const int hr = blur.krows / 2, hc = blur.kcols / 2;
  BipVector out(y.n_pixels, nb);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double* yp = &y.data[(static_cast<std::size_t>(r) * cols + c) * nb];
      for (int kr = 0; kr < blur.krows; ++kr) {
        const int sr = map_boundary(r + kr - hr, rows, blur.boundary);
        if (sr < 0) continue;
        for (int kc = 0; kc < blur.kcols; ++kc) {
          const int sc = map_boundary(c + kc - hc, cols, blur.boundary);
          if (sc < 0) continue;
          const double w = blur.kernel[static_cast<std::size_t>(kr) * blur.kcols + kc];
          kernels::axpy(w, yp, &out.data[(static_cast<std::size_t>(sr) * cols + sc) * nb], nb);
        }
      }
    }
  }
  return out;
}

BipVector decimate_apply(const SpatialDecimation& dec, const BipVector& x) {
  const int d = dec.factor, nb = x.n_bands;
  const int orows = dec.out_rows(), ocols = dec.out_cols();
  const double inv = 1.0 / (static_cast<double>(d) * d);
  BipVector out(orows * ocols, nb);
  for (int R = 0; R < orows; ++R) {
    for (int C = 0; C < ocols; ++C) {
      double* op = &out.data[(static_cast<std::size_t>(R) * ocols + C) * nb];
      for (int i = 0; i < d; ++i) {
        const int r = R * d + i;
        for (int j = 0; j < d; ++j) {
          const int c = C * d + j;
          kernels::axpy(1.0, &x.data[(static_cast<std::size_t>(r) * dec.in_cols + c) * nb], op, nb);
        }
      }
      kernels::scale(inv, op, nb);
    }
  }
  return out;
}

BipVector decimate_adjoint(const SpatialDecimation& dec, const BipVector& y) {
  const int d = dec.factor, nb = y.n_bands;
  const int orows = dec.out_rows(), ocols = dec.out_cols();
  const double inv = 1.0 / (static_cast<double>(d) * d);
  BipVector out(dec.in_rows * dec.in_cols, nb);
  for (int R = 0; R < orows; ++R) {
    for (int C = 0; C < ocols; ++C) {
      const double* yp = &y.data[(static_cast<std::size_t>(R) * ocols + C) * nb];
      for (int i = 0; i < d; ++i) {
        const int r = R * d + i;
        for (int j = 0; j < d; ++j) {
          const int c = C * d + j;
          kernels::axpy(inv, yp, &out.data[(static_cast<std::size_t>(r) * dec.in_cols + c) * nb], nb);
        }
      }
    }
  }
  return out;
}

std::vector<double> transpose_weights(const SpectralResponse& resp) {
  std::vector<double> t(resp.weights.size());
  for (int o = 0; o < resp.out_bands; ++o)
    for (int i = 0; i < resp.in_bands; ++i)
      t[static_cast<std::size_t>(i) * resp.out_bands + o] = resp.at(o, i);
  return t;
}

}  // namespace

SpatialBlur::SpatialBlur(int krows_, int kcols_, std::vector<double> kernel_, BoundaryMode boundary_)
    : krows(krows_), kcols(kcols_), kernel(std::move(kernel_)), boundary(boundary_) {
  if (krows < 1 || kcols < 1 || krows % 2 == 0 || kcols % 2 == 0)
    throw ParamError("SpatialBlur: kernel dimensions must be odd and positive");
  if (kernel.size() != static_cast<std::size_t>(krows) * kcols)
    throw ShapeError("SpatialBlur: kernel size mismatch");
  double s = 0.0;
  for (double v : kernel) {
    if (!std::isfinite(v)) throw ParamError("SpatialBlur: non-finite kernel entry");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-12) throw ParamError("SpatialBlur: kernel must sum to 1");
}

SpatialDecimation::SpatialDecimation(int factor_, int in_rows_, int in_cols_)
    : factor(factor_), in_rows(in_rows_), in_cols(in_cols_) {
  if (factor < 1) throw ParamError("SpatialDecimation: factor must be >= 1");
  if (in_rows < factor || in_cols < factor || in_rows % factor != 0 || in_cols % factor != 0)
    throw ShapeError("SpatialDecimation: dimensions must be exact multiples of the factor");
}

SpectralResponse::SpectralResponse(int out_bands_, int in_bands_, std::vector<double> weights_)
    : out_bands(out_bands_), in_bands(in_bands_), weights(std::move(weights_)) {
  if (out_bands < 1 || in_bands < 1) throw ShapeError("SpectralResponse: bad dimensions");
  if (weights.size() != static_cast<std::size_t>(out_bands) * in_bands)
    throw ShapeError("SpectralResponse: weights size mismatch");
}

SpectralResponse SpectralResponse::normalized(int out_bands, int in_bands,
                                              std::vector<double> weights) {
  SpectralResponse r(out_bands, in_bands, std::move(weights));
  for (int o = 0; o < out_bands; ++o) {
    double s = 0.0;
    for (int i = 0; i < in_bands; ++i) {
      if (r.at(o, i) < 0.0) throw ParamError("SpectralResponse: negative entry");
      s += r.at(o, i);
    }
    if (s <= 0.0) throw ParamError("SpectralResponse: empty response row");
    for (int i = 0; i < in_bands; ++i) r.at(o, i) /= s;
  }
  return r;
}

void SensorModel::validate() const {
  if (in_rows < 1 || in_cols < 1 || in_bands < 1)
    throw ShapeError("SensorModel: input dimensions must be positive");
  if (!blur && !decimation && !spectral)
    throw ParamError("SensorModel '" + name + "': needs at least one degradation stage");
  if (decimation &&
      (decimation->in_rows != in_rows || decimation->in_cols != in_cols))
    throw ShapeError("SensorModel '" + name + "': decimation grid mismatch");
  if (spectral && spectral->in_bands != in_bands)
    throw ShapeError("SensorModel '" + name + "': spectral response band mismatch");
  if (noise_variances.size() != static_cast<std::size_t>(out_bands()))
    throw ShapeError("SensorModel '" + name + "': noise_variances length != output bands");
  bool any_zero = false, any_pos = false;
  for (double v : noise_variances) {
    if (v < 0.0 || !std::isfinite(v)) throw ParamError("SensorModel: negative noise variance");
    (v == 0.0 ? any_zero : any_pos) = true;
  }
  if (any_zero && any_pos)
    throw ParamError("SensorModel '" + name + "': mixed zero/positive noise variances");
}

BipVector apply_forward(const SensorModel& sensor, const BipVector& x) {
  if (x.n_pixels != sensor.in_rows * sensor.in_cols || x.n_bands != sensor.in_bands)
    throw ShapeError("apply_forward: input dims do not match sensor");
  BipVector t = x;
  if (sensor.blur) t = blur_apply(*sensor.blur, t, sensor.in_rows, sensor.in_cols);
  if (sensor.decimation) t = decimate_apply(*sensor.decimation, t);
  if (sensor.spectral) {
    BipVector out(t.n_pixels, sensor.spectral->out_bands);
    kernels::pixelwise_matvec(sensor.spectral->weights.data(), sensor.spectral->out_bands,
                              sensor.spectral->in_bands, t.data.data(), out.data.data(),
                              t.n_pixels);
    t = std::move(out);
  }
  return t;
}

BipVector apply_adjoint(const SensorModel& sensor, const BipVector& y) {
  if (y.n_pixels != sensor.out_pixels() || y.n_bands != sensor.out_bands())
    throw ShapeError("apply_adjoint: input dims do not match sensor output");
  BipVector t = y;
  if (sensor.spectral) {
    const std::vector<double> wt = transpose_weights(*sensor.spectral);
    BipVector out(t.n_pixels, sensor.spectral->in_bands);
    kernels::pixelwise_matvec(wt.data(), sensor.spectral->in_bands, sensor.spectral->out_bands,
                              t.data.data(), out.data.data(), t.n_pixels);
    t = std::move(out);
  }
  if (sensor.decimation) t = decimate_adjoint(*sensor.decimation, t);
  if (sensor.blur) t = blur_adjoint(*sensor.blur, t, sensor.in_rows, sensor.in_cols);
  return t;
}

FusedSensorOp::FusedSensorOp(const SensorModel& sensor, const SubspaceBasis& basis)
    : sensor_(&sensor),
      reduced_dim_(basis.reduced_dim),
      full_rows_(sensor.in_rows),
      full_cols_(sensor.in_cols) {
  if (basis.full_dim != sensor.in_bands)
    throw ShapeError("FusedSensorOp: basis full_dim != sensor bands");
  const std::vector<double> vt = basis.transposed();  // full x reduced
  const int ob = sensor.out_bands();
  pixel_matrix_.assign(static_cast<std::size_t>(ob) * reduced_dim_, 0.0);
  if (sensor.spectral) {
    for (int o = 0; o < ob; ++o)
      for (int k = 0; k < reduced_dim_; ++k) {
        double s = 0.0;
        for (int i = 0; i < sensor.in_bands; ++i)
          s += sensor.spectral->at(o, i) * vt[static_cast<std::size_t>(i) * reduced_dim_ + k];
        pixel_matrix_[static_cast<std::size_t>(o) * reduced_dim_ + k] = s;
      }
  } else {
    pixel_matrix_ = vt;
  }
  pixel_matrix_t_.assign(pixel_matrix_.size(), 0.0);
  for (int o = 0; o < ob; ++o)
    for (int k = 0; k < reduced_dim_; ++k)
      pixel_matrix_t_[static_cast<std::size_t>(k) * ob + o] =
          pixel_matrix_[static_cast<std::size_t>(o) * reduced_dim_ + k];
}

BipVector FusedSensorOp::forward(const BipVector& u) const {
  if (u.n_pixels != full_rows_ * full_cols_ || u.n_bands != reduced_dim_)
    throw ShapeError("FusedSensorOp::forward: dims mismatch");
  BipVector t = u;
  if (sensor_->blur) t = blur_apply(*sensor_->blur, t, full_rows_, full_cols_);
  if (sensor_->decimation) t = decimate_apply(*sensor_->decimation, t);
  const int ob = sensor_->out_bands();
  BipVector out(t.n_pixels, ob);
  kernels::pixelwise_matvec(pixel_matrix_.data(), ob, reduced_dim_, t.data.data(),
                            out.data.data(), t.n_pixels);
  return out;
}

BipVector FusedSensorOp::adjoint(const BipVector& y) const {
  if (y.n_pixels != sensor_->out_pixels() || y.n_bands != sensor_->out_bands())
    throw ShapeError("FusedSensorOp::adjoint: dims mismatch");
  const int ob = sensor_->out_bands();
  BipVector t(y.n_pixels, reduced_dim_);
  kernels::pixelwise_matvec(pixel_matrix_t_.data(), reduced_dim_, ob, y.data.data(),
                            t.data.data(), y.n_pixels);
  if (sensor_->decimation) t = decimate_adjoint(*sensor_->decimation, t);
  if (sensor_->blur) t = blur_adjoint(*sensor_->blur, t, full_rows_, full_cols_);
  return t;
}

BipVector apply_forward_through_subspace(const SensorModel& sensor, const SubspaceBasis& basis,
                                         const BipVector& u) {
  return FusedSensorOp(sensor, basis).forward(u);
}

BipVector apply_adjoint_through_subspace(const SensorModel& sensor, const SubspaceBasis& basis,
                                         const BipVector& y) {
  return FusedSensorOp(sensor, basis).adjoint(y);
}

BipVector add_noise(const SensorModel& sensor, const BipVector& y, RandomEngine& rng) {
  if (y.n_pixels != sensor.out_pixels() || y.n_bands != sensor.out_bands())
    throw ShapeError("add_noise: dims do not match sensor output");
  bool all_zero = true;
  for (double v : sensor.noise_variances) {
    if (v < 0.0 || !std::isfinite(v)) throw ParamError("add_noise: negative noise variance");
    if (v > 0.0) all_zero = false;
  }
  if (all_zero) return y;
  for (double v : sensor.noise_variances)
    if (v == 0.0) throw ParamError("add_noise: zero variance outside noiseless mode");

  std::vector<double> sigma(sensor.noise_variances.size());
  for (std::size_t k = 0; k < sigma.size(); ++k) sigma[k] = std::sqrt(sensor.noise_variances[k]);
  BipVector out = y;
  const int nb = out.n_bands;
  for (int p = 0; p < out.n_pixels; ++p) {
    double* px = &out.data[static_cast<std::size_t>(p) * nb];
    for (int k = 0; k < nb; ++k) px[k] += sigma[k] * rng.normal();
  }
  return out;
}

BipVector add_noise(const SensorModel& sensor, const BipVector& y, std::uint64_t seed) {
  RandomEngine rng(seed);
  return add_noise(sensor, y, rng);
}

std::pair<SpectralResponse, std::vector<double>> load_response_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParamError("load_response_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParamError("load_response_csv: empty file " + path);

  std::vector<double> wavelengths;
  std::vector<std::vector<double>> cols;  // per output band, one value per source band
  int n_cols = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParamError("load_response_csv: bad number '" + cell + "' in " + path);
      }
    }
    if (vals.size() < 2) throw ParamError("load_response_csv: row with fewer than 2 columns");
    if (n_cols < 0) {
      n_cols = static_cast<int>(vals.size());
      cols.resize(n_cols - 1);
    } else if (static_cast<int>(vals.size()) != n_cols) {
      throw ParamError("load_response_csv: ragged rows in " + path);
    }
    wavelengths.push_back(vals[0]);
    for (int j = 1; j < n_cols; ++j) cols[j - 1].push_back(vals[j]);
  }
  if (wavelengths.empty()) throw ParamError("load_response_csv: no data rows in " + path);

  const int in_bands = static_cast<int>(wavelengths.size());
  const int out_bands = n_cols - 1;
  std::vector<double> weights(static_cast<std::size_t>(out_bands) * in_bands);
  for (int o = 0; o < out_bands; ++o)
    for (int i = 0; i < in_bands; ++i)
      weights[static_cast<std::size_t>(o) * in_bands + i] = cols[o][i];
  return {SpectralResponse::normalized(out_bands, in_bands, std::move(weights)),
          std::move(wavelengths)};
}

}  // namespace mbfusion
