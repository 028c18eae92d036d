#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mbfusion/core.hpp"
#include "mbfusion/rng.hpp"

namespace mbfusion {

enum class BoundaryMode { symmetric, zero, periodic };

/// 2-D convolution kernel applied per band, matrix-free. Kernel must be
/// odd-sized and sum to 1 (+-1e-12). `symmetric` reflects with the edge
/// sample repeated.
struct SpatialBlur {
  int krows = 0;
  int kcols = 0;
  std::vector<double> kernel;  // row-major krows x kcols
  BoundaryMode boundary = BoundaryMode::symmetric;

  SpatialBlur() = default;
  SpatialBlur(int krows, int kcols, std::vector<double> kernel,
              BoundaryMode boundary = BoundaryMode::symmetric);
};

/// Non-overlapping d x d block mean; rows/cols must divide exactly.
struct SpatialDecimation {
  int factor = 1;
  int in_rows = 0;
  int in_cols = 0;

  SpatialDecimation() = default;
  SpatialDecimation(int factor, int in_rows, int in_cols);

  int out_rows() const { return in_rows / factor; }
  int out_cols() const { return in_cols / factor; }
};

/// Per-pixel band mixing: out_bands x in_bands weight matrix. Rows of a
/// sensor response loaded from file are non-negative and normalized to sum 1;
/// perturbed responses (robustness studies) intentionally break both, so the
/// struct itself does not enforce them.
struct SpectralResponse {
  int out_bands = 0;
  int in_bands = 0;
  std::vector<double> weights;  // row-major

  SpectralResponse() = default;
  SpectralResponse(int out_bands, int in_bands, std::vector<double> weights);

  double& at(int o, int i) { return weights[static_cast<std::size_t>(o) * in_bands + i]; }
  double at(int o, int i) const { return weights[static_cast<std::size_t>(o) * in_bands + i]; }

  /// Validates entries >= 0 and rescales each row to sum 1.
  static SpectralResponse normalized(int out_bands, int in_bands, std::vector<double> weights);
};

/// One observation channel: optional blur -> optional decimation -> optional
/// spectral response, plus independent per-band Gaussian noise variances on
/// the output grid. At least one stage must be present.
struct SensorModel {
  std::string name;
  int in_rows = 0;
  int in_cols = 0;
  int in_bands = 0;
  std::optional<SpatialBlur> blur;
  std::optional<SpatialDecimation> decimation;
  std::optional<SpectralResponse> spectral;
  std::vector<double> noise_variances;  // length out_bands; all zero = noiseless mode

  int out_rows() const { return decimation ? decimation->out_rows() : in_rows; }
  int out_cols() const { return decimation ? decimation->out_cols() : in_cols; }
  int out_bands() const { return spectral ? spectral->out_bands : in_bands; }
  int out_pixels() const { return out_rows() * out_cols(); }

  void validate() const;
};

/// F_p x (noiseless).
BipVector apply_forward(const SensorModel& sensor, const BipVector& x);
/// F_p^T y.
BipVector apply_adjoint(const SensorModel& sensor, const BipVector& y);

/// F_p V^T u without materializing the full-band image: the spatial stages
/// run in the reduced band space and the basis lift is folded into a single
/// per-pixel matrix (composed with the spectral response when present).
BipVector apply_forward_through_subspace(const SensorModel& sensor, const SubspaceBasis& basis,
                                         const BipVector& u);
/// V F_p^T y, the adjoint of the fused path.
BipVector apply_adjoint_through_subspace(const SensorModel& sensor, const SubspaceBasis& basis,
                                         const BipVector& y);

/// y + n, n ~ N(0, diag per-band variances), independent across pixels.
/// All-zero variances are the explicit noiseless mode (returns y unchanged);
/// any negative or partially-zero set is an error.
BipVector add_noise(const SensorModel& sensor, const BipVector& y, RandomEngine& rng);
BipVector add_noise(const SensorModel& sensor, const BipVector& y, std::uint64_t seed);

/// Cached F_p V^T and its adjoint for sampler hot loops: the per-pixel
/// matrix (response * V^T or V^T) is precomposed once.
class FusedSensorOp {
 public:
  FusedSensorOp(const SensorModel& sensor, const SubspaceBasis& basis);

  BipVector forward(const BipVector& u) const;
  BipVector adjoint(const BipVector& y) const;

  const SensorModel& sensor() const { return *sensor_; }

 private:
  const SensorModel* sensor_;
  int reduced_dim_;
  int full_rows_, full_cols_;
  std::vector<double> pixel_matrix_;    // out_bands x reduced_dim
  std::vector<double> pixel_matrix_t_;  // reduced_dim x out_bands
};

/// Load a response from CSV (`wavelength,band1,...,bandK`; one row per
/// source band). Columns are the output bands; rows are normalized to sum 1.
/// Returns the response and the wavelength column.
std::pair<SpectralResponse, std::vector<double>> load_response_csv(const std::string& path);

}  // namespace mbfusion
