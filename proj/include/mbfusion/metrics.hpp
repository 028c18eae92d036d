#pragma once

#include <string>
#include <vector>

#include "mbfusion/core.hpp"
#include "mbfusion/forward.hpp"

namespace mbfusion {

/// The five fusion-quality measures. rsnr is +inf for a perfect
/// reconstruction (serialized as "inf").
struct QualityReport {
  double rsnr_db = 0.0;
  double sam_deg = 0.0;
  double uiqi = 0.0;
  double ergas = 0.0;
  double dd = 0.0;

  /// `rsnr_db,sam_deg,uiqi,ergas,dd` with round-trip decimal precision.
  std::string to_csv_row() const;
  static const char* csv_header();
};

/// 10 log10(||ref||^2 / ||ref - est||^2); +inf when est == ref.
double rsnr(const BipVector& ref, const BipVector& est);

/// Mean per-pixel spectral angle, in degrees. Pixels where either spectrum
/// has zero norm are skipped; `skipped` (optional) receives the count.
double sam(const BipVector& ref, const BipVector& est, int* skipped = nullptr);

/// Band-averaged universal image quality index over a single global window.
/// Conventions for degenerate bands: both constant and equal -> 1, constant
/// and unequal -> 0, zero-mean bands use the contrast/correlation factor only.
double uiqi(const ImageCube& ref, const ImageCube& est);

/// Sliding-window variant (the original index averages window scores).
double uiqi_windowed(const ImageCube& ref, const ImageCube& est, int window = 32);

/// 100/d^2 * sqrt(mean_i (RMSE_i / mu_i)^2), mu_i = mean of ref band i.
/// `squared_ratio = false` reproduces the unsquared-ratio variant.
double ergas(const ImageCube& ref, const ImageCube& est, double scale_ratio,
             bool squared_ratio = true);

/// Mean absolute deviation.
double dd(const ImageCube& ref, const ImageCube& est);

QualityReport quality_report(const ImageCube& ref, const ImageCube& est, double scale_ratio);

/// Per-band SNR (dB) of a sensor's noiseless output against its configured
/// noise variances: 10 log10(||(F x)_i||^2 / (n_pix * s2_i)).
std::vector<double> snr_db(const SensorModel& sensor, const BipVector& x_true);

/// Inverse of snr_db for one band: the variance that hits `target_db` given
/// the band's signal energy over n_pix samples.
double solve_variance_for_snr(double band_energy, int n_pix, double target_db);

}  // namespace mbfusion
