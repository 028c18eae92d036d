#pragma once

#include <vector>

#include "mbfusion/core.hpp"

namespace mbfusion {

enum class InterpKernel { bilinear, bicubic };

/// PCA of the pixel spectra of an observed image. With centering (default)
/// the affine convention is u_i = V (x_i - mean), x_i = V^T u_i + mean;
/// uncentered mode keeps a zero mean so both reduce to the pure linear maps.
struct PcaResult {
  std::vector<double> eigenvalues;    // all full_dim values, descending;
                                      // entries below 1e-12 * max clamped to 0
  SubspaceBasis basis;                // top reduced_dim eigenvectors as rows
  double energy_fraction = 0.0;       // fraction captured by the retained rows
  std::vector<double> mean_spectrum;  // length full_dim (zeros when uncentered)
  bool degenerate = false;            // all pixels identical
};

/// Chooses the smallest reduced dimension whose eigenvalue mass reaches
/// `threshold` (in (0, 1]). Needs at least as many pixels as bands.
PcaResult learn_pca(const BipVector& hs, double threshold, bool center = true);

/// Upsample each band of `hs_cube` to target resolution (integer scale, both
/// axes equal) and project every pixel through the basis after subtracting
/// `mean_spectrum` (pass empty for none).
BipVector interpolated_prior_mean(const ImageCube& hs_cube, int target_rows, int target_cols,
                                  const SubspaceBasis& basis,
                                  const std::vector<double>& mean_spectrum,
                                  InterpKernel kernel = InterpKernel::bilinear);
BipVector interpolated_prior_mean(const ImageCube& hs_cube, int target_rows, int target_cols,
                                  const PcaResult& pca,
                                  InterpKernel kernel = InterpKernel::bilinear);

/// Band-wise upsampling only (no projection); also the interpolated-HS
/// baseline of the experiment protocol.
ImageCube upsample_cube(const ImageCube& hs_cube, int target_rows, int target_cols,
                        InterpKernel kernel = InterpKernel::bilinear);

}  // namespace mbfusion
