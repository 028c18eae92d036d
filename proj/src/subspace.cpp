#include "mbfusion/subspace.hpp"

#include <algorithm>
#include <cmath>

#include "mbfusion/kernels.hpp"
#include "mbfusion/linalg.hpp"

namespace mbfusion {

PcaResult learn_pca(const BipVector& hs, double threshold, bool center) {
  if (!(threshold > 0.0) || threshold > 1.0)
    throw ParamError("learn_pca: threshold must lie in (0, 1]");
  const int nb = hs.n_bands;
  const int np = hs.n_pixels;
  if (np < nb) throw ParamError("learn_pca: need at least as many pixels as bands");

  PcaResult out;
  out.mean_spectrum.assign(nb, 0.0);
  if (center) {
    for (int p = 0; p < np; ++p)
      kernels::axpy(1.0, hs.pixel(p).data(), out.mean_spectrum.data(), nb);
    kernels::scale(1.0 / np, out.mean_spectrum.data(), nb);
  }

  // Sample covariance of the pixel spectra.
  linalg::Matrix cov(nb, nb);
  std::vector<double> centered(nb);
  for (int p = 0; p < np; ++p) {
    kernels::vsub(hs.pixel(p).data(), out.mean_spectrum.data(), centered.data(), nb);
    for (int i = 0; i < nb; ++i)
      kernels::axpy(centered[i], centered.data(), &cov.a[static_cast<std::size_t>(i) * nb], nb);
  }
  const double denom = (np > 1) ? (np - 1) : 1;
  kernels::scale(1.0 / denom, cov.a.data(), cov.a.size());

  linalg::SymEig eig = linalg::sym_eig(cov);

  // Clamp the numerically-zero tail so energy fractions and rank queries
  // (threshold = 1.0) behave.
  const double d_max = eig.values.empty() ? 0.0 : std::max(eig.values[0], 0.0);
  double total = 0.0;
  for (double& d : eig.values) {
    if (d < 1e-12 * d_max) d = 0.0;
    total += d;
  }
  out.eigenvalues = eig.values;

  if (total <= 0.0) {
    out.degenerate = true;
    out.basis = SubspaceBasis(nb, 1);
    for (int c = 0; c < nb; ++c) out.basis.at(0, c) = eig.vectors(c, 0);
    out.energy_fraction = 1.0;
    return out;
  }

  int mtilde = nb;
  double cum = 0.0;
  for (int i = 0; i < nb; ++i) {
    cum += eig.values[i];
    if (cum / total >= threshold) {
      mtilde = i + 1;
      out.energy_fraction = cum / total;
      break;
    }
  }
  if (mtilde == nb) out.energy_fraction = 1.0;

  out.basis = SubspaceBasis(nb, mtilde);
  for (int r = 0; r < mtilde; ++r)
    for (int c = 0; c < nb; ++c) out.basis.at(r, c) = eig.vectors(c, r);
  return out;
}

namespace {

struct Tap {
  int index;
  double weight;
};

// Center-aligned source coordinate for target sample t at integer scale d.
double src_coord(int t, int d) { return (t + 0.5) / d - 0.5; }

std::vector<Tap> taps_for(double s, int n, InterpKernel kernel) {
  std::vector<Tap> taps;
  if (kernel == InterpKernel::bilinear) {
    const int i0 = static_cast<int>(std::floor(s));
    const double f = s - i0;
    taps = {{std::clamp(i0, 0, n - 1), 1.0 - f}, {std::clamp(i0 + 1, 0, n - 1), f}};
  } else {
    // Catmull-Rom weights.
    const int i1 = static_cast<int>(std::floor(s));
    const double f = s - i1;
    const double f2 = f * f, f3 = f2 * f;
    const double w[4] = {-0.5 * f3 + f2 - 0.5 * f, 1.5 * f3 - 2.5 * f2 + 1.0,
                         -1.5 * f3 + 2.0 * f2 + 0.5 * f, 0.5 * f3 - 0.5 * f2};
    for (int k = 0; k < 4; ++k) taps.push_back({std::clamp(i1 - 1 + k, 0, n - 1), w[k]});
  }
  return taps;
}

}  // namespace

ImageCube upsample_cube(const ImageCube& hs, int target_rows, int target_cols,
                        InterpKernel kernel) {
  if (target_rows < hs.rows || target_cols < hs.cols || target_rows % hs.rows != 0 ||
      target_cols % hs.cols != 0)
    throw ParamError("upsample_cube: target dims must be integer multiples of source dims");
  const int dr = target_rows / hs.rows;
  const int dc = target_cols / hs.cols;
  if (dr != dc) throw ParamError("upsample_cube: row/col scale ratios differ");
  if (dr == 1) return hs;

  const int nb = hs.bands;
  ImageCube out(target_rows, target_cols, nb);
  for (int r = 0; r < target_rows; ++r) {
    const auto rtaps = taps_for(src_coord(r, dr), hs.rows, kernel);
    for (int c = 0; c < target_cols; ++c) {
      const auto ctaps = taps_for(src_coord(c, dc), hs.cols, kernel);
      double* op = out.pixel(r, c).data();
      for (const Tap& tr : rtaps)
        for (const Tap& tc : ctaps) {
          const double w = tr.weight * tc.weight;
          if (w == 0.0) continue;
          kernels::axpy(w, hs.pixel(tr.index, tc.index).data(), op, nb);
        }
    }
  }
  return out;
}

BipVector interpolated_prior_mean(const ImageCube& hs_cube, int target_rows, int target_cols,
                                  const SubspaceBasis& basis,
                                  const std::vector<double>& mean_spectrum,
                                  InterpKernel kernel) {
  if (hs_cube.bands != basis.full_dim)
    throw ShapeError("interpolated_prior_mean: cube bands != basis full_dim");
  if (!mean_spectrum.empty() && static_cast<int>(mean_spectrum.size()) != basis.full_dim)
    throw ShapeError("interpolated_prior_mean: mean_spectrum length mismatch");

  ImageCube up = upsample_cube(hs_cube, target_rows, target_cols, kernel);
  BipVector flat = vectorize_bip(up);
  if (!mean_spectrum.empty()) {
    for (int p = 0; p < flat.n_pixels; ++p)
      kernels::axpy(-1.0, mean_spectrum.data(), flat.pixel(p).data(), flat.n_bands);
  }
  return project(flat, basis);
}

BipVector interpolated_prior_mean(const ImageCube& hs_cube, int target_rows, int target_cols,
                                  const PcaResult& pca, InterpKernel kernel) {
  return interpolated_prior_mean(hs_cube, target_rows, target_cols, pca.basis,
                                 pca.mean_spectrum, kernel);
}

}  // namespace mbfusion
