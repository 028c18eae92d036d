#include "mbfusion/metrics.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "mbfusion/kernels.hpp"

namespace mbfusion {

namespace {

void check_same_dims(const ImageCube& a, const ImageCube& b, const char* who) {
  if (a.rows != b.rows || a.cols != b.cols || a.bands != b.bands)
    throw ShapeError(std::string(who) + ": cube dimensions differ");
}

std::string format_full(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

struct BandStats {
  double mean_a, mean_b, var_a, var_b, cov;
};

// Unbiased moments of one band of each cube.
BandStats band_stats(const ImageCube& a, const ImageCube& b, int band) {
  const int n = a.n_pixels();
  double ma = 0.0, mb = 0.0;
  for (int p = 0; p < n; ++p) {
    ma += a.data[static_cast<std::size_t>(p) * a.bands + band];
    mb += b.data[static_cast<std::size_t>(p) * b.bands + band];
  }
  ma /= n;
  mb /= n;
  double va = 0.0, vb = 0.0, cab = 0.0;
  for (int p = 0; p < n; ++p) {
    const double da = a.data[static_cast<std::size_t>(p) * a.bands + band] - ma;
    const double db = b.data[static_cast<std::size_t>(p) * b.bands + band] - mb;
    va += da * da;
    vb += db * db;
    cab += da * db;
  }
  const double denom = (n > 1) ? (n - 1) : 1;
  return {ma, mb, va / denom, vb / denom, cab / denom};
}

double uiqi_from_stats(const BandStats& s) {
  const double var_sum = s.var_a + s.var_b;
  const double mean_sq_sum = s.mean_a * s.mean_a + s.mean_b * s.mean_b;
  if (var_sum == 0.0) return (s.mean_a == s.mean_b) ? 1.0 : 0.0;
  const double contrast_corr = 2.0 * s.cov / var_sum;
  if (mean_sq_sum == 0.0) return contrast_corr;
  return contrast_corr * (2.0 * s.mean_a * s.mean_b / mean_sq_sum);
}

}  // namespace

const char* QualityReport::csv_header() { return "rsnr_db,sam_deg,uiqi,ergas,dd"; }

std::string QualityReport::to_csv_row() const {
  return format_full(rsnr_db) + "," + format_full(sam_deg) + "," + format_full(uiqi) + "," +
         format_full(ergas) + "," + format_full(dd);
}

double rsnr(const BipVector& ref, const BipVector& est) {
  if (ref.n_pixels != est.n_pixels || ref.n_bands != est.n_bands)
    throw ShapeError("rsnr: dimensions differ");
  const double ref_energy = kernels::sumsq(ref.data.data(), ref.size());
  if (ref_energy == 0.0) throw NumericalError("rsnr: reference has zero energy");
  double err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref.data[i] - est.data[i];
    err += d * d;
  }
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ref_energy / err);
}

double sam(const BipVector& ref, const BipVector& est, int* skipped) {
  if (ref.n_pixels != est.n_pixels || ref.n_bands != est.n_bands)
    throw ShapeError("sam: dimensions differ");
  const int nb = ref.n_bands;
  std::vector<double> ua(nb), ub(nb), diff(nb), sumv(nb);
  double sum = 0.0;
  int used = 0, skip = 0;
  for (int p = 0; p < ref.n_pixels; ++p) {
    const double* a = ref.pixel(p).data();
    const double* b = est.pixel(p).data();
    const double na = std::sqrt(kernels::sumsq(a, nb));
    const double nb2 = std::sqrt(kernels::sumsq(b, nb));
    if (na == 0.0 || nb2 == 0.0) {
      ++skip;
      continue;
    }
    // angle = 2 atan2(|u - v|, |u + v|) on the normalized spectra; exact to
    // machine precision near 0 and pi, unlike acos of the cosine.
    for (int k = 0; k < nb; ++k) {
      ua[k] = a[k] / na;
      ub[k] = b[k] / nb2;
      diff[k] = ua[k] - ub[k];
      sumv[k] = ua[k] + ub[k];
    }
    sum += 2.0 * std::atan2(std::sqrt(kernels::sumsq(diff.data(), nb)),
                            std::sqrt(kernels::sumsq(sumv.data(), nb)));
    ++used;
  }
  if (skipped) *skipped = skip;
  if (used == 0) throw NumericalError("sam: every pixel has a zero-norm spectrum");
  return (sum / used) * 180.0 / std::numbers::pi;
}

double uiqi(const ImageCube& ref, const ImageCube& est) {
  check_same_dims(ref, est, "uiqi");
  double sum = 0.0;
  for (int b = 0; b < ref.bands; ++b) sum += uiqi_from_stats(band_stats(ref, est, b));
  return sum / ref.bands;
}

double uiqi_windowed(const ImageCube& ref, const ImageCube& est, int window) {
  check_same_dims(ref, est, "uiqi_windowed");
  if (window < 2) throw ParamError("uiqi_windowed: window must be >= 2");
  double band_sum = 0.0;
  for (int b = 0; b < ref.bands; ++b) {
    double wsum = 0.0;
    int wc = 0;
    for (int r0 = 0; r0 < ref.rows; r0 += window) {
      for (int c0 = 0; c0 < ref.cols; c0 += window) {
        const int r1 = std::min(r0 + window, ref.rows);
        const int c1 = std::min(c0 + window, ref.cols);
        const int n = (r1 - r0) * (c1 - c0);
        if (n < 2) continue;
        double ma = 0.0, mb = 0.0;
        for (int r = r0; r < r1; ++r)
          for (int c = c0; c < c1; ++c) {
            ma += ref.at(r, c, b);
            mb += est.at(r, c, b);
          }
        ma /= n;
        mb /= n;
        double va = 0.0, vb = 0.0, cab = 0.0;
        for (int r = r0; r < r1; ++r)
          for (int c = c0; c < c1; ++c) {
            const double da = ref.at(r, c, b) - ma;
            const double db = est.at(r, c, b) - mb;
            va += da * da;
            vb += db * db;
            cab += da * db;
          }
        const double denom = n - 1;
        wsum += uiqi_from_stats({ma, mb, va / denom, vb / denom, cab / denom});
        ++wc;
      }
    }
    if (wc == 0) throw ParamError("uiqi_windowed: window larger than image");
    band_sum += wsum / wc;
  }
  return band_sum / ref.bands;
}

double ergas(const ImageCube& ref, const ImageCube& est, double scale_ratio, bool squared_ratio) {
  check_same_dims(ref, est, "ergas");
  if (!(scale_ratio > 0.0)) throw ParamError("ergas: scale_ratio must be positive");
  const int n = ref.n_pixels();
  double acc = 0.0;
  for (int b = 0; b < ref.bands; ++b) {
    double mu = 0.0, mse = 0.0;
    for (int p = 0; p < n; ++p) {
      const double rv = ref.data[static_cast<std::size_t>(p) * ref.bands + b];
      const double ev = est.data[static_cast<std::size_t>(p) * est.bands + b];
      mu += rv;
      const double d = rv - ev;
      mse += d * d;
    }
    mu /= n;
    if (mu == 0.0) throw NumericalError("ergas: band mean is zero");
    const double ratio = std::sqrt(mse / n) / mu;
    acc += squared_ratio ? ratio * ratio : ratio;
  }
  return 100.0 / (scale_ratio * scale_ratio) * std::sqrt(acc / ref.bands);
}

double dd(const ImageCube& ref, const ImageCube& est) {
  check_same_dims(ref, est, "dd");
  double s = 0.0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) s += std::abs(ref.data[i] - est.data[i]);
  return s / static_cast<double>(ref.data.size());
}

QualityReport quality_report(const ImageCube& ref, const ImageCube& est, double scale_ratio) {
  QualityReport q;
  q.rsnr_db = rsnr(vectorize_bip(ref), vectorize_bip(est));
  q.sam_deg = sam(vectorize_bip(ref), vectorize_bip(est));
  q.uiqi = uiqi(ref, est);
  q.ergas = ergas(ref, est, scale_ratio);
  q.dd = dd(ref, est);
  return q;
}

std::vector<double> snr_db(const SensorModel& sensor, const BipVector& x_true) {
  const BipVector y = apply_forward(sensor, x_true);
  const int nb = y.n_bands;
  std::vector<double> energy(nb);
  kernels::band_sumsq(y.data.data(), energy.data(), y.n_pixels, nb);
  std::vector<double> out(nb);
  for (int k = 0; k < nb; ++k) {
    const double s2 = sensor.noise_variances[k];
    if (!(s2 > 0.0)) throw ParamError("snr_db: noise variance must be positive");
    out[k] = 10.0 * std::log10(energy[k] / (static_cast<double>(y.n_pixels) * s2));
  }
  return out;
}

double solve_variance_for_snr(double band_energy, int n_pix, double target_db) {
  if (!(band_energy > 0.0)) throw ParamError("solve_variance_for_snr: zero band energy");
  if (n_pix < 1) throw ParamError("solve_variance_for_snr: n_pix must be positive");
  return band_energy / (static_cast<double>(n_pix) * std::pow(10.0, target_db / 10.0));
}

}  // namespace mbfusion
