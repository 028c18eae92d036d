#include "mbfusion/synth.hpp"

#include <cmath>
#include <numbers>

#include "mbfusion/kernels.hpp"
#include "mbfusion/metrics.hpp"
#include "mbfusion/rng.hpp"

namespace mbfusion {

void ExperimentSpec::validate() const {
  if (ref_path.empty()) {
    if (rows < 1 || cols < 1 || bands < 1) throw ParamError("ExperimentSpec: bad reference dims");
    if (rank < 1 || rank > bands) throw ParamError("ExperimentSpec: rank must be in [1, bands]");
  }
  if (d < 1) throw ParamError("ExperimentSpec: d must be >= 1");
  if (fsnr_db && !std::isfinite(*fsnr_db) && *fsnr_db < 0)
    throw ParamError("ExperimentSpec: fsnr_db must be finite or +inf");
}

std::vector<double> expand_snr_list(const std::vector<double>& snr, int bands) {
  if (snr.empty()) return {};
  if (snr.size() == 1) return std::vector<double>(bands, snr[0]);
  if (static_cast<int>(snr.size()) != bands)
    throw ParamError("SNR list length does not match the band count");
  return snr;
}

ImageCube generate_synthetic_reference(int rows, int cols, int bands, int rank,
                                       std::uint64_t seed) {
  if (rank < 1 || rank > bands) throw ParamError("generate_synthetic_reference: bad rank");
  RandomEngine rng = RandomEngine::stream(seed, kStreamReference);

  // Smooth positive endmember spectra. Each gets a principal gaussian bump
  // in its own stretch of the band axis (plus a faint secondary one and a
  // small offset), so the endmember set is far from collinear and the
  // mixture really spans r spectral directions.
  std::vector<std::vector<double>> endmembers(rank, std::vector<double>(bands));
  for (int k = 0; k < rank; ++k) {
    const double segment = static_cast<double>(bands) / rank;
    const double center = (k + 0.2 + 0.6 * rng.uniform01()) * segment;
    const double width = std::max(0.6, segment * (0.25 + 0.25 * rng.uniform01()));
    const double amp = 0.5 + 0.5 * rng.uniform01();
    const double center2 = rng.uniform01() * (bands - 1);
    const double width2 = std::max(0.6, bands * (0.1 + 0.1 * rng.uniform01()));
    const double amp2 = 0.1 * rng.uniform01();
    for (int b = 0; b < bands; ++b) {
      const double z = (b - center) / width;
      const double z2 = (b - center2) / width2;
      endmembers[k][b] = 0.05 + amp * std::exp(-0.5 * z * z) + amp2 * std::exp(-0.5 * z2 * z2);
    }
  }

  // Smooth abundance variations: low-frequency cosine series, centered and
  // orthonormalized across pixels so the abundance covariance is isotropic
  // and no component degenerates under a PCA energy threshold. A common
  // positive offset then makes the fields non-negative with sum <= 0.9.
  const std::size_t npix = static_cast<std::size_t>(rows) * cols;
  std::vector<std::vector<double>> fields(rank, std::vector<double>(npix));
  for (int k = 0; k < rank; ++k) {
    std::vector<double>& g = fields[k];
    for (;;) {
      const int terms = 4;
      std::vector<double> a(terms), fr(terms), fc(terms), ph(terms);
      for (int j = 0; j < terms; ++j) {
        a[j] = -1.0 + 2.0 * rng.uniform01();
        fr[j] = static_cast<double>(rng.uniform_int(0, 2));
        fc[j] = static_cast<double>(rng.uniform_int(0, 2));
        ph[j] = 2.0 * std::numbers::pi * rng.uniform01();
      }
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          double v = 0.0;
          for (int j = 0; j < terms; ++j)
            v += a[j] * std::cos(2.0 * std::numbers::pi *
                                     (fr[j] * r / rows + fc[j] * c / cols) +
                                 ph[j]);
          g[static_cast<std::size_t>(r) * cols + c] = v;
        }
      double mean = 0.0;
      for (double v : g) mean += v;
      mean /= static_cast<double>(npix);
      for (double& v : g) v -= mean;
      for (int prev = 0; prev < k; ++prev)
        kernels::axpy(-kernels::dot(g.data(), fields[prev].data(), npix) /
                          static_cast<double>(npix),
                      fields[prev].data(), g.data(), npix);
      const double rms = std::sqrt(kernels::sumsq(g.data(), npix) / npix);
      if (rms > 1e-8) {
        kernels::scale(1.0 / rms, g.data(), npix);
        break;
      }
    }
  }

  double max_abs = 0.0;
  for (const auto& g : fields)
    for (double v : g) max_abs = std::max(max_abs, std::abs(v));
  for (auto& g : fields)
    for (double& v : g) v += max_abs;  // non-negative
  double max_total = 0.0;
  for (std::size_t i = 0; i < npix; ++i) {
    double t = 0.0;
    for (int k = 0; k < rank; ++k) t += fields[k][i];
    max_total = std::max(max_total, t);
  }
  const double rescale = max_total > 0.0 ? 0.9 / max_total : 0.0;

  ImageCube cube(rows, cols, bands);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double* px = cube.pixel(r, c).data();
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      for (int k = 0; k < rank; ++k)
        kernels::axpy(fields[k][i] * rescale, endmembers[k].data(), px, bands);
    }
  return cube;
}

SpectralResponse synthetic_bandpass_response(int in_bands, int out_bands) {
  if (out_bands < 1 || in_bands < out_bands)
    throw ParamError("synthetic_bandpass_response: need 1 <= out_bands <= in_bands");
  // Raised cosines centered evenly across the band axis, ~1.7 channel
  // widths wide so neighbours overlap like instrument curves do.
  std::vector<double> w(static_cast<std::size_t>(out_bands) * in_bands, 0.0);
  const double spacing = static_cast<double>(in_bands) / out_bands;
  for (int o = 0; o < out_bands; ++o) {
    const double center = (o + 0.5) * spacing - 0.5;
    const double half_width = 0.85 * spacing;
    for (int i = 0; i < in_bands; ++i) {
      const double z = (i - center) / half_width;
      if (std::abs(z) < 1.0)
        w[static_cast<std::size_t>(o) * in_bands + i] =
            0.5 * (1.0 + std::cos(std::numbers::pi * z));
    }
  }
  return SpectralResponse::normalized(out_bands, in_bands, std::move(w));
}

SpectralResponse pan_response(int in_bands) {
  std::vector<double> w(in_bands, 1.0);
  return SpectralResponse::normalized(1, in_bands, std::move(w));
}

SpectralResponse resolve_response(const std::string& source, int in_bands) {
  if (source == "pan") return pan_response(in_bands);
  if (source.rfind("synthetic:", 0) == 0) {
    const int k = std::stoi(source.substr(10));
    return synthetic_bandpass_response(in_bands, k);
  }
  auto [resp, wl] = load_response_csv(source);
  if (resp.in_bands != in_bands)
    throw ShapeError("response file has " + std::to_string(resp.in_bands) +
                     " source bands, expected " + std::to_string(in_bands));
  return resp;
}

double fsnr_variance(const SpectralResponse& response, double fsnr_db) {
  const double fro2 = kernels::sumsq(response.weights.data(), response.weights.size());
  return fro2 / (static_cast<double>(response.in_bands) * response.out_bands *
                 std::pow(10.0, fsnr_db / 10.0));
}

double fsnr_of_variance(const SpectralResponse& response, double sigma2) {
  const double fro2 = kernels::sumsq(response.weights.data(), response.weights.size());
  return 10.0 * std::log10(fro2 / (static_cast<double>(response.in_bands) *
                                   response.out_bands * sigma2));
}

SpectralResponse perturb_response(const SpectralResponse& response, double fsnr_db,
                                  std::uint64_t seed, bool clip_negative) {
  if (std::isinf(fsnr_db) && fsnr_db > 0) return response;
  if (!std::isfinite(fsnr_db)) throw ParamError("perturb_response: fsnr_db must be finite");
  const double sigma = std::sqrt(fsnr_variance(response, fsnr_db));
  RandomEngine rng = RandomEngine::stream(seed, kStreamResponsePerturb);
  SpectralResponse out = response;
  for (double& v : out.weights) {
    if (v == 0.0) continue;
    v += sigma * rng.normal();
    if (clip_negative && v < 0.0) v = 0.0;
  }
  return out;
}

namespace {

std::vector<double> variances_for_snr(const SensorModel& sensor, const BipVector& x,
                                      const std::vector<double>& snr_db_list) {
  const BipVector y = apply_forward(sensor, x);
  const int nb = y.n_bands;
  if (snr_db_list.empty()) return std::vector<double>(nb, 0.0);
  std::vector<double> energy(nb);
  kernels::band_sumsq(y.data.data(), energy.data(), y.n_pixels, nb);
  std::vector<double> vars(nb);
  for (int k = 0; k < nb; ++k)
    vars[k] = solve_variance_for_snr(energy[k], y.n_pixels, snr_db_list[k]);
  return vars;
}

}  // namespace

SynthOutput generate_observations(const ExperimentSpec& spec) {
  spec.validate();
  SynthOutput out;
  if (spec.ref_path.empty()) {
    out.reference = generate_synthetic_reference(spec.rows, spec.cols, spec.bands, spec.rank,
                                                 spec.seed);
  } else {
    throw ParamError("generate_observations: load the reference cube via the io layer first");
  }
  return generate_observations_from(out.reference, spec);
}

SynthOutput generate_observations_from(const ImageCube& reference, const ExperimentSpec& spec) {
  spec.validate();
  if (reference.rows % spec.d != 0 || reference.cols % spec.d != 0)
    throw ParamError("generate_observations: reference dims not divisible by d");

  SynthOutput out;
  out.reference = reference;
  const int rows = reference.rows, cols = reference.cols, bands = reference.bands;
  const BipVector x = vectorize_bip(reference);

  SensorModel hs_sensor;
  hs_sensor.name = "hs";
  hs_sensor.in_rows = rows;
  hs_sensor.in_cols = cols;
  hs_sensor.in_bands = bands;
  hs_sensor.decimation = SpatialDecimation(spec.d, rows, cols);
  hs_sensor.noise_variances.assign(bands, 0.0);
  const std::vector<double> hs_snr = expand_snr_list(spec.hs_snr_db, bands);
  hs_sensor.noise_variances = variances_for_snr(hs_sensor, x, hs_snr);

  const SpectralResponse response = resolve_response(spec.response_source, bands);
  SensorModel ms_sensor;
  ms_sensor.name = "ms";
  ms_sensor.in_rows = rows;
  ms_sensor.in_cols = cols;
  ms_sensor.in_bands = bands;
  ms_sensor.spectral = response;
  const std::vector<double> ms_snr = expand_snr_list(spec.ms_snr_db, response.out_bands);
  ms_sensor.noise_variances = variances_for_snr(ms_sensor, x, ms_snr);

  RandomEngine hs_rng = RandomEngine::stream(spec.seed, kStreamHsNoise);
  RandomEngine ms_rng = RandomEngine::stream(spec.seed, kStreamMsNoise);
  const BipVector hs_obs = add_noise(hs_sensor, apply_forward(hs_sensor, x), hs_rng);
  const BipVector ms_obs = add_noise(ms_sensor, apply_forward(ms_sensor, x), ms_rng);
  out.hs = devectorize_bip(hs_obs, rows / spec.d, cols / spec.d);
  out.ms = devectorize_bip(ms_obs, rows, cols);

  out.truth.rows = rows;
  out.truth.cols = cols;
  out.truth.bands = bands;
  out.truth.d = spec.d;
  out.truth.response_true = response;
  out.truth.response_assumed =
      spec.fsnr_db ? perturb_response(response, *spec.fsnr_db, spec.seed,
                                      spec.clip_negative_response)
                   : response;
  out.truth.hs_variances = hs_sensor.noise_variances;
  out.truth.ms_variances = ms_sensor.noise_variances;
  out.truth.seed = spec.seed;
  out.truth.fsnr_db = spec.fsnr_db;
  return out;
}

}  // namespace mbfusion
