#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "mbfusion/kernels.hpp"
#include "mbfusion/metrics.hpp"
#include "mbfusion/subspace.hpp"
#include "mbfusion/synth.hpp"
#include "test_support.hpp"

using namespace mbfusion;

namespace {

ExperimentSpec tiny_spec() {
  ExperimentSpec spec;
  spec.rows = 16;
  spec.cols = 16;
  spec.bands = 8;
  spec.rank = 3;
  spec.d = 4;
  spec.hs_snr_db = {30.0};
  spec.response_source = "synthetic:3";
  spec.ms_snr_db = {30.0};
  spec.seed = 97;
  return spec;
}

}  // namespace

TEST_CASE("synthetic reference: determinism, positivity, rank structure") {
  const ImageCube a = generate_synthetic_reference(12, 10, 9, 3, 5);
  const ImageCube b = generate_synthetic_reference(12, 10, 9, 3, 5);
  CHECK(a.data == b.data);
  const ImageCube c = generate_synthetic_reference(12, 10, 9, 3, 6);
  CHECK(a.data != c.data);
  for (double v : a.data) {
    CHECK(v >= 0.0);
    CHECK(std::isfinite(v));
  }
}

TEST_CASE("rank-1 reference: all pixel spectra are proportional (SAM = 0)") {
  const ImageCube ref = generate_synthetic_reference(8, 8, 10, 1, 21);
  const BipVector v = vectorize_bip(ref);
  // compare every pixel against the first non-zero one
  int base = -1;
  for (int p = 0; p < v.n_pixels; ++p)
    if (kernels::sumsq(v.pixel(p).data(), 10) > 1e-12) {
      base = p;
      break;
    }
  REQUIRE(base >= 0);
  for (int p = 0; p < v.n_pixels; ++p) {
    const double na = kernels::sumsq(v.pixel(base).data(), 10);
    const double nb = kernels::sumsq(v.pixel(p).data(), 10);
    if (nb < 1e-14) continue;
    const double cosv = kernels::dot(v.pixel(base).data(), v.pixel(p).data(), 10) /
                        std::sqrt(na * nb);
    CHECK(cosv == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("learn_pca recovers the construction rank on the noiseless reference") {
  const ImageCube ref = generate_synthetic_reference(16, 16, 12, 4, 33);
  const PcaResult pca = learn_pca(vectorize_bip(ref), 0.99);
  CHECK(pca.basis.reduced_dim == 4);
}

TEST_CASE("noiseless observations are exact blockwise means") {
  ExperimentSpec spec = tiny_spec();
  spec.hs_snr_db.clear();  // noiseless
  spec.ms_snr_db.clear();
  const SynthOutput out = generate_observations(spec);

  for (int R = 0; R < 4; ++R)
    for (int C = 0; C < 4; ++C)
      for (int b = 0; b < 8; ++b) {
        double acc = 0.0;
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 4; ++j) acc += out.reference.at(R * 4 + i, C * 4 + j, b);
        CHECK(out.hs.at(R, C, b) == doctest::Approx(acc / 16.0).epsilon(1e-12));
      }
}

TEST_CASE("d=1 with identity-like response and no noise returns the reference") {
  ExperimentSpec spec = tiny_spec();
  spec.d = 1;
  spec.response_source = "synthetic:8";  // square case: one bump per band
  spec.hs_snr_db.clear();
  spec.ms_snr_db.clear();
  const SynthOutput out = generate_observations(spec);
  CHECK(out.hs.data == out.reference.data);
  // synthetic:8 on 8 bands degenerates to the identity response
  CHECK(out.ms.data == out.reference.data);
}

TEST_CASE("d=5 with a 7-band response and split SNR levels is accepted") {
  ExperimentSpec spec;
  spec.rows = 20;
  spec.cols = 20;
  spec.bands = 16;
  spec.rank = 4;
  spec.d = 5;
  spec.hs_snr_db = {35, 35, 35, 35, 35, 35, 35, 35, 30, 30, 30, 30, 30, 30, 30, 30};
  spec.response_source = "synthetic:7";
  spec.ms_snr_db = {30.0};
  spec.seed = 4;
  const SynthOutput out = generate_observations(spec);
  CHECK(out.hs.rows == 4);
  CHECK(out.ms.bands == 7);
  CHECK(out.truth.hs_variances.size() == 16);
  CHECK(out.truth.ms_variances.size() == 7);
}

TEST_CASE("observations are deterministic per seed and change with it") {
  const ExperimentSpec spec = tiny_spec();
  const SynthOutput a = generate_observations(spec);
  const SynthOutput b = generate_observations(spec);
  CHECK(a.hs.data == b.hs.data);
  CHECK(a.ms.data == b.ms.data);
  ExperimentSpec other = spec;
  other.seed = 98;
  const SynthOutput c = generate_observations(other);
  CHECK(a.hs.data != c.hs.data);
}

TEST_CASE("re-simulating with the recorded truth reproduces observations bit-exactly") {
  const ExperimentSpec spec = tiny_spec();
  const SynthOutput a = generate_observations(spec);

  // rebuild from the truth bundle: same operators, same seed streams
  SensorModel hs;
  hs.name = "hs";
  hs.in_rows = a.truth.rows;
  hs.in_cols = a.truth.cols;
  hs.in_bands = a.truth.bands;
  hs.decimation = SpatialDecimation(a.truth.d, a.truth.rows, a.truth.cols);
  hs.noise_variances = a.truth.hs_variances;
  SensorModel ms;
  ms.name = "ms";
  ms.in_rows = a.truth.rows;
  ms.in_cols = a.truth.cols;
  ms.in_bands = a.truth.bands;
  ms.spectral = a.truth.response_true;
  ms.noise_variances = a.truth.ms_variances;

  const BipVector x = vectorize_bip(a.reference);
  RandomEngine hs_rng = RandomEngine::stream(a.truth.seed, kStreamHsNoise);
  RandomEngine ms_rng = RandomEngine::stream(a.truth.seed, kStreamMsNoise);
  const BipVector hs_obs = add_noise(hs, apply_forward(hs, x), hs_rng);
  const BipVector ms_obs = add_noise(ms, apply_forward(ms, x), ms_rng);
  CHECK(hs_obs.data == vectorize_bip(a.hs).data);
  CHECK(ms_obs.data == vectorize_bip(a.ms).data);
}

TEST_CASE("injected noise hits the target SNR within 0.2 dB on a 64x64 image") {
  ExperimentSpec spec;
  spec.rows = 64;
  spec.cols = 64;
  spec.bands = 6;
  spec.rank = 3;
  spec.d = 4;
  spec.hs_snr_db = {25.0};
  spec.response_source = "synthetic:3";
  spec.ms_snr_db = {30.0};
  spec.seed = 1234;
  const SynthOutput out = generate_observations(spec);

  // measured SNR of the MS channel: full-resolution grid, 4096 samples/band
  SensorModel ms;
  ms.name = "ms";
  ms.in_rows = 64;
  ms.in_cols = 64;
  ms.in_bands = 6;
  ms.spectral = out.truth.response_true;
  ms.noise_variances = out.truth.ms_variances;
  const BipVector clean = apply_forward(ms, vectorize_bip(out.reference));
  const BipVector noisy = vectorize_bip(out.ms);
  std::vector<double> sig(3), err(3);
  BipVector diff(noisy.n_pixels, 3);
  kernels::vsub(noisy.data.data(), clean.data.data(), diff.data.data(), diff.size());
  kernels::band_sumsq(clean.data.data(), sig.data(), clean.n_pixels, 3);
  kernels::band_sumsq(diff.data.data(), err.data(), diff.n_pixels, 3);
  for (int k = 0; k < 3; ++k) {
    const double measured = 10.0 * std::log10(sig[k] / err[k]);
    CHECK(std::abs(measured - 30.0) <= 0.2);
  }
}

TEST_CASE("perturb_response: +inf FSNR is the identity; rows left unnormalized") {
  const SpectralResponse r = synthetic_bandpass_response(16, 4);
  const SpectralResponse same =
      perturb_response(r, std::numeric_limits<double>::infinity(), 9);
  CHECK(same.weights == r.weights);

  const SpectralResponse pert = perturb_response(r, 10.0, 9, /*clip_negative=*/true);
  CHECK(pert.weights != r.weights);
  for (double v : pert.weights) CHECK(v >= 0.0);
  double worst_row_gap = 0.0;
  for (int o = 0; o < pert.out_bands; ++o) {
    double s = 0.0;
    for (int i = 0; i < pert.in_bands; ++i) s += pert.at(o, i);
    worst_row_gap = std::max(worst_row_gap, std::abs(s - 1.0));
  }
  CHECK(worst_row_gap > 1e-6);  // perturbation persists, rows not renormalized

  // zero entries stay zero
  for (std::size_t i = 0; i < r.weights.size(); ++i)
    if (r.weights[i] == 0.0) CHECK(pert.weights[i] == 0.0);
}

TEST_CASE("perturbation variance solves the target FSNR (pooled over 100 seeds)") {
  const SpectralResponse r = synthetic_bandpass_response(16, 7);
  const double target = 12.0;
  double err_sum = 0.0;
  int count = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SpectralResponse p = perturb_response(r, target, seed, /*clip_negative=*/false);
    for (std::size_t i = 0; i < r.weights.size(); ++i) {
      if (r.weights[i] == 0.0) continue;
      const double e = p.weights[i] - r.weights[i];
      err_sum += e * e;
      ++count;
    }
  }
  const double sigma2_hat = err_sum / count;
  const double measured = fsnr_of_variance(r, sigma2_hat);
  CHECK(std::abs(measured - target) <= 0.5);
}

TEST_CASE("pan response averages all bands uniformly") {
  const SpectralResponse p = pan_response(10);
  CHECK(p.out_bands == 1);
  for (int i = 0; i < 10; ++i) CHECK(p.at(0, i) == doctest::Approx(0.1));
}

TEST_CASE("spec validation and snr list expansion") {
  ExperimentSpec spec = tiny_spec();
  spec.rows = 15;  // not divisible by d=4
  CHECK_THROWS_AS(generate_observations(spec), ParamError);

  CHECK(expand_snr_list({30.0}, 5) == std::vector<double>(5, 30.0));
  CHECK(expand_snr_list({}, 5).empty());
  CHECK_THROWS_AS(expand_snr_list({1.0, 2.0}, 5), ParamError);
}
