#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mbfusion/core.hpp"
#include "mbfusion/forward.hpp"

namespace mbfusion {

// Child-stream ids hung off the master experiment seed.
inline constexpr std::uint64_t kStreamReference = 1;
inline constexpr std::uint64_t kStreamHsNoise = 2;
inline constexpr std::uint64_t kStreamMsNoise = 3;
inline constexpr std::uint64_t kStreamResponsePerturb = 4;
inline constexpr std::uint64_t kStreamChain = 5;

struct ExperimentSpec {
  // Reference scene: a cube file path, or generated when empty.
  std::string ref_path;
  int rows = 32, cols = 32, bands = 16, rank = 4;

  int d = 5;                       // HS decimation factor
  std::vector<double> hs_snr_db;   // broadcast to bands if length 1; empty = noiseless
  std::string response_source = "synthetic:4";  // synthetic:K | pan | csv path
  std::vector<double> ms_snr_db;   // same conventions
  std::uint64_t seed = 0;
  std::optional<double> fsnr_db;   // perturbation of the *assumed* response
  bool clip_negative_response = true;

  void validate() const;
};

/// Everything needed to re-simulate or fuse: exact operators and variances.
struct TruthBundle {
  int rows = 0, cols = 0, bands = 0;
  int d = 1;
  SpectralResponse response_true;
  SpectralResponse response_assumed;  // == response_true unless fsnr_db set
  std::vector<double> hs_variances;
  std::vector<double> ms_variances;
  std::uint64_t seed = 0;
  std::optional<double> fsnr_db;
};

struct SynthOutput {
  ImageCube reference;
  ImageCube hs;
  ImageCube ms;
  TruthBundle truth;
};

/// Degrade the reference per the experiment protocol: blockwise d x d mean
/// then per-band noise at the target SNRs for the HS channel; spectral
/// response then noise for the MS channel. The spec must describe a
/// generated reference; use generate_observations_from for a loaded cube.
SynthOutput generate_observations(const ExperimentSpec& spec);
SynthOutput generate_observations_from(const ImageCube& reference, const ExperimentSpec& spec);

/// Desk-scale reference: r smooth non-negative abundance fields (summing to
/// <= 1) mixing r smooth endmember spectra. Exact rank r.
ImageCube generate_synthetic_reference(int rows, int cols, int bands, int rank,
                                       std::uint64_t seed);

/// Add N(0, sigma2) to every non-zero entry of the response, sigma2 solved
/// from the target FSNR = 10 log10(|f|_F^2 / (in*out*sigma2)). Negative
/// results are clipped to zero when `clip_negative`; rows are NOT
/// renormalized. +inf FSNR returns the response unchanged.
SpectralResponse perturb_response(const SpectralResponse& response, double fsnr_db,
                                  std::uint64_t seed, bool clip_negative = true);

/// Variance implied by a target FSNR for a given response.
double fsnr_variance(const SpectralResponse& response, double fsnr_db);
/// FSNR implied by a perturbation variance.
double fsnr_of_variance(const SpectralResponse& response, double sigma2);

/// K overlapping raised-cosine bandpasses across the source bands,
/// row-normalized; the stand-in for tabulated instrument curves.
SpectralResponse synthetic_bandpass_response(int in_bands, int out_bands);
/// Single uniform-average band (the panchromatic channel).
SpectralResponse pan_response(int in_bands);

/// Resolve "synthetic:K" | "pan" | csv path.
SpectralResponse resolve_response(const std::string& source, int in_bands);

/// Expand an SNR list onto `bands` entries: empty stays empty (noiseless),
/// one value broadcasts, "v x count" groups are accepted by the config layer.
std::vector<double> expand_snr_list(const std::vector<double>& snr, int bands);

}  // namespace mbfusion
