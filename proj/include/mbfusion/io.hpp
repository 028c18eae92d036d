#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mbfusion/core.hpp"
#include "mbfusion/metrics.hpp"
#include "mbfusion/sampler.hpp"
#include "mbfusion/synth.hpp"

namespace mbfusion {

// Cube files are a JSON sidecar header plus a raw little-endian f64 payload:
// <base>.json + <base>.bin. The header pins {rows, cols, bands, dtype:"f64",
// order:"bip"} and optional wavelengths.

void write_cube(const std::string& base_path, const ImageCube& cube,
                const std::vector<double>& wavelengths = {});
/// Accepts "<base>", "<base>.json" or "<base>.bin".
std::pair<ImageCube, std::vector<double>> read_cube(const std::string& path);

/// SHA-256 of a file, hex-encoded.
std::string file_digest(const std::string& path);

void write_truth_bundle(const std::string& path, const TruthBundle& truth);
TruthBundle read_truth_bundle(const std::string& path);

void write_noise_csv(const std::string& path, const ChainOutput& out,
                     const std::vector<std::string>& sensor_names);
void write_traces_csv(const std::string& path, const ChainOutput& out);

/// Min-max stretched RGB composite (binary PPM). Bands are chosen nearest
/// to 650/550/450 nm when wavelengths are present, else at 20/50/80% depth.
void write_rgb_preview(const std::string& path, const ImageCube& cube,
                       const std::vector<double>& wavelengths = {});

/// Run manifest: resolved config, seeds, version, per-stage timings and
/// output digests. Replaying the same config and seed reproduces every
/// digest bit-exactly.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::map<std::string, double> timings_ms;
  std::map<std::string, std::string> output_digests;  // relative path -> sha256
  std::string kernel_backend;
  std::string version;

  void add_output(const std::string& dir, const std::string& relative);
  void write(const std::string& path) const;
  static RunManifest read(const std::string& path);
};

}  // namespace mbfusion
