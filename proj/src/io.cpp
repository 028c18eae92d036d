#include "mbfusion/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mbfusion/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mbfusion {

namespace {

std::string strip_cube_suffix(const std::string& path) {
  for (const char* ext : {".json", ".bin"}) {
    if (path.size() > std::strlen(ext) && path.ends_with(ext))
      return path.substr(0, path.size() - std::strlen(ext));
  }
  return path;
}

void write_payload_le(std::ofstream& os, const std::vector<double>& data) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(double)));
  } else {
    for (double v : data) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(bits >> (8 * i));
      os.write(b, 8);
    }
  }
}

void read_payload_le(std::ifstream& is, std::vector<double>& data) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
  } else {
    for (double& v : data) {
      unsigned char b[8];
      is.read(reinterpret_cast<char*>(b), 8);
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
      std::memcpy(&v, &bits, 8);
    }
  }
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

json response_to_json(const SpectralResponse& r) {
  return json{{"out_bands", r.out_bands}, {"in_bands", r.in_bands}, {"weights", r.weights}};
}

SpectralResponse response_from_json(const json& j) {
  return SpectralResponse(j.at("out_bands").get<int>(), j.at("in_bands").get<int>(),
                          j.at("weights").get<std::vector<double>>());
}

}  // namespace

void write_cube(const std::string& base_path, const ImageCube& cube,
                const std::vector<double>& wavelengths) {
  cube.validate();
  if (!wavelengths.empty() && static_cast<int>(wavelengths.size()) != cube.bands)
    throw ShapeError("write_cube: wavelengths length != bands");
  const std::string base = strip_cube_suffix(base_path);
  json header{{"rows", cube.rows}, {"cols", cube.cols},   {"bands", cube.bands},
              {"dtype", "f64"},    {"order", "bip"}};
  if (!wavelengths.empty()) header["wavelengths"] = wavelengths;
  {
    std::ofstream os(base + ".json");
    if (!os) throw ParamError("write_cube: cannot open " + base + ".json");
    os << header.dump(2) << "\n";
  }
  std::ofstream os(base + ".bin", std::ios::binary | std::ios::trunc);
  if (!os) throw ParamError("write_cube: cannot open " + base + ".bin");
  write_payload_le(os, cube.data);
  if (!os) throw NumericalError("write_cube: write failed");
}

std::pair<ImageCube, std::vector<double>> read_cube(const std::string& path) {
  const std::string base = strip_cube_suffix(path);
  std::ifstream hs(base + ".json");
  if (!hs) throw ParamError("read_cube: cannot open " + base + ".json");
  json header;
  try {
    hs >> header;
  } catch (const json::exception& e) {
    throw ParamError("read_cube: bad header json: " + std::string(e.what()));
  }
  if (header.value("dtype", "") != "f64" || header.value("order", "") != "bip")
    throw ParamError("read_cube: unsupported dtype/order in " + base + ".json");
  ImageCube cube(header.at("rows").get<int>(), header.at("cols").get<int>(),
                 header.at("bands").get<int>());
  std::vector<double> wavelengths;
  if (header.contains("wavelengths"))
    wavelengths = header["wavelengths"].get<std::vector<double>>();

  std::ifstream is(base + ".bin", std::ios::binary);
  if (!is) throw ParamError("read_cube: cannot open " + base + ".bin");
  is.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::uint64_t>(is.tellg());
  if (bytes != cube.data.size() * sizeof(double))
    throw ShapeError("read_cube: payload is " + std::to_string(bytes) + " bytes, header expects " +
                     std::to_string(cube.data.size() * sizeof(double)));
  is.seekg(0);
  read_payload_le(is, cube.data);
  if (!is) throw NumericalError("read_cube: payload read failed");
  cube.validate();
  return {std::move(cube), std::move(wavelengths)};
}

std::string file_digest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParamError("file_digest: cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericalError("file_digest: digest init failed");
  }
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    const std::streamsize got = is.gcount();
    if (got > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(got));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

void write_truth_bundle(const std::string& path, const TruthBundle& truth) {
  json j{{"rows", truth.rows},
         {"cols", truth.cols},
         {"bands", truth.bands},
         {"d", truth.d},
         {"response_true", response_to_json(truth.response_true)},
         {"response_assumed", response_to_json(truth.response_assumed)},
         {"hs_variances", truth.hs_variances},
         {"ms_variances", truth.ms_variances},
         {"seed", truth.seed}};
  if (truth.fsnr_db) j["fsnr_db"] = *truth.fsnr_db;
  std::ofstream os(path);
  if (!os) throw ParamError("write_truth_bundle: cannot open " + path);
  os << j.dump(2) << "\n";
}

TruthBundle read_truth_bundle(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParamError("read_truth_bundle: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ParamError("read_truth_bundle: bad json: " + std::string(e.what()));
  }
  TruthBundle t;
  t.rows = j.at("rows").get<int>();
  t.cols = j.at("cols").get<int>();
  t.bands = j.at("bands").get<int>();
  t.d = j.at("d").get<int>();
  t.response_true = response_from_json(j.at("response_true"));
  t.response_assumed = response_from_json(j.at("response_assumed"));
  t.hs_variances = j.at("hs_variances").get<std::vector<double>>();
  t.ms_variances = j.at("ms_variances").get<std::vector<double>>();
  t.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("fsnr_db")) t.fsnr_db = j["fsnr_db"].get<double>();
  return t;
}

void write_noise_csv(const std::string& path, const ChainOutput& out,
                     const std::vector<std::string>& sensor_names) {
  std::ofstream os(path);
  if (!os) throw ParamError("write_noise_csv: cannot open " + path);
  os << "sensor,band,mmse,ci_lo,ci_hi\n";
  for (std::size_t p = 0; p < out.noise_mmse.size(); ++p) {
    const std::string name = p < sensor_names.size() ? sensor_names[p] : std::to_string(p);
    for (std::size_t k = 0; k < out.noise_mmse[p].size(); ++k)
      os << name << "," << k << "," << format_double(out.noise_mmse[p][k]) << ","
         << format_double(out.noise_ci_lo[p][k]) << "," << format_double(out.noise_ci_hi[p][k])
         << "\n";
  }
}

void write_traces_csv(const std::string& path, const ChainOutput& out) {
  std::ofstream os(path);
  if (!os) throw ParamError("write_traces_csv: cannot open " + path);
  os << "iteration,accept_prob,accepted,energy,epsilon\n";
  for (std::size_t t = 0; t < out.accept_prob_trace.size(); ++t)
    os << (t + 1) << "," << format_double(out.accept_prob_trace[t]) << ","
       << static_cast<int>(out.accepted_trace[t]) << "," << format_double(out.energy_trace[t])
       << "," << format_double(out.epsilon_trace[t]) << "\n";
}

void write_rgb_preview(const std::string& path, const ImageCube& cube,
                       const std::vector<double>& wavelengths) {
  int band_idx[3];
  if (static_cast<int>(wavelengths.size()) == cube.bands) {
    const double targets[3] = {650.0, 550.0, 450.0};
    for (int c = 0; c < 3; ++c) {
      int best = 0;
      for (int b = 1; b < cube.bands; ++b)
        if (std::abs(wavelengths[b] - targets[c]) < std::abs(wavelengths[best] - targets[c]))
          best = b;
      band_idx[c] = best;
    }
  } else {
    band_idx[0] = std::min(cube.bands - 1, static_cast<int>(0.8 * (cube.bands - 1) + 0.5));
    band_idx[1] = static_cast<int>(0.5 * (cube.bands - 1) + 0.5);
    band_idx[2] = static_cast<int>(0.2 * (cube.bands - 1) + 0.5);
  }

  double lo[3], hi[3];
  for (int c = 0; c < 3; ++c) {
    lo[c] = hi[c] = cube.at(0, 0, band_idx[c]);
    for (int r = 0; r < cube.rows; ++r)
      for (int cc = 0; cc < cube.cols; ++cc) {
        const double v = cube.at(r, cc, band_idx[c]);
        lo[c] = std::min(lo[c], v);
        hi[c] = std::max(hi[c], v);
      }
    if (hi[c] <= lo[c]) hi[c] = lo[c] + 1.0;
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ParamError("write_rgb_preview: cannot open " + path);
  os << "P6\n" << cube.cols << " " << cube.rows << "\n255\n";
  for (int r = 0; r < cube.rows; ++r)
    for (int cc = 0; cc < cube.cols; ++cc)
      for (int c = 0; c < 3; ++c) {
        const double v = (cube.at(r, cc, band_idx[c]) - lo[c]) / (hi[c] - lo[c]);
        os.put(static_cast<char>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
      }
}

void RunManifest::add_output(const std::string& dir, const std::string& relative) {
  output_digests[relative] = file_digest((fs::path(dir) / relative).string());
}

void RunManifest::write(const std::string& path) const {
  json j{{"command", command},       {"config", config},
         {"seed", seed},             {"timings_ms", timings_ms},
         {"outputs", output_digests}, {"kernel_backend", kernel_backend},
         {"version", version.empty() ? kVersion : version}};
  std::ofstream os(path);
  if (!os) throw ParamError("RunManifest::write: cannot open " + path);
  os << j.dump(2) << "\n";
}

RunManifest RunManifest::read(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParamError("RunManifest::read: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ParamError("RunManifest::read: bad json: " + std::string(e.what()));
  }
  RunManifest m;
  m.command = j.value("command", "");
  if (j.contains("config")) m.config = j["config"].get<std::map<std::string, std::string>>();
  m.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("timings_ms"))
    m.timings_ms = j["timings_ms"].get<std::map<std::string, double>>();
  if (j.contains("outputs"))
    m.output_digests = j["outputs"].get<std::map<std::string, std::string>>();
  m.kernel_backend = j.value("kernel_backend", "");
  m.version = j.value("version", "");
  return m;
}

}  // namespace mbfusion
