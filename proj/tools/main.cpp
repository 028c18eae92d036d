// mbfusion: fuse a low-spatial hyperspectral cube with a high-spatial
// multispectral cube by sampling the hierarchical Bayesian posterior with a
// Hamiltonian-within-Gibbs chain. Subcommands: synth, fuse, metrics, validate.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mbfusion/config.hpp"
#include "mbfusion/io.hpp"
#include "mbfusion/kernels.hpp"
#include "mbfusion/metrics.hpp"
#include "mbfusion/model.hpp"
#include "mbfusion/sampler.hpp"
#include "mbfusion/subspace.hpp"
#include "mbfusion/synth.hpp"
#include "mbfusion/validate.hpp"
#include "mbfusion/version.hpp"

namespace fs = std::filesystem;
using namespace mbfusion;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidationFailure = 1;
constexpr int kExitUserError = 2;
constexpr int kExitNumericalFailure = 3;

class Timer {
 public:
  void start(const std::string& stage) {
    stage_ = stage;
    t0_ = std::chrono::steady_clock::now();
  }
  void stop(std::map<std::string, double>& into) {
    const auto t1 = std::chrono::steady_clock::now();
    into[stage_] = std::chrono::duration<double, std::milli>(t1 - t0_).count();
  }

 private:
  std::string stage_;
  std::chrono::steady_clock::time_point t0_;
};

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Config cfg = path.empty() ? Config() : Config::from_file(path);
  for (const std::string& kv : overrides) cfg.apply_override(kv);
  return cfg;
}

std::map<std::string, std::string> snapshot(const Config& cfg) {
  return cfg.entries();
}

double eps0_from(const Config& cfg) {
  const std::string raw = cfg.get_string("eps0", "auto");
  if (raw == "auto" || raw.empty()) return 0.0;
  try {
    return std::stod(raw);
  } catch (const std::exception&) {
    throw ParamError("config: eps0 must be a number or 'auto'");
  }
}

int cmd_synth(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& out_override, std::uint64_t seed_override, bool has_seed) {
  Config cfg = load_config(config_path, overrides);

  ExperimentSpec spec;
  spec.ref_path = cfg.get_string("ref", "generate");
  if (spec.ref_path == "generate") spec.ref_path.clear();
  spec.rows = static_cast<int>(cfg.get_int("ref.rows", 32));
  spec.cols = static_cast<int>(cfg.get_int("ref.cols", 32));
  spec.bands = static_cast<int>(cfg.get_int("ref.bands", 16));
  spec.rank = static_cast<int>(cfg.get_int("ref.rank", 4));
  spec.d = static_cast<int>(cfg.get_int("hs.d", 5));
  spec.hs_snr_db = cfg.get_double_list("hs.snr_db");
  spec.response_source = cfg.get_string("ms.response", "synthetic:4");
  spec.ms_snr_db = cfg.get_double_list("ms.snr_db");
  spec.seed = cfg.get_seed("seed", 0);
  if (has_seed) spec.seed = seed_override;
  if (cfg.has("fsnr_db")) spec.fsnr_db = cfg.get_double("fsnr_db", 0.0);
  else cfg.get_double("fsnr_db", 0.0);
  spec.clip_negative_response = cfg.get_bool("clip_negative_response", true);

  std::string out_dir = out_override.empty() ? cfg.get_string("out_dir", "") : out_override;
  if (out_dir.empty()) throw ParamError("synth: out_dir (or --out) is required");
  cfg.reject_unknown_keys();
  fs::create_directories(out_dir);

  RunManifest manifest;
  manifest.command = "synth";
  manifest.config = snapshot(cfg);
  manifest.config["out_dir"] = out_dir;
  manifest.config["seed"] = std::to_string(spec.seed);
  manifest.seed = spec.seed;
  manifest.kernel_backend = kernels::backend_name();

  Timer timer;
  timer.start("simulate");
  SynthOutput out;
  std::vector<double> wavelengths;
  if (spec.ref_path.empty()) {
    out = generate_observations(spec);
  } else {
    auto [ref, wl] = read_cube(spec.ref_path);
    wavelengths = std::move(wl);
    out = generate_observations_from(ref, spec);
  }
  timer.stop(manifest.timings_ms);

  timer.start("write");
  write_cube((fs::path(out_dir) / "reference").string(), out.reference, wavelengths);
  write_cube((fs::path(out_dir) / "hs").string(), out.hs, wavelengths);
  write_cube((fs::path(out_dir) / "ms").string(), out.ms);
  write_truth_bundle((fs::path(out_dir) / "truth.json").string(), out.truth);
  timer.stop(manifest.timings_ms);

  for (const char* f : {"reference.json", "reference.bin", "hs.json", "hs.bin", "ms.json",
                        "ms.bin", "truth.json"})
    manifest.add_output(out_dir, f);
  manifest.write((fs::path(out_dir) / "manifest.json").string());

  std::cout << "synth: wrote reference/hs/ms cubes + truth bundle to " << out_dir << "\n";
  return kExitOk;
}

int cmd_fuse(const std::string& hs_path, const std::string& ms_path,
             const std::string& config_path, const std::vector<std::string>& overrides,
             const std::string& truth_path, const std::string& out_override,
             std::uint64_t seed_override, bool has_seed, bool noise_fixed,
             bool paper_literal_adapt, const std::string& resume_path,
             const std::string& checkpoint_out, int checkpoint_every,
             std::int64_t stop_after) {
  Config cfg = load_config(config_path, overrides);

  auto [hs_cube, hs_wl] = read_cube(hs_path);
  auto [ms_cube, ms_wl] = read_cube(ms_path);

  int d = static_cast<int>(cfg.get_int("d", 0));
  SpectralResponse response;
  std::vector<double> hs_vars, ms_vars;
  if (!truth_path.empty()) {
    const TruthBundle truth = read_truth_bundle(truth_path);
    if (d == 0) d = truth.d;
    response = truth.response_assumed;
    hs_vars = truth.hs_variances;
    ms_vars = truth.ms_variances;
    cfg.get_string("response", "");
  } else {
    if (d == 0) throw ParamError("fuse: d must come from --truth or the config");
    response = resolve_response(cfg.require_string("response"), hs_cube.bands);
  }

  if (ms_cube.rows != hs_cube.rows * d || ms_cube.cols != hs_cube.cols * d)
    throw ShapeError("fuse: ms dims must be d x hs dims (declared operators inconsistent)");
  if (response.in_bands != hs_cube.bands)
    throw ShapeError("fuse: response source bands != hs bands");
  if (response.out_bands != ms_cube.bands)
    throw ShapeError("fuse: response output bands != ms bands");

  if (cfg.has("noise_vars.hs")) hs_vars = cfg.get_double_list("noise_vars.hs");
  else cfg.get_double_list("noise_vars.hs");
  if (cfg.has("noise_vars.ms")) ms_vars = cfg.get_double_list("noise_vars.ms");
  else cfg.get_double_list("noise_vars.ms");
  noise_fixed = noise_fixed || cfg.get_bool("noise_fixed", false);
  if (noise_fixed && (hs_vars.empty() || ms_vars.empty()))
    throw ParamError("fuse: --noise-fixed needs variances from --truth or noise_vars.* keys");

  const double pca_threshold = cfg.get_double("pca.threshold", 0.99);
  const bool pca_center = cfg.get_bool("pca.center", true);
  const std::string interp_name = cfg.get_string("pca.interp", "bilinear");
  InterpKernel interp;
  if (interp_name == "bilinear") interp = InterpKernel::bilinear;
  else if (interp_name == "bicubic") interp = InterpKernel::bicubic;
  else throw ParamError("fuse: pca.interp must be bilinear or bicubic");

  SamplerConfig scfg;
  scfg.n_mc = static_cast<int>(cfg.get_int("n_mc", 500));
  scfg.n_bi = static_cast<int>(cfg.get_int("n_bi", 500));
  scfg.n_leap_min = static_cast<int>(cfg.get_int("n_leap_min", 50));
  scfg.n_leap_max = static_cast<int>(cfg.get_int("n_leap_max", 55));
  scfg.eps0 = eps0_from(cfg);
  scfg.window = static_cast<int>(cfg.get_int("window", 50));
  scfg.alpha_d = cfg.get_double("alpha_d", 0.3);
  scfg.alpha_u = cfg.get_double("alpha_u", 0.9);
  scfg.beta_grow = cfg.get_double("beta_grow", 1.1);
  scfg.beta_shrink = cfg.get_double("beta_shrink", 0.9);
  scfg.adapt_decay = cfg.get_double("adapt_decay", 0.01);
  scfg.seed = cfg.get_seed("seed", 0);
  if (has_seed) scfg.seed = seed_override;
  scfg.paper_literal_adapt = paper_literal_adapt || cfg.get_bool("paper_literal_adapt", false);
  scfg.store_every = static_cast<int>(cfg.get_int("store_every", 0));

  const std::string noise_prior_name = cfg.get_string("noise_prior", "jeffreys");

  std::string out_dir = out_override.empty() ? cfg.get_string("out_dir", "") : out_override;
  if (out_dir.empty()) throw ParamError("fuse: out_dir (or --out) is required");
  cfg.reject_unknown_keys();
  fs::create_directories(out_dir);

  RunManifest manifest;
  manifest.command = "fuse";
  manifest.config = snapshot(cfg);
  manifest.config["out_dir"] = out_dir;
  manifest.config["seed"] = std::to_string(scfg.seed);
  manifest.config["hs"] = hs_path;
  manifest.config["ms"] = ms_path;
  if (!truth_path.empty()) manifest.config["truth"] = truth_path;
  manifest.config["noise_fixed"] = noise_fixed ? "true" : "false";
  manifest.config["paper_literal_adapt"] = scfg.paper_literal_adapt ? "true" : "false";
  manifest.seed = scfg.seed;
  manifest.kernel_backend = kernels::backend_name();

  Timer timer;

  timer.start("subspace");
  const PcaResult pca = learn_pca(vectorize_bip(hs_cube), pca_threshold, pca_center);
  if (pca.degenerate)
    std::cerr << "fuse: warning: degenerate hs covariance, subspace dimension forced to 1\n";
  const int rows = ms_cube.rows, cols = ms_cube.cols;
  timer.stop(manifest.timings_ms);
  manifest.config["pca.reduced_dim"] = std::to_string(pca.basis.reduced_dim);

  HierModel model;
  model.full_rows = rows;
  model.full_cols = cols;
  model.basis = pca.basis;
  model.mean_spectrum = pca.mean_spectrum;
  model.prior_mean_u = interpolated_prior_mean(hs_cube, rows, cols, pca, interp);
  model.hyper = HyperParams::noninformative(pca.basis.reduced_dim);
  model.noise_mode = noise_fixed ? NoiseMode::fixed : NoiseMode::sample;
  if (noise_prior_name == "jeffreys") model.noise_prior = NoisePrior::jeffreys;
  else if (noise_prior_name == "fixed_ig") model.noise_prior = NoisePrior::fixed_ig;
  else throw ParamError("fuse: noise_prior must be jeffreys or fixed_ig");

  SensorModel hs_sensor;
  hs_sensor.name = "hs";
  hs_sensor.in_rows = rows;
  hs_sensor.in_cols = cols;
  hs_sensor.in_bands = hs_cube.bands;
  hs_sensor.decimation = SpatialDecimation(d, rows, cols);
  hs_sensor.noise_variances = hs_vars.empty() ? std::vector<double>(hs_cube.bands, 0.0) : hs_vars;
  model.sensors.push_back(hs_sensor);

  SensorModel ms_sensor;
  ms_sensor.name = "ms";
  ms_sensor.in_rows = rows;
  ms_sensor.in_cols = cols;
  ms_sensor.in_bands = hs_cube.bands;
  ms_sensor.spectral = response;
  ms_sensor.noise_variances = ms_vars.empty() ? std::vector<double>(ms_cube.bands, 0.0) : ms_vars;
  model.sensors.push_back(ms_sensor);

  timer.start("chain");
  Posterior posterior(std::move(model), {vectorize_bip(hs_cube), vectorize_bip(ms_cube)});
  GibbsSampler sampler(posterior, scfg);
  if (!resume_path.empty()) sampler.load_checkpoint(resume_path);
  const bool complete = sampler.run(stop_after, checkpoint_out, checkpoint_every);
  timer.stop(manifest.timings_ms);

  if (!complete) {
    manifest.config["stopped_after"] = std::to_string(sampler.iteration());
    manifest.write((fs::path(out_dir) / "manifest.json").string());
    std::cout << "fuse: paused at iteration " << sampler.iteration() << "/"
              << sampler.total_iterations() << " (checkpoint written)\n";
    return kExitOk;
  }

  timer.start("write");
  const ChainOutput out = sampler.output();
  const ImageCube fused = devectorize_bip(out.mmse_x, rows, cols);
  write_cube((fs::path(out_dir) / "fused").string(), fused, hs_wl);
  write_noise_csv((fs::path(out_dir) / "noise_variances.csv").string(), out, {"hs", "ms"});
  write_traces_csv((fs::path(out_dir) / "traces.csv").string(), out);
  write_rgb_preview((fs::path(out_dir) / "preview.ppm").string(), fused, hs_wl);
  timer.stop(manifest.timings_ms);

  for (const char* f : {"fused.json", "fused.bin", "noise_variances.csv", "traces.csv",
                        "preview.ppm"})
    manifest.add_output(out_dir, f);
  manifest.write((fs::path(out_dir) / "manifest.json").string());

  std::cout << "fuse: wrote fused cube (" << rows << "x" << cols << "x" << fused.bands
            << ", subspace dim " << posterior.reduced_dim() << ") to " << out_dir << "\n";
  return kExitOk;
}

int cmd_metrics(const std::string& ref_path, const std::string& est_path, double scale_ratio,
                const std::string& out_path) {
  auto [ref, wl_r] = read_cube(ref_path);
  auto [est, wl_e] = read_cube(est_path);
  const QualityReport q = quality_report(ref, est, scale_ratio);
  std::cout << QualityReport::csv_header() << "\n" << q.to_csv_row() << "\n";
  std::cerr << "dd x100 = " << q.dd * 100.0 << "\n";
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    if (!os) throw ParamError("metrics: cannot open " + out_path);
    os << QualityReport::csv_header() << "\n" << q.to_csv_row() << "\n";
  }
  return kExitOk;
}

int cmd_validate(const std::string& report_path, bool corrupt_gradient, std::uint64_t seed) {
  ValidateOptions opts;
  opts.corrupt_gradient = corrupt_gradient;
  if (seed != 0) opts.seed = seed;
  const std::vector<CheckResult> checks = run_validation(opts);
  for (const CheckResult& c : checks)
    std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << ": value=" << c.value
              << " threshold=" << c.threshold << " (" << c.detail << ")\n";
  if (!report_path.empty()) {
    nlohmann::json j;
    j["all_passed"] = all_passed(checks);
    j["version"] = kVersion;
    for (const CheckResult& c : checks)
      j["checks"].push_back({{"name", c.name},
                             {"passed", c.passed},
                             {"value", c.value},
                             {"threshold", c.threshold},
                             {"detail", c.detail}});
    std::ofstream os(report_path);
    if (!os) throw ParamError("validate: cannot open " + report_path);
    os << j.dump(2) << "\n";
  }
  return all_passed(checks) ? kExitOk : kExitValidationFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian multi-band image fusion (HMC-within-Gibbs)"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir, truth_path, resume_path, checkpoint_out, report_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool noise_fixed = false, paper_literal_adapt = false, corrupt_gradient = false;
  int checkpoint_every = 0;
  std::int64_t stop_after = 0;
  std::string hs_path, ms_path, ref_path, est_path;
  double scale_ratio = 1.0;

  CLI::App* synth = app.add_subcommand("synth", "Generate degraded observations + truth bundle");
  synth->add_option("-c,--config", config_path, "key = value config file");
  synth->add_option("--set", overrides, "override: key=value")->take_all();
  synth->add_option("--out", out_dir, "output directory");
  CLI::Option* synth_seed = synth->add_option("--seed", seed, "master seed");

  CLI::App* fuse = app.add_subcommand("fuse", "Fuse HS + MS cubes into the MMSE estimate");
  fuse->add_option("--hs", hs_path, "hyperspectral cube (base path)")->required();
  fuse->add_option("--ms", ms_path, "multispectral cube (base path)")->required();
  fuse->add_option("-c,--config", config_path, "key = value config file");
  fuse->add_option("--set", overrides, "override: key=value")->take_all();
  fuse->add_option("--truth", truth_path, "truth bundle (operators + variances)");
  fuse->add_option("--out", out_dir, "output directory");
  CLI::Option* fuse_seed = fuse->add_option("--seed", seed, "chain seed");
  fuse->add_flag("--noise-fixed", noise_fixed, "treat noise variances as known (skip sampling)");
  fuse->add_flag("--paper-literal-adapt", paper_literal_adapt,
                 "stepsize adaptation with the swapped factor pairing");
  fuse->add_option("--resume", resume_path, "resume from a checkpoint file");
  fuse->add_option("--checkpoint-out", checkpoint_out, "checkpoint file to write");
  fuse->add_option("--checkpoint-every", checkpoint_every, "checkpoint cadence (iterations)");
  fuse->add_option("--stop-after", stop_after, "pause after N total iterations");

  CLI::App* metrics = app.add_subcommand("metrics", "Fusion quality of an estimate vs reference");
  metrics->add_option("ref", ref_path, "reference cube")->required();
  metrics->add_option("est", est_path, "estimated cube")->required();
  metrics->add_option("--scale-ratio", scale_ratio, "spatial ratio d between grids")->required();
  metrics->add_option("-o,--out", report_path, "also write the CSV here");

  CLI::App* validate = app.add_subcommand("validate", "Run the oracle self-checks");
  validate->add_option("-o,--out", report_path, "machine-readable report (json)");
  CLI::Option* val_seed = validate->add_option("--seed", seed, "oracle seed");
  validate->add_flag("--corrupt-gradient", corrupt_gradient,
                     "test fixture: inject a gradient error (must fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUserError;
  }

  try {
    if (synth->parsed())
      return cmd_synth(config_path, overrides, out_dir, seed, !synth_seed->empty());
    if (fuse->parsed())
      return cmd_fuse(hs_path, ms_path, config_path, overrides, truth_path, out_dir, seed,
                      !fuse_seed->empty(), noise_fixed, paper_literal_adapt, resume_path,
                      checkpoint_out, checkpoint_every, stop_after);
    if (metrics->parsed()) return cmd_metrics(ref_path, est_path, scale_ratio, report_path);
    if (validate->parsed())
      return cmd_validate(report_path, corrupt_gradient, val_seed->empty() ? 0 : seed);
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
  return kExitUserError;
}
