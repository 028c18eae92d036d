#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mbfusion/model.hpp"
#include "mbfusion/rng.hpp"

namespace mbfusion {

struct SamplerConfig {
  int n_mc = 500;  // kept iterations
  int n_bi = 500;  // burn-in iterations
  int n_leap_min = 50;
  int n_leap_max = 55;
  double eps0 = 0.0;  // <= 0 selects 0.01 / sqrt(dim)
  int window = 50;    // acceptance-rate window N_W
  double alpha_d = 0.3;
  double alpha_u = 0.9;
  double beta_grow = 1.1;
  double beta_shrink = 0.9;
  std::uint64_t seed = 0;
  double adapt_decay = 0.01;
  /// Swap the stepsize adaptation factors: grow on low acceptance and
  /// shrink on high, instead of the default (grow on high, shrink on low).
  bool paper_literal_adapt = false;
  /// Store every k-th kept u sample (0 = none). Storage only; the MMSE
  /// average always uses every kept sample.
  int store_every = 0;

  void validate() const;
  double initial_epsilon(int dim) const;
};

struct ChainOutput {
  BipVector mmse_u;  // average of kept u samples
  BipVector mmse_x;  // backprojected (+ mean lift) estimate
  std::vector<double> var_u;  // per-coordinate variance of kept u samples
  std::vector<std::vector<double>> noise_mmse;   // [sensor][band]
  std::vector<std::vector<double>> noise_ci_lo;  // 2.5% quantile
  std::vector<std::vector<double>> noise_ci_hi;  // 97.5% quantile
  std::vector<double> accept_prob_trace;  // min(1, exp(-dH)) per iteration
  std::vector<std::uint8_t> accepted_trace;
  std::vector<double> energy_trace;    // U(u) at the end of each iteration
  std::vector<double> epsilon_trace;
  std::vector<BipVector> stored_samples;
  int n_kept = 0;
};

// ---- elementary distribution samplers ----

std::vector<double> sample_std_gaussian_vec(int dim, RandomEngine& rng);

/// Draw from IG(shape, rate) [density ~ x^-(a+1) exp(-b/x)]. A zero rate
/// returns `zero_rate_floor` (degenerate conditional on noiseless data).
double sample_inverse_gamma(double shape, double rate, RandomEngine& rng,
                            double zero_rate_floor = 1e-30);

/// Draw from IW(scale, dof) via the Bartlett construction; scale SPD,
/// dof > dim - 1. Mean is scale / (dof - dim - 1) when that is positive.
linalg::Matrix sample_inverse_wishart(const linalg::Matrix& scale, double dof, RandomEngine& rng);

// ---- HMC building blocks (generic over the target) ----

using GradFn = std::function<BipVector(const BipVector&)>;
using PotentialFn = std::function<double(const BipVector&)>;

struct LeapfrogResult {
  BipVector u;
  std::vector<double> momentum;
  bool finite = true;
};

/// Symplectic leapfrog: half-step momentum, n_steps full position steps with
/// merged momentum updates, final half-step.
LeapfrogResult leapfrog(const GradFn& grad, const BipVector& u0,
                        const std::vector<double>& momentum0, double eps, int n_steps);

struct HmcResult {
  bool accepted = false;
  double delta_h = 0.0;
  double accept_prob = 0.0;
  int n_leap = 0;
  double final_potential = 0.0;  // U of the retained state
};

/// One HMC update of u in place: momentum ~ N(0, I), N_L ~ U[min, max],
/// Metropolis correction exp(H_old - H_new). Non-finite proposals reject.
HmcResult hmc_move(const PotentialFn& potential, const GradFn& grad, BipVector& u, double eps,
                   int n_leap_min, int n_leap_max, RandomEngine& rng);

/// Stepsize update given the windowed acceptance rate. Dead band inside
/// (alpha_d, alpha_u); multiplicative during burn-in, exponentially damped
/// toward no-op afterwards.
double adapt_stepsize(double eps, double windowed_rate, std::int64_t t, const SamplerConfig& cfg);

/// Empirical quantile with linear interpolation (sorted copy), p in [0,1].
double empirical_quantile(std::vector<double> values, double p);

// ---- the hybrid Gibbs sampler ----

/// Per iteration: sigma_u from its inverse-Wishart conditional (unless
/// fixed), u by HMC, each noise variance from its inverse-gamma conditional
/// (unless fixed). Checkpoints capture the complete chain state; resuming
/// reproduces the uninterrupted chain bit-exactly.
class GibbsSampler {
 public:
  GibbsSampler(const Posterior& posterior, SamplerConfig cfg);

  /// Run until done, or until `stop_after` total iterations when positive.
  /// Writes a checkpoint every `checkpoint_every` iterations (and at a
  /// `stop_after` pause) when a path is given. Returns true when the chain
  /// has completed all n_bi + n_mc iterations.
  bool run(std::int64_t stop_after = 0, const std::string& checkpoint_path = "",
           int checkpoint_every = 0);

  ChainOutput output() const;  // requires a completed chain

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

  std::int64_t iteration() const { return state_.iteration; }
  std::int64_t total_iterations() const { return cfg_.n_bi + cfg_.n_mc; }
  const ChainState& state() const { return state_; }

 private:
  void iterate();

  const Posterior* post_;
  SamplerConfig cfg_;
  ChainState state_;
  RandomEngine rng_;
  SigmaCache sigma_cache_;
  bool sigma_cache_valid_ = false;

  // accumulators over kept samples
  std::vector<double> sum_u_, sum_u_sq_;
  std::vector<std::vector<std::vector<double>>> s2_samples_;  // [sensor][band][kept]
  std::vector<double> accept_prob_trace_, energy_trace_, epsilon_trace_;
  std::vector<std::uint8_t> accepted_trace_;
  std::vector<BipVector> stored_samples_;
  int kept_ = 0;
};

ChainOutput run_gibbs(const Posterior& posterior, const SamplerConfig& cfg);
ChainOutput run_gibbs(const HierModel& model, const SamplerConfig& cfg,
                      std::vector<BipVector> observations);

}  // namespace mbfusion
