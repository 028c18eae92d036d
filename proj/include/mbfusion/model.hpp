#pragma once

#include <cstdint>
#include <vector>

#include "mbfusion/core.hpp"
#include "mbfusion/forward.hpp"
#include "mbfusion/linalg.hpp"

namespace mbfusion {

/// Hyper-hyperparameters of the inverse-Wishart prior on the shared pixel
/// covariance. nu/gamma parameterize the optional fixed inverse-gamma noise
/// prior; under the default (Jeffreys) noise conditional they are inert.
struct HyperParams {
  linalg::Matrix psi;  // symmetric PD, reduced_dim x reduced_dim
  double eta = 0.0;    // > reduced_dim - 1
  double nu = 3.0;
  double gamma = 1.0;

  /// psi = I, eta = dim + 3 (the non-informative choice).
  static HyperParams noninformative(int dim);

  void validate(int dim) const;
};

enum class NoiseMode { sample, fixed };
enum class SigmaMode { sample, fixed };
/// The noise-variance conditional: `jeffreys` is the gamma-marginalized form
/// IG(n/2, ||r_i||^2/2); `fixed_ig` keeps an explicit IG(nu/2, gamma/2)
/// prior on each variance instead.
enum class NoisePrior { jeffreys, fixed_ig };

/// The full hierarchical model minus the data: sensors, subspace, prior mean
/// of the projected image, hyperpriors and mode switches.
struct HierModel {
  std::vector<SensorModel> sensors;
  SubspaceBasis basis;
  std::vector<double> mean_spectrum;  // affine offset of the subspace (may be empty)
  BipVector prior_mean_u;             // full-res pixels, reduced bands
  HyperParams hyper;
  NoiseMode noise_mode = NoiseMode::sample;
  SigmaMode sigma_mode = SigmaMode::sample;
  linalg::Matrix fixed_sigma_u;  // required when sigma_mode == fixed
  NoisePrior noise_prior = NoisePrior::jeffreys;

  int full_rows = 0;
  int full_cols = 0;

  int reduced_dim() const { return basis.reduced_dim; }
  int n_pixels() const { return full_rows * full_cols; }

  void validate() const;
};

/// One Gibbs iterate.
struct ChainState {
  BipVector u;
  linalg::Matrix sigma_u;
  std::vector<std::vector<double>> noise_vars;  // [sensor][band]
  double epsilon = 0.0;
  std::vector<std::uint8_t> accept_window;  // ring buffer, oldest first once full
  int window_pos = 0;
  bool window_full = false;
  std::int64_t iteration = 0;

  void push_accept(bool accepted, int window_size);
  /// Windowed acceptance rate; only meaningful once window_full.
  double windowed_rate() const;
};

/// Cached factorization of the per-pixel prior covariance; rebuilt whenever
/// sigma_u is resampled, amortized over all leapfrog steps in the iteration.
struct SigmaCache {
  linalg::Matrix sigma;
  linalg::Matrix inverse;
  double logdet = 0.0;

  static SigmaCache build(const linalg::Matrix& sigma_u);
};

struct DenseGaussian {
  std::vector<double> mean;
  linalg::Matrix covariance;
};

/// HierModel bound to its observations, with the per-sensor fused operators
/// and mean-adjusted data precomputed. All evaluation entry points of the
/// sampler live here.
class Posterior {
 public:
  Posterior(HierModel model, std::vector<BipVector> observations);

  // The fused operators point into the owned sensor list.
  Posterior(const Posterior&) = delete;
  Posterior& operator=(const Posterior&) = delete;

  const HierModel& model() const { return model_; }
  const std::vector<BipVector>& observations() const { return obs_; }
  /// z_p - F_p(mean lift): the data seen by the linear-in-u model.
  const std::vector<BipVector>& adjusted_observations() const { return obs_adj_; }
  const FusedSensorOp& fused_op(int p) const { return fused_[p]; }

  int reduced_dim() const { return model_.reduced_dim(); }
  int n_pixels() const { return model_.n_pixels(); }
  /// Dimension of u.
  int dim() const { return n_pixels() * reduced_dim(); }

  /// Full Gaussian log-likelihood of all sensors, normalization included.
  double log_likelihood(const BipVector& u,
                        const std::vector<std::vector<double>>& noise_vars) const;

  /// U(u) = -log_likelihood + 1/2 sum_i (u_i - mu_i)^T Sigma_u^{-1} (u_i - mu_i)
  /// (prior normalization dropped; only differences feed the accept test).
  double potential_energy(const BipVector& u,
                          const std::vector<std::vector<double>>& noise_vars,
                          const SigmaCache& sigma) const;

  /// Analytic gradient of potential_energy in u.
  BipVector grad_potential(const BipVector& u,
                           const std::vector<std::vector<double>>& noise_vars,
                           const SigmaCache& sigma) const;

  /// Inverse-Wishart conditional for sigma_u: scale = Psi + scatter(u - mu),
  /// dof = n_pixels + eta.
  std::pair<linalg::Matrix, double> conditional_sigma_u_params(const BipVector& u) const;

  /// Inverse-gamma conditional for one noise variance:
  /// shape = out_pixels/2, rate = ||band-i residual||^2 / 2 (plus the fixed
  /// IG prior terms under NoisePrior::fixed_ig).
  std::pair<double, double> conditional_noise_var_params(const BipVector& u, int sensor,
                                                         int band) const;
  /// All bands of one sensor at once (one residual evaluation).
  std::vector<std::pair<double, double>> conditional_noise_var_params_all(const BipVector& u,
                                                                          int sensor) const;

  /// Dense conditional Gaussian of u given (sigma_u, s^2): test-scale oracle.
  /// Refuses when dim() exceeds `cap`.
  DenseGaussian exact_conditional_gaussian(const std::vector<std::vector<double>>& noise_vars,
                                           const SigmaCache& sigma, int cap = 4096) const;

  /// 1e-12 of the mean-square observation energy of sensor p; the variance
  /// floor used when a zero residual would give a degenerate conditional.
  double variance_floor(int sensor) const;

  /// V^T u + mean lift as a full-band vector.
  BipVector reconstruct_full(const BipVector& u) const;

 private:
  BipVector residual(const BipVector& u, int p) const;

  HierModel model_;
  std::vector<BipVector> obs_;
  std::vector<BipVector> obs_adj_;
  std::vector<FusedSensorOp> fused_;
  std::vector<double> floors_;
};

}  // namespace mbfusion
