#include "mbfusion/model.hpp"

#include <cmath>
#include <numbers>

#include "mbfusion/kernels.hpp"

namespace mbfusion {

HyperParams HyperParams::noninformative(int dim) {
  HyperParams h;
  h.psi = linalg::Matrix::identity(dim);
  h.eta = dim + 3;
  return h;
}

void HyperParams::validate(int dim) const {
  if (psi.rows != dim || psi.cols != dim) throw ShapeError("HyperParams: psi dimension mismatch");
  if (!linalg::is_symmetric(psi, 1e-10)) throw ParamError("HyperParams: psi not symmetric");
  linalg::Matrix lower;
  if (!linalg::cholesky(psi, lower)) throw ParamError("HyperParams: psi not positive definite");
  if (!(eta > dim - 1)) throw ParamError("HyperParams: eta must exceed dim - 1");
  if (!(nu > 0.0)) throw ParamError("HyperParams: nu must be positive");
}

void HierModel::validate() const {
  if (full_rows < 1 || full_cols < 1) throw ShapeError("HierModel: bad grid");
  basis.check_orthonormal();
  if (!mean_spectrum.empty() && static_cast<int>(mean_spectrum.size()) != basis.full_dim)
    throw ShapeError("HierModel: mean_spectrum length != basis full_dim");
  if (prior_mean_u.n_pixels != n_pixels() || prior_mean_u.n_bands != reduced_dim())
    throw ShapeError("HierModel: prior_mean_u dims mismatch");
  hyper.validate(reduced_dim());
  if (sensors.empty() && noise_mode == NoiseMode::sample)
    throw ParamError("HierModel: cannot sample noise variances without sensors");
  for (const SensorModel& s : sensors) {
    s.validate();
    if (s.in_rows != full_rows || s.in_cols != full_cols || s.in_bands != basis.full_dim)
      throw ShapeError("HierModel: sensor '" + s.name + "' input grid mismatch");
  }
  if (sigma_mode == SigmaMode::fixed) {
    if (fixed_sigma_u.rows != reduced_dim() || fixed_sigma_u.cols != reduced_dim())
      throw ShapeError("HierModel: fixed_sigma_u dimension mismatch");
  }
}

void ChainState::push_accept(bool accepted, int window_size) {
  if (static_cast<int>(accept_window.size()) != window_size) {
    accept_window.assign(window_size, 0);
    window_pos = 0;
    window_full = false;
  }
  accept_window[window_pos] = accepted ? 1 : 0;
  window_pos = (window_pos + 1) % window_size;
  if (window_pos == 0) window_full = true;
}

double ChainState::windowed_rate() const {
  if (accept_window.empty()) return 0.0;
  const int n = window_full ? static_cast<int>(accept_window.size()) : window_pos;
  if (n == 0) return 0.0;
  int acc = 0;
  for (int i = 0; i < n; ++i) acc += accept_window[i];
  return static_cast<double>(acc) / accept_window.size();
}

SigmaCache SigmaCache::build(const linalg::Matrix& sigma_u) {
  SigmaCache c;
  c.sigma = sigma_u;
  linalg::Matrix lower;
  if (!linalg::cholesky(sigma_u, lower))
    throw NumericalError("SigmaCache: sigma_u is not positive definite");
  c.logdet = linalg::logdet_from_cholesky(lower);
  c.inverse = linalg::spd_inverse(sigma_u);
  return c;
}

Posterior::Posterior(HierModel model, std::vector<BipVector> observations)
    : model_(std::move(model)), obs_(std::move(observations)) {
  model_.validate();
  if (obs_.size() != model_.sensors.size())
    throw ShapeError("Posterior: observation count != sensor count");

  fused_.reserve(model_.sensors.size());
  for (const SensorModel& s : model_.sensors) fused_.emplace_back(s, model_.basis);

  // Fold the affine subspace offset into the data once: the model is then
  // linear in u for every sensor.
  obs_adj_ = obs_;
  for (std::size_t p = 0; p < obs_.size(); ++p) {
    const SensorModel& s = model_.sensors[p];
    if (obs_[p].n_pixels != s.out_pixels() || obs_[p].n_bands != s.out_bands())
      throw ShapeError("Posterior: observation " + std::to_string(p) + " dims mismatch");
    if (!model_.mean_spectrum.empty()) {
      BipVector mean_img(s.in_rows * s.in_cols, s.in_bands);
      for (int i = 0; i < mean_img.n_pixels; ++i)
        std::copy(model_.mean_spectrum.begin(), model_.mean_spectrum.end(),
                  mean_img.pixel(i).begin());
      const BipVector fm = apply_forward(s, mean_img);
      kernels::axpy(-1.0, fm.data.data(), obs_adj_[p].data.data(), fm.size());
    }
  }

  floors_.resize(obs_.size());
  for (std::size_t p = 0; p < obs_.size(); ++p) {
    const double ms = kernels::sumsq(obs_[p].data.data(), obs_[p].size()) /
                      static_cast<double>(obs_[p].size());
    floors_[p] = std::max(1e-12 * ms, 1e-300);
  }
}

double Posterior::variance_floor(int sensor) const { return floors_.at(sensor); }

BipVector Posterior::residual(const BipVector& u, int p) const {
  BipVector r = fused_[p].forward(u);
  kernels::vsub(obs_adj_[p].data.data(), r.data.data(), r.data.data(), r.size());
  return r;
}

double Posterior::log_likelihood(const BipVector& u,
                                 const std::vector<std::vector<double>>& noise_vars) const {
  if (noise_vars.size() != obs_.size()) throw ShapeError("log_likelihood: noise_vars size");
  double ll = 0.0;
  for (std::size_t p = 0; p < obs_.size(); ++p) {
    const int nb = obs_[p].n_bands;
    const int npix = obs_[p].n_pixels;
    if (static_cast<int>(noise_vars[p].size()) != nb)
      throw ShapeError("log_likelihood: noise_vars band count");
    const BipVector r = residual(u, p);
    std::vector<double> ssq(nb);
    kernels::band_sumsq(r.data.data(), ssq.data(), npix, nb);
    for (int k = 0; k < nb; ++k) {
      const double s2 = noise_vars[p][k];
      if (!(s2 > 0.0)) throw ParamError("log_likelihood: non-positive noise variance");
      ll += -0.5 * npix * std::log(2.0 * std::numbers::pi * s2) - 0.5 * ssq[k] / s2;
    }
  }
  return ll;
}

double Posterior::potential_energy(const BipVector& u,
                                   const std::vector<std::vector<double>>& noise_vars,
                                   const SigmaCache& sigma) const {
  const int nb = reduced_dim();
  BipVector diff(u.n_pixels, nb);
  kernels::vsub(u.data.data(), model_.prior_mean_u.data.data(), diff.data.data(), u.size());
  BipVector tmp(u.n_pixels, nb);
  kernels::pixelwise_matvec(sigma.inverse.a.data(), nb, nb, diff.data.data(), tmp.data.data(),
                            u.n_pixels);
  const double quad = kernels::dot(diff.data.data(), tmp.data.data(), diff.size());
  return -log_likelihood(u, noise_vars) + 0.5 * quad;
}

BipVector Posterior::grad_potential(const BipVector& u,
                                    const std::vector<std::vector<double>>& noise_vars,
                                    const SigmaCache& sigma) const {
  const int nb = reduced_dim();
  BipVector diff(u.n_pixels, nb);
  kernels::vsub(u.data.data(), model_.prior_mean_u.data.data(), diff.data.data(), u.size());
  BipVector grad(u.n_pixels, nb);
  kernels::pixelwise_matvec(sigma.inverse.a.data(), nb, nb, diff.data.data(), grad.data.data(),
                            u.n_pixels);
  for (std::size_t p = 0; p < obs_.size(); ++p) {
    BipVector r = residual(u, p);
    std::vector<double> w(noise_vars[p].size());
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (!(noise_vars[p][k] > 0.0)) throw ParamError("grad_potential: bad noise variance");
      w[k] = 1.0 / noise_vars[p][k];
    }
    kernels::band_scale(r.data.data(), w.data(), r.n_pixels, r.n_bands);
    const BipVector back = fused_[p].adjoint(r);
    kernels::axpy(-1.0, back.data.data(), grad.data.data(), grad.size());
  }
  return grad;
}

std::pair<linalg::Matrix, double> Posterior::conditional_sigma_u_params(
    const BipVector& u) const {
  const int nb = reduced_dim();
  linalg::Matrix scale = model_.hyper.psi;
  std::vector<double> diff(nb);
  for (int i = 0; i < u.n_pixels; ++i) {
    kernels::vsub(u.pixel(i).data(), model_.prior_mean_u.pixel(i).data(), diff.data(), nb);
    for (int r = 0; r < nb; ++r)
      kernels::axpy(diff[r], diff.data(), &scale.a[static_cast<std::size_t>(r) * nb], nb);
  }
  return {std::move(scale), static_cast<double>(n_pixels()) + model_.hyper.eta};
}

std::vector<std::pair<double, double>> Posterior::conditional_noise_var_params_all(
    const BipVector& u, int sensor) const {
  const BipVector r = residual(u, sensor);
  const int nb = r.n_bands;
  std::vector<double> ssq(nb);
  kernels::band_sumsq(r.data.data(), ssq.data(), r.n_pixels, nb);
  double shape = 0.5 * r.n_pixels;
  std::vector<std::pair<double, double>> out(nb);
  for (int k = 0; k < nb; ++k) {
    double a = shape, b = 0.5 * ssq[k];
    if (model_.noise_prior == NoisePrior::fixed_ig) {
      a += 0.5 * model_.hyper.nu;
      b += 0.5 * model_.hyper.gamma;
    }
    out[k] = {a, b};
  }
  return out;
}

std::pair<double, double> Posterior::conditional_noise_var_params(const BipVector& u, int sensor,
                                                                  int band) const {
  return conditional_noise_var_params_all(u, sensor).at(band);
}

DenseGaussian Posterior::exact_conditional_gaussian(
    const std::vector<std::vector<double>>& noise_vars, const SigmaCache& sigma, int cap) const {
  const int n = dim();
  if (n > cap)
    throw ParamError("exact_conditional_gaussian: dimension " + std::to_string(n) +
                     " exceeds the oracle cap " + std::to_string(cap));
  const int nb = reduced_dim();

  // Precision = blockdiag(Sigma_u^{-1}) + sum_p B_p^T Lambda_p^{-1} B_p,
  // assembled column by column through the fused operators.
  linalg::Matrix precision(n, n);
  for (int i = 0; i < n_pixels(); ++i)
    for (int r = 0; r < nb; ++r)
      for (int c = 0; c < nb; ++c)
        precision(i * nb + r, i * nb + c) = sigma.inverse(r, c);

  BipVector unit(n_pixels(), nb);
  for (int j = 0; j < n; ++j) {
    std::fill(unit.data.begin(), unit.data.end(), 0.0);
    unit.data[j] = 1.0;
    for (std::size_t p = 0; p < obs_.size(); ++p) {
      BipVector fwd = fused_[p].forward(unit);
      std::vector<double> w(noise_vars[p].size());
      for (std::size_t k = 0; k < w.size(); ++k) w[k] = 1.0 / noise_vars[p][k];
      kernels::band_scale(fwd.data.data(), w.data(), fwd.n_pixels, fwd.n_bands);
      const BipVector back = fused_[p].adjoint(fwd);
      for (int i = 0; i < n; ++i) precision(i, j) += back.data[i];
    }
  }
  // Symmetrize round-off before factorizing.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (precision(i, j) + precision(j, i));
      precision(i, j) = v;
      precision(j, i) = v;
    }

  std::vector<double> rhs(n, 0.0);
  {
    BipVector prior_term(n_pixels(), nb);
    kernels::pixelwise_matvec(sigma.inverse.a.data(), nb, nb, model_.prior_mean_u.data.data(),
                              prior_term.data.data(), n_pixels());
    for (int i = 0; i < n; ++i) rhs[i] = prior_term.data[i];
    for (std::size_t p = 0; p < obs_.size(); ++p) {
      BipVector z = obs_adj_[p];
      std::vector<double> w(noise_vars[p].size());
      for (std::size_t k = 0; k < w.size(); ++k) w[k] = 1.0 / noise_vars[p][k];
      kernels::band_scale(z.data.data(), w.data(), z.n_pixels, z.n_bands);
      const BipVector back = fused_[p].adjoint(z);
      kernels::axpy(1.0, back.data.data(), rhs.data(), back.size());
    }
  }

  DenseGaussian out;
  out.covariance = linalg::spd_inverse(precision);
  out.mean.assign(n, 0.0);
  linalg::matvec(out.covariance, rhs, out.mean);
  return out;
}

BipVector Posterior::reconstruct_full(const BipVector& u) const {
  BipVector x = backproject(u, model_.basis);
  if (!model_.mean_spectrum.empty()) {
    for (int i = 0; i < x.n_pixels; ++i)
      kernels::axpy(1.0, model_.mean_spectrum.data(), x.pixel(i).data(), x.n_bands);
  }
  return x;
}

}  // namespace mbfusion
