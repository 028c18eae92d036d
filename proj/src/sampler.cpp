#include "mbfusion/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "mbfusion/kernels.hpp"
#include "mbfusion/version.hpp"

namespace mbfusion {

void SamplerConfig::validate() const {
  if (n_mc < 1 || n_bi < 0) throw ParamError("SamplerConfig: need n_mc >= 1, n_bi >= 0");
  if (n_leap_min < 1 || n_leap_min > n_leap_max)
    throw ParamError("SamplerConfig: need 1 <= n_leap_min <= n_leap_max");
  if (window < 1) throw ParamError("SamplerConfig: window must be positive");
  if (!(alpha_d < alpha_u) || alpha_d <= 0.0 || alpha_u >= 1.0)
    throw ParamError("SamplerConfig: need 0 < alpha_d < alpha_u < 1");
  if (!(beta_shrink < 1.0 && 1.0 < beta_grow))
    throw ParamError("SamplerConfig: need beta_shrink < 1 < beta_grow");
  if (!(adapt_decay > 0.0)) throw ParamError("SamplerConfig: adapt_decay must be positive");
  if (store_every < 0) throw ParamError("SamplerConfig: store_every must be >= 0");
}

double SamplerConfig::initial_epsilon(int dim) const {
  if (eps0 > 0.0) return eps0;
  return 0.01 / std::sqrt(static_cast<double>(dim));
}

std::vector<double> sample_std_gaussian_vec(int dim, RandomEngine& rng) {
  if (dim < 1) throw ParamError("sample_std_gaussian_vec: dim must be positive");
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

double sample_inverse_gamma(double shape, double rate, RandomEngine& rng,
                            double zero_rate_floor) {
  if (!(shape > 0.0)) throw ParamError("sample_inverse_gamma: shape must be positive");
  if (rate < 0.0) throw ParamError("sample_inverse_gamma: rate must be non-negative");
  if (rate == 0.0) return zero_rate_floor;
  return rate / rng.gamma(shape);
}

linalg::Matrix sample_inverse_wishart(const linalg::Matrix& scale, double dof,
                                      RandomEngine& rng) {
  const int n = scale.rows;
  if (!scale.square()) throw ShapeError("sample_inverse_wishart: scale not square");
  if (!linalg::is_symmetric(scale, 1e-8 * (1.0 + linalg::frobenius_norm(scale))))
    throw ParamError("sample_inverse_wishart: scale not symmetric");
  if (!(dof > n - 1)) throw ParamError("sample_inverse_wishart: dof must exceed dim - 1");
  linalg::Matrix lower;
  if (!linalg::cholesky(scale, lower))
    throw ParamError("sample_inverse_wishart: scale not positive definite");

  // Bartlett factor A (lower): off-diagonals N(0,1), diagonal sqrt(chi^2).
  linalg::Matrix bart(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) bart(i, j) = rng.normal();
    bart(i, i) = std::sqrt(rng.chi_squared(dof - i));
  }

  // If Sigma^{-1} = L^{-T} A A^T L^{-1} ~ W(scale^{-1}, dof), then
  // Sigma = X^T X with X = A^{-1} L^T, one forward substitution per column.
  linalg::Matrix x(n, n);
  std::vector<double> col(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = lower(j, i);  // column j of L^T
    linalg::solve_lower(bart, col);
    for (int i = 0; i < n; ++i) x(i, j) = col[i];
  }
  linalg::Matrix sigma(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += x(k, i) * x(k, j);
      sigma(i, j) = s;
      sigma(j, i) = s;
    }
  return sigma;
}

LeapfrogResult leapfrog(const GradFn& grad, const BipVector& u0,
                        const std::vector<double>& momentum0, double eps, int n_steps) {
  if (!(eps > 0.0)) throw ParamError("leapfrog: eps must be positive");
  if (n_steps < 1) throw ParamError("leapfrog: n_steps must be >= 1");
  LeapfrogResult r;
  r.u = u0;
  r.momentum = momentum0;
  const std::size_t n = r.u.size();

  auto finite = [](const double* v, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i)
      if (!std::isfinite(v[i])) return false;
    return true;
  };

  BipVector g = grad(r.u);
  kernels::axpy(-0.5 * eps, g.data.data(), r.momentum.data(), n);
  for (int s = 0; s < n_steps; ++s) {
    kernels::axpy(eps, r.momentum.data(), r.u.data.data(), n);
    if (!finite(r.u.data.data(), n)) {
      r.finite = false;
      return r;
    }
    g = grad(r.u);
    const double mscale = (s + 1 == n_steps) ? 0.5 * eps : eps;
    kernels::axpy(-mscale, g.data.data(), r.momentum.data(), n);
  }
  r.finite = finite(r.momentum.data(), n) && finite(r.u.data.data(), n);
  return r;
}

HmcResult hmc_move(const PotentialFn& potential, const GradFn& grad, BipVector& u, double eps,
                   int n_leap_min, int n_leap_max, RandomEngine& rng) {
  const int dim = static_cast<int>(u.size());
  const std::vector<double> m0 = sample_std_gaussian_vec(dim, rng);
  const int n_leap = static_cast<int>(rng.uniform_int(n_leap_min, n_leap_max));

  const double u_pot_old = potential(u);
  const double h_old = u_pot_old + 0.5 * kernels::sumsq(m0.data(), m0.size());

  const LeapfrogResult prop = leapfrog(grad, u, m0, eps, n_leap);

  HmcResult res;
  res.n_leap = n_leap;
  double u_pot_new = 0.0;
  double h_new = std::numeric_limits<double>::infinity();
  if (prop.finite) {
    u_pot_new = potential(prop.u);
    h_new = u_pot_new + 0.5 * kernels::sumsq(prop.momentum.data(), prop.momentum.size());
    if (!std::isfinite(h_new)) h_new = std::numeric_limits<double>::infinity();
  }
  res.delta_h = h_new - h_old;
  res.accept_prob = std::isfinite(res.delta_h) ? std::min(1.0, std::exp(-res.delta_h))
                                               : (res.delta_h < 0 ? 1.0 : 0.0);

  const double w = rng.uniform01_open_low();
  if (std::log(w) < -res.delta_h) {
    u = prop.u;
    res.accepted = true;
    res.final_potential = u_pot_new;
  } else {
    res.accepted = false;
    res.final_potential = u_pot_old;
  }
  return res;
}

double adapt_stepsize(double eps, double windowed_rate, std::int64_t t,
                      const SamplerConfig& cfg) {
  // Default pairing: grow the step on high acceptance, shrink on low.
  // paper_literal_adapt swaps the factors.
  const double on_high = cfg.paper_literal_adapt ? cfg.beta_shrink : cfg.beta_grow;
  const double on_low = cfg.paper_literal_adapt ? cfg.beta_grow : cfg.beta_shrink;

  double beta = 1.0;
  if (windowed_rate > cfg.alpha_u)
    beta = on_high;
  else if (windowed_rate < cfg.alpha_d)
    beta = on_low;
  if (beta == 1.0) return eps;

  if (t <= cfg.n_bi) return beta * eps;
  const double damp = std::exp(-cfg.adapt_decay * static_cast<double>(t - cfg.n_bi));
  return (1.0 - (1.0 - beta) * damp) * eps;
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ParamError("empirical_quantile: empty sample");
  if (p < 0.0 || p > 1.0) throw ParamError("empirical_quantile: p outside [0,1]");
  std::sort(values.begin(), values.end());
  const double idx = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  if (lo + 1 >= values.size()) return values.back();
  const double f = idx - static_cast<double>(lo);
  return values[lo] * (1.0 - f) + values[lo + 1] * f;
}

GibbsSampler::GibbsSampler(const Posterior& posterior, SamplerConfig cfg)
    : post_(&posterior), cfg_(cfg), rng_(0) {
  cfg_.validate();
  rng_ = RandomEngine::stream(cfg_.seed, 5);

  const HierModel& m = post_->model();
  state_.u = m.prior_mean_u;
  state_.epsilon = cfg_.initial_epsilon(post_->dim());
  state_.accept_window.assign(cfg_.window, 0);
  state_.window_pos = 0;
  state_.window_full = false;
  state_.iteration = 0;

  // Noise variances: sensor values when provided (and required in fixed
  // mode), otherwise the conditional mean at the starting image.
  state_.noise_vars.resize(m.sensors.size());
  for (std::size_t p = 0; p < m.sensors.size(); ++p) {
    const std::vector<double>& sv = m.sensors[p].noise_variances;
    const bool have = std::all_of(sv.begin(), sv.end(), [](double v) { return v > 0.0; });
    if (have) {
      state_.noise_vars[p] = sv;
    } else {
      if (m.noise_mode == NoiseMode::fixed)
        throw ParamError("GibbsSampler: fixed noise mode needs positive sensor variances");
      const auto params = post_->conditional_noise_var_params_all(state_.u, static_cast<int>(p));
      std::vector<double> init(params.size());
      for (std::size_t k = 0; k < params.size(); ++k) {
        const auto [a, b] = params[k];
        init[k] = (a > 1.0 && b > 0.0) ? b / (a - 1.0) : post_->variance_floor(static_cast<int>(p));
      }
      state_.noise_vars[p] = std::move(init);
    }
  }

  if (m.sigma_mode == SigmaMode::fixed) {
    state_.sigma_u = m.fixed_sigma_u;
    sigma_cache_ = SigmaCache::build(state_.sigma_u);
    sigma_cache_valid_ = true;
  } else {
    state_.sigma_u = linalg::Matrix::identity(post_->reduced_dim());
  }

  sum_u_.assign(post_->dim(), 0.0);
  sum_u_sq_.assign(post_->dim(), 0.0);
  s2_samples_.resize(m.sensors.size());
  for (std::size_t p = 0; p < m.sensors.size(); ++p)
    s2_samples_[p].resize(m.sensors[p].out_bands());
}

void GibbsSampler::iterate() {
  const HierModel& m = post_->model();
  state_.iteration += 1;
  const std::int64_t t = state_.iteration;

  if (m.sigma_mode == SigmaMode::sample) {
    auto [scale, dof] = post_->conditional_sigma_u_params(state_.u);
    state_.sigma_u = sample_inverse_wishart(scale, dof, rng_);
    sigma_cache_ = SigmaCache::build(state_.sigma_u);
    sigma_cache_valid_ = true;
  } else if (!sigma_cache_valid_) {
    sigma_cache_ = SigmaCache::build(state_.sigma_u);
    sigma_cache_valid_ = true;
  }

  const auto potential = [&](const BipVector& u) {
    return post_->potential_energy(u, state_.noise_vars, sigma_cache_);
  };
  const auto grad = [&](const BipVector& u) {
    return post_->grad_potential(u, state_.noise_vars, sigma_cache_);
  };
  const HmcResult hmc = hmc_move(potential, grad, state_.u, state_.epsilon, cfg_.n_leap_min,
                                 cfg_.n_leap_max, rng_);

  state_.push_accept(hmc.accepted, cfg_.window);
  if (state_.window_full)
    state_.epsilon = adapt_stepsize(state_.epsilon, state_.windowed_rate(), t, cfg_);

  if (m.noise_mode == NoiseMode::sample) {
    for (std::size_t p = 0; p < m.sensors.size(); ++p) {
      const auto params = post_->conditional_noise_var_params_all(state_.u, static_cast<int>(p));
      for (std::size_t k = 0; k < params.size(); ++k)
        state_.noise_vars[p][k] = sample_inverse_gamma(params[k].first, params[k].second, rng_,
                                                       post_->variance_floor(static_cast<int>(p)));
    }
  }

  accept_prob_trace_.push_back(hmc.accept_prob);
  accepted_trace_.push_back(hmc.accepted ? 1 : 0);
  energy_trace_.push_back(hmc.final_potential);
  epsilon_trace_.push_back(state_.epsilon);

  if (t > cfg_.n_bi) {
    kept_ += 1;
    kernels::axpy(1.0, state_.u.data.data(), sum_u_.data(), state_.u.size());
    for (std::size_t i = 0; i < state_.u.size(); ++i)
      sum_u_sq_[i] += state_.u.data[i] * state_.u.data[i];
    for (std::size_t p = 0; p < state_.noise_vars.size(); ++p)
      for (std::size_t k = 0; k < state_.noise_vars[p].size(); ++k)
        s2_samples_[p][k].push_back(state_.noise_vars[p][k]);
    if (cfg_.store_every > 0 && (kept_ - 1) % cfg_.store_every == 0)
      stored_samples_.push_back(state_.u);
  }
}

bool GibbsSampler::run(std::int64_t stop_after, const std::string& checkpoint_path,
                       int checkpoint_every) {
  const std::int64_t total = total_iterations();
  while (state_.iteration < total) {
    if (stop_after > 0 && state_.iteration >= stop_after) break;
    iterate();
    if (!checkpoint_path.empty() && checkpoint_every > 0 &&
        state_.iteration % checkpoint_every == 0)
      save_checkpoint(checkpoint_path);
  }
  const bool done = state_.iteration >= total;
  if (!checkpoint_path.empty() && !done) save_checkpoint(checkpoint_path);
  return done;
}

ChainOutput GibbsSampler::output() const {
  if (state_.iteration < total_iterations())
    throw NumericalError("GibbsSampler::output: chain not finished");
  ChainOutput out;
  out.n_kept = kept_;
  const double inv = 1.0 / static_cast<double>(kept_);

  out.mmse_u = BipVector(post_->n_pixels(), post_->reduced_dim());
  for (std::size_t i = 0; i < sum_u_.size(); ++i) out.mmse_u.data[i] = sum_u_[i] * inv;
  out.mmse_x = post_->reconstruct_full(out.mmse_u);

  out.var_u.resize(sum_u_.size());
  for (std::size_t i = 0; i < sum_u_.size(); ++i) {
    const double mean = sum_u_[i] * inv;
    out.var_u[i] = std::max(0.0, sum_u_sq_[i] * inv - mean * mean);
  }

  out.noise_mmse.resize(s2_samples_.size());
  out.noise_ci_lo.resize(s2_samples_.size());
  out.noise_ci_hi.resize(s2_samples_.size());
  for (std::size_t p = 0; p < s2_samples_.size(); ++p) {
    const std::size_t nb = s2_samples_[p].size();
    out.noise_mmse[p].resize(nb);
    out.noise_ci_lo[p].resize(nb);
    out.noise_ci_hi[p].resize(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      const std::vector<double>& s = s2_samples_[p][k];
      double mean = 0.0;
      for (double v : s) mean += v;
      out.noise_mmse[p][k] = s.empty() ? 0.0 : mean / s.size();
      out.noise_ci_lo[p][k] = s.empty() ? 0.0 : empirical_quantile(s, 0.025);
      out.noise_ci_hi[p][k] = s.empty() ? 0.0 : empirical_quantile(s, 0.975);
    }
  }

  out.accept_prob_trace = accept_prob_trace_;
  out.accepted_trace = accepted_trace_;
  out.energy_trace = energy_trace_;
  out.epsilon_trace = epsilon_trace_;
  out.stored_samples = stored_samples_;
  return out;
}

// ---- checkpoint serialization ----

namespace {

constexpr char kMagic[8] = {'M', 'B', 'F', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw NumericalError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

double get_f64(std::istream& is) {
  const std::uint64_t bits = get_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void put_vec(std::ostream& os, const std::vector<double>& v) {
  put_u64(os, v.size());
  for (double x : v) put_f64(os, x);
}

std::vector<double> get_vec(std::istream& is) {
  const std::uint64_t n = get_u64(is);
  std::vector<double> v(n);
  for (auto& x : v) x = get_f64(is);
  return v;
}

void put_str(std::ostream& os, const std::string& s) {
  put_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& is) {
  const std::uint64_t n = get_u64(is);
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw NumericalError("checkpoint: truncated string");
  return s;
}

}  // namespace

void GibbsSampler::save_checkpoint(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ParamError("save_checkpoint: cannot open " + path);
  os.write(kMagic, 8);
  put_u64(os, 1);  // version

  // Compatibility fingerprint: sampler config + problem dimensions + kernel
  // backend. Resuming with anything different is refused.
  put_u64(os, static_cast<std::uint64_t>(cfg_.n_mc));
  put_u64(os, static_cast<std::uint64_t>(cfg_.n_bi));
  put_u64(os, static_cast<std::uint64_t>(cfg_.n_leap_min));
  put_u64(os, static_cast<std::uint64_t>(cfg_.n_leap_max));
  put_f64(os, cfg_.eps0);
  put_u64(os, static_cast<std::uint64_t>(cfg_.window));
  put_f64(os, cfg_.alpha_d);
  put_f64(os, cfg_.alpha_u);
  put_f64(os, cfg_.beta_grow);
  put_f64(os, cfg_.beta_shrink);
  put_u64(os, cfg_.seed);
  put_f64(os, cfg_.adapt_decay);
  put_u64(os, cfg_.paper_literal_adapt ? 1 : 0);
  put_u64(os, static_cast<std::uint64_t>(cfg_.store_every));
  put_u64(os, static_cast<std::uint64_t>(post_->dim()));
  put_u64(os, static_cast<std::uint64_t>(post_->n_pixels()));
  put_u64(os, static_cast<std::uint64_t>(post_->model().sensors.size()));
  put_str(os, kernels::backend_name());
  put_str(os, kVersion);

  put_u64(os, static_cast<std::uint64_t>(state_.iteration));
  put_vec(os, state_.u.data);
  put_vec(os, state_.sigma_u.a);
  put_u64(os, state_.noise_vars.size());
  for (const auto& v : state_.noise_vars) put_vec(os, v);
  put_f64(os, state_.epsilon);
  put_u64(os, state_.accept_window.size());
  for (auto b : state_.accept_window) os.put(static_cast<char>(b));
  put_u64(os, static_cast<std::uint64_t>(state_.window_pos));
  put_u64(os, state_.window_full ? 1 : 0);

  std::ostringstream rng_text;
  rng_.save(rng_text);
  put_str(os, rng_text.str());

  put_u64(os, static_cast<std::uint64_t>(kept_));
  put_vec(os, sum_u_);
  put_vec(os, sum_u_sq_);
  put_u64(os, s2_samples_.size());
  for (const auto& sensor : s2_samples_) {
    put_u64(os, sensor.size());
    for (const auto& band : sensor) put_vec(os, band);
  }
  put_vec(os, accept_prob_trace_);
  put_vec(os, energy_trace_);
  put_vec(os, epsilon_trace_);
  put_u64(os, accepted_trace_.size());
  for (auto b : accepted_trace_) os.put(static_cast<char>(b));
  put_u64(os, stored_samples_.size());
  for (const auto& s : stored_samples_) put_vec(os, s.data);
  if (!os) throw NumericalError("save_checkpoint: write failed for " + path);
}

void GibbsSampler::load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParamError("load_checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw ParamError("load_checkpoint: not a checkpoint file");
  if (get_u64(is) != 1) throw ParamError("load_checkpoint: unsupported version");

  auto expect_u64 = [&](std::uint64_t want, const char* what) {
    if (get_u64(is) != want)
      throw ParamError(std::string("load_checkpoint: config mismatch in ") + what);
  };
  auto expect_f64 = [&](double want, const char* what) {
    if (get_f64(is) != want)
      throw ParamError(std::string("load_checkpoint: config mismatch in ") + what);
  };
  expect_u64(static_cast<std::uint64_t>(cfg_.n_mc), "n_mc");
  expect_u64(static_cast<std::uint64_t>(cfg_.n_bi), "n_bi");
  expect_u64(static_cast<std::uint64_t>(cfg_.n_leap_min), "n_leap_min");
  expect_u64(static_cast<std::uint64_t>(cfg_.n_leap_max), "n_leap_max");
  expect_f64(cfg_.eps0, "eps0");
  expect_u64(static_cast<std::uint64_t>(cfg_.window), "window");
  expect_f64(cfg_.alpha_d, "alpha_d");
  expect_f64(cfg_.alpha_u, "alpha_u");
  expect_f64(cfg_.beta_grow, "beta_grow");
  expect_f64(cfg_.beta_shrink, "beta_shrink");
  expect_u64(cfg_.seed, "seed");
  expect_f64(cfg_.adapt_decay, "adapt_decay");
  expect_u64(cfg_.paper_literal_adapt ? 1 : 0, "paper_literal_adapt");
  expect_u64(static_cast<std::uint64_t>(cfg_.store_every), "store_every");
  expect_u64(static_cast<std::uint64_t>(post_->dim()), "dim");
  expect_u64(static_cast<std::uint64_t>(post_->n_pixels()), "n_pixels");
  expect_u64(post_->model().sensors.size(), "sensor count");
  const std::string backend = get_str(is);
  if (backend != kernels::backend_name())
    throw ParamError("load_checkpoint: kernel backend mismatch (checkpoint: " + backend +
                     ", current: " + kernels::backend_name() + ")");
  get_str(is);  // writer version, informational

  state_.iteration = static_cast<std::int64_t>(get_u64(is));
  state_.u.data = get_vec(is);
  state_.u.n_pixels = post_->n_pixels();
  state_.u.n_bands = post_->reduced_dim();
  state_.u.validate();
  const std::vector<double> sig = get_vec(is);
  const int nb = post_->reduced_dim();
  if (static_cast<int>(sig.size()) != nb * nb)
    throw ParamError("load_checkpoint: sigma_u size mismatch");
  state_.sigma_u = linalg::Matrix(nb, nb);
  state_.sigma_u.a = sig;
  const std::uint64_t nsens = get_u64(is);
  state_.noise_vars.assign(nsens, {});
  for (auto& v : state_.noise_vars) v = get_vec(is);
  state_.epsilon = get_f64(is);
  const std::uint64_t wlen = get_u64(is);
  state_.accept_window.assign(wlen, 0);
  for (auto& b : state_.accept_window) b = static_cast<std::uint8_t>(is.get());
  state_.window_pos = static_cast<int>(get_u64(is));
  state_.window_full = get_u64(is) != 0;

  std::istringstream rng_text(get_str(is));
  rng_.load(rng_text);

  kept_ = static_cast<int>(get_u64(is));
  sum_u_ = get_vec(is);
  sum_u_sq_ = get_vec(is);
  const std::uint64_t ns = get_u64(is);
  s2_samples_.assign(ns, {});
  for (auto& sensor : s2_samples_) {
    sensor.assign(get_u64(is), {});
    for (auto& band : sensor) band = get_vec(is);
  }
  accept_prob_trace_ = get_vec(is);
  energy_trace_ = get_vec(is);
  epsilon_trace_ = get_vec(is);
  const std::uint64_t at = get_u64(is);
  accepted_trace_.assign(at, 0);
  for (auto& b : accepted_trace_) b = static_cast<std::uint8_t>(is.get());
  const std::uint64_t nstored = get_u64(is);
  stored_samples_.assign(nstored, BipVector());
  for (auto& s : stored_samples_) {
    s.n_pixels = post_->n_pixels();
    s.n_bands = post_->reduced_dim();
    s.data = get_vec(is);
    s.validate();
  }
  sigma_cache_ = SigmaCache::build(state_.sigma_u);
  sigma_cache_valid_ = true;
  if (!is) throw NumericalError("load_checkpoint: truncated file");
}

ChainOutput run_gibbs(const Posterior& posterior, const SamplerConfig& cfg) {
  GibbsSampler sampler(posterior, cfg);
  sampler.run();
  return sampler.output();
}

ChainOutput run_gibbs(const HierModel& model, const SamplerConfig& cfg,
                      std::vector<BipVector> observations) {
  Posterior posterior(model, std::move(observations));
  return run_gibbs(posterior, cfg);
}

}  // namespace mbfusion
