#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mbfusion/kernels.hpp"
#include "mbfusion/model.hpp"
#include "mbfusion/validate.hpp"
#include "test_support.hpp"

using namespace mbfusion;
using test::random_bip;

namespace {

std::vector<std::vector<double>> noise_of(const HierModel& m) {
  std::vector<std::vector<double>> nv;
  for (const auto& s : m.sensors) nv.push_back(s.noise_variances);
  return nv;
}

// Dense B_p = F_p V^T assembled by probing the fused operator with unit
// vectors; the independent route against the matrix-free path.
linalg::Matrix dense_fused_matrix(const Posterior& post, int p) {
  const int n = post.dim();
  const auto& op = post.fused_op(p);
  BipVector unit(post.n_pixels(), post.reduced_dim());
  const int out = post.model().sensors[p].out_pixels() * post.model().sensors[p].out_bands();
  linalg::Matrix b(out, n);
  for (int j = 0; j < n; ++j) {
    std::fill(unit.data.begin(), unit.data.end(), 0.0);
    unit.data[j] = 1.0;
    const BipVector col = op.forward(unit);
    for (int i = 0; i < out; ++i) b(i, j) = col.data[i];
  }
  return b;
}

// Full multivariate-normal log pdf of all observations given u, via dense
// matrices (normalization included).
double dense_log_likelihood(const Posterior& post, const BipVector& u,
                            const std::vector<std::vector<double>>& nv) {
  double ll = 0.0;
  for (std::size_t p = 0; p < post.observations().size(); ++p) {
    const linalg::Matrix b = dense_fused_matrix(post, static_cast<int>(p));
    const BipVector& z = post.adjusted_observations()[p];
    const int nb = z.n_bands;
    std::vector<double> mean(b.rows);
    linalg::matvec(b, u.data, mean);
    for (int i = 0; i < b.rows; ++i) {
      const double s2 = nv[p][i % nb];
      const double r = z.data[i] - mean[i];
      ll += -0.5 * std::log(2.0 * std::numbers::pi * s2) - 0.5 * r * r / s2;
    }
  }
  return ll;
}

}  // namespace

TEST_CASE("log_likelihood: zero residual with unit variances is -(N/2) log 2pi") {
  RandomEngine rng(501);
  TinyInstance inst = make_tiny_instance(2, 2, 3, 2, 1, rng);
  // Rebuild the observation as the exact noiseless forward of some u.
  Posterior pre(inst.model, inst.observations);
  BipVector u = random_bip(4, 2, rng);
  inst.observations[0] = pre.fused_op(0).forward(u);
  inst.model.sensors[0].noise_variances.assign(inst.model.sensors[0].out_bands(), 1.0);
  inst.model.mean_spectrum.clear();  // keep the data exactly linear in u
  Posterior post(inst.model, inst.observations);

  const double n = static_cast<double>(inst.observations[0].size());
  const auto nv = noise_of(inst.model);
  CHECK(post.log_likelihood(u, nv) ==
        doctest::Approx(-0.5 * n * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));

  // doubling every variance on zero residual lowers the value by (N/2) log 2
  auto nv2 = nv;
  for (auto& v : nv2[0]) v *= 2.0;
  CHECK(post.log_likelihood(u, nv2) ==
        doctest::Approx(post.log_likelihood(u, nv) - 0.5 * n * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("log_likelihood matches the dense MVN oracle to 1e-9") {
  RandomEngine rng(502);
  TinyInstance inst = make_tiny_instance(2, 3, 4, 2, 2, rng);
  Posterior post(inst.model, inst.observations);
  const auto nv = noise_of(inst.model);
  for (int rep = 0; rep < 5; ++rep) {
    const BipVector u = random_bip(post.n_pixels(), post.reduced_dim(), rng);
    const double got = post.log_likelihood(u, nv);
    const double want = dense_log_likelihood(post, u, nv);
    CHECK(std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("log_likelihood is invariant under permuting the sensor list") {
  RandomEngine rng(503);
  TinyInstance inst = make_tiny_instance(2, 2, 4, 2, 2, rng);
  Posterior post(inst.model, inst.observations);

  HierModel swapped = inst.model;
  std::swap(swapped.sensors[0], swapped.sensors[1]);
  std::vector<BipVector> obs = {inst.observations[1], inst.observations[0]};
  Posterior post2(swapped, obs);

  const BipVector u = random_bip(post.n_pixels(), post.reduced_dim(), rng);
  auto nv = noise_of(inst.model);
  std::vector<std::vector<double>> nv2 = {nv[1], nv[0]};
  CHECK(post.log_likelihood(u, nv) == doctest::Approx(post2.log_likelihood(u, nv2)).epsilon(1e-12));
}

TEST_CASE("potential energy: prior term vanishes at the prior mean") {
  RandomEngine rng(504);
  TinyInstance inst = make_tiny_instance(2, 2, 3, 2, 1, rng);
  Posterior pre(inst.model, inst.observations);
  inst.observations[0] = pre.fused_op(0).forward(inst.model.prior_mean_u);
  inst.model.mean_spectrum.clear();
  Posterior post(inst.model, inst.observations);
  const SigmaCache cache = SigmaCache::build(inst.model.fixed_sigma_u);
  const auto nv = noise_of(inst.model);
  const double u_pot = post.potential_energy(inst.model.prior_mean_u, nv, cache);
  CHECK(u_pot == doctest::Approx(-post.log_likelihood(inst.model.prior_mean_u, nv)).epsilon(1e-12));
}

TEST_CASE("potential energy is a parabola along any line") {
  RandomEngine rng(505);
  TinyInstance inst = make_tiny_instance(3, 3, 4, 2, 2, rng);
  Posterior post(inst.model, inst.observations);
  const SigmaCache cache = SigmaCache::build(inst.model.fixed_sigma_u);
  const auto nv = noise_of(inst.model);

  const BipVector base = random_bip(post.n_pixels(), post.reduced_dim(), rng);
  const BipVector dir = random_bip(post.n_pixels(), post.reduced_dim(), rng);
  auto at = [&](double t) {
    BipVector u = base;
    kernels::axpy(t, dir.data.data(), u.data.data(), u.size());
    return post.potential_energy(u, nv, cache);
  };
  // Second differences of a quadratic are constant in t.
  const double d2a = at(-0.5) - 2.0 * at(0.0) + at(0.5);
  const double d2b = at(0.7) - 2.0 * at(1.2) + at(1.7);
  CHECK(std::abs(d2a - d2b) <= 1e-8 * std::max(1.0, std::abs(d2a)));
}

TEST_CASE("potential differences match the dense conditional Gaussian log density") {
  RandomEngine rng(506);
  TinyInstance inst = make_tiny_instance(2, 2, 4, 2, 1, rng);
  Posterior post(inst.model, inst.observations);
  const SigmaCache cache = SigmaCache::build(inst.model.fixed_sigma_u);
  const auto nv = noise_of(inst.model);
  const DenseGaussian g = post.exact_conditional_gaussian(nv, cache);

  const linalg::Matrix prec = linalg::spd_inverse(g.covariance);
  auto dense_logpdf_unnorm = [&](const BipVector& u) {
    std::vector<double> d(u.size());
    kernels::vsub(u.data.data(), g.mean.data(), d.data(), u.size());
    std::vector<double> pd(u.size());
    linalg::matvec(prec, d, pd);
    return -0.5 * kernels::dot(d.data(), pd.data(), d.size());
  };

  const BipVector a = random_bip(post.n_pixels(), post.reduced_dim(), rng);
  const BipVector b = random_bip(post.n_pixels(), post.reduced_dim(), rng);
  const double lhs = post.potential_energy(a, nv, cache) - post.potential_energy(b, nv, cache);
  const double rhs = -(dense_logpdf_unnorm(a) - dense_logpdf_unnorm(b));
  CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("gradient vanishes at the dense conditional mean") {
  RandomEngine rng(507);
  TinyInstance inst = make_tiny_instance(2, 2, 4, 3, 2, rng);
  Posterior post(inst.model, inst.observations);
  const SigmaCache cache = SigmaCache::build(inst.model.fixed_sigma_u);
  const auto nv = noise_of(inst.model);
  const DenseGaussian g = post.exact_conditional_gaussian(nv, cache);
  BipVector mean(post.n_pixels(), post.reduced_dim());
  mean.data = g.mean;
  const BipVector grad = post.grad_potential(mean, nv, cache);
  for (double v : grad.data) CHECK(std::abs(v) <= 1e-8);
}

TEST_CASE("gradient matches central finite differences on a 3x3, 4-band instance") {
  RandomEngine rng(508);
  TinyInstance inst = make_tiny_instance(3, 3, 4, 2, 2, rng);
  Posterior post(inst.model, inst.observations);
  const SigmaCache cache = SigmaCache::build(inst.model.fixed_sigma_u);
  const auto nv = noise_of(inst.model);

  const BipVector u = random_bip(post.n_pixels(), post.reduced_dim(), rng);
  const BipVector g = post.grad_potential(u, nv, cache);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(u.data[j]));
    BipVector up = u, dn = u;
    up.data[j] += h;
    dn.data[j] -= h;
    const double num =
        (post.potential_energy(up, nv, cache) - post.potential_energy(dn, nv, cache)) / (2 * h);
    CHECK(test::rel_err(g.data[j], num) <= 1e-6);
  }
}

TEST_CASE("prior-only gradient is Sigma_u^{-1}(u - mu) per pixel") {
  RandomEngine rng(509);
  HierModel m;
  m.full_rows = 2;
  m.full_cols = 3;
  m.basis = make_random_orthonormal_basis(4, 2, rng);
  m.prior_mean_u = random_bip(6, 2, rng);
  m.hyper = HyperParams::noninformative(2);
  m.sigma_mode = SigmaMode::fixed;
  m.noise_mode = NoiseMode::fixed;
  m.fixed_sigma_u = make_random_spd(2, rng);
  Posterior post(m, {});
  const SigmaCache cache = SigmaCache::build(m.fixed_sigma_u);

  const BipVector u = random_bip(6, 2, rng);
  const BipVector g = post.grad_potential(u, {}, cache);
  for (int i = 0; i < 6; ++i) {
    std::vector<double> diff(2), want(2);
    kernels::vsub(u.pixel(i).data(), m.prior_mean_u.pixel(i).data(), diff.data(), 2);
    linalg::matvec(cache.inverse, diff, want);
    CHECK(g.pixel(i)[0] == doctest::Approx(want[0]).epsilon(1e-12));
    CHECK(g.pixel(i)[1] == doctest::Approx(want[1]).epsilon(1e-12));
  }
}

TEST_CASE("conditional_sigma_u_params: scale and dof") {
  RandomEngine rng(510);

  SUBCASE("u at the prior mean leaves scale = Psi") {
    TinyInstance inst = make_tiny_instance(2, 2, 3, 2, 1, rng);
    Posterior post(inst.model, inst.observations);
    auto [scale, dof] = post.conditional_sigma_u_params(inst.model.prior_mean_u);
    CHECK(dof == doctest::Approx(4.0 + inst.model.hyper.eta));
    for (std::size_t i = 0; i < scale.a.size(); ++i)
      CHECK(scale.a[i] == doctest::Approx(inst.model.hyper.psi.a[i]).epsilon(1e-14));
  }

  SUBCASE("scalar case: psi=1, eta=4, one pixel, u - mu = 3 -> scale 10, dof 5") {
    HierModel m;
    m.full_rows = 1;
    m.full_cols = 1;
    m.basis = SubspaceBasis::identity(1);
    m.prior_mean_u = BipVector(1, 1);
    m.prior_mean_u.data = {1.0};
    m.hyper.psi = linalg::Matrix::identity(1);
    m.hyper.eta = 4.0;
    m.sigma_mode = SigmaMode::fixed;
    m.noise_mode = NoiseMode::fixed;
    m.fixed_sigma_u = linalg::Matrix::identity(1);
    Posterior post(m, {});
    BipVector u(1, 1);
    u.data = {4.0};
    auto [scale, dof] = post.conditional_sigma_u_params(u);
    CHECK(scale(0, 0) == doctest::Approx(10.0));
    CHECK(dof == doctest::Approx(5.0));
  }

  SUBCASE("scatter matches a naive outer-product accumulation; SPD when psi is") {
    TinyInstance inst = make_tiny_instance(3, 2, 4, 3, 1, rng);
    Posterior post(inst.model, inst.observations);
    const BipVector u = random_bip(6, 3, rng);
    auto [scale, dof] = post.conditional_sigma_u_params(u);

    linalg::Matrix want = inst.model.hyper.psi;
    for (int i = 0; i < 6; ++i)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          want(r, c) += (u.pixel(i)[r] - inst.model.prior_mean_u.pixel(i)[r]) *
                        (u.pixel(i)[c] - inst.model.prior_mean_u.pixel(i)[c]);
    for (std::size_t i = 0; i < want.a.size(); ++i)
      CHECK(std::abs(scale.a[i] - want.a[i]) <= 1e-12 * std::max(1.0, std::abs(want.a[i])));

    linalg::Matrix lower;
    CHECK(linalg::cholesky(scale, lower));
  }
}

TEST_CASE("conditional_noise_var_params: zero residual, arithmetic, dense check") {
  RandomEngine rng(511);
  TinyInstance inst = make_tiny_instance(2, 2, 3, 2, 1, rng);
  Posterior pre(inst.model, inst.observations);
  const BipVector u = random_bip(4, 2, rng);

  SUBCASE("zero residual gives rate 0") {
    inst.observations[0] = pre.fused_op(0).forward(u);
    inst.model.mean_spectrum.clear();
    Posterior post(inst.model, inst.observations);
    const auto params = post.conditional_noise_var_params_all(u, 0);
    for (const auto& [a, b] : params) {
      CHECK(a == doctest::Approx(0.5 * inst.model.sensors[0].out_pixels()));
      CHECK(b == doctest::Approx(0.0).epsilon(1e-18));
    }
  }

  SUBCASE("residual (3,4) in one band gives rate 12.5") {
    // single sensor, identity response, 2x1 grid, 1 band: residual (3,4)
    HierModel m;
    m.full_rows = 2;
    m.full_cols = 1;
    m.basis = SubspaceBasis::identity(1);
    m.prior_mean_u = BipVector(2, 1);
    m.hyper = HyperParams::noninformative(1);
    m.sigma_mode = SigmaMode::fixed;
    m.fixed_sigma_u = linalg::Matrix::identity(1);
    SensorModel s;
    s.name = "id";
    s.in_rows = 2;
    s.in_cols = 1;
    s.in_bands = 1;
    s.spectral = SpectralResponse(1, 1, {1.0});
    s.noise_variances = {1.0};
    m.sensors.push_back(s);
    BipVector z(2, 1);
    z.data = {3.0, 4.0};
    Posterior post(m, {z});
    BipVector u0(2, 1);  // zeros -> residual = z
    auto [a, b] = post.conditional_noise_var_params(u0, 0, 0);
    CHECK(a == doctest::Approx(1.0));
    CHECK(b == doctest::Approx(12.5));
  }

  SUBCASE("rates match a dense residual computation") {
    Posterior post(inst.model, inst.observations);
    const auto params = post.conditional_noise_var_params_all(u, 0);
    const linalg::Matrix bmat = dense_fused_matrix(post, 0);
    std::vector<double> mean(bmat.rows);
    linalg::matvec(bmat, u.data, mean);
    const BipVector& z = post.adjusted_observations()[0];
    const int nb = z.n_bands;
    std::vector<double> ssq(nb, 0.0);
    for (int i = 0; i < bmat.rows; ++i) {
      const double r = z.data[i] - mean[i];
      ssq[i % nb] += r * r;
    }
    for (int k = 0; k < nb; ++k)
      CHECK(std::abs(params[k].second - 0.5 * ssq[k]) <=
            1e-12 * std::max(1.0, std::abs(params[k].second)));
  }
}

TEST_CASE("fixed_ig noise prior shifts shape and rate") {
  RandomEngine rng(512);
  TinyInstance inst = make_tiny_instance(2, 2, 3, 2, 1, rng);
  inst.model.noise_prior = NoisePrior::fixed_ig;
  inst.model.hyper.nu = 2.0;
  inst.model.hyper.gamma = 3.0;
  Posterior post(inst.model, inst.observations);
  TinyInstance plain = inst;
  plain.model.noise_prior = NoisePrior::jeffreys;
  Posterior post0(plain.model, plain.observations);

  const BipVector u = random_bip(4, 2, rng);
  auto [a1, b1] = post.conditional_noise_var_params(u, 0, 0);
  auto [a0, b0] = post0.conditional_noise_var_params(u, 0, 0);
  CHECK(a1 == doctest::Approx(a0 + 1.0));
  CHECK(b1 == doctest::Approx(b0 + 1.5));
}

TEST_CASE("exact_conditional_gaussian: prior-only and scalar conjugate formula") {
  RandomEngine rng(513);

  SUBCASE("no sensors: mean = prior mean, covariance = blockdiag sigma_u") {
    HierModel m;
    m.full_rows = 2;
    m.full_cols = 2;
    m.basis = make_random_orthonormal_basis(3, 2, rng);
    m.prior_mean_u = random_bip(4, 2, rng);
    m.hyper = HyperParams::noninformative(2);
    m.sigma_mode = SigmaMode::fixed;
    m.noise_mode = NoiseMode::fixed;
    m.fixed_sigma_u = make_random_spd(2, rng);
    Posterior post(m, {});
    const SigmaCache cache = SigmaCache::build(m.fixed_sigma_u);
    const DenseGaussian g = post.exact_conditional_gaussian({}, cache);
    CHECK(test::max_abs_diff(g.mean, m.prior_mean_u.data) <= 1e-10);
    for (int i = 0; i < 4; ++i)
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
          CHECK(g.covariance(i * 2 + r, i * 2 + c) ==
                doctest::Approx(m.fixed_sigma_u(r, c)).epsilon(1e-10));
  }

  SUBCASE("scalar case: posterior mean = (z/s2 + mu/t2) / (1/s2 + 1/t2)") {
    HierModel m;
    m.full_rows = 1;
    m.full_cols = 1;
    m.basis = SubspaceBasis::identity(1);
    m.prior_mean_u = BipVector(1, 1);
    m.prior_mean_u.data = {2.0};
    m.hyper = HyperParams::noninformative(1);
    m.sigma_mode = SigmaMode::fixed;
    m.noise_mode = NoiseMode::fixed;
    m.fixed_sigma_u = linalg::Matrix::identity(1);
    m.fixed_sigma_u(0, 0) = 4.0;  // t2
    SensorModel s;
    s.name = "id";
    s.in_rows = 1;
    s.in_cols = 1;
    s.in_bands = 1;
    s.spectral = SpectralResponse(1, 1, {1.0});
    s.noise_variances = {0.25};  // s2
    m.sensors.push_back(s);
    BipVector z(1, 1);
    z.data = {5.0};
    Posterior post(m, {z});
    const SigmaCache cache = SigmaCache::build(m.fixed_sigma_u);
    const DenseGaussian g = post.exact_conditional_gaussian({{0.25}}, cache);
    const double want = (5.0 / 0.25 + 2.0 / 4.0) / (1.0 / 0.25 + 1.0 / 4.0);
    CHECK(g.mean[0] == doctest::Approx(want).epsilon(1e-12));
    CHECK(g.covariance(0, 0) == doctest::Approx(1.0 / (1.0 / 0.25 + 1.0 / 4.0)).epsilon(1e-12));
  }

  SUBCASE("oracle refuses above the cap") {
    TinyInstance inst = make_tiny_instance(2, 2, 3, 2, 1, rng);
    Posterior post(inst.model, inst.observations);
    const SigmaCache cache = SigmaCache::build(inst.model.fixed_sigma_u);
    CHECK_THROWS_AS(post.exact_conditional_gaussian(noise_of(inst.model), cache, /*cap=*/4),
                    ParamError);
  }
}

TEST_CASE("singular sigma_u and non-positive noise variances are rejected") {
  RandomEngine rng(514);
  linalg::Matrix singular(2, 2);
  singular(0, 0) = 1.0;  // second eigenvalue zero
  CHECK_THROWS_AS(SigmaCache::build(singular), NumericalError);

  TinyInstance inst = make_tiny_instance(2, 2, 3, 2, 1, rng);
  Posterior post(inst.model, inst.observations);
  const BipVector u = random_bip(4, 2, rng);
  std::vector<std::vector<double>> bad = {{0.0}};
  bad[0].assign(inst.model.sensors[0].out_bands(), 0.0);
  CHECK_THROWS_AS(post.log_likelihood(u, bad), ParamError);
}

TEST_CASE("HyperParams validation") {
  HyperParams h = HyperParams::noninformative(3);
  CHECK(h.eta == doctest::Approx(6.0));
  CHECK_NOTHROW(h.validate(3));
  h.eta = 1.0;
  CHECK_THROWS_AS(h.validate(3), ParamError);
  h = HyperParams::noninformative(3);
  h.psi(0, 0) = -5.0;
  CHECK_THROWS_AS(h.validate(3), ParamError);
}
