#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "mbfusion/forward.hpp"
#include "mbfusion/kernels.hpp"
#include "mbfusion/validate.hpp"
#include "test_support.hpp"

using namespace mbfusion;
using test::random_bip;

namespace {

SensorModel decimation_sensor(int d, int rows, int cols, int bands) {
  SensorModel s;
  s.name = "dec";
  s.in_rows = rows;
  s.in_cols = cols;
  s.in_bands = bands;
  s.decimation = SpatialDecimation(d, rows, cols);
  s.noise_variances.assign(bands, 0.0);
  return s;
}

SensorModel spectral_sensor(const SpectralResponse& r, int rows, int cols) {
  SensorModel s;
  s.name = "spec";
  s.in_rows = rows;
  s.in_cols = cols;
  s.in_bands = r.in_bands;
  s.spectral = r;
  s.noise_variances.assign(r.out_bands, 0.0);
  return s;
}

double adjoint_gap(const SensorModel& s, RandomEngine& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const BipVector x = random_bip(s.in_rows * s.in_cols, s.in_bands, rng);
    const BipVector y = random_bip(s.out_pixels(), s.out_bands(), rng);
    const BipVector fx = apply_forward(s, x);
    const BipVector fty = apply_adjoint(s, y);
    const double a = kernels::dot(fx.data.data(), y.data.data(), fx.size());
    const double b = kernels::dot(x.data.data(), fty.data.data(), x.size());
    worst = std::max(worst, std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}));
  }
  return worst;
}

}  // namespace

TEST_CASE("decimation d=2 on a 2x2 single-band image is the block mean") {
  SensorModel s = decimation_sensor(2, 2, 2, 1);
  BipVector x(4, 1);
  x.data = {1, 2, 3, 4};
  const BipVector y = apply_forward(s, x);
  REQUIRE(y.size() == 1);
  CHECK(y.data[0] == doctest::Approx(2.5));
}

TEST_CASE("uniform spectral row preserves constants") {
  const int m = 6;
  SpectralResponse r(1, m, std::vector<double>(m, 1.0 / m));
  SensorModel s = spectral_sensor(r, 3, 2);
  BipVector x(6, m);
  std::fill(x.data.begin(), x.data.end(), 4.25);
  const BipVector y = apply_forward(s, x);
  for (double v : y.data) CHECK(v == doctest::Approx(4.25));
}

TEST_CASE("d=5 decimation matches a naive double-loop block mean to 1e-12") {
  RandomEngine rng(201);
  const int rows = 10, cols = 15, bands = 3, d = 5;
  const BipVector x = random_bip(rows * cols, bands, rng);
  SensorModel s = decimation_sensor(d, rows, cols, bands);
  const BipVector y = apply_forward(s, x);
  for (int R = 0; R < rows / d; ++R)
    for (int C = 0; C < cols / d; ++C)
      for (int b = 0; b < bands; ++b) {
        double acc = 0.0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            acc += x.data[(static_cast<std::size_t>(R * d + i) * cols + (C * d + j)) * bands + b];
        acc /= d * d;
        CHECK(std::abs(y.data[(static_cast<std::size_t>(R) * (cols / d) + C) * bands + b] - acc) <=
              1e-12);
      }
}

TEST_CASE("adjoint of d=2 decimation spreads c/4") {
  SensorModel s = decimation_sensor(2, 2, 2, 1);
  BipVector y(1, 1);
  y.data = {3.0};
  const BipVector x = apply_adjoint(s, y);
  for (double v : x.data) CHECK(v == doctest::Approx(0.75));
}

TEST_CASE("adjoint identity: spectral-only identity response") {
  SpectralResponse r(2, 2, {1, 0, 0, 1});
  SensorModel s = spectral_sensor(r, 2, 2);
  RandomEngine rng(202);
  const BipVector y = random_bip(4, 2, rng);
  CHECK(apply_adjoint(s, y).data == y.data);
  CHECK(apply_forward(s, y).data == y.data);
}

TEST_CASE("adjoint dot-product test across operator types") {
  RandomEngine rng(203);

  SUBCASE("decimation") { CHECK(adjoint_gap(decimation_sensor(3, 6, 9, 2), rng) <= 1e-10); }

  SUBCASE("spectral") {
    std::vector<double> w(3 * 7);
    for (double& v : w) v = rng.uniform01() + 0.01;
    CHECK(adjoint_gap(spectral_sensor(SpectralResponse::normalized(3, 7, w), 4, 5), rng) <= 1e-10);
  }

  SUBCASE("blur, all boundary modes") {
    for (BoundaryMode mode :
         {BoundaryMode::symmetric, BoundaryMode::zero, BoundaryMode::periodic}) {
      std::vector<double> k = {0.05, 0.1, 0.05, 0.1, 0.4, 0.1, 0.05, 0.1, 0.05};
      SensorModel s;
      s.name = "blur";
      s.in_rows = 7;
      s.in_cols = 6;
      s.in_bands = 2;
      s.blur = SpatialBlur(3, 3, k, mode);
      s.noise_variances.assign(2, 0.0);
      CHECK(adjoint_gap(s, rng) <= 1e-10);
    }
  }

  SUBCASE("blur + decimation + spectral composition") {
    std::vector<double> k = {0.25, 0.5, 0.25};
    std::vector<double> w(2 * 4);
    for (double& v : w) v = rng.uniform01() + 0.01;
    SensorModel s;
    s.name = "full";
    s.in_rows = 6;
    s.in_cols = 6;
    s.in_bands = 4;
    s.blur = SpatialBlur(1, 3, k, BoundaryMode::symmetric);
    s.decimation = SpatialDecimation(2, 6, 6);
    s.spectral = SpectralResponse::normalized(2, 4, w);
    s.noise_variances.assign(2, 0.0);
    CHECK(adjoint_gap(s, rng) <= 1e-10);
  }
}

TEST_CASE("symmetric kernel with periodic boundary is self-adjoint") {
  RandomEngine rng(204);
  std::vector<double> k = {0.0625, 0.125, 0.0625, 0.125, 0.25, 0.125, 0.0625, 0.125, 0.0625};
  SensorModel s;
  s.name = "blur";
  s.in_rows = 5;
  s.in_cols = 5;
  s.in_bands = 1;
  s.blur = SpatialBlur(3, 3, k, BoundaryMode::periodic);
  s.noise_variances.assign(1, 0.0);
  for (int rep = 0; rep < 10; ++rep) {
    const BipVector x = random_bip(25, 1, rng);
    const BipVector y = random_bip(25, 1, rng);
    const double a = kernels::dot(apply_forward(s, x).data.data(), y.data.data(), 25);
    const double b = kernels::dot(x.data.data(), apply_forward(s, y).data.data(), 25);
    CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("linearity of apply_forward") {
  RandomEngine rng(205);
  SensorModel s = decimation_sensor(2, 4, 4, 3);
  std::vector<double> w(2 * 3);
  for (double& v : w) v = rng.uniform01() + 0.01;
  s.spectral = SpectralResponse::normalized(2, 3, w);
  s.noise_variances.assign(2, 0.0);

  const BipVector x = random_bip(16, 3, rng);
  const BipVector y = random_bip(16, 3, rng);
  BipVector combo(16, 3);
  for (std::size_t i = 0; i < combo.size(); ++i) combo.data[i] = 2.5 * x.data[i] - 0.75 * y.data[i];
  const BipVector lhs = apply_forward(s, combo);
  const BipVector fx = apply_forward(s, x);
  const BipVector fy = apply_forward(s, y);
  for (std::size_t i = 0; i < lhs.size(); ++i)
    CHECK(std::abs(lhs.data[i] - (2.5 * fx.data[i] - 0.75 * fy.data[i])) <= 1e-12);
}

TEST_CASE("decimation preserves constants (row sums 1)") {
  SensorModel s = decimation_sensor(4, 8, 8, 2);
  BipVector x(64, 2);
  std::fill(x.data.begin(), x.data.end(), -1.75);
  for (double v : apply_forward(s, x).data) CHECK(v == doctest::Approx(-1.75));
}

TEST_CASE("fused subspace path equals the unfused composition to 1e-12") {
  RandomEngine rng(206);
  const SubspaceBasis basis = make_random_orthonormal_basis(6, 3, rng);

  SensorModel s = decimation_sensor(2, 4, 6, 6);
  std::vector<double> k = {0.2, 0.6, 0.2};
  s.blur = SpatialBlur(3, 1, k, BoundaryMode::symmetric);
  std::vector<double> w(2 * 6);
  for (double& v : w) v = rng.uniform01() + 0.01;
  s.spectral = SpectralResponse::normalized(2, 6, w);
  s.noise_variances.assign(2, 0.0);

  const BipVector u = random_bip(24, 3, rng);
  const BipVector fused = apply_forward_through_subspace(s, basis, u);
  const BipVector unfused = apply_forward(s, backproject(u, basis));
  CHECK(test::max_abs_diff(fused.data, unfused.data) <= 1e-12);

  // identity basis: fused path equals apply_forward on u directly
  SensorModel sid = decimation_sensor(2, 4, 6, 3);
  const BipVector direct = apply_forward(sid, u);
  const BipVector via = apply_forward_through_subspace(sid, SubspaceBasis::identity(3), u);
  CHECK(test::max_abs_diff(direct.data, via.data) <= 1e-12);

  // adjoint consistency of the fused pair
  const BipVector y = random_bip(s.out_pixels(), s.out_bands(), rng);
  const double a = kernels::dot(fused.data.data(), y.data.data(), fused.size());
  const BipVector aty = apply_adjoint_through_subspace(s, basis, y);
  const double b = kernels::dot(u.data.data(), aty.data.data(), u.size());
  CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
}

TEST_CASE("spectral-only fused path equals the precomposed per-pixel matrix") {
  RandomEngine rng(207);
  const SubspaceBasis basis = make_random_orthonormal_basis(5, 2, rng);
  std::vector<double> w(3 * 5);
  for (double& v : w) v = rng.uniform01() + 0.01;
  SensorModel s = spectral_sensor(SpectralResponse::normalized(3, 5, w), 3, 3);

  const BipVector u = random_bip(9, 2, rng);
  const BipVector fused = apply_forward_through_subspace(s, basis, u);

  // response * V^T, precomposed densely
  std::vector<double> m(3 * 2, 0.0);
  for (int o = 0; o < 3; ++o)
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 5; ++c) m[o * 2 + r] += s.spectral->at(o, c) * basis.at(r, c);
  for (int p = 0; p < 9; ++p)
    for (int o = 0; o < 3; ++o) {
      double want = m[o * 2] * u.pixel(p)[0] + m[o * 2 + 1] * u.pixel(p)[1];
      CHECK(std::abs(fused.pixel(p)[o] - want) <= 1e-12);
    }
}

TEST_CASE("add_noise: noiseless mode, determinism, moments") {
  RandomEngine rng(208);
  SensorModel s = decimation_sensor(1, 2, 2, 2);

  SUBCASE("all-zero variances return the input unchanged") {
    const BipVector y = random_bip(4, 2, rng);
    RandomEngine r1(5);
    CHECK(add_noise(s, y, r1).data == y.data);
  }

  SUBCASE("equal seeds give identical output; variance matches") {
    s.noise_variances = {1.0, 4.0};
    // 1e6 samples across pixels: use a bigger grid.
    SensorModel big = decimation_sensor(1, 1000, 500, 2);
    big.noise_variances = {1.0, 4.0};
    BipVector zero(500000, 2);
    const BipVector n1 = add_noise(big, zero, std::uint64_t{99});
    const BipVector n2 = add_noise(big, zero, std::uint64_t{99});
    CHECK(n1.data == n2.data);

    std::vector<double> ssq(2);
    kernels::band_sumsq(n1.data.data(), ssq.data(), n1.n_pixels, 2);
    CHECK(ssq[0] / n1.n_pixels == doctest::Approx(1.0).epsilon(0.01));
    CHECK(ssq[1] / n1.n_pixels == doctest::Approx(4.0).epsilon(0.01));
  }

  SUBCASE("negative or mixed variances are rejected") {
    s.noise_variances = {1.0, -1.0};
    const BipVector y = random_bip(4, 2, rng);
    RandomEngine r1(5);
    CHECK_THROWS_AS(add_noise(s, y, r1), ParamError);
    s.noise_variances = {1.0, 0.0};
    CHECK_THROWS_AS(add_noise(s, y, r1), ParamError);
  }
}

TEST_CASE("blur kernel validation") {
  CHECK_THROWS_AS(SpatialBlur(2, 2, {0.25, 0.25, 0.25, 0.25}), ParamError);  // even dims
  CHECK_THROWS_AS(SpatialBlur(1, 3, {0.5, 0.6, 0.5}), ParamError);           // sum != 1
  CHECK_NOTHROW(SpatialBlur(1, 3, {0.25, 0.5, 0.25}));
}

TEST_CASE("decimation requires exact multiples") {
  CHECK_THROWS_AS(SpatialDecimation(3, 7, 9), ShapeError);
  CHECK_NOTHROW(SpatialDecimation(3, 9, 9));
}

TEST_CASE("response csv loads and normalizes rows") {
  const std::string path = "test_response.csv";
  {
    std::ofstream os(path);
    os << "wavelength,band1,band2\n";
    os << "400,2,0\n410,2,1\n420,0,1\n430,0,2\n";
  }
  auto [resp, wl] = load_response_csv(path);
  CHECK(resp.out_bands == 2);
  CHECK(resp.in_bands == 4);
  CHECK(wl == std::vector<double>{400, 410, 420, 430});
  CHECK(resp.at(0, 0) == doctest::Approx(0.5));
  CHECK(resp.at(0, 1) == doctest::Approx(0.5));
  CHECK(resp.at(1, 1) == doctest::Approx(0.25));
  CHECK(resp.at(1, 3) == doctest::Approx(0.5));
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_response_csv("does_not_exist.csv"), ParamError);
}

TEST_CASE("shape errors on mismatched inputs") {
  RandomEngine rng(209);
  SensorModel s = decimation_sensor(2, 4, 4, 2);
  CHECK_THROWS_AS(apply_forward(s, random_bip(9, 2, rng)), ShapeError);
  CHECK_THROWS_AS(apply_adjoint(s, random_bip(16, 2, rng)), ShapeError);
}
