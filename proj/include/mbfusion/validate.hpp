#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mbfusion/linalg.hpp"
#include "mbfusion/model.hpp"
#include "mbfusion/rng.hpp"

namespace mbfusion {

/// One named oracle check: `value` against `threshold` with the comparison
/// direction baked into `passed`.
struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ValidateOptions {
  std::uint64_t seed = 719;
  /// Test fixture: perturb the analytic gradient so the finite-difference
  /// check must fail.
  bool corrupt_gradient = false;
};

/// The full oracle battery: finite-difference gradient, conjugacy moments,
/// leapfrog reversibility and energy-error order, the exp(-dH) identity and
/// a tiny-instance posterior-mean check.
std::vector<CheckResult> run_validation(const ValidateOptions& opts = {});

bool all_passed(const std::vector<CheckResult>& checks);

// Instance builders shared with the test suites.

/// Orthonormal rows via Gram-Schmidt on Gaussian draws.
SubspaceBasis make_random_orthonormal_basis(int full_dim, int reduced_dim, RandomEngine& rng);

/// A A^T + dim * I, comfortably PD.
linalg::Matrix make_random_spd(int dim, RandomEngine& rng);

/// Small random fusion problem: grid, basis, sensors (decimation and/or
/// spectral), prior mean and data generated from a known ground truth.
struct TinyInstance {
  HierModel model;
  std::vector<BipVector> observations;
  BipVector truth_u;
};
TinyInstance make_tiny_instance(int rows, int cols, int full_bands, int reduced_bands,
                                int n_sensors, RandomEngine& rng);

}  // namespace mbfusion
