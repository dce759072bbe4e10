#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "roughmor/system_model.hpp"

namespace roughmor {

/// Shape of a random test system. In hidden coordinates the state splits
/// into (x_a, x_b, x_c): x_b starts at 0 and only feeds itself, so it is
/// unreachable; x_c never feeds x_a, x_b or the output, so it is
/// unobservable. A random orthogonal change of basis hides the blocks.
struct RandomSystemSpec {
  std::size_t n = 6;
  std::size_t d = 2;
  std::size_t p = 1;
  std::size_t unreachable = 0;
  std::size_t unobservable = 0;
  /// Scale of the N_i entries before the stability back-off.
  double noise_scale = 0.4;
  bool cubic_drift = false;
  /// Use a random SPD K instead of the identity.
  bool random_covariance = false;
};

struct RandomSystem {
  BilinearRoughSystem system;
  /// Orthonormal bases of the hidden blocks in physical coordinates.
  MatrixXd reachable_basis;
  MatrixXd unreachable_basis;
  MatrixXd unobservable_basis;
};

/// Draws a mean-square stable system with the requested structure. The
/// noise is halved until the stability test passes. Deterministic in seed.
RandomSystem random_stable_system(const RandomSystemSpec& spec, std::uint64_t seed);

struct NamedSystem {
  std::string name;
  BilinearRoughSystem system;
};

/// Small deterministic systems for the probe suite: a 3-state linear
/// system, a 3-state system with a hidden unobservable direction, a
/// correlated-noise system, a cubic-drift system and a scalar system.
std::vector<NamedSystem> builtin_probe_fixtures();

/// 3-state system whose noise makes it mean-square unstable although A is
/// Hurwitz; the negative control for the probe suite.
BilinearRoughSystem unstable_fixture();

}  // namespace roughmor
