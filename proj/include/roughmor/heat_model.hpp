#pragma once

#include <functional>
#include <string>
#include <vector>

#include "roughmor/system_model.hpp"

namespace roughmor {

using SpatialFunction = std::function<double(double)>;

/// Finite-difference rough heat equation on (0, 1) with homogeneous
/// Dirichlet boundaries and n interior nodes zeta_j = j / (n + 1).
struct Heat1dConfig {
  std::size_t n = 100;
  /// Transport coefficients beta_k(zeta), one per driver component.
  std::vector<SpatialFunction> beta;
  /// Reaction coefficients gamma_k(zeta).
  std::vector<SpatialFunction> gamma;
  SpatialFunction initial_profile;
  /// Driver covariance; empty means identity.
  MatrixXd K;

  void validate() const;
};

/// beta = (0.4, -0.2), gamma = (4 sin, 4 cos), u0 = exp(-2 |zeta - 0.5|^2),
/// K = I_2.
Heat1dConfig default_heat_config(std::size_t n = 100);

/// Builtin coefficient by name: "constant" (c), "sin-scaled" (a sin zeta),
/// "cos-scaled" (a cos zeta), "gaussian-bump" (a exp(-w |zeta - c|^2)).
/// `params` holds (c), (a), (a), (a, c, w) respectively.
SpatialFunction builtin_function(const std::string& name, const std::vector<double>& params);

/// A = tridiag(1, -2, 1) / h^2, N_k = beta_k(zeta_j) (x_{j+1} - x_j) / h +
/// gamma_k(zeta_j) x_j (no x_{n+1} term in the last row), x0 = u0(zeta_j),
/// C = (1/n) (1 ... 1).
BilinearRoughSystem build_heat1d(const Heat1dConfig& cfg);

}  // namespace roughmor
