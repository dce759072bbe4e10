#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "roughmor/system_model.hpp"

namespace roughmor {

/// reach: Z(t) = E[x_B x_B^T] driven by L from x0 x0^T.
/// obs:   the dual matrix ODE driven by L* from C^T C.
enum class GramianSide { reach, obs };

enum class GramianKind { reach_finite, reach_infinite, obs_finite, obs_infinite };

struct GramianResult {
  MatrixXd matrix;
  GramianKind kind;
  /// Relative Frobenius residual of the defining equation.
  double residual;
  /// Bound the residual was solved to: the requested tolerance, or the
  /// round-off floor of the residual evaluation when that is larger and the
  /// iteration stagnated there.
  double tolerance;
  std::size_t iterations;
  /// Horizon T; +inf for the algebraic Gramians.
  double horizon;
};

struct GramianOdeResult {
  GramianResult gramian;
  /// Z (or the dual Z) sampled every `sample_stride` steps, t = 0 included.
  std::vector<double> sample_times;
  std::vector<MatrixXd> samples;
};

/// Integrates dZ/dt = L(Z) (or L*(Z)) with classical RK4 on `steps` uniform
/// steps. The integral of Z is carried as an extra RK4 component, so the
/// result satisfies Z(T) = Z(0) + L(P_T) to round-off.
/// sample_stride == 0 disables trajectory sampling.
GramianOdeResult integrate_gramian_ode(const BilinearRoughSystem& sys,
                                       GramianSide side, double T,
                                       std::size_t steps,
                                       std::size_t sample_stride = 0);

enum class GramianSolver {
  /// GMRES on (I - T) P = P_1 where T is the fixed-point map.
  krylov,
  /// Plain iteration P_{m+1} = L_A^{-1}(-B - Pi(P_m)), P_0 = 0.
  fixed_point,
  /// Dense LU of the n^2 x n^2 operator matrix.
  direct,
};

struct AlgebraicGramianOptions {
  double tol = 1e-12;
  std::size_t max_iter = 500;
  GramianSolver solver = GramianSolver::krylov;
  /// Skip the mean-square stability precondition.
  bool force_unstable = false;
  /// fixed_point only: verify P_{m+1} >= P_m in Loewner order.
  bool check_monotone = false;
  std::size_t krylov_restart = 80;
  std::size_t direct_threshold = 900;
};

/// Solves 0 = x0 x0^T + L(P) (reach) or 0 = C^T C + L*(Q) (obs).
GramianResult solve_algebraic_gramian(const BilinearRoughSystem& sys,
                                      GramianSide side,
                                      const AlgebraicGramianOptions& opts = {});

struct ResidualValue {
  double value;
  /// True when the right-hand side vanished and the absolute residual is
  /// reported instead.
  bool absolute;
};

/// ||RHS + K(G)||_F / ||RHS||_F for (RHS, K) = (x0 x0^T, L) or (C^T C, L*).
ResidualValue gramian_residual(const BilinearRoughSystem& sys, const MatrixXd& G,
                               GramianSide side);

/// Right-hand side x0 x0^T or C^T C.
MatrixXd gramian_rhs(const BilinearRoughSystem& sys, GramianSide side);

struct MonteCarloMoment {
  std::vector<double> times;
  std::vector<MatrixXd> mean;
  std::vector<MatrixXd> std_error;
  /// Estimate of the time integral over [0, T] and its standard error.
  MatrixXd integral;
  MatrixXd integral_std_error;
  std::size_t n_paths;
};

/// Euler-Maruyama estimate of E[x_B(t) x_B(t)^T] for the linear Ito SDE
/// dx_B = A x_B dt + N(x_B) K^{1/2} dB (reach), or the dual SDE summed over
/// the nonzero rows of C (obs). Paths are simulated in index order with
/// per-path seeds derived from (seed, row, path), so results are
/// bitwise reproducible. Any drift nonlinearity is ignored.
MonteCarloMoment monte_carlo_second_moment(const BilinearRoughSystem& sys,
                                           GramianSide side, double T,
                                           std::size_t n_paths, double dt,
                                           std::uint64_t seed,
                                           std::size_t sample_stride = 0);

/// Eigenvalues of a symmetric matrix, descending.
VectorXd descending_eigenvalues(const MatrixXd& G);

}  // namespace roughmor
