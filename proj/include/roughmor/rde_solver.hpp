#pragma once

#include <cstddef>
#include <vector>

#include "roughmor/drivers.hpp"
#include "roughmor/system_model.hpp"

namespace roughmor {

struct ReducedModel;

/// Diagonally implicit Runge-Kutta tableau (a_ij = 0 for j > i).
struct ButcherTableau {
  MatrixXd a;
  VectorXd b;

  std::size_t stages() const { return static_cast<std::size_t>(b.size()); }

  /// Crouzeix's two-stage third-order DIRK, gamma = 1/2 + sqrt(3)/6.
  static ButcherTableau crouzeix();
  /// Implicit Euler, handy as a first-order reference.
  static ButcherTableau implicit_euler();

  /// Throws InvalidArgument unless the tableau is square and diagonally
  /// implicit.
  void validate() const;

  /// R(z) of the scheme on y' = lambda y, z = lambda h:
  /// R(z) = 1 + z b^T (I - z a)^{-1} 1.
  double stability_function(double z) const;
};

struct SolverOptions {
  double newton_tol = 1e-12;
  std::size_t newton_max = 50;
};

struct SolverDiagnostics {
  std::size_t max_newton_iterations = 0;
  double max_linear_residual = 0.0;
};

struct SimulationResult {
  std::vector<double> times;
  /// (K+1) x n
  MatrixXd states;
  /// (K+1) x p, equal to states * C^T.
  MatrixXd outputs;
  SolverDiagnostics diagnostics;
};

/// Runs z_{k+1} = z_k + sum_i b_i F(Z_{k,i}) (W~(t_{k+1}) - W~(t_k)) with
/// W~ = [t; W] and F(x) = [A x + f(x), N(x) K^{1/2}] along the given
/// driver. Linear systems take one LU solve per stage; a drift nonlinearity
/// switches the stage equations to Newton with the analytic Jacobian.
SimulationResult rough_rk_simulate(const BilinearRoughSystem& sys, const DriverPath& path,
                                   const ButcherTableau& tableau = ButcherTableau::crouzeix(),
                                   const SolverOptions& opts = {});

SimulationResult rough_rk_simulate(const ReducedModel& model, const DriverPath& path,
                                   const ButcherTableau& tableau = ButcherTableau::crouzeix(),
                                   const SolverOptions& opts = {});

/// Classical RK4 for dx = [A x + f(x)] dt + N(x) K^{1/2} dW^eps with the
/// piecewise-linear interpolant of `path` as smooth driver, `substeps` RK4
/// steps per driver interval.
SimulationResult smooth_rk4_simulate(const BilinearRoughSystem& sys, const DriverPath& path,
                                     std::size_t substeps = 1);

struct GronwallProbeResult {
  /// min_k lambda_min(Xbar(t_k) - x(t_k) x(t_k)^T)
  double min_gap_eigenvalue;
  /// ||Xbar(T)||_2
  double bound_norm;
  bool passed;
};

/// Compares x x^T of the smooth-driver solution with
/// exp(int_0^t ||dW/dt||^2) Z(t) on the driver grid (refined by `substeps`).
GronwallProbeResult smooth_quadratic_form_probe(const BilinearRoughSystem& sys,
                                                const DriverPath& path,
                                                std::size_t substeps = 4,
                                                double tol_gronwall = 1e-6);

struct ErrorValue {
  double value;
  /// Reference norm vanished; `value` is the absolute error.
  bool absolute;
};

/// ||y - y_r||_{L^2_T} / ||y||_{L^2_T}, composite trapezoid in time,
/// Euclidean norm across output components.
ErrorValue relative_L2_error(const MatrixXd& y_full, const MatrixXd& y_red,
                             const std::vector<double>& times);

struct PointwiseError {
  std::vector<double> values;
  /// Entries where |y(t_k)| == 0; values[k] holds the absolute error there.
  std::vector<bool> zero_denominator;
};

PointwiseError pointwise_relative_error(const MatrixXd& y_full, const MatrixXd& y_red,
                                        const std::vector<double>& times);

}  // namespace roughmor
