#include "roughmor/rde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "roughmor/errors.hpp"
#include "roughmor/format.hpp"
#include "roughmor/gramians.hpp"
#include "roughmor/reduction.hpp"

namespace roughmor {

ButcherTableau ButcherTableau::crouzeix() {
  const double s3 = std::sqrt(3.0);
  const double gamma = 0.5 + s3 / 6.0;
  ButcherTableau t;
  t.a = MatrixXd(2, 2);
  t.a << gamma, 0.0, -s3 / 3.0, gamma;
  t.b = VectorXd(2);
  t.b << 0.5, 0.5;
  return t;
}

ButcherTableau ButcherTableau::implicit_euler() {
  ButcherTableau t;
  t.a = MatrixXd::Ones(1, 1);
  t.b = VectorXd::Ones(1);
  return t;
}

void ButcherTableau::validate() const {
  const auto s = b.size();
  if (s < 1 || a.rows() != s || a.cols() != s) {
    throw InvalidArgument("ButcherTableau: a must be s x s with s = len(b) >= 1");
  }
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = i + 1; j < s; ++j) {
      if (a(i, j) != 0.0) throw InvalidArgument("ButcherTableau: not diagonally implicit");
    }
  }
}

double ButcherTableau::stability_function(double z) const {
  validate();
  const auto s = b.size();
  const MatrixXd M = MatrixXd::Identity(s, s) - z * a;
  const VectorXd k = M.triangularView<Eigen::Lower>().solve(VectorXd::Ones(s));
  return 1.0 + z * b.dot(k);
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// LU of a stage matrix with the singularity guard eps * n * ||M||_1.
Eigen::PartialPivLU<MatrixXd> factor_stage(const MatrixXd& M, std::size_t step) {
  Eigen::PartialPivLU<MatrixXd> lu(M);
  const double norm1 = M.cwiseAbs().colwise().sum().maxCoeff();
  const double pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(pivot > kEps * static_cast<double>(M.rows()) * norm1)) {
    throw StepFailure("rough_rk_simulate: singular stage matrix at step " +
                      std::to_string(step) + "; refine the time grid", step);
  }
  return lu;
}

double linear_residual(const MatrixXd& M, const VectorXd& z, const VectorXd& rhs) {
  const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
  return (M * z - rhs).norm() / scale;
}

}  // namespace

SimulationResult rough_rk_simulate(const BilinearRoughSystem& sys, const DriverPath& path,
                                   const ButcherTableau& tableau, const SolverOptions& opts) {
  tableau.validate();
  validate(path);
  if (path.dim() != sys.noise_dim()) {
    throw InvalidArgument("rough_rk_simulate: driver has " + std::to_string(path.dim()) +
                          " components, system expects " + std::to_string(sys.noise_dim()));
  }
  const Eigen::Index n = sys.A().rows();
  const std::size_t steps = path.steps();
  const std::size_t s = tableau.stages();
  const double dt = path.dt();
  const MatrixXd dW = increments(path, 1);
  const MatrixXd I = MatrixXd::Identity(n, n);
  const auto& drift = sys.drift();

  SimulationResult out;
  out.times.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) out.times[k] = path.time(k);
  out.states.resize(static_cast<Eigen::Index>(steps) + 1, n);
  out.states.row(0) = sys.x0().transpose();

  VectorXd z = sys.x0();
  std::vector<VectorXd> stage(s), stage_f(s);
  MatrixXd J(n, n);
  for (std::size_t k = 0; k < steps; ++k) {
    // J x = A x dt + sum_i N_i x (K^{1/2} dW)_i
    const VectorXd sk = sys.K_sqrt() * dW.row(static_cast<Eigen::Index>(k)).transpose();
    J = dt * sys.A();
    for (std::size_t i = 0; i < sys.noise_dim(); ++i) {
      const double w = sk(static_cast<Eigen::Index>(i));
      if (w != 0.0) J += w * sys.N(i);
    }

    double cached_diag = std::numeric_limits<double>::quiet_NaN();
    MatrixXd stage_matrix;
    Eigen::PartialPivLU<MatrixXd> lu;
    for (std::size_t i = 0; i < s; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      VectorXd c = z;
      for (std::size_t j = 0; j < i; ++j) {
        c += tableau.a(ii, static_cast<Eigen::Index>(j)) * stage_f[j];
      }
      const double aii = tableau.a(ii, ii);
      if (!drift) {
        if (aii == 0.0) {
          stage[i] = c;
        } else {
          if (aii != cached_diag) {
            stage_matrix = I - aii * J;
            lu = factor_stage(stage_matrix, k);
            cached_diag = aii;
          }
          stage[i] = lu.solve(c);
          out.diagnostics.max_linear_residual = std::max(
              out.diagnostics.max_linear_residual, linear_residual(stage_matrix, stage[i], c));
        }
        stage_f[i] = J * stage[i];
        continue;
      }

      // Z - c - aii (J Z + dt Z g(Z)) = 0
      VectorXd Zi = c;
      const double target = opts.newton_tol * std::max(1.0, c.norm());
      std::size_t it = 0;
      double res = std::numeric_limits<double>::infinity();
      for (; it <= opts.newton_max; ++it) {
        const double gz = drift->g(Zi);
        const VectorXd R = Zi - c - aii * (J * Zi + dt * gz * Zi);
        res = R.norm();
        if (res <= target) break;
        if (it == opts.newton_max) break;
        const VectorXd grad = drift->grad_g(Zi);
        const MatrixXd Jac = I - aii * (J + dt * (gz * I + Zi * grad.transpose()));
        const auto lu_newton = factor_stage(Jac, k);
        const VectorXd delta = lu_newton.solve(R);
        out.diagnostics.max_linear_residual =
            std::max(out.diagnostics.max_linear_residual, linear_residual(Jac, delta, R));
        Zi -= delta;
        if (!Zi.allFinite()) break;
      }
      if (!(res <= target)) {
        throw NonConvergenceError("rough_rk_simulate: Newton failed at step " +
                                  std::to_string(k) + " stage " + std::to_string(i) +
                                  " (residual " + format_sci(res) + ")", res);
      }
      out.diagnostics.max_newton_iterations =
          std::max(out.diagnostics.max_newton_iterations, it);
      stage[i] = Zi;
      stage_f[i] = J * Zi + dt * drift->g(Zi) * Zi;
    }
    for (std::size_t i = 0; i < s; ++i) z += tableau.b(static_cast<Eigen::Index>(i)) * stage_f[i];
    if (!z.allFinite()) {
      throw StepFailure("rough_rk_simulate: non-finite state after step " + std::to_string(k), k);
    }
    out.states.row(static_cast<Eigen::Index>(k) + 1) = z.transpose();
  }
  out.outputs = out.states * sys.C().transpose();
  return out;
}

SimulationResult rough_rk_simulate(const ReducedModel& model, const DriverPath& path,
                                   const ButcherTableau& tableau, const SolverOptions& opts) {
  return rough_rk_simulate(model.system, path, tableau, opts);
}

SimulationResult smooth_rk4_simulate(const BilinearRoughSystem& sys, const DriverPath& path,
                                     std::size_t substeps) {
  validate(path);
  if (substeps < 1) throw InvalidArgument("smooth_rk4_simulate: substeps >= 1");
  if (path.dim() != sys.noise_dim()) {
    throw InvalidArgument("smooth_rk4_simulate: driver dimension mismatch");
  }
  const PiecewiseDerivative deriv = piecewise_linear_derivative(path);
  const std::size_t M = path.steps();
  const std::size_t total = M * substeps;
  const double h = path.dt() / static_cast<double>(substeps);
  const Eigen::Index n = sys.A().rows();
  const auto& drift = sys.drift();

  SimulationResult out;
  out.times.resize(total + 1);
  out.states.resize(static_cast<Eigen::Index>(total) + 1, n);
  out.times[0] = path.t0;
  out.states.row(0) = sys.x0().transpose();
  VectorXd x = sys.x0();
  MatrixXd B(n, n);
  for (std::size_t k = 0; k < M; ++k) {
    // Constant slope on the interval: dx/dt = (A + sum_m G_m w_m) x + x g(x).
    B = sys.A();
    for (std::size_t m = 0; m < sys.noise_dim(); ++m) {
      B += deriv.slopes(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) *
           sys.mixed_diffusion()[m];
    }
    const auto field = [&](const VectorXd& v) -> VectorXd {
      VectorXd r = B * v;
      if (drift) r += drift->g(v) * v;
      return r;
    };
    for (std::size_t j = 0; j < substeps; ++j) {
      const VectorXd k1 = field(x);
      const VectorXd k2 = field(x + 0.5 * h * k1);
      const VectorXd k3 = field(x + 0.5 * h * k2);
      const VectorXd k4 = field(x + h * k3);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const std::size_t idx = k * substeps + j + 1;
      out.times[idx] = path.t0 + static_cast<double>(idx) * h;
      out.states.row(static_cast<Eigen::Index>(idx)) = x.transpose();
    }
    if (!x.allFinite()) {
      throw StepFailure("smooth_rk4_simulate: non-finite state in interval " + std::to_string(k), k);
    }
  }
  out.outputs = out.states * sys.C().transpose();
  return out;
}

GronwallProbeResult smooth_quadratic_form_probe(const BilinearRoughSystem& sys,
                                                const DriverPath& path, std::size_t substeps,
                                                double tol_gronwall) {
  if (path.kind != DriverKind::smooth_analytic &&
      path.kind != DriverKind::piecewise_linear_interp) {
    throw InvalidArgument(
        "smooth_quadratic_form_probe: driver has no derivative data; use a smooth or "
        "piecewise-linear approximation");
  }
  const SimulationResult traj = smooth_rk4_simulate(sys, path, substeps);
  const PiecewiseDerivative deriv = piecewise_linear_derivative(path);
  const std::size_t M = path.steps();
  const std::size_t total = M * substeps;
  const double h = path.dt() / static_cast<double>(substeps);
  const GramianOdeResult Z = integrate_gramian_ode(sys, GramianSide::reach, path.T - path.t0,
                                                   total, 1);

  double min_gap = std::numeric_limits<double>::infinity();
  MatrixXd bound;
  for (std::size_t idx = 0; idx <= total; ++idx) {
    const std::size_t k = std::min(idx / substeps, M - 1);
    const double into = static_cast<double>(idx - k * substeps) * h;
    const double exponent = deriv.cumulative_sq_norm(static_cast<Eigen::Index>(k)) +
                            deriv.slopes.row(static_cast<Eigen::Index>(k)).squaredNorm() * into;
    bound = std::exp(exponent) * Z.samples[idx];
    const VectorXd x = traj.states.row(static_cast<Eigen::Index>(idx)).transpose();
    const MatrixXd gap = bound - x * x.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (gap + gap.transpose()),
                                                Eigen::EigenvaluesOnly);
    min_gap = std::min(min_gap, eig.eigenvalues().minCoeff());
  }
  const double bound_norm = spectral_norm(bound);
  return {min_gap, bound_norm, min_gap >= -tol_gronwall * bound_norm};
}

namespace {

void require_same_grid(const MatrixXd& a, const MatrixXd& b, const std::vector<double>& t,
                       const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols() ||
      static_cast<std::size_t>(a.rows()) != t.size()) {
    throw InvalidArgument(std::string(who) + ": outputs must share one time grid");
  }
}

}  // namespace

ErrorValue relative_L2_error(const MatrixXd& y_full, const MatrixXd& y_red,
                             const std::vector<double>& times) {
  require_same_grid(y_full, y_red, times, "relative_L2_error");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double w = 0.5 * (times[k + 1] - times[k]);
    const auto a = static_cast<Eigen::Index>(k), b = a + 1;
    num += w * ((y_full.row(a) - y_red.row(a)).squaredNorm() +
                (y_full.row(b) - y_red.row(b)).squaredNorm());
    den += w * (y_full.row(a).squaredNorm() + y_full.row(b).squaredNorm());
  }
  if (den == 0.0) return {std::sqrt(num), true};
  return {std::sqrt(num / den), false};
}

PointwiseError pointwise_relative_error(const MatrixXd& y_full, const MatrixXd& y_red,
                                        const std::vector<double>& times) {
  require_same_grid(y_full, y_red, times, "pointwise_relative_error");
  PointwiseError out;
  out.values.resize(times.size());
  out.zero_denominator.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    const double err = (y_full.row(r) - y_red.row(r)).norm();
    const double ref = y_full.row(r).norm();
    out.zero_denominator[k] = ref == 0.0;
    out.values[k] = ref == 0.0 ? err : err / ref;
  }
  return out;
}

}  // namespace roughmor
