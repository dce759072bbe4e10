#include "roughmor/gramians.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "roughmor/errors.hpp"
#include "roughmor/format.hpp"
#include "roughmor/lyapunov.hpp"
#include "roughmor/rng.hpp"

namespace roughmor {

namespace {

MatrixXd symmetrized(const MatrixXd& X) { return 0.5 * (X + X.transpose()); }

bool is_reach(GramianSide side) { return side == GramianSide::reach; }

MatrixXd apply_side(const BilinearRoughSystem& sys, GramianSide side,
                    const MatrixXd& X) {
  return is_reach(side) ? apply_lyapunov(sys, X) : apply_lyapunov_adjoint(sys, X);
}

MatrixXd noise_side(const BilinearRoughSystem& sys, GramianSide side,
                    const MatrixXd& X) {
  MatrixXd out = MatrixXd::Zero(X.rows(), X.cols());
  for (const auto& G : sys.mixed_diffusion()) {
    if (is_reach(side)) {
      out.noalias() += G * X * G.transpose();
    } else {
      out.noalias() += G.transpose() * X * G;
    }
  }
  return symmetrized(out);
}

double frob_dot(const MatrixXd& X, const MatrixXd& Y) {
  return (X.array() * Y.array()).sum();
}

void require_finite(const MatrixXd& X, const std::string& where) {
  if (!X.allFinite()) throw NumericalError(where + ": non-finite entries");
}

/// Eigenvalue floor on returned Gramians: clamp only when the negative part
/// is larger than round-off relative to the top of the spectrum.
MatrixXd clamp_psd(const MatrixXd& G) {
  MatrixXd S = symmetrized(G);
  if (S.size() == 0) return S;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S);
  const VectorXd& lambda = eig.eigenvalues();
  const double top = std::max(lambda.maxCoeff(), 0.0);
  if (lambda.minCoeff() >= -1e-10 * top) return S;
  const VectorXd clamped = lambda.cwiseMax(0.0);
  S = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
  return symmetrized(S);
}

GramianKind kind_of(GramianSide side, bool finite) {
  if (is_reach(side)) return finite ? GramianKind::reach_finite : GramianKind::reach_infinite;
  return finite ? GramianKind::obs_finite : GramianKind::obs_infinite;
}

/// T(X) = -L_A^{-1}(Pi(X)) and P_1 = L_A^{-1}(-B) for either side.
class FixedPointMap {
 public:
  FixedPointMap(const BilinearRoughSystem& sys, GramianSide side)
      : sys_(sys),
        side_(side),
        lyap_(is_reach(side) ? MatrixXd(sys.A()) : MatrixXd(sys.A().transpose())) {}

  MatrixXd base(const MatrixXd& B) const { return symmetrized(lyap_.solve(-B)); }

  MatrixXd apply(const MatrixXd& X) const {
    return symmetrized(lyap_.solve(-noise_side(sys_, side_, X)));
  }

 private:
  const BilinearRoughSystem& sys_;
  GramianSide side_;
  LyapunovSolver lyap_;
};

struct SolveOutcome {
  MatrixXd X;
  std::size_t iterations;
  /// Tolerance actually met: opts.tol, or the round-off floor when the
  /// iteration stagnated there.
  double achieved_tol;
};

/// Residual level below which the relative residual is dominated by rounding
/// in evaluating B + L(X): 8 u (2 ||A||_F + sum ||G_m||_F^2) ||X||_F / ||B||_F.
double rounding_floor(const BilinearRoughSystem& sys, const MatrixXd& X, const MatrixXd& B) {
  double op = 2.0 * sys.A().norm();
  for (const auto& G : sys.mixed_diffusion()) op += G.squaredNorm();
  return 8.0 * std::numeric_limits<double>::epsilon() * op * X.norm() / B.norm();
}

SolveOutcome solve_fixed_point(const BilinearRoughSystem& sys, GramianSide side,
                               const MatrixXd& B, const AlgebraicGramianOptions& opts) {
  const FixedPointMap map(sys, side);
  const MatrixXd P1 = map.base(B);
  MatrixXd P = MatrixXd::Zero(B.rows(), B.cols());
  double res = 1.0;
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    MatrixXd next = P1 + map.apply(P);
    require_finite(next, "solve_algebraic_gramian (fixed point)");
    if (opts.check_monotone) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrized(next - P),
                                                  Eigen::EigenvaluesOnly);
      const double top = std::max(std::abs(eig.eigenvalues().maxCoeff()), 1e-300);
      if (eig.eigenvalues().minCoeff() < -1e-10 * top) {
        throw NumericalError("solve_algebraic_gramian: fixed-point iterates lost "
                             "Loewner monotonicity at iteration " + std::to_string(it));
      }
    }
    P = std::move(next);
    res = gramian_residual(sys, P, side).value;
    if (res <= opts.tol) return {P, it, opts.tol};
  }
  throw NonConvergenceError("solve_algebraic_gramian: fixed-point iteration did not "
                            "reach tol " + format_sci(opts.tol) + " in " +
                            std::to_string(opts.max_iter) + " iterations (residual " +
                            format_sci(res) + ")", res);
}

// One restarted-GMRES cycle on (I - T) X = b starting from x. Returns the
// number of Arnoldi steps taken.
std::size_t gmres_cycle(const FixedPointMap& map, const MatrixXd& b, MatrixXd& x,
                        std::size_t restart, double abs_tol) {
  const auto op = [&](const MatrixXd& X) { return MatrixXd(X - map.apply(X)); };
  MatrixXd r = b - op(x);
  const double beta = r.norm();
  if (beta <= abs_tol || beta == 0.0) return 0;

  std::vector<MatrixXd> basis;
  basis.reserve(restart + 1);
  basis.push_back(r / beta);
  MatrixXd H = MatrixXd::Zero(restart + 1, restart);
  VectorXd cs = VectorXd::Zero(restart), sn = VectorXd::Zero(restart);
  VectorXd g = VectorXd::Zero(restart + 1);
  g(0) = beta;

  std::size_t k = 0;
  for (; k < restart; ++k) {
    MatrixXd w = op(basis[k]);
    // Two passes of modified Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i <= k; ++i) {
        const double h = frob_dot(w, basis[i]);
        H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) += h;
        w -= h * basis[i];
      }
    }
    const double hn = w.norm();
    const auto kk = static_cast<Eigen::Index>(k);
    H(kk + 1, kk) = hn;
    for (Eigen::Index i = 0; i < kk; ++i) {
      const double a = H(i, kk), c = H(i + 1, kk);
      H(i, kk) = cs(i) * a + sn(i) * c;
      H(i + 1, kk) = -sn(i) * a + cs(i) * c;
    }
    const double denom = std::hypot(H(kk, kk), H(kk + 1, kk));
    cs(kk) = denom == 0.0 ? 1.0 : H(kk, kk) / denom;
    sn(kk) = denom == 0.0 ? 0.0 : H(kk + 1, kk) / denom;
    H(kk, kk) = denom;
    H(kk + 1, kk) = 0.0;
    g(kk + 1) = -sn(kk) * g(kk);
    g(kk) = cs(kk) * g(kk);
    const bool done = std::abs(g(kk + 1)) <= abs_tol || hn == 0.0;
    if (!done) basis.push_back(w / hn);
    if (done) {
      ++k;
      break;
    }
  }
  const auto m = static_cast<Eigen::Index>(k);
  const VectorXd y = H.topLeftCorner(m, m).triangularView<Eigen::Upper>().solve(g.head(m));
  for (Eigen::Index i = 0; i < m; ++i) x += y(i) * basis[static_cast<std::size_t>(i)];
  x = symmetrized(x);
  return k;
}

SolveOutcome solve_krylov(const BilinearRoughSystem& sys, GramianSide side,
                          const MatrixXd& B, const AlgebraicGramianOptions& opts) {
  const FixedPointMap map(sys, side);
  const MatrixXd P1 = map.base(B);
  require_finite(P1, "solve_algebraic_gramian (krylov)");
  MatrixXd X = P1;
  std::size_t iterations = 0;
  double res = gramian_residual(sys, X, side).value;
  double inner = opts.tol * P1.norm();
  double best = res;
  int stalled = 0;
  while (res > opts.tol) {
    if (iterations >= opts.max_iter) break;
    const std::size_t budget = std::min(opts.krylov_restart, opts.max_iter - iterations);
    const std::size_t steps = gmres_cycle(map, P1, X, budget, inner);
    iterations += steps;
    require_finite(X, "solve_algebraic_gramian (krylov)");
    res = gramian_residual(sys, X, side).value;
    if (res < 0.5 * best) {
      best = res;
      stalled = 0;
    } else if (++stalled >= 3) {
      break;
    }
    if (res > opts.tol) inner *= std::clamp(opts.tol / res, 1e-4, 0.5);
    if (steps == 0 && res > opts.tol) inner *= 1e-2;
  }
  const double floor = rounding_floor(sys, X, B);
  if (res > opts.tol && res <= floor) {
    return {X, std::max<std::size_t>(iterations, 1), floor};
  }
  if (res > opts.tol) {
    throw NonConvergenceError("solve_algebraic_gramian: Krylov solve did not reach tol " +
                              format_sci(opts.tol) + " (residual " +
                              format_sci(res) + " after " +
                              std::to_string(iterations) + " iterations)", res);
  }
  return {X, std::max<std::size_t>(iterations, 1), opts.tol};
}

SolveOutcome solve_direct(const BilinearRoughSystem& sys, GramianSide side,
                          const MatrixXd& B, const AlgebraicGramianOptions& opts) {
  const MatrixXd M = lyapunov_matrix_representation(sys, opts.direct_threshold);
  const Eigen::Index n = B.rows();
  // The matrix of L* under the Frobenius inner product is M^T.
  Eigen::PartialPivLU<MatrixXd> lu(is_reach(side) ? M : MatrixXd(M.transpose()));
  const VectorXd p = lu.solve(-vec(B));
  MatrixXd X = symmetrized(unvec(p, n));
  require_finite(X, "solve_algebraic_gramian (direct)");
  return {X, 1, std::max(opts.tol, rounding_floor(sys, X, B))};
}

}  // namespace

MatrixXd gramian_rhs(const BilinearRoughSystem& sys, GramianSide side) {
  if (is_reach(side)) return sys.x0() * sys.x0().transpose();
  return sys.C().transpose() * sys.C();
}

ResidualValue gramian_residual(const BilinearRoughSystem& sys, const MatrixXd& G,
                               GramianSide side) {
  const MatrixXd B = gramian_rhs(sys, side);
  const double abs_res = (B + apply_side(sys, side, G)).norm();
  const double bn = B.norm();
  if (bn == 0.0) return {abs_res, true};
  return {abs_res / bn, false};
}

VectorXd descending_eigenvalues(const MatrixXd& G) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrized(G), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().reverse();
}

GramianOdeResult integrate_gramian_ode(const BilinearRoughSystem& sys,
                                       GramianSide side, double T, std::size_t steps,
                                       std::size_t sample_stride) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw InvalidArgument("integrate_gramian_ode: T must be positive and finite");
  }
  if (steps < 1) throw InvalidArgument("integrate_gramian_ode: steps >= 1");
  const double h = T / static_cast<double>(steps);
  const MatrixXd Z0 = gramian_rhs(sys, side);
  MatrixXd Z = Z0;
  MatrixXd S = MatrixXd::Zero(Z.rows(), Z.cols());
  const auto f = [&](const MatrixXd& X) { return apply_side(sys, side, X); };

  GramianOdeResult out;
  if (sample_stride > 0) {
    out.sample_times.push_back(0.0);
    out.samples.push_back(Z);
  }
  for (std::size_t k = 0; k < steps; ++k) {
    // RK4 on the pair (Z, S) with S' = Z.
    const MatrixXd k1 = f(Z);
    const MatrixXd Z2 = Z + 0.5 * h * k1;
    const MatrixXd k2 = f(Z2);
    const MatrixXd Z3 = Z + 0.5 * h * k2;
    const MatrixXd k3 = f(Z3);
    const MatrixXd Z4 = Z + h * k3;
    const MatrixXd k4 = f(Z4);
    S += (h / 6.0) * (Z + 2.0 * Z2 + 2.0 * Z3 + Z4);
    Z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    Z = symmetrized(Z);
    S = symmetrized(S);
    if (!Z.allFinite() || !S.allFinite()) {
      throw NumericalError("integrate_gramian_ode: overflow at step " +
                           std::to_string(k + 1) + " of " + std::to_string(steps) +
                           " (system unstable or horizon too long)");
    }
    if (sample_stride > 0 && (k + 1) % sample_stride == 0) {
      out.sample_times.push_back(static_cast<double>(k + 1) * h);
      out.samples.push_back(Z);
    }
  }

  // Defining identity of the finite Gramian: Z(T) = Z(0) + L(P_T).
  const double denom = Z0.norm();
  const double res = (Z0 + apply_side(sys, side, S) - Z).norm();
  GramianResult g;
  g.matrix = clamp_psd(S);
  g.kind = kind_of(side, true);
  g.residual = denom > 0.0 ? res / denom : res;
  g.tolerance = 1e-10;
  g.iterations = steps;
  g.horizon = T;
  out.gramian = std::move(g);
  return out;
}

GramianResult solve_algebraic_gramian(const BilinearRoughSystem& sys, GramianSide side,
                                      const AlgebraicGramianOptions& opts) {
  if (!(opts.tol > 0.0)) throw InvalidArgument("solve_algebraic_gramian: tol > 0");
  if (!opts.force_unstable) {
    const StabilityReport report = is_mean_square_stable(sys);
    if (!report.is_mean_square_stable) {
      throw PreconditionError(
          "solve_algebraic_gramian: system is not mean-square stable "
          "(spectral abscissa " + format_sci(report.spectral_abscissa) +
          ", fixed-point rate " + format_sci(report.fixed_point_rate) +
          "); pass force_unstable to override");
    }
  }
  const MatrixXd B = gramian_rhs(sys, side);
  if (B.norm() == 0.0) {
    const auto n = sys.A().rows();
    return {MatrixXd::Zero(n, n), kind_of(side, false), 0.0, opts.tol, 0,
            std::numeric_limits<double>::infinity()};
  }
  SolveOutcome outcome;
  switch (opts.solver) {
    case GramianSolver::fixed_point:
      outcome = solve_fixed_point(sys, side, B, opts);
      break;
    case GramianSolver::direct:
      outcome = solve_direct(sys, side, B, opts);
      break;
    case GramianSolver::krylov:
      outcome = solve_krylov(sys, side, B, opts);
      break;
  }
  GramianResult g;
  g.matrix = clamp_psd(outcome.X);
  g.kind = kind_of(side, false);
  g.residual = gramian_residual(sys, g.matrix, side).value;
  g.tolerance = outcome.achieved_tol;
  g.iterations = outcome.iterations;
  g.horizon = std::numeric_limits<double>::infinity();
  if (opts.solver == GramianSolver::direct && g.residual > g.tolerance) {
    throw NonConvergenceError("solve_algebraic_gramian: direct solve residual " +
                              format_sci(g.residual) + " above tol", g.residual);
  }
  return g;
}

MonteCarloMoment monte_carlo_second_moment(const BilinearRoughSystem& sys,
                                           GramianSide side, double T,
                                           std::size_t n_paths, double dt,
                                           std::uint64_t seed,
                                           std::size_t sample_stride) {
  if (n_paths < 2) throw InvalidArgument("monte_carlo_second_moment: n_paths >= 2");
  if (!(dt > 0.0) || dt >= T) {
    throw InvalidArgument("monte_carlo_second_moment: need 0 < dt < T");
  }
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  const double h = T / static_cast<double>(steps);
  const double sqrt_h = std::sqrt(h);
  const Eigen::Index n = sys.A().rows();
  const std::size_t d = sys.noise_dim();

  const bool reach = is_reach(side);
  const MatrixXd drift = reach ? MatrixXd(sys.A()) : MatrixXd(sys.A().transpose());
  std::vector<MatrixXd> diffusion;
  for (const auto& G : sys.mixed_diffusion()) {
    diffusion.push_back(reach ? G : MatrixXd(G.transpose()));
  }

  std::vector<VectorXd> starts;
  if (reach) {
    starts.push_back(sys.x0());
  } else {
    for (Eigen::Index l = 0; l < sys.C().rows(); ++l) {
      if (sys.C().row(l).squaredNorm() > 0.0) starts.push_back(sys.C().row(l).transpose());
    }
  }

  const std::size_t n_samples = sample_stride > 0 ? steps / sample_stride + 1 : 0;
  MonteCarloMoment out;
  out.n_paths = n_paths;
  out.mean.assign(n_samples, MatrixXd::Zero(n, n));
  out.std_error.assign(n_samples, MatrixXd::Zero(n, n));
  for (std::size_t s = 0; s < n_samples; ++s) {
    out.times.push_back(static_cast<double>(s * sample_stride) * h);
  }
  out.integral = MatrixXd::Zero(n, n);
  out.integral_std_error = MatrixXd::Zero(n, n);

  const double np = static_cast<double>(n_paths);
  auto finish = [np](const MatrixXd& sum, const MatrixXd& sumsq, MatrixXd& mean,
                     MatrixXd& se_sq) {
    const MatrixXd m = sum / np;
    const MatrixXd var = ((sumsq - np * m.cwiseProduct(m)) / (np - 1.0)).cwiseMax(0.0);
    mean += m;
    se_sq += var / np;
  };

  std::vector<MatrixXd> se_sq(n_samples, MatrixXd::Zero(n, n));
  MatrixXd integral_se_sq = MatrixXd::Zero(n, n);
  VectorXd x(n), dx(n);
  std::normal_distribution<double> normal;
  for (std::size_t row = 0; row < starts.size(); ++row) {
    std::vector<MatrixXd> sum(n_samples, MatrixXd::Zero(n, n));
    std::vector<MatrixXd> sumsq(n_samples, MatrixXd::Zero(n, n));
    MatrixXd isum = MatrixXd::Zero(n, n), isumsq = MatrixXd::Zero(n, n);
    MatrixXd path_integral(n, n), outer(n, n);
    for (std::size_t p = 0; p < n_paths; ++p) {
      Rng rng(derive_seed(seed, row, p));
      normal.reset();
      x = starts[row];
      outer.noalias() = x * x.transpose();
      path_integral = 0.5 * h * outer;
      if (n_samples > 0) {
        sum[0] += outer;
        sumsq[0] += outer.cwiseProduct(outer);
      }
      for (std::size_t k = 0; k < steps; ++k) {
        dx.noalias() = h * (drift * x);
        for (std::size_t m = 0; m < d; ++m) {
          const double db = sqrt_h * normal(rng);
          dx.noalias() += db * (diffusion[m] * x);
        }
        x += dx;
        outer.noalias() = x * x.transpose();
        path_integral += (k + 1 == steps ? 0.5 : 1.0) * h * outer;
        if (sample_stride > 0 && (k + 1) % sample_stride == 0) {
          const std::size_t s = (k + 1) / sample_stride;
          sum[s] += outer;
          sumsq[s] += outer.cwiseProduct(outer);
        }
      }
      if (!x.allFinite()) {
        throw NumericalError("monte_carlo_second_moment: path " + std::to_string(p) +
                             " overflowed");
      }
      isum += path_integral;
      isumsq += path_integral.cwiseProduct(path_integral);
    }
    for (std::size_t s = 0; s < n_samples; ++s) finish(sum[s], sumsq[s], out.mean[s], se_sq[s]);
    finish(isum, isumsq, out.integral, integral_se_sq);
  }
  for (std::size_t s = 0; s < n_samples; ++s) out.std_error[s] = se_sq[s].cwiseSqrt();
  out.integral_std_error = integral_se_sq.cwiseSqrt();
  return out;
}

}  // namespace roughmor
