#include "roughmor/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "roughmor/errors.hpp"
#include "roughmor/lyapunov.hpp"
#include "roughmor/rng.hpp"

namespace roughmor {

namespace {

MatrixXd symmetrized(const MatrixXd& X) { return 0.5 * (X + X.transpose()); }

void require_square(const MatrixXd& X, Eigen::Index n, const char* who) {
  if (X.rows() != n || X.cols() != n) {
    throw InvalidArgument(std::string(who) + ": expected a " + std::to_string(n) +
                          "x" + std::to_string(n) + " matrix, got " +
                          std::to_string(X.rows()) + "x" + std::to_string(X.cols()));
  }
}

// Pi(X) = sum_m G_m X G_m^T = sum_ij N_i X N_j^T k_ij
MatrixXd noise_part(const BilinearRoughSystem& sys, const MatrixXd& X) {
  MatrixXd out = MatrixXd::Zero(X.rows(), X.cols());
  for (const auto& G : sys.mixed_diffusion()) out.noalias() += G * X * G.transpose();
  return out;
}

MatrixXd noise_part_adjoint(const BilinearRoughSystem& sys, const MatrixXd& X) {
  MatrixXd out = MatrixXd::Zero(X.rows(), X.cols());
  for (const auto& G : sys.mixed_diffusion()) out.noalias() += G.transpose() * X * G;
  return out;
}

}  // namespace

DriftNonlinearity cubic_damping() {
  return DriftNonlinearity{
      [](const VectorXd& x) { return -x.squaredNorm(); },
      [](const VectorXd& x) -> VectorXd { return -2.0 * x; },
  };
}

BilinearRoughSystem::BilinearRoughSystem(MatrixXd A, std::vector<MatrixXd> N,
                                         MatrixXd K, MatrixXd C, VectorXd x0,
                                         std::optional<DriftNonlinearity> drift)
    : A_(std::move(A)),
      N_(std::move(N)),
      K_(std::move(K)),
      C_(std::move(C)),
      x0_(std::move(x0)),
      drift_(std::move(drift)) {
  const Eigen::Index n = A_.rows();
  if (n < 1 || A_.cols() != n) {
    throw InvalidArgument("BilinearRoughSystem: A must be square and non-empty");
  }
  for (const auto& Ni : N_) require_square(Ni, n, "BilinearRoughSystem: N_i");
  const auto d = static_cast<Eigen::Index>(N_.size());
  require_square(K_, d, "BilinearRoughSystem: K");
  if (C_.cols() != n) {
    throw InvalidArgument("BilinearRoughSystem: C must have n columns");
  }
  if (x0_.size() != n) {
    throw InvalidArgument("BilinearRoughSystem: x0 must have n entries");
  }

  K_sqrt_ = MatrixXd::Zero(d, d);
  if (d > 0) {
    const double k_norm = K_.norm();
    if ((K_ - K_.transpose()).norm() > 1e-12 * k_norm) {
      throw InvalidArgument("BilinearRoughSystem: K is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrized(K_));
    const VectorXd lambda = eig.eigenvalues();
    const double k2 = std::max(std::abs(lambda.minCoeff()), std::abs(lambda.maxCoeff()));
    if (lambda.minCoeff() < -1e-12 * std::max(1.0, k2)) {
      throw InvalidArgument("BilinearRoughSystem: K is not positive semidefinite");
    }
    const VectorXd root = lambda.cwiseMax(0.0).cwiseSqrt();
    K_sqrt_ = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
    K_sqrt_ = symmetrized(K_sqrt_);
  }

  G_.assign(N_.size(), MatrixXd::Zero(n, n));
  for (Eigen::Index m = 0; m < d; ++m) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (K_sqrt_(i, m) != 0.0) G_[m] += K_sqrt_(i, m) * N_[i];
    }
  }

  if (drift_) {
    if (!drift_->g || !drift_->grad_g) {
      throw InvalidArgument(
          "BilinearRoughSystem: drift nonlinearity needs both g and grad_g");
    }
    if (drift_->g(x0_) > 0.0 || drift_->g(VectorXd::Zero(n)) > 0.0) {
      throw InvalidArgument(
          "BilinearRoughSystem: drift nonlinearity violates g(x) <= 0");
    }
  }
}

BilinearRoughSystem BilinearRoughSystem::with_initial_state(VectorXd x0) const {
  return BilinearRoughSystem(A_, N_, K_, C_, std::move(x0), drift_);
}

BilinearRoughSystem BilinearRoughSystem::with_output(MatrixXd C) const {
  return BilinearRoughSystem(A_, N_, K_, std::move(C), x0_, drift_);
}

BilinearRoughSystem BilinearRoughSystem::without_nonlinearity() const {
  return BilinearRoughSystem(A_, N_, K_, C_, x0_, std::nullopt);
}

MatrixXd apply_lyapunov(const BilinearRoughSystem& sys, const MatrixXd& X) {
  require_square(X, sys.A().rows(), "apply_lyapunov");
  const MatrixXd Xs = symmetrized(X);
  MatrixXd out = sys.A() * Xs;
  out += out.transpose().eval();
  out += noise_part(sys, Xs);
  return symmetrized(out);
}

MatrixXd apply_lyapunov_adjoint(const BilinearRoughSystem& sys, const MatrixXd& X) {
  require_square(X, sys.A().rows(), "apply_lyapunov_adjoint");
  const MatrixXd Xs = symmetrized(X);
  MatrixXd out = sys.A().transpose() * Xs;
  out += out.transpose().eval();
  out += noise_part_adjoint(sys, Xs);
  return symmetrized(out);
}

VectorXd vec(const MatrixXd& X) {
  return Eigen::Map<const VectorXd>(X.data(), X.size());
}

MatrixXd unvec(const VectorXd& v, Eigen::Index n) {
  if (v.size() != n * n) throw InvalidArgument("unvec: length is not n^2");
  return Eigen::Map<const MatrixXd>(v.data(), n, n);
}

MatrixXd lyapunov_matrix_representation(const BilinearRoughSystem& sys,
                                         std::size_t dense_threshold) {
  const Eigen::Index n = sys.A().rows();
  const auto nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  if (nn > dense_threshold) {
    throw CapabilityError("lyapunov_matrix_representation: n^2 = " +
                          std::to_string(nn) + " exceeds the dense threshold " +
                          std::to_string(dense_threshold) +
                          "; use the iterative stability check instead");
  }
  const MatrixXd I = MatrixXd::Identity(n, n);
  MatrixXd M = MatrixXd::Zero(n * n, n * n);
  // vec(A X) = (I (x) A) vec X, vec(X A^T) = (A (x) I) vec X,
  // vec(N_i X N_j^T) = (N_j (x) N_i) vec X.
  auto add_kron = [&](const MatrixXd& L, const MatrixXd& R, double w) {
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        const double lab = w * L(a, b);
        if (lab != 0.0) M.block(a * n, b * n, n, n) += lab * R;
      }
    }
  };
  add_kron(I, sys.A(), 1.0);
  add_kron(sys.A(), I, 1.0);
  const std::size_t d = sys.noise_dim();
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double k = sys.K()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (k != 0.0) add_kron(sys.N(j), sys.N(i), k);
    }
  }
  return M;
}

StabilityReport is_mean_square_stable(const BilinearRoughSystem& sys,
                                      const StabilityOptions& opts) {
  const auto n = static_cast<std::size_t>(sys.order());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (n * n <= opts.dense_eig_threshold) {
    const MatrixXd M = lyapunov_matrix_representation(sys, opts.dense_eig_threshold);
    Eigen::EigenSolver<MatrixXd> eig(M, /*computeEigenvectors=*/false);
    const double abscissa = eig.eigenvalues().real().maxCoeff();
    return {abscissa, abscissa < 0.0, StabilityMethod::dense_spectrum, nan};
  }

  // lambda(L) in C_- iff A is Hurwitz and the positive operator
  // X -> -L_A^{-1}(Pi(X)) has spectral radius below one.
  Eigen::EigenSolver<MatrixXd> eig_a(sys.A(), false);
  if (eig_a.eigenvalues().real().maxCoeff() >= 0.0) {
    return {nan, false, StabilityMethod::fixed_point_convergence, nan};
  }
  const LyapunovSolver lyap(sys.A());
  MatrixXd X = MatrixXd::Identity(sys.A().rows(), sys.A().rows()) /
               std::sqrt(static_cast<double>(n));
  double rate = 0.0;
  for (std::size_t it = 0; it < opts.power_iterations; ++it) {
    MatrixXd Y = symmetrized(lyap.solve(-noise_part(sys, X)));
    const double norm = Y.norm();
    if (norm == 0.0) {
      rate = 0.0;
      break;
    }
    const bool done = it > 0 && std::abs(norm - rate) <= opts.power_tol * norm;
    rate = norm;
    X = Y / norm;
    if (done) break;
  }
  return {nan, rate < 1.0, StabilityMethod::fixed_point_convergence, rate};
}

double spectral_norm(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues()(0);
}

double positivity_scale(const BilinearRoughSystem& sys) {
  double scale = spectral_norm(sys.A());
  const double k2 = spectral_norm(sys.K());
  for (const auto& Ni : sys.N()) {
    const double s = spectral_norm(Ni);
    scale += s * s * k2;
  }
  return scale;
}

double resolvent_positivity_probe(const BilinearRoughSystem& sys,
                                  std::size_t trials, std::uint64_t seed) {
  const Eigen::Index n = sys.A().rows();
  if (n < 2) {
    throw InvalidArgument(
        "resolvent_positivity_probe: n >= 2 is required for an orthogonal pair");
  }
  if (trials < 1) throw InvalidArgument("resolvent_positivity_probe: trials >= 1");
  Rng rng(derive_seed(seed, 0));
  std::normal_distribution<double> normal;
  auto draw = [&] {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
  };
  double minimum = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    VectorXd u;
    VectorXd v;
    double vn = 0.0;
    do {
      u = draw().normalized();
      v = draw();
      v -= u.dot(v) * u;
      vn = v.norm();
    } while (vn == 0.0);
    v /= vn;
    const MatrixXd V1 = u * u.transpose();
    const MatrixXd V2 = v * v.transpose();
    const double pairing = (apply_lyapunov(sys, V1).array() * V2.array()).sum();
    minimum = std::min(minimum, pairing);
  }
  return minimum;
}

}  // namespace roughmor
