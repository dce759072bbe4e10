#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace roughmor {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Scalar drift factor of the nonlinearity f(x) = x * g(x). The contract
/// g(x) <= 0 for all x is the caller's responsibility; construction of a
/// system spot-checks it at x0 and at 0.
struct DriftNonlinearity {
  std::function<double(const VectorXd&)> g;
  std::function<VectorXd(const VectorXd&)> grad_g;
};

/// g(x) = -||x||^2, i.e. f(x) = -x ||x||^2.
DriftNonlinearity cubic_damping();

/// dx = [A x + x g(x)] dt + N(x) K^{1/2} dW,  y = C x,  x(0) = x0,
/// with N(x) = [N_1 x ... N_d x].
///
/// All members are fixed after construction. K^{1/2} is the symmetric PSD
/// root (negative eigenvalues of K clamped to zero), and the mixed diffusion
/// matrices G_m = sum_i N_i (K^{1/2})_{im} are cached because every noise
/// term in the library is expressed through them.
class BilinearRoughSystem {
 public:
  BilinearRoughSystem(MatrixXd A, std::vector<MatrixXd> N, MatrixXd K,
                      MatrixXd C, VectorXd x0,
                      std::optional<DriftNonlinearity> drift = std::nullopt);

  const MatrixXd& A() const { return A_; }
  const std::vector<MatrixXd>& N() const { return N_; }
  const MatrixXd& N(std::size_t i) const { return N_[i]; }
  const MatrixXd& K() const { return K_; }
  const MatrixXd& K_sqrt() const { return K_sqrt_; }
  const std::vector<MatrixXd>& mixed_diffusion() const { return G_; }
  const MatrixXd& C() const { return C_; }
  const VectorXd& x0() const { return x0_; }
  const std::optional<DriftNonlinearity>& drift() const { return drift_; }
  bool has_nonlinearity() const { return drift_.has_value(); }

  std::size_t order() const { return static_cast<std::size_t>(A_.rows()); }
  std::size_t noise_dim() const { return N_.size(); }
  std::size_t output_dim() const { return static_cast<std::size_t>(C_.rows()); }

  BilinearRoughSystem with_initial_state(VectorXd x0) const;
  BilinearRoughSystem with_output(MatrixXd C) const;
  BilinearRoughSystem without_nonlinearity() const;

 private:
  MatrixXd A_;
  std::vector<MatrixXd> N_;
  MatrixXd K_;
  MatrixXd K_sqrt_;
  std::vector<MatrixXd> G_;
  MatrixXd C_;
  VectorXd x0_;
  std::optional<DriftNonlinearity> drift_;
};

/// L(X) = A X + X A^T + sum_{ij} N_i X N_j^T k_ij. Input is symmetrized.
MatrixXd apply_lyapunov(const BilinearRoughSystem& sys, const MatrixXd& X);

/// L*(X) = A^T X + X A + sum_{ij} N_i^T X N_j k_ij. Input is symmetrized.
MatrixXd apply_lyapunov_adjoint(const BilinearRoughSystem& sys,
                                const MatrixXd& X);

/// Column-major vec convention throughout: vec(X)[i + j*n] = X(i, j).
VectorXd vec(const MatrixXd& X);
MatrixXd unvec(const VectorXd& v, Eigen::Index n);

inline constexpr std::size_t kDenseThreshold = 10000;

/// Matrix M of L on vec-space: M vec(X) = vec(L(X)),
/// M = I (x) A + A (x) I + sum_ij k_ij N_j (x) N_i.
/// Throws CapabilityError when n^2 exceeds dense_threshold.
MatrixXd lyapunov_matrix_representation(
    const BilinearRoughSystem& sys,
    std::size_t dense_threshold = kDenseThreshold);

enum class StabilityMethod { dense_spectrum, fixed_point_convergence };

struct StabilityReport {
  /// max Re lambda(L); NaN when method == fixed_point_convergence.
  double spectral_abscissa;
  bool is_mean_square_stable;
  StabilityMethod method;
  /// Spectral radius of X -> -L_A^{-1}(Pi(X)), the asymptotic contraction
  /// factor of the fixed-point Gramian iteration (NaN for dense_spectrum, or
  /// when A itself is not Hurwitz).
  double fixed_point_rate;
};

struct StabilityOptions {
  /// Largest n^2 for which the dense n^2 x n^2 eigenproblem is solved.
  std::size_t dense_eig_threshold = 1024;
  std::size_t power_iterations = 2000;
  double power_tol = 1e-12;
};

StabilityReport is_mean_square_stable(const BilinearRoughSystem& sys,
                                      const StabilityOptions& opts = {});

/// Operator-norm scale ||A||_2 + sum_i ||N_i||_2^2 ||K||_2 used to normalize
/// the positivity probe.
double positivity_scale(const BilinearRoughSystem& sys);

/// Minimum of <L(u u^T), v v^T>_F over random orthonormal pairs (u, v).
/// Resolvent positivity makes every such pairing nonnegative.
double resolvent_positivity_probe(const BilinearRoughSystem& sys,
                                  std::size_t trials, std::uint64_t seed);

double spectral_norm(const MatrixXd& M);

}  // namespace roughmor
