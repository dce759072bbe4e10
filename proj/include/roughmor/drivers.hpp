#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace roughmor {

enum class DriverKind { fbm, brownian, smooth_analytic, piecewise_linear_interp };

/// Driver samples on the uniform grid t_k = t0 + k (T - t0) / M, k = 0..M,
/// one column per component. values(0, :) == 0.
struct DriverPath {
  double t0 = 0.0;
  double T = 1.0;
  Eigen::MatrixXd values;
  DriverKind kind = DriverKind::piecewise_linear_interp;
  double hurst = 0.5;
  std::string name;

  std::size_t steps() const { return static_cast<std::size_t>(values.rows()) - 1; }
  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
  double dt() const { return (T - t0) / static_cast<double>(steps()); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt(); }
};

/// Throws InvalidArgument unless the path is well-formed (M >= 1, finite,
/// starts at the origin).
void validate(const DriverPath& path);

struct FbmOptions {
  /// Skip circulant embedding and sample through the dense Cholesky factor.
  bool force_cholesky = false;
};

/// d independent fractional Brownian motions with Hurst index H on M
/// uniform steps of [0, T]. Exact in law: Davies-Harte circulant embedding
/// of the fractional Gaussian noise, with a dense Cholesky fallback.
DriverPath sample_fbm_path(double H, std::size_t d, double T, std::size_t M,
                           std::uint64_t seed, const FbmOptions& opts = {});

/// Fractional Gaussian noise autocovariance
/// 0.5 (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) for unit steps.
double fgn_autocovariance(double H, std::size_t lag);

/// Deterministic paths: "linear" (W_i(t) = v t), "sine" (W_i(t) = v sin(t)),
/// "zero". Components share the shape, scaled by `scale`.
DriverPath smooth_path(const std::string& shape, std::size_t d, double T,
                       std::size_t M, double scale = 1.0);

/// Prepends the time ramp as column 0.
DriverPath augment_with_time(const DriverPath& path);

/// Increments over blocks of `coarsen` fine steps; (M / coarsen) x d.
Eigen::MatrixXd increments(const DriverPath& path, std::size_t coarsen = 1);

/// The same path observed on every `factor`-th grid node.
DriverPath coarsen(const DriverPath& path, std::size_t factor);

/// Smooth approximation W^eps: the piecewise-linear interpolant of `path`
/// through every `factor`-th node, tagged piecewise_linear_interp.
DriverPath piecewise_linear_approximation(const DriverPath& path, std::size_t factor = 1);

struct PiecewiseDerivative {
  /// M x d slopes; row k is the (left-continuous) value on (t_k, t_{k+1}].
  Eigen::MatrixXd slopes;
  /// int_0^{t_k} ||dW/dt||^2 dv for k = 0..M.
  Eigen::VectorXd cumulative_sq_norm;
  double l2_norm_sq;
};

PiecewiseDerivative piecewise_linear_derivative(const DriverPath& path);

}  // namespace roughmor
