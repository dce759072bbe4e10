#include "roughmor/drivers.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "roughmor/errors.hpp"
#include "roughmor/rng.hpp"

namespace roughmor {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void validate(const DriverPath& path) {
  if (path.values.rows() < 2 || path.values.cols() < 1) {
    throw InvalidArgument("DriverPath: need M >= 1 steps and d >= 1 components");
  }
  if (!(path.T > path.t0)) throw InvalidArgument("DriverPath: T must exceed t0");
  if (!path.values.allFinite()) throw InvalidArgument("DriverPath: non-finite samples");
  if (path.values.row(0).cwiseAbs().maxCoeff() != 0.0) {
    throw InvalidArgument("DriverPath: paths must start at the origin");
  }
}

double fgn_autocovariance(double H, std::size_t lag) {
  const double k = static_cast<double>(lag);
  const double e = 2.0 * H;
  return 0.5 * (std::pow(k + 1.0, e) - 2.0 * std::pow(k, e) + std::pow(std::abs(k - 1.0), e));
}

namespace {

// Unit-step fractional Gaussian noise of length M for one component, or an
// empty vector when the circulant embedding has a negative eigenvalue.
std::vector<double> fgn_circulant(double H, std::size_t M, Rng& rng) {
  const std::size_t m = 2 * M;
  std::vector<std::complex<double>> c(m), lambda;
  for (std::size_t j = 0; j <= M; ++j) c[j] = fgn_autocovariance(H, j);
  for (std::size_t j = 1; j < M; ++j) c[m - j] = c[j];
  Eigen::FFT<double> fft;
  fft.fwd(lambda, c);
  double top = 0.0;
  for (const auto& l : lambda) top = std::max(top, l.real());
  std::vector<double> ev(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double v = lambda[k].real();
    if (v < -1e-12 * top) return {};
    ev[k] = std::max(v, 0.0);
  }

  std::normal_distribution<double> normal;
  const double md = static_cast<double>(m);
  std::vector<std::complex<double>> w(m);
  w[0] = std::sqrt(ev[0] / md) * normal(rng);
  w[M] = std::sqrt(ev[M] / md) * normal(rng);
  for (std::size_t k = 1; k < M; ++k) {
    const double s = std::sqrt(ev[k] / (2.0 * md));
    const double re = normal(rng);
    const double im = normal(rng);
    w[k] = std::complex<double>(s * re, s * im);
    w[m - k] = std::conj(w[k]);
  }
  std::vector<std::complex<double>> x;
  fft.fwd(x, w);
  std::vector<double> out(M);
  for (std::size_t j = 0; j < M; ++j) out[j] = x[j].real();
  return out;
}

std::vector<double> fgn_cholesky(double H, std::size_t M, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(M);
  MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      cov(i, j) = fgn_autocovariance(H, static_cast<std::size_t>(std::abs(i - j)));
    }
  }
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("sample_fbm_path: covariance is not positive definite");
  }
  std::normal_distribution<double> normal;
  VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  const VectorXd x = llt.matrixL() * z;
  return std::vector<double>(x.data(), x.data() + n);
}

}  // namespace

DriverPath sample_fbm_path(double H, std::size_t d, double T, std::size_t M,
                           std::uint64_t seed, const FbmOptions& opts) {
  if (!(H > 0.0 && H < 1.0)) throw InvalidArgument("sample_fbm_path: H must lie in (0, 1)");
  if (M < 2) throw InvalidArgument("sample_fbm_path: M >= 2");
  if (d < 1) throw InvalidArgument("sample_fbm_path: d >= 1");
  if (!(T > 0.0)) throw InvalidArgument("sample_fbm_path: T > 0");

  DriverPath path;
  path.t0 = 0.0;
  path.T = T;
  path.kind = H == 0.5 ? DriverKind::brownian : DriverKind::fbm;
  path.hurst = H;
  path.name = "fbm";
  path.values = MatrixXd::Zero(static_cast<Eigen::Index>(M) + 1, static_cast<Eigen::Index>(d));
  const double scale = std::pow(T / static_cast<double>(M), H);
  for (std::size_t c = 0; c < d; ++c) {
    Rng rng(derive_seed(seed, c));
    std::vector<double> noise;
    if (!opts.force_cholesky) noise = fgn_circulant(H, M, rng);
    if (noise.empty()) noise = fgn_cholesky(H, M, rng);
    double acc = 0.0;
    for (std::size_t k = 0; k < M; ++k) {
      acc += scale * noise[k];
      path.values(static_cast<Eigen::Index>(k) + 1, static_cast<Eigen::Index>(c)) = acc;
    }
  }
  return path;
}

DriverPath smooth_path(const std::string& shape, std::size_t d, double T, std::size_t M,
                       double scale) {
  if (M < 1 || d < 1 || !(T > 0.0)) {
    throw InvalidArgument("smooth_path: need M >= 1, d >= 1, T > 0");
  }
  DriverPath path;
  path.T = T;
  path.kind = DriverKind::smooth_analytic;
  path.name = shape;
  path.values = MatrixXd::Zero(static_cast<Eigen::Index>(M) + 1, static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k <= M; ++k) {
    const double t = T * static_cast<double>(k) / static_cast<double>(M);
    double v = 0.0;
    if (shape == "linear") {
      v = scale * t;
    } else if (shape == "sine") {
      v = scale * std::sin(t);
    } else if (shape != "zero") {
      throw InvalidArgument("smooth_path: unknown shape '" + shape + "'");
    }
    path.values.row(static_cast<Eigen::Index>(k)).setConstant(v);
  }
  return path;
}

DriverPath augment_with_time(const DriverPath& path) {
  validate(path);
  DriverPath out = path;
  const auto rows = path.values.rows();
  out.values.resize(rows, path.values.cols() + 1);
  for (Eigen::Index k = 0; k < rows; ++k) {
    out.values(k, 0) = path.time(static_cast<std::size_t>(k)) - path.t0;
  }
  out.values.rightCols(path.values.cols()) = path.values;
  return out;
}

MatrixXd increments(const DriverPath& path, std::size_t coarsen_by) {
  validate(path);
  const std::size_t M = path.steps();
  if (coarsen_by < 1 || M % coarsen_by != 0) {
    throw InvalidArgument("increments: coarsening factor must divide M");
  }
  const auto K = static_cast<Eigen::Index>(M / coarsen_by);
  const auto c = static_cast<Eigen::Index>(coarsen_by);
  MatrixXd out(K, path.values.cols());
  for (Eigen::Index k = 0; k < K; ++k) {
    out.row(k) = path.values.row((k + 1) * c) - path.values.row(k * c);
  }
  return out;
}

DriverPath coarsen(const DriverPath& path, std::size_t factor) {
  validate(path);
  const std::size_t M = path.steps();
  if (factor < 1 || M % factor != 0) {
    throw InvalidArgument("coarsen: factor must divide M");
  }
  DriverPath out = path;
  const auto K = static_cast<Eigen::Index>(M / factor);
  out.values.resize(K + 1, path.values.cols());
  for (Eigen::Index k = 0; k <= K; ++k) {
    out.values.row(k) = path.values.row(k * static_cast<Eigen::Index>(factor));
  }
  return out;
}

DriverPath piecewise_linear_approximation(const DriverPath& path, std::size_t factor) {
  DriverPath out = coarsen(path, factor);
  out.kind = DriverKind::piecewise_linear_interp;
  return out;
}

PiecewiseDerivative piecewise_linear_derivative(const DriverPath& path) {
  validate(path);
  const double dt = path.dt();
  PiecewiseDerivative out;
  out.slopes = increments(path, 1) / dt;
  const auto M = out.slopes.rows();
  out.cumulative_sq_norm = VectorXd::Zero(M + 1);
  for (Eigen::Index k = 0; k < M; ++k) {
    out.cumulative_sq_norm(k + 1) = out.cumulative_sq_norm(k) + out.slopes.row(k).squaredNorm() * dt;
  }
  out.l2_norm_sq = out.cumulative_sq_norm(M);
  return out;
}

}  // namespace roughmor
