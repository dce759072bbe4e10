#include "roughmor/heat_model.hpp"

#include <cmath>
#include <string>

#include "roughmor/errors.hpp"

namespace roughmor {

void Heat1dConfig::validate() const {
  if (n < 2) throw InvalidArgument("Heat1dConfig: n >= 2");
  if (beta.size() != gamma.size()) {
    throw InvalidArgument("Heat1dConfig: beta and gamma need one entry per driver");
  }
  for (std::size_t k = 0; k < beta.size(); ++k) {
    if (!beta[k] || !gamma[k]) throw InvalidArgument("Heat1dConfig: empty coefficient");
  }
  if (!initial_profile) throw InvalidArgument("Heat1dConfig: missing initial profile");
  const auto d = static_cast<Eigen::Index>(beta.size());
  if (K.size() != 0 && (K.rows() != d || K.cols() != d)) {
    throw InvalidArgument("Heat1dConfig: K must be d x d");
  }
}

SpatialFunction builtin_function(const std::string& name, const std::vector<double>& params) {
  auto need = [&](std::size_t count) {
    if (params.size() != count) {
      throw InvalidArgument("builtin_function: '" + name + "' takes " + std::to_string(count) +
                            " parameter(s)");
    }
  };
  if (name == "constant") {
    need(1);
    const double c = params[0];
    return [c](double) { return c; };
  }
  if (name == "sin-scaled") {
    need(1);
    const double a = params[0];
    return [a](double z) { return a * std::sin(z); };
  }
  if (name == "cos-scaled") {
    need(1);
    const double a = params[0];
    return [a](double z) { return a * std::cos(z); };
  }
  if (name == "gaussian-bump") {
    need(3);
    const double a = params[0], c = params[1], w = params[2];
    return [a, c, w](double z) { return a * std::exp(-w * (z - c) * (z - c)); };
  }
  throw InvalidArgument("builtin_function: unknown coefficient '" + name + "'");
}

Heat1dConfig default_heat_config(std::size_t n) {
  Heat1dConfig cfg;
  cfg.n = n;
  cfg.beta = {builtin_function("constant", {0.4}), builtin_function("constant", {-0.2})};
  cfg.gamma = {builtin_function("sin-scaled", {4.0}), builtin_function("cos-scaled", {4.0})};
  cfg.initial_profile = builtin_function("gaussian-bump", {1.0, 0.5, 2.0});
  cfg.K = MatrixXd::Identity(2, 2);
  return cfg;
}

BilinearRoughSystem build_heat1d(const Heat1dConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const double h = 1.0 / static_cast<double>(cfg.n + 1);
  const double inv_h2 = 1.0 / (h * h);

  MatrixXd A = MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    A(j, j) = -2.0 * inv_h2;
    if (j > 0) A(j, j - 1) = inv_h2;
    if (j + 1 < n) A(j, j + 1) = inv_h2;
  }

  std::vector<MatrixXd> N;
  for (std::size_t k = 0; k < cfg.beta.size(); ++k) {
    MatrixXd Nk = MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double zeta = static_cast<double>(j + 1) * h;
      const double b = cfg.beta[k](zeta);
      Nk(j, j) = -b / h + cfg.gamma[k](zeta);
      if (j + 1 < n) Nk(j, j + 1) = b / h;
    }
    N.push_back(std::move(Nk));
  }

  VectorXd x0(n);
  for (Eigen::Index j = 0; j < n; ++j) x0(j) = cfg.initial_profile(static_cast<double>(j + 1) * h);
  const MatrixXd C = MatrixXd::Constant(1, n, 1.0 / static_cast<double>(n));
  const auto d = static_cast<Eigen::Index>(cfg.beta.size());
  const MatrixXd K = cfg.K.size() == 0 ? MatrixXd(MatrixXd::Identity(d, d)) : cfg.K;
  return BilinearRoughSystem(std::move(A), std::move(N), K, C, std::move(x0));
}

}  // namespace roughmor
