#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "roughmor/system_model.hpp"

namespace testing {

using roughmor::BilinearRoughSystem;
using roughmor::MatrixXd;
using roughmor::VectorXd;

inline MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  MatrixXd M(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) M(i, j++) = v;
    ++i;
  }
  return M;
}

inline MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

/// dx = a x dt + nu x dW, y = x, x(0) = x0.
inline BilinearRoughSystem scalar_system(double a, double nu, double k = 1.0, double x0 = 1.0) {
  return BilinearRoughSystem(scalar(a), {scalar(nu)}, scalar(k), scalar(1.0),
                             VectorXd::Constant(1, x0));
}

inline MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  MatrixXd M(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) M(i, j) = nd(rng);
  return M;
}

inline MatrixXd random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
  const MatrixXd M = random_matrix(n, n, rng);
  return 0.5 * (M + M.transpose());
}

/// Unstructured system with Hurwitz-shifted A and small noise.
inline BilinearRoughSystem random_system(Eigen::Index n, std::size_t d, std::mt19937_64& rng,
                                         double noise = 0.3) {
  const MatrixXd A = 0.3 * random_matrix(n, n, rng) - 2.0 * MatrixXd::Identity(n, n);
  std::vector<MatrixXd> N;
  for (std::size_t i = 0; i < d; ++i) N.push_back(noise * random_matrix(n, n, rng));
  const auto dd = static_cast<Eigen::Index>(d);
  const MatrixXd L = random_matrix(dd, dd, rng);
  const MatrixXd K = L * L.transpose() / static_cast<double>(d) + 0.5 * MatrixXd::Identity(dd, dd);
  return BilinearRoughSystem(A, N, K, random_matrix(1, n, rng), random_matrix(n, 1, rng).col(0));
}

/// Entry (i + j n, k + l n) of the vec-space matrix of L computed straight
/// from L(X)_ij = sum_k A_ik X_kj + sum_l X_il A_jl + sum_ab k_ab (N_a X N_b^T)_ij.
inline MatrixXd elementwise_operator_matrix(const BilinearRoughSystem& sys) {
  const Eigen::Index n = sys.A().rows();
  const auto d = sys.noise_dim();
  MatrixXd M = MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < n; ++l) {
          double v = 0.0;
          if (j == l) v += sys.A()(i, k);
          if (i == k) v += sys.A()(j, l);
          for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
              v += sys.K()(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) *
                   sys.N(a)(i, k) * sys.N(b)(j, l);
          M(i + j * n, k + l * n) = v;
        }
  return M;
}

inline double rel_diff(const MatrixXd& X, const MatrixXd& Y) {
  const double s = std::max(Y.norm(), 1e-300);
  return (X - Y).norm() / s;
}

}  // namespace testing
