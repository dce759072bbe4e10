#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace roughmor {

/// Solves A X + X A^T = R for square A by Bartels-Stewart: one real Schur
/// factorization A = U T U^T up front, then every solve is a back
/// substitution over the 1x1 / 2x2 diagonal blocks of T.
class LyapunovSolver {
 public:
  explicit LyapunovSolver(const Eigen::MatrixXd& A);

  Eigen::MatrixXd solve(const Eigen::MatrixXd& R) const;

  Eigen::Index order() const { return T_.rows(); }

 private:
  Eigen::MatrixXd U_;
  Eigen::MatrixXd T_;
  // Start index and size (1 or 2) of each diagonal block of T.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks_;
};

}  // namespace roughmor
