#include "roughmor/lyapunov.hpp"

#include <cmath>
#include <limits>

#include "roughmor/errors.hpp"

namespace roughmor {

using Eigen::Index;
using Eigen::MatrixXd;

LyapunovSolver::LyapunovSolver(const MatrixXd& A) {
  if (A.rows() != A.cols()) {
    throw InvalidArgument("LyapunovSolver: A must be square");
  }
  const Index n = A.rows();
  if (n == 0) return;
  Eigen::RealSchur<MatrixXd> schur(A);
  if (schur.info() != Eigen::Success) {
    throw NumericalError("LyapunovSolver: real Schur factorization failed");
  }
  U_ = schur.matrixU();
  T_ = schur.matrixT();
  for (Index i = 0; i < n;) {
    if (i + 1 < n && T_(i + 1, i) != 0.0) {
      blocks_.emplace_back(i, 2);
      i += 2;
    } else {
      blocks_.emplace_back(i, 1);
      i += 1;
    }
  }
}

MatrixXd LyapunovSolver::solve(const MatrixXd& R) const {
  const Index n = T_.rows();
  if (R.rows() != n || R.cols() != n) {
    throw InvalidArgument("LyapunovSolver::solve: right-hand side has wrong shape");
  }
  if (n == 0) return MatrixXd(0, 0);

  // T Y + Y T^T = F with Y = U^T X U, F = U^T R U.
  const MatrixXd F = U_.transpose() * R * U_;
  MatrixXd Y = MatrixXd::Zero(n, n);
  const double tiny = std::numeric_limits<double>::epsilon() * T_.cwiseAbs().maxCoeff();

  for (auto jb = blocks_.rbegin(); jb != blocks_.rend(); ++jb) {
    const auto [j0, q] = *jb;
    const Index after_j = j0 + q;
    MatrixXd rhs_col = F.middleCols(j0, q);
    if (after_j < n) {
      rhs_col.noalias() -= Y.rightCols(n - after_j) *
                           T_.block(j0, after_j, q, n - after_j).transpose();
    }
    const MatrixXd Tjj = T_.block(j0, j0, q, q);
    for (auto ib = blocks_.rbegin(); ib != blocks_.rend(); ++ib) {
      const auto [i0, p] = *ib;
      const Index after_i = i0 + p;
      MatrixXd rhs = rhs_col.middleRows(i0, p);
      if (after_i < n) {
        rhs.noalias() -= T_.block(i0, after_i, p, n - after_i) *
                         Y.block(after_i, j0, n - after_i, q);
      }
      const MatrixXd Tii = T_.block(i0, i0, p, p);
      if (p == 1 && q == 1) {
        const double denom = Tii(0, 0) + Tjj(0, 0);
        if (std::abs(denom) <= tiny) {
          throw NumericalError(
              "LyapunovSolver: A has eigenvalues with lambda_i + lambda_j = 0");
        }
        Y(i0, j0) = rhs(0, 0) / denom;
        continue;
      }
      // (I_q (x) Tii + Tjj (x) I_p) vec(Yij) = vec(rhs)
      MatrixXd M = MatrixXd::Zero(p * q, p * q);
      for (Index b = 0; b < q; ++b) {
        M.block(b * p, b * p, p, p) += Tii;
        for (Index a = 0; a < q; ++a) {
          M.block(b * p, a * p, p, p) += Tjj(b, a) * MatrixXd::Identity(p, p);
        }
      }
      Eigen::FullPivLU<MatrixXd> lu(M);
      if (lu.rank() < p * q) {
        throw NumericalError(
            "LyapunovSolver: A has eigenvalues with lambda_i + lambda_j = 0");
      }
      const Eigen::VectorXd v = lu.solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), p * q));
      Y.block(i0, j0, p, q) = Eigen::Map<const MatrixXd>(v.data(), p, q);
    }
  }
  return U_ * Y * U_.transpose();
}

}  // namespace roughmor
