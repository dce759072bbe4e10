#include "roughmor/fixtures.hpp"

#include <cmath>

#include "roughmor/errors.hpp"
#include "roughmor/rng.hpp"

namespace roughmor {

namespace {

MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal;
  MatrixXd M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = normal(rng);
  }
  return M;
}

MatrixXd random_orthogonal(Eigen::Index n, Rng& rng) {
  Eigen::HouseholderQR<MatrixXd> qr(gaussian_matrix(n, n, rng));
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, n);
  const VectorXd diag = qr.matrixQR().diagonal();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (diag(j) < 0.0) Q.col(j) *= -1.0;
  }
  return Q;
}

// Zeroes the blocks that would break the reachability / observability
// structure of (a, b, c).
void impose_structure(MatrixXd& M, Eigen::Index na, Eigen::Index nb, Eigen::Index nc) {
  const Eigen::Index b0 = na, c0 = na + nb;
  // x_b only feeds itself.
  M.block(b0, 0, nb, na).setZero();
  M.block(b0, c0, nb, nc).setZero();
  // x_c never feeds x_a or x_b.
  M.block(0, c0, na + nb, nc).setZero();
}

// Random block with eigenvalues well inside the left half plane.
MatrixXd stable_block(Eigen::Index n, Rng& rng) {
  const MatrixXd G = gaussian_matrix(n, n, rng);
  return 0.3 * G - (1.0 + 0.3 * std::sqrt(static_cast<double>(n))) *
                       MatrixXd::Identity(n, n);
}

}  // namespace

RandomSystem random_stable_system(const RandomSystemSpec& spec, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto nb = static_cast<Eigen::Index>(spec.unreachable);
  const auto nc = static_cast<Eigen::Index>(spec.unobservable);
  const Eigen::Index na = n - nb - nc;
  if (spec.n < 1 || na < 1) {
    throw InvalidArgument("random_stable_system: need at least one reachable, observable state");
  }
  if (spec.d < 1 || spec.p < 1) throw InvalidArgument("random_stable_system: d, p >= 1");

  Rng rng(derive_seed(seed, 0x5eed));
  MatrixXd A = MatrixXd::Zero(n, n);
  A.block(0, 0, na, na) = stable_block(na, rng);
  if (nb > 0) A.block(na, na, nb, nb) = stable_block(nb, rng);
  if (nc > 0) A.block(na + nb, na + nb, nc, nc) = stable_block(nc, rng);
  // Couplings that respect the structure.
  MatrixXd coupling = 0.3 * gaussian_matrix(n, n, rng);
  impose_structure(coupling, na, nb, nc);
  coupling.block(0, 0, na, na).setZero();
  if (nb > 0) coupling.block(na, na, nb, nb).setZero();
  if (nc > 0) coupling.block(na + nb, na + nb, nc, nc).setZero();
  A += coupling;

  std::vector<MatrixXd> N0;
  for (std::size_t i = 0; i < spec.d; ++i) {
    MatrixXd Ni = gaussian_matrix(n, n, rng) / std::sqrt(static_cast<double>(n));
    impose_structure(Ni, na, nb, nc);
    N0.push_back(Ni);
  }

  const auto d = static_cast<Eigen::Index>(spec.d);
  MatrixXd K = MatrixXd::Identity(d, d);
  if (spec.random_covariance) {
    const MatrixXd L = gaussian_matrix(d, d, rng);
    K = L * L.transpose() / static_cast<double>(d) + 0.5 * MatrixXd::Identity(d, d);
  }

  MatrixXd C = gaussian_matrix(static_cast<Eigen::Index>(spec.p), n, rng);
  if (nc > 0) C.rightCols(nc).setZero();
  VectorXd x0 = gaussian_matrix(n, 1, rng).col(0);
  if (nb > 0) x0.segment(na, nb).setZero();

  const MatrixXd U = random_orthogonal(n, rng);
  auto rotate = [&U](const MatrixXd& M) -> MatrixXd { return U * M * U.transpose(); };

  std::optional<DriftNonlinearity> drift;
  if (spec.cubic_drift) drift = cubic_damping();

  double scale = spec.noise_scale;
  for (int attempt = 0; attempt < 40; ++attempt) {
    std::vector<MatrixXd> N;
    for (const auto& Ni : N0) N.push_back(rotate(scale * Ni));
    BilinearRoughSystem sys(rotate(A), N, K, C * U.transpose(), U * x0, drift);
    if (is_mean_square_stable(sys.without_nonlinearity()).is_mean_square_stable) {
      MatrixXd R(n, na + nc);
      R << U.leftCols(na), U.rightCols(nc);
      RandomSystem out{std::move(sys), R, U.middleCols(na, nb), U.rightCols(nc)};
      return out;
    }
    scale *= 0.5;
  }
  throw NumericalError("random_stable_system: could not reach mean-square stability");
}

std::vector<NamedSystem> builtin_probe_fixtures() {
  std::vector<NamedSystem> out;
  {
    MatrixXd A(3, 3);
    A << -2.0, 0.5, 0.0, 0.3, -1.5, 0.4, 0.0, 0.2, -1.0;
    MatrixXd N1(3, 3), N2(3, 3);
    N1 << 0.3, 0.1, 0.0, -0.1, 0.2, 0.1, 0.0, 0.1, 0.3;
    N2 << 0.0, 0.2, 0.1, 0.2, -0.3, 0.0, 0.1, 0.0, 0.1;
    MatrixXd C(1, 3);
    C << 1.0, 1.0, 1.0;
    out.push_back({"linear3", BilinearRoughSystem(A, {N1, N2}, MatrixXd::Identity(2, 2), C,
                                                  VectorXd::Ones(3))});
  }
  {
    // x_3 is fed by x_1 but never feeds back or reaches the output.
    MatrixXd A(3, 3);
    A << -1.0, 0.4, 0.0, 0.0, -2.0, 0.0, 0.5, 0.3, -1.5;
    MatrixXd N1(3, 3);
    N1 << 0.4, 0.0, 0.0, 0.1, 0.3, 0.0, 0.2, 0.0, 0.5;
    MatrixXd C(1, 3);
    C << 1.0, -1.0, 0.0;
    VectorXd x0(3);
    x0 << 1.0, 0.5, -0.5;
    out.push_back({"hidden3",
                   BilinearRoughSystem(A, {N1}, MatrixXd::Identity(1, 1), C, x0)});
  }
  {
    MatrixXd A(3, 3);
    A << -1.5, 0.2, 0.1, -0.2, -1.0, 0.3, 0.0, -0.3, -2.0;
    MatrixXd N1 = 0.3 * MatrixXd::Identity(3, 3);
    MatrixXd N2(3, 3);
    N2 << 0.0, 0.3, 0.0, -0.3, 0.0, 0.2, 0.0, -0.2, 0.0;
    MatrixXd K(2, 2);
    K << 1.0, 0.6, 0.6, 1.0;
    MatrixXd C(2, 3);
    C << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
    VectorXd x0(3);
    x0 << 0.5, 1.0, 0.0;
    out.push_back({"correlated3", BilinearRoughSystem(A, {N1, N2}, K, C, x0)});
  }
  {
    MatrixXd A(3, 3);
    A << -1.0, 0.3, 0.0, -0.3, -1.0, 0.2, 0.0, -0.2, -1.0;
    MatrixXd N1(3, 3);
    N1 << 0.2, 0.1, 0.0, 0.0, 0.2, 0.1, 0.1, 0.0, 0.2;
    MatrixXd C(1, 3);
    C << 1.0, 0.0, 1.0;
    VectorXd x0(3);
    x0 << 1.0, -1.0, 0.5;
    out.push_back({"cubic3", BilinearRoughSystem(A, {N1}, MatrixXd::Identity(1, 1), C, x0,
                                                 cubic_damping())});
  }
  {
    MatrixXd A(1, 1), N1(1, 1), C(1, 1);
    A << -1.0;
    N1 << 1.0;
    C << 1.0;
    out.push_back({"scalar", BilinearRoughSystem(A, {N1}, MatrixXd::Identity(1, 1), C,
                                                 VectorXd::Ones(1))});
  }
  return out;
}

BilinearRoughSystem unstable_fixture() {
  const MatrixXd A = -MatrixXd::Identity(3, 3);
  const MatrixXd N1 = 2.0 * MatrixXd::Identity(3, 3);
  MatrixXd C(1, 3);
  C << 1.0, 1.0, 1.0;
  return BilinearRoughSystem(A, {N1}, MatrixXd::Identity(1, 1), C, VectorXd::Ones(3));
}

}  // namespace roughmor
