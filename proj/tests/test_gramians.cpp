#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "helpers.hpp"
#include "roughmor/errors.hpp"
#include "roughmor/fixtures.hpp"
#include "roughmor/gramians.hpp"

using namespace roughmor;
using namespace testing;

namespace {

AlgebraicGramianOptions with_solver(GramianSolver s) {
  AlgebraicGramianOptions o;
  o.solver = s;
  o.max_iter = 5000;
  return o;
}

}  // namespace

TEST_CASE("finite Gramian ODE closed forms") {
  SUBCASE("L == 0 keeps Z constant") {
    VectorXd e1 = VectorXd::Zero(2);
    e1(0) = 1.0;
    BilinearRoughSystem sys(MatrixXd::Zero(2, 2), {MatrixXd::Zero(2, 2)}, scalar(1.0),
                            MatrixXd::Ones(1, 2), e1);
    const auto out = integrate_gramian_ode(sys, GramianSide::reach, 1.0, 50, 10);
    CHECK(rel_diff(out.gramian.matrix, e1 * e1.transpose()) <= 1e-14);
    for (const auto& Z : out.samples) CHECK(rel_diff(Z, e1 * e1.transpose()) <= 1e-15);
    CHECK(out.gramian.kind == GramianKind::reach_finite);
    CHECK(out.gramian.horizon == 1.0);
  }
  SUBCASE("scalar a = -1, nu = 0") {
    const double x0 = 1.5, T = 2.0;
    const auto sys = scalar_system(-1.0, 0.0, 1.0, x0);
    const auto out = integrate_gramian_ode(sys, GramianSide::reach, T, 400, 100);
    CHECK(out.gramian.matrix(0, 0) ==
          doctest::Approx(x0 * x0 * (1 - std::exp(-2 * T)) / 2).epsilon(1e-10));
    for (std::size_t s = 0; s < out.samples.size(); ++s) {
      CHECK(out.samples[s](0, 0) ==
            doctest::Approx(x0 * x0 * std::exp(-2 * out.sample_times[s])).epsilon(1e-10));
    }
    CHECK(out.gramian.residual <= out.gramian.tolerance);
  }
  SUBCASE("obs side starts from C^T C") {
    std::mt19937_64 rng(4);
    const auto sys = random_system(3, 2, rng);
    const auto out = integrate_gramian_ode(sys, GramianSide::obs, 1e-9, 1, 1);
    CHECK(rel_diff(out.samples.front(), sys.C().transpose() * sys.C()) == 0.0);
    CHECK(out.gramian.kind == GramianKind::obs_finite);
  }
  SUBCASE("overflow names the step") {
    const auto sys = scalar_system(200.0, 0.0);
    CHECK_THROWS_AS(integrate_gramian_ode(sys, GramianSide::reach, 100.0, 1000), NumericalError);
  }
  SUBCASE("bad arguments") {
    const auto sys = scalar_system(-1.0, 0.0);
    CHECK_THROWS_AS(integrate_gramian_ode(sys, GramianSide::reach, 0.0, 10), InvalidArgument);
    CHECK_THROWS_AS(integrate_gramian_ode(sys, GramianSide::reach, 1.0, 0), InvalidArgument);
  }
}

TEST_CASE("algebraic Gramian closed forms") {
  for (const auto solver : {GramianSolver::krylov, GramianSolver::fixed_point, GramianSolver::direct}) {
    CAPTURE(static_cast<int>(solver));
    const auto opts = with_solver(solver);
    SUBCASE("scalar a = -1, nu = 1: P = 1") {
      const auto P = solve_algebraic_gramian(scalar_system(-1.0, 1.0), GramianSide::reach, opts);
      CHECK(P.matrix(0, 0) == doctest::Approx(1.0).epsilon(1e-11));
      CHECK(P.residual <= P.tolerance);
      CHECK(P.kind == GramianKind::reach_infinite);
      CHECK(std::isinf(P.horizon));
    }
    SUBCASE("A = -I, N = 0, x0 = e1: P = x0 x0^T / 2") {
      VectorXd e1 = VectorXd::Zero(2);
      e1(0) = 1.0;
      BilinearRoughSystem sys(-MatrixXd::Identity(2, 2), {MatrixXd::Zero(2, 2)}, scalar(1.0),
                              MatrixXd::Ones(1, 2), e1);
      const auto P = solve_algebraic_gramian(sys, GramianSide::reach, opts);
      CHECK(rel_diff(P.matrix, 0.5 * e1 * e1.transpose()) <= 1e-12);
    }
  }
}

TEST_CASE("algebraic Gramian solvers agree on random systems") {
  for (int trial = 0; trial < 6; ++trial) {
    RandomSystemSpec spec;
    spec.n = 2 + static_cast<std::size_t>(trial);
    spec.random_covariance = trial % 2 == 1;
    const auto sys = random_stable_system(spec, 31 + static_cast<std::uint64_t>(trial)).system;
    REQUIRE(is_mean_square_stable(sys).is_mean_square_stable);
    for (const auto side : {GramianSide::reach, GramianSide::obs}) {
      const auto direct = solve_algebraic_gramian(sys, side, with_solver(GramianSolver::direct));
      const auto krylov = solve_algebraic_gramian(sys, side, with_solver(GramianSolver::krylov));
      const auto fixed = solve_algebraic_gramian(sys, side, with_solver(GramianSolver::fixed_point));
      CHECK(rel_diff(krylov.matrix, direct.matrix) <= 1e-10);
      CHECK(rel_diff(fixed.matrix, direct.matrix) <= 1e-10);
      CHECK(krylov.residual <= krylov.tolerance);
      CHECK(fixed.residual <= 1e-12);
      const VectorXd ev = descending_eigenvalues(krylov.matrix);
      CHECK(ev(ev.size() - 1) >= -1e-10 * ev(0));
    }
  }
}

TEST_CASE("algebraic Gramian errors and options") {
  SUBCASE("unstable without force") {
    CHECK_THROWS_AS(solve_algebraic_gramian(scalar_system(0.0, 1.0), GramianSide::reach),
                    PreconditionError);
  }
  SUBCASE("iteration budget exhausted carries the residual") {
    auto opts = with_solver(GramianSolver::fixed_point);
    opts.max_iter = 2;
    try {
      solve_algebraic_gramian(scalar_system(-1.0, 1.3), GramianSide::reach, opts);
      FAIL("expected NonConvergenceError");
    } catch (const NonConvergenceError& e) {
      CHECK(e.last_residual() > opts.tol);
    }
  }
  SUBCASE("fixed-point iterates are Loewner monotone") {
    std::mt19937_64 rng(5);
    auto opts = with_solver(GramianSolver::fixed_point);
    opts.check_monotone = true;
    CHECK_NOTHROW(solve_algebraic_gramian(random_system(4, 2, rng), GramianSide::reach, opts));
  }
  SUBCASE("zero right-hand side returns zero") {
    BilinearRoughSystem sys(-MatrixXd::Identity(2, 2), {MatrixXd::Zero(2, 2)}, scalar(1.0),
                            MatrixXd::Zero(1, 2), VectorXd::Ones(2));
    CHECK(solve_algebraic_gramian(sys, GramianSide::obs).matrix.norm() == 0.0);
  }
}

TEST_CASE("Gramian residual") {
  const double a = -1.0, nu = 1.0;
  const auto sys = scalar_system(a, nu);
  CHECK(gramian_residual(sys, scalar(1.0), GramianSide::reach).value <= 1e-14);
  CHECK(gramian_residual(sys, scalar(0.0), GramianSide::reach).value == doctest::Approx(1.0));
  const double eps = 1e-3;
  CHECK(gramian_residual(sys, scalar(1.0 + eps), GramianSide::reach).value ==
        doctest::Approx(eps * std::abs(2 * a + nu * nu)).epsilon(1e-9));
  BilinearRoughSystem zero_c(scalar(-1.0), {scalar(0.0)}, scalar(1.0), scalar(0.0),
                             VectorXd::Ones(1));
  const auto r = gramian_residual(zero_c, scalar(2.0), GramianSide::obs);
  // C^T C = 0, so the absolute residual |L*(2)| = 4 is reported.
  CHECK(r.absolute);
  CHECK(r.value == doctest::Approx(4.0));
}

TEST_CASE("finite Gramians are monotone in the horizon and approach P") {
  std::mt19937_64 rng(17);
  RandomSystemSpec spec;
  spec.n = 4;
  const auto sys = random_stable_system(spec, 17).system;
  const auto P = solve_algebraic_gramian(sys, GramianSide::reach);
  const auto P1 = integrate_gramian_ode(sys, GramianSide::reach, 1.0, 400).gramian.matrix;
  const auto P2 = integrate_gramian_ode(sys, GramianSide::reach, 2.0, 800).gramian.matrix;
  for (int k = 0; k < 20; ++k) {
    const VectorXd z = random_matrix(4, 1, rng).col(0);
    CHECK(z.dot(P1 * z) <= z.dot(P2 * z) * (1 + 1e-12));
    CHECK(z.dot(P2 * z) <= z.dot(P.matrix * z) * (1 + 1e-12));
  }
  const auto P20 = integrate_gramian_ode(sys, GramianSide::reach, 20.0, 8000).gramian.matrix;
  CHECK(rel_diff(P20, P.matrix) <= 1e-8);
}

TEST_CASE("Monte-Carlo second moment") {
  SUBCASE("scalar a = -1, nu = 1: E x^2 = e^{-t} within 3 SE") {
    const auto sys = scalar_system(-1.0, 1.0);
    const auto mc = monte_carlo_second_moment(sys, GramianSide::reach, 1.0, 20000, 1e-3, 77, 500);
    REQUIRE(mc.times.size() == 3);
    for (std::size_t s = 1; s < mc.times.size(); ++s) {
      const double exact = std::exp(-mc.times[s]);
      CHECK(std::abs(mc.mean[s](0, 0) - exact) <= 3.0 * mc.std_error[s](0, 0));
    }
  }
  SUBCASE("noise-free estimator is deterministic Euler") {
    BilinearRoughSystem sys(mat({{-1, 0.5}, {0, -2}}), {MatrixXd::Zero(2, 2)}, scalar(1.0),
                            MatrixXd::Ones(1, 2), VectorXd::Ones(2));
    const auto mc = monte_carlo_second_moment(sys, GramianSide::reach, 1.0, 4, 1e-3, 1, 1000);
    const Eigen::MatrixXd expA = (sys.A() * 1.0).exp();
    const VectorXd x = expA * sys.x0();
    CHECK(rel_diff(mc.mean.back(), x * x.transpose()) <= 5e-3);
    CHECK(mc.std_error.back().maxCoeff() <= 1e-14);
  }
  SUBCASE("integral matches the matrix ODE") {
    RandomSystemSpec spec;
    spec.n = 3;
    const auto sys = random_stable_system(spec, 8).system;
    const double T = 2.0;
    const auto PT = integrate_gramian_ode(sys, GramianSide::reach, T, 2000).gramian.matrix;
    const auto mc = monte_carlo_second_moment(sys, GramianSide::reach, T, 20000, 1e-3, 3);
    int inside = 0;
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j)
        inside += std::abs(mc.integral(i, j) - PT(i, j)) <= 3.0 * mc.integral_std_error(i, j);
    CHECK(inside >= 8);
  }
  SUBCASE("obs side sums over the rows of C") {
    BilinearRoughSystem sys(mat({{-1, 0}, {0, -2}}), {MatrixXd::Zero(2, 2)}, scalar(1.0),
                            mat({{1, 0}, {0, 0}, {0, 1}}), VectorXd::Ones(2));
    const auto mc = monte_carlo_second_moment(sys, GramianSide::obs, 1.0, 2, 1e-3, 1);
    // Q_T = diag((1 - e^{-2})/2, (1 - e^{-4})/4) up to Euler bias.
    CHECK(mc.integral(0, 0) == doctest::Approx((1 - std::exp(-2.0)) / 2).epsilon(2e-3));
    CHECK(mc.integral(1, 1) == doctest::Approx((1 - std::exp(-4.0)) / 4).epsilon(2e-3));
  }
  SUBCASE("reproducible and validated") {
    const auto sys = scalar_system(-1.0, 1.0);
    const auto a = monte_carlo_second_moment(sys, GramianSide::reach, 0.5, 50, 1e-2, 5);
    const auto b = monte_carlo_second_moment(sys, GramianSide::reach, 0.5, 50, 1e-2, 5);
    CHECK(a.integral(0, 0) == b.integral(0, 0));
    CHECK_THROWS_AS(monte_carlo_second_moment(sys, GramianSide::reach, 0.5, 50, 0.5, 5),
                    InvalidArgument);
    CHECK_THROWS_AS(monte_carlo_second_moment(sys, GramianSide::reach, 0.5, 1, 0.1, 5),
                    InvalidArgument);
  }
}
