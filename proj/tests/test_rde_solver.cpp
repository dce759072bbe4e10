#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "roughmor/errors.hpp"
#include "roughmor/fixtures.hpp"
#include "roughmor/rde_solver.hpp"

using namespace roughmor;
using namespace testing;

namespace {

DriverPath one_step(double T, double dW) {
  DriverPath p;
  p.T = T;
  p.values = MatrixXd::Zero(2, 1);
  p.values(1, 0) = dW;
  return p;
}

}  // namespace

TEST_CASE("tableaus") {
  const auto c = ButcherTableau::crouzeix();
  CHECK_NOTHROW(c.validate());
  CHECK(c.stages() == 2);
  CHECK(c.b.sum() == doctest::Approx(1.0));
  // Third order: R(z) - exp(z) = O(z^4).
  for (double z : {1e-2, -1e-2}) {
    CHECK(std::abs(c.stability_function(z) - std::exp(z)) <= std::pow(z, 4));
  }
  CHECK(ButcherTableau::implicit_euler().stability_function(-1.0) == doctest::Approx(0.5));
  ButcherTableau bad;
  bad.a = mat({{0.5, 0.1}, {0.0, 0.5}});
  bad.b = (VectorXd(2) << 0.5, 0.5).finished();
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("one step of a scalar system equals the stability function") {
  const auto tab = ButcherTableau::crouzeix();
  const double a = -1.0, nu = 0.7, h = 0.1, dW = -0.05;
  const auto sys = scalar_system(a, nu, 1.0, 2.0);
  const auto out = rough_rk_simulate(sys, one_step(h, dW), tab);
  CHECK(std::abs(out.states(1, 0) - 2.0 * tab.stability_function(a * h + nu * dW)) <= 1e-14);
  const auto ie = rough_rk_simulate(sys, one_step(h, dW), ButcherTableau::implicit_euler());
  CHECK(ie.states(1, 0) == doctest::Approx(2.0 / (1.0 - a * h - nu * dW)));
}

TEST_CASE("equilibrium stays put") {
  std::mt19937_64 rng(2);
  const auto sys = random_system(3, 2, rng).with_initial_state(VectorXd::Zero(3));
  const auto path = sample_fbm_path(0.4, 2, 0.5, 64, 3);
  const auto out = rough_rk_simulate(sys, path);
  CHECK(out.states.norm() == 0.0);
  CHECK(out.outputs.norm() == 0.0);
  CHECK(out.times.size() == 65);
}

TEST_CASE("linearity in x0 and outputs equal C x") {
  std::mt19937_64 rng(4);
  const auto sys = random_system(4, 2, rng);
  const auto path = sample_fbm_path(0.4, 2, 0.5, 128, 1);
  const VectorXd u = VectorXd::LinSpaced(4, -1, 1), v = VectorXd::Ones(4);
  const auto xu = rough_rk_simulate(sys.with_initial_state(u), path);
  const auto xv = rough_rk_simulate(sys.with_initial_state(v), path);
  const auto xs = rough_rk_simulate(sys.with_initial_state(2 * u - 3 * v), path);
  CHECK(rel_diff(xs.states, 2 * xu.states - 3 * xv.states) <= 1e-12);
  CHECK(rel_diff(xs.outputs, xs.states * sys.C().transpose()) <= 1e-15);
  const auto again = rough_rk_simulate(sys.with_initial_state(u), path);
  CHECK(again.states == xu.states);
}

TEST_CASE("Newton stages with a cubic drift") {
  std::mt19937_64 rng(5);
  const auto base = random_system(3, 1, rng);
  BilinearRoughSystem cubic(base.A(), base.N(), base.K(), base.C(), base.x0(), cubic_damping());
  const auto path = sample_fbm_path(0.45, 1, 0.5, 256, 9);
  const auto out = rough_rk_simulate(cubic, path);
  CHECK(out.states.allFinite());
  CHECK(out.diagnostics.max_newton_iterations >= 2);
  CHECK(out.diagnostics.max_newton_iterations < 50);
  // The cubic term only damps: along a zero driver ||x|| decreases.
  const auto zero = smooth_path("zero", 1, 0.5, 64);
  const auto z = rough_rk_simulate(cubic.with_initial_state(VectorXd::Constant(3, 2.0)), zero);
  const auto lin = rough_rk_simulate(base.with_initial_state(VectorXd::Constant(3, 2.0)), zero);
  CHECK(z.states.row(64).norm() < lin.states.row(64).norm());

  SolverOptions tight;
  tight.newton_max = 1;
  CHECK_THROWS_AS(rough_rk_simulate(cubic, path, ButcherTableau::crouzeix(), tight), NonConvergenceError);
}

TEST_CASE("smooth RK4 converges to the linear-driver closed form") {
  // dx = a x dt + nu x dW with W = t: x(T) = x0 exp((a + nu) T).
  const auto sys = scalar_system(-1.0, 0.5);
  const auto path = smooth_path("linear", 1, 1.0, 50);
  const auto out = smooth_rk4_simulate(sys, path, 4);
  CHECK(out.states(200, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
  const auto rk = rough_rk_simulate(sys, smooth_path("linear", 1, 1.0, 2000));
  CHECK(rk.states(2000, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-8));
}

TEST_CASE("quadratic-form bound on smooth drivers") {
  for (const auto& f : builtin_probe_fixtures()) {
    for (const std::string shape : {"linear", "sine"}) {
      const auto path = smooth_path(shape, f.system.noise_dim(), 0.5, 200);
      const auto r = smooth_quadratic_form_probe(f.system, path, 4);
      CHECK_MESSAGE(r.passed, f.name << " " << shape << " gap " << r.min_gap_eigenvalue);
      CHECK(r.bound_norm > 0.0);
    }
  }
}

TEST_CASE("error metrics") {
  const std::vector<double> t = {0.0, 0.5, 1.0};
  const MatrixXd y = mat({{1.0}, {1.0}, {1.0}});
  const MatrixXd yr = mat({{1.0}, {1.1}, {1.0}});
  const auto e = relative_L2_error(y, yr, t);
  CHECK_FALSE(e.absolute);
  CHECK(e.value == doctest::Approx(std::sqrt(0.5 * 0.01)));
  CHECK(relative_L2_error(y, y, t).value == 0.0);
  const auto z = relative_L2_error(MatrixXd::Zero(3, 1), yr, t);
  CHECK(z.absolute);
  const auto pw = pointwise_relative_error(mat({{0.0}, {2.0}, {1.0}}), mat({{0.5}, {2.2}, {1.0}}), t);
  CHECK(pw.zero_denominator[0]);
  CHECK(pw.values[0] == doctest::Approx(0.5));
  CHECK(pw.values[1] == doctest::Approx(0.1));
  CHECK(pw.values[2] == 0.0);
  CHECK_THROWS_AS(relative_L2_error(y, MatrixXd::Zero(2, 1), t), InvalidArgument);
}
