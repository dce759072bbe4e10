#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "roughmor/errors.hpp"
#include "roughmor/fixtures.hpp"
#include "roughmor/rde_solver.hpp"
#include "roughmor/reduction.hpp"

using namespace roughmor;
using namespace testing;

TEST_CASE("truncate_psd_spectrum") {
  SUBCASE("diag(1, 1e-20, 0) keeps e1") {
    const MatrixXd G = VectorXd((VectorXd(3) << 1.0, 1e-20, 0.0).finished()).asDiagonal();
    const auto b = truncate_psd_spectrum(G, 1e-12);
    REQUIRE(b.rank() == 1);
    CHECK(b.V(0, 0) == doctest::Approx(1.0));
    CHECK(b.V.col(0).tail(2).norm() == 0.0);
    CHECK(b.discarded_max == doctest::Approx(1e-20));
    CHECK(b.tol_rel == 1e-12);
  }
  SUBCASE("identity keeps everything, V orthogonal") {
    const auto b = truncate_psd_spectrum(MatrixXd::Identity(4, 4), 1e-12);
    CHECK(b.rank() == 4);
    CHECK((b.V.transpose() * b.V - MatrixXd::Identity(4, 4)).norm() <= 1e-12);
  }
  SUBCASE("threshold is strict") {
    const MatrixXd G = VectorXd((VectorXd(2) << 1.0, 0.5).finished()).asDiagonal();
    CHECK(truncate_psd_spectrum(G, 0.5).rank() == 1);
  }
  SUBCASE("sign convention and determinism") {
    std::mt19937_64 rng(3);
    const MatrixXd L = random_matrix(5, 5, rng);
    const MatrixXd G = L * L.transpose();
    const auto b1 = truncate_psd_spectrum(G, 1e-12);
    const auto b2 = truncate_psd_spectrum(G, 1e-12);
    CHECK(b1.V == b2.V);
    for (Eigen::Index j = 0; j < b1.V.cols(); ++j) {
      Eigen::Index idx;
      b1.V.col(j).cwiseAbs().maxCoeff(&idx);
      CHECK(b1.V(idx, j) > 0.0);
    }
    for (Eigen::Index j = 1; j < b1.retained_eigenvalues.size(); ++j) {
      CHECK(b1.retained_eigenvalues(j) <= b1.retained_eigenvalues(j - 1));
    }
  }
  SUBCASE("nesting: larger tolerance never increases the rank") {
    const VectorXd ev = (VectorXd(6) << 1, 1e-2, 1e-4, 1e-6, 1e-9, 1e-13).finished();
    const MatrixXd G = ev.asDiagonal();
    std::size_t last = 6;
    for (double tol : {1e-14, 1e-12, 1e-10, 1e-7, 1e-5, 1e-3, 1e-1}) {
      const std::size_t r = truncate_psd_spectrum(G, tol).rank();
      CHECK(r <= last);
      last = r;
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(truncate_psd_spectrum(MatrixXd::Zero(3, 3), 1e-12), PreconditionError);
    CHECK_THROWS_AS(truncate_psd_spectrum(MatrixXd::Identity(2, 2), 1.0), InvalidArgument);
    CHECK_THROWS_AS(truncate_psd_spectrum(MatrixXd::Identity(2, 2), 0.0), InvalidArgument);
  }
}

TEST_CASE("project_system") {
  std::mt19937_64 rng(6);
  const auto sys = random_system(3, 2, rng);
  SUBCASE("identity basis reproduces the system") {
    ProjectionBasis b;
    b.V = MatrixXd::Identity(3, 3);
    const auto m = project_system(sys, b);
    CHECK(m.system.A() == sys.A());
    CHECK(m.system.N(1) == sys.N(1));
    CHECK(m.system.C() == sys.C());
    CHECK(m.system.x0() == sys.x0());
    CHECK(m.system.K() == sys.K());
    CHECK(m.parent_order == 3);
  }
  SUBCASE("coordinate slice") {
    ProjectionBasis b;
    b.V = MatrixXd::Identity(3, 1);
    const auto m = project_system(sys, b);
    CHECK(m.system.A()(0, 0) == sys.A()(0, 0));
    CHECK(m.system.C()(0, 0) == sys.C()(0, 0));
    CHECK(m.lift(VectorXd::Ones(1)) == b.V.col(0));
  }
  SUBCASE("drift pulled back through the lift") {
    BilinearRoughSystem cubic(sys.A(), sys.N(), sys.K(), sys.C(), sys.x0(), cubic_damping());
    ProjectionBasis b;
    b.V = MatrixXd::Identity(3, 2);
    const auto m = project_system(cubic, b);
    REQUIRE(m.system.has_nonlinearity());
    const VectorXd xr = (VectorXd(2) << 0.3, -0.4).finished();
    CHECK(m.system.drift()->g(xr) == doctest::Approx(-0.25));
    CHECK(rel_diff(m.system.drift()->grad_g(xr), -2.0 * xr) <= 1e-15);
  }
  SUBCASE("dimension mismatch") {
    ProjectionBasis b;
    b.V = MatrixXd::Identity(4, 2);
    CHECK_THROWS_AS(project_system(sys, b), InvalidArgument);
  }
}

TEST_CASE("reduce_by_observability") {
  SUBCASE("full observation keeps the order") {
    std::mt19937_64 rng(9);
    const auto base = random_system(3, 1, rng);
    const auto sys = base.with_output(MatrixXd::Identity(3, 3));
    const auto Q = solve_algebraic_gramian(sys, GramianSide::obs);
    CHECK(reduce_by_observability(sys, Q, 1e-12).system.order() == 3);
  }
  SUBCASE("decoupled block is removed and its direction is a preserved kernel vector") {
    // x3 is driven by x1 but never reaches x1, x2 or the output.
    const MatrixXd A = mat({{-1, 0.4, 0}, {0, -2, 0}, {0.5, 0.3, -1.5}});
    const MatrixXd N1 = mat({{0.4, 0, 0}, {0.1, 0.3, 0}, {0.2, 0, 0.5}});
    BilinearRoughSystem sys(A, {N1}, scalar(1.0), mat({{1, -1, 0}}), VectorXd::Ones(3));
    const auto Q = solve_algebraic_gramian(sys, GramianSide::obs);
    const auto m = reduce_by_observability(sys, Q, 1e-12);
    CHECK(m.system.order() == 2);
    VectorXd e3 = VectorXd::Zero(3);
    e3(2) = 1.0;
    const auto k = check_kernel_preservation(sys, Q.matrix, e3);
    CHECK(k.q_a_z <= 1e-10);
    CHECK(k.c_z <= 1e-10);
    CHECK(k.noise <= 1e-10);
  }
  SUBCASE("preconditions") {
    std::mt19937_64 rng(10);
    const auto sys = random_system(3, 2, rng);
    const auto Q = solve_algebraic_gramian(sys, GramianSide::obs);
    BilinearRoughSystem cubic(sys.A(), sys.N(), sys.K(), sys.C(), sys.x0(), cubic_damping());
    CHECK_THROWS_AS(reduce_by_observability(cubic, Q, 1e-12), PreconditionError);
    BilinearRoughSystem singular_k(sys.A(), sys.N(), mat({{1, 1}, {1, 1}}), sys.C(), sys.x0());
    CHECK_THROWS_AS(reduce_by_observability(singular_k, Q, 1e-12), PreconditionError);
    const auto P = solve_algebraic_gramian(sys, GramianSide::reach);
    CHECK_THROWS_AS(reduce_by_observability(sys, P, 1e-12), InvalidArgument);
  }
}

TEST_CASE("two_stage_reduce") {
  SUBCASE("diagonal system, x0 on two coordinates, C reading one") {
    const MatrixXd A = VectorXd((VectorXd(3) << -1, -2, -3).finished()).asDiagonal();
    const MatrixXd N1 = VectorXd((VectorXd(3) << 0.3, 0.2, 0.1).finished()).asDiagonal();
    const VectorXd x0 = (VectorXd(3) << 1, 1, 0).finished();
    BilinearRoughSystem sys(A, {N1}, scalar(1.0), mat({{1, 0, 0}}), x0);
    const auto two = two_stage_reduce(sys, 1e-12, 1e-12);
    CHECK(two.order_after_p == 2);
    CHECK(two.order_after_q <= 2);
    CHECK(two.order_after_q == 1);
    const MatrixXd& V = two.model.basis.V;
    CHECK((V.transpose() * V - MatrixXd::Identity(V.cols(), V.cols())).norm() <= 1e-10);
  }
  SUBCASE("nonlinear systems skip the output stage") {
    RandomSystemSpec spec;
    spec.n = 5;
    spec.unreachable = 1;
    spec.cubic_drift = true;
    const auto rs = random_stable_system(spec, 4);
    const auto two = two_stage_reduce(rs.system, 1e-12, 1e-12);
    CHECK(two.q_stage_skipped);
    CHECK_FALSE(two.notice.empty());
    CHECK(two.order_after_p == 4);
    CHECK(two.order_after_q == 4);
  }
  SUBCASE("hidden structure is found on random systems") {
    RandomSystemSpec spec;
    spec.n = 8;
    spec.unreachable = 2;
    spec.unobservable = 2;
    const auto rs = random_stable_system(spec, 12);
    const auto two = two_stage_reduce(rs.system, 1e-12, 1e-12);
    CHECK(two.order_after_p == 6);
    CHECK(two.order_after_q == 4);
    CHECK(two.model.stage == ReductionStage::two_stage);
  }
}

TEST_CASE("exactness on random systems along a rough path") {
  RandomSystemSpec spec;
  spec.n = 7;
  spec.unreachable = 2;
  spec.unobservable = 2;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto rs = random_stable_system(spec, seed);
    const auto path = sample_fbm_path(0.4, spec.d, 0.5, 256, seed);
    const auto full = rough_rk_simulate(rs.system, path);
    const auto two = two_stage_reduce(rs.system, 1e-12, 1e-12);
    const auto red = rough_rk_simulate(two.model, path);
    CHECK(relative_L2_error(full.outputs, red.outputs, full.times).value <= 1e-10);
    const auto stage1 = project_system(rs.system, truncate_psd_spectrum(two.P.matrix, 1e-12));
    const auto r1 = rough_rk_simulate(stage1, path);
    // Projection commutation: x(t_k) = V x_r(t_k).
    const MatrixXd lifted = r1.states * stage1.basis.V.transpose();
    CHECK((full.states - lifted).rowwise().norm().maxCoeff() <=
          100 * 1e-12 * full.states.rowwise().norm().maxCoeff());
    CHECK(subspace_containment_residual(stage1.basis, full) <= 1e-8);
  }
}

TEST_CASE("reduce_to_rank") {
  RandomSystemSpec spec;
  spec.n = 8;
  spec.unreachable = 1;
  const auto rs = random_stable_system(spec, 2);
  const auto exact = two_stage_reduce(rs.system, 1e-12, 1e-12);
  for (const auto strategy : {LossyStrategy::p_only, LossyStrategy::q_only, LossyStrategy::alternating}) {
    const auto m = reduce_to_rank(rs.system, 3, strategy, 1e-12, 1e-12);
    CHECK(m.system.order() == 3);
    CHECK(m.stage == ReductionStage::lossy);
    const MatrixXd& V = m.basis.V;
    CHECK((V.transpose() * V - MatrixXd::Identity(3, 3)).norm() <= 1e-10);
  }
  CHECK(reduce_to_rank(rs.system, 100, LossyStrategy::alternating, 1e-12, 1e-12).system.order() ==
        exact.order_after_q);
  CHECK_THROWS_AS(reduce_to_rank(rs.system, 0, LossyStrategy::p_only, 1e-12, 1e-12), InvalidArgument);
}

TEST_CASE("kernel and containment helpers") {
  std::mt19937_64 rng(14);
  const auto sys = random_system(3, 2, rng);
  const auto Q = solve_algebraic_gramian(sys, GramianSide::obs);
  const auto k = check_kernel_preservation(sys, Q.matrix, VectorXd::Zero(3));
  CHECK(k.q_a_z == 0.0);
  CHECK(k.c_z == 0.0);
  CHECK(k.noise == 0.0);
  CHECK_THROWS_AS(check_kernel_preservation(sys, Q.matrix, VectorXd::Zero(2)), InvalidArgument);

  SimulationResult traj;
  traj.states = MatrixXd::Ones(4, 3);
  ProjectionBasis id;
  id.V = MatrixXd::Identity(3, 3);
  CHECK(subspace_containment_residual(id, traj) == 0.0);
  ProjectionBasis ones;
  ones.V = VectorXd::Ones(3).normalized();
  CHECK(subspace_containment_residual(ones, traj) <= 1e-15);
  SimulationResult empty;
  empty.states = MatrixXd(0, 3);
  CHECK_THROWS_AS(subspace_containment_residual(id, empty), InvalidArgument);
}
