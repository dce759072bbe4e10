#include "roughmor/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "roughmor/errors.hpp"
#include "roughmor/rde_solver.hpp"

namespace roughmor {

std::string to_string(ReductionStage stage) {
  switch (stage) {
    case ReductionStage::p_stage: return "P";
    case ReductionStage::q_stage: return "Q";
    case ReductionStage::two_stage: return "PQ";
    case ReductionStage::lossy: return "lossy";
  }
  return "unknown";
}

namespace {

struct SortedEigen {
  VectorXd values;   // descending
  MatrixXd vectors;  // matching columns, sign-normalized
};

SortedEigen sorted_eigen(const MatrixXd& G) {
  if (G.rows() != G.cols() || G.rows() == 0) {
    throw InvalidArgument("truncate: Gramian must be square and non-empty");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (G + G.transpose()));
  if (eig.info() != Eigen::Success) throw NumericalError("truncate: eigensolver failed");
  SortedEigen out;
  out.values = eig.eigenvalues().reverse();
  out.vectors = eig.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < out.vectors.cols(); ++j) {
    Eigen::Index idx = 0;
    out.vectors.col(j).cwiseAbs().maxCoeff(&idx);
    if (out.vectors(idx, j) < 0.0) out.vectors.col(j) *= -1.0;
  }
  return out;
}

ProjectionBasis take_leading(const SortedEigen& e, Eigen::Index r, double tol_rel) {
  ProjectionBasis b;
  b.V = e.vectors.leftCols(r);
  b.retained_eigenvalues = e.values.head(r);
  b.discarded_max = r < e.values.size() ? e.values(r) : 0.0;
  b.tol_rel = tol_rel;
  return b;
}

bool k_invertible(const MatrixXd& K) {
  if (K.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(K, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > 1e-12 * eig.eigenvalues().maxCoeff();
}

ProjectionBasis compose(const ProjectionBasis& outer, const ProjectionBasis& inner) {
  ProjectionBasis b = inner;
  b.V = outer.V * inner.V;
  return b;
}

}  // namespace

ProjectionBasis truncate_psd_spectrum(const MatrixXd& G, double tol_rel) {
  if (!(tol_rel > 0.0 && tol_rel < 1.0)) {
    throw InvalidArgument("truncate_psd_spectrum: tol_rel must lie in (0, 1)");
  }
  const SortedEigen e = sorted_eigen(G);
  const double top = e.values(0);
  if (!(top > 0.0)) {
    throw PreconditionError("truncate_psd_spectrum: Gramian has no positive eigenvalue; "
                            "the basis would be empty");
  }
  Eigen::Index r = 0;
  while (r < e.values.size() && e.values(r) > tol_rel * top) ++r;
  return take_leading(e, r, tol_rel);
}

ProjectionBasis truncate_to_rank(const MatrixXd& G, std::size_t rank) {
  const SortedEigen e = sorted_eigen(G);
  if (rank < 1 || rank > static_cast<std::size_t>(e.values.size())) {
    throw InvalidArgument("truncate_to_rank: rank must lie in [1, n]");
  }
  if (!(e.values(0) > 0.0)) {
    throw PreconditionError("truncate_to_rank: Gramian has no positive eigenvalue");
  }
  const auto r = static_cast<Eigen::Index>(rank);
  const double cut = r < e.values.size() ? e.values(r) / e.values(0) : 0.0;
  return take_leading(e, r, cut);
}

ReducedModel project_system(const BilinearRoughSystem& sys, const ProjectionBasis& basis,
                            ReductionStage stage) {
  const MatrixXd& V = basis.V;
  if (V.rows() != sys.A().rows() || V.cols() < 1) {
    throw InvalidArgument("project_system: basis must have n rows and at least one column");
  }
  std::vector<MatrixXd> Nr;
  Nr.reserve(sys.noise_dim());
  for (const auto& Ni : sys.N()) Nr.push_back(V.transpose() * Ni * V);
  std::optional<DriftNonlinearity> drift;
  if (sys.drift()) {
    // V^T f(V x_r) = x_r g(V x_r) because V^T V = I.
    const DriftNonlinearity parent = *sys.drift();
    drift = DriftNonlinearity{
        [parent, V](const VectorXd& xr) { return parent.g(V * xr); },
        [parent, V](const VectorXd& xr) -> VectorXd {
          return V.transpose() * parent.grad_g(V * xr);
        },
    };
  }
  BilinearRoughSystem reduced(V.transpose() * sys.A() * V, std::move(Nr), sys.K(),
                              sys.C() * V, V.transpose() * sys.x0(), std::move(drift));
  return ReducedModel{std::move(reduced), basis, stage, sys.order()};
}

ReducedModel reduce_by_observability(const BilinearRoughSystem& sys, const GramianResult& Q,
                                     double tol_rel) {
  if (sys.has_nonlinearity()) {
    throw PreconditionError("reduce_by_observability: output-exact reduction requires "
                            "f == 0 (no drift nonlinearity)");
  }
  if (!k_invertible(sys.K())) {
    throw PreconditionError("reduce_by_observability: K must be invertible to pass from "
                            "(K (x) Q) N z = 0 to Q N_i z = 0");
  }
  if (Q.kind != GramianKind::obs_finite && Q.kind != GramianKind::obs_infinite) {
    throw InvalidArgument("reduce_by_observability: expects an observability Gramian");
  }
  return project_system(sys, truncate_psd_spectrum(Q.matrix, tol_rel), ReductionStage::q_stage);
}

TwoStageResult two_stage_reduce(const BilinearRoughSystem& sys, double tol_p, double tol_q,
                                const AlgebraicGramianOptions& gramian_opts) {
  GramianResult P = solve_algebraic_gramian(sys, GramianSide::reach, gramian_opts);
  ReducedModel stage1 = project_system(sys, truncate_psd_spectrum(P.matrix, tol_p),
                                       ReductionStage::p_stage);
  const std::size_t order_p = stage1.system.order();
  if (sys.has_nonlinearity()) {
    return TwoStageResult{std::move(stage1), sys.order(), order_p, order_p, true,
                          "output stage skipped: drift nonlinearity present",
                          std::move(P), std::nullopt, tol_p, tol_q};
  }
  GramianResult Q = solve_algebraic_gramian(stage1.system, GramianSide::obs, gramian_opts);
  ReducedModel stage2 = reduce_by_observability(stage1.system, Q, tol_q);
  ReducedModel combined{stage2.system, compose(stage1.basis, stage2.basis),
                        ReductionStage::two_stage, sys.order()};
  const std::size_t order_q = combined.system.order();
  return TwoStageResult{std::move(combined), sys.order(), order_p, order_q, false, "",
                        std::move(P), std::move(Q), tol_p, tol_q};
}

ReducedModel reduce_to_rank(const BilinearRoughSystem& sys, std::size_t rank,
                            LossyStrategy strategy, double tol_p, double tol_q,
                            const AlgebraicGramianOptions& gramian_opts) {
  if (rank < 1) throw InvalidArgument("reduce_to_rank: rank >= 1");
  if (strategy == LossyStrategy::p_only || strategy == LossyStrategy::q_only) {
    const bool use_p = strategy == LossyStrategy::p_only;
    if (!use_p && sys.has_nonlinearity()) {
      throw PreconditionError("reduce_to_rank: Q-based truncation requires f == 0");
    }
    const GramianResult G = solve_algebraic_gramian(
        sys, use_p ? GramianSide::reach : GramianSide::obs, gramian_opts);
    const ProjectionBasis exact = truncate_psd_spectrum(G.matrix, use_p ? tol_p : tol_q);
    const std::size_t r = std::min(rank, exact.rank());
    ReducedModel m = project_system(sys, truncate_to_rank(G.matrix, r), ReductionStage::lossy);
    return m;
  }

  const TwoStageResult exact = two_stage_reduce(sys, tol_p, tol_q, gramian_opts);
  ReducedModel current = exact.model;
  while (current.system.order() > rank) {
    const std::size_t k = current.system.order();
    std::optional<GramianResult> P, Q;
    try {
      P = solve_algebraic_gramian(current.system, GramianSide::reach, gramian_opts);
    } catch (const std::runtime_error&) {
    }
    if (!current.system.has_nonlinearity()) {
      try {
        Q = solve_algebraic_gramian(current.system, GramianSide::obs, gramian_opts);
      } catch (const std::runtime_error&) {
      }
    }
    if (!P && !Q) {
      throw NumericalError("reduce_to_rank: neither Gramian of the order-" +
                           std::to_string(k) + " model could be computed");
    }
    const auto trailing = [](const GramianResult& G) {
      const VectorXd ev = descending_eigenvalues(G.matrix);
      return ev(ev.size() - 1) / ev(0);
    };
    const bool drop_p = P && (!Q || trailing(*P) <= trailing(*Q));
    const ProjectionBasis next = truncate_to_rank(drop_p ? P->matrix : Q->matrix, k - 1);
    const ReducedModel step = project_system(current.system, next, ReductionStage::lossy);
    current = ReducedModel{step.system, compose(current.basis, next), ReductionStage::lossy,
                           sys.order()};
  }
  current.stage = ReductionStage::lossy;
  return current;
}

KernelResiduals check_kernel_preservation(const BilinearRoughSystem& sys, const MatrixXd& Q,
                                          const VectorXd& z) {
  const Eigen::Index n = sys.A().rows();
  if (Q.rows() != n || Q.cols() != n || z.size() != n) {
    throw InvalidArgument("check_kernel_preservation: dimension mismatch");
  }
  KernelResiduals r{};
  r.q_a_z = (Q * (sys.A() * z)).norm();
  r.c_z = (sys.C() * z).norm();
  const std::size_t d = sys.noise_dim();
  std::vector<VectorXd> Qn(d);
  for (std::size_t j = 0; j < d; ++j) Qn[j] = Q * (sys.N(j) * z);
  double sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    VectorXd block = VectorXd::Zero(n);
    for (std::size_t j = 0; j < d; ++j) {
      block += sys.K()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * Qn[j];
    }
    sq += block.squaredNorm();
  }
  r.noise = std::sqrt(sq);
  double s = spectral_norm(sys.A()) + spectral_norm(sys.C());
  const double k2 = spectral_norm(sys.K());
  for (const auto& Ni : sys.N()) s += spectral_norm(Ni) * k2;
  r.scale = s * spectral_norm(Q) * z.norm();
  return r;
}

double subspace_containment_residual(const ProjectionBasis& basis,
                                     const SimulationResult& traj) {
  if (traj.states.rows() == 0) {
    throw InvalidArgument("subspace_containment_residual: empty trajectory");
  }
  if (traj.states.cols() != basis.V.rows()) {
    throw InvalidArgument("subspace_containment_residual: state dimension mismatch");
  }
  const MatrixXd X = traj.states.transpose();
  const MatrixXd out_of_span = X - basis.V * (basis.V.transpose() * X);
  const double top = X.colwise().norm().maxCoeff();
  if (top == 0.0) return 0.0;
  return out_of_span.colwise().norm().maxCoeff() / top;
}

}  // namespace roughmor
