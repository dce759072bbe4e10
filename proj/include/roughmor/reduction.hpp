#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "roughmor/gramians.hpp"
#include "roughmor/system_model.hpp"

namespace roughmor {

struct SimulationResult;

/// Orthonormal columns spanning the retained eigenspace of a Gramian.
struct ProjectionBasis {
  MatrixXd V;
  /// Descending, all strictly above tol_rel * lambda_max.
  VectorXd retained_eigenvalues;
  /// Largest eigenvalue that was cut (0 when nothing was cut).
  double discarded_max = 0.0;
  double tol_rel = 0.0;

  std::size_t rank() const { return static_cast<std::size_t>(V.cols()); }
};

enum class ReductionStage { p_stage, q_stage, two_stage, lossy };

std::string to_string(ReductionStage stage);

struct ReducedModel {
  BilinearRoughSystem system;
  ProjectionBasis basis;
  ReductionStage stage;
  std::size_t parent_order;

  /// V x_r for a reduced state.
  VectorXd lift(const VectorXd& xr) const { return basis.V * xr; }
};

/// Keeps the eigenpairs with lambda_i > tol_rel * lambda_max. Eigenvectors
/// are sign-normalized so their largest-magnitude entry is positive.
/// Throws PreconditionError when G has no positive eigenvalue.
ProjectionBasis truncate_psd_spectrum(const MatrixXd& G, double tol_rel);

/// Keeps the `rank` dominant eigenpairs (same sign convention).
ProjectionBasis truncate_to_rank(const MatrixXd& G, std::size_t rank);

/// Galerkin projection: V^T A V, V^T N_i V, C V, V^T x0, K unchanged, and
/// the drift factor pulled back to g(V x_r).
ReducedModel project_system(const BilinearRoughSystem& sys, const ProjectionBasis& basis,
                            ReductionStage stage = ReductionStage::p_stage);

/// Output-preserving reduction from the observability Gramian. Requires
/// f == 0 and invertible K.
ReducedModel reduce_by_observability(const BilinearRoughSystem& sys,
                                     const GramianResult& Q, double tol_rel);

struct TwoStageResult {
  ReducedModel model;
  std::size_t full_order;
  std::size_t order_after_p;
  std::size_t order_after_q;
  bool q_stage_skipped;
  std::string notice;
  /// P of the full system and Q of the stage-1 system (when computed).
  GramianResult P;
  std::optional<GramianResult> Q_stage;
  double tol_p;
  double tol_q;
};

/// Stage 1 projects onto the numerical range of P; stage 2 recomputes Q on
/// the stage-1 model and removes its numerical kernel. The recorded basis is
/// the composite V_P V_Q.
TwoStageResult two_stage_reduce(const BilinearRoughSystem& sys, double tol_p,
                                double tol_q,
                                const AlgebraicGramianOptions& gramian_opts = {});

/// How the lossy target-rank mode picks the directions to drop.
enum class LossyStrategy {
  /// Drop the smallest P eigendirection only.
  p_only,
  /// Drop the smallest Q eigendirection only (f == 0 only).
  q_only,
  /// Starting from the exact two-stage model, repeatedly remove one
  /// direction from whichever Gramian (P or Q of the current model) has the
  /// smaller relative trailing eigenvalue.
  alternating,
};

/// Reduced model of order min(rank, exact two-stage order).
ReducedModel reduce_to_rank(const BilinearRoughSystem& sys, std::size_t rank,
                            LossyStrategy strategy, double tol_p, double tol_q,
                            const AlgebraicGramianOptions& gramian_opts = {});

struct KernelResiduals {
  double q_a_z;
  double c_z;
  double noise;
  /// (||A||_2 + ||C||_2 + sum_i ||N_i||_2 ||K||_2) ||Q||_2 ||z||_2
  double scale;
};

/// (||Q A z||, ||C z||, ||(K (x) Q) [N_1 z; ...; N_d z]||) for a candidate
/// kernel vector z of Q.
KernelResiduals check_kernel_preservation(const BilinearRoughSystem& sys,
                                          const MatrixXd& Q, const VectorXd& z);

/// max_k ||(I - V V^T) x(t_k)|| / max_k ||x(t_k)||.
double subspace_containment_residual(const ProjectionBasis& basis,
                                     const SimulationResult& traj);

}  // namespace roughmor
