"""Exact and lossy Gramian-based reduction of bilinear rough systems."""

from ._core import (
    NumericalError,
    PreconditionError,
    System,
    apply_lyapunov,
    fbm,
    gramian,
    gramian_residual,
    heat1d,
    reduce_to_rank,
    relative_l2_error,
    run_exact_reduction,
    simulate,
    stability,
    truncate,
    two_stage_reduce,
)

__all__ = [
    "NumericalError",
    "PreconditionError",
    "System",
    "apply_lyapunov",
    "fbm",
    "gramian",
    "gramian_residual",
    "heat1d",
    "reduce_to_rank",
    "relative_l2_error",
    "run_exact_reduction",
    "simulate",
    "stability",
    "truncate",
    "two_stage_reduce",
]
