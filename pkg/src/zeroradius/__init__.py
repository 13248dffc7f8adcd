"""Minimum-norm sparse perturbations that give an LTI system an invariant zero.

A system whose zero pencil [[A - sI, B], [C, D]] keeps full column rank for
every s has no state an input can keep silent; perturbing selected entries of
the stacked blocks can change that. This package computes the smallest such
perturbations in the spectral norm, under row/column-gated (structured) or
per-cell (affine) sparsity, along with the machinery to verify the result:
invariant zeros, the weakly unobservable subspace, and fixed-point radii over
the complex plane.
"""

from .affine import (AffineConfig, AffineSolution, history_rows,
                     inner_convex_step, ky_fan, lifted_pencil, solve_affine,
                     warm_start_from_structured)
from .errors import (ConvergenceError, InfeasiblePatternError,
                     ProblemFormatError, WitnessSearchError)
from .linalg import (GsvdResult, gsvd_values, nullspace_basis, rank_with_tol,
                     real_lift, real_lift_solve, spectral_norm)
from .sparsity import (AffinePattern, PartitionedPencil, StructuredPattern,
                       affine_pattern, expand_perturbation, masked_norm,
                       partition_pencil, reduce_perturbation)
from .structured import (ApproxConfig, Feasibility, LevelSetState,
                         SolveOptions, StructuredSolution,
                         approx_min_norm_at_s, existence_check,
                         finite_candidate_set, min_norm_at_s, norm_surface,
                         perturbation_at_s, ray_level_set, solve_structured,
                         witness_inequality_slack)
from .system import (ENTIRE_COMPLEX_PLANE, StateSpaceSystem,
                     apply_perturbation, invariant_zeros,
                     normalize_orientation, pencil,
                     weakly_unobservable_subspace)

__version__ = "0.1.0"

__all__ = [
    "AffineConfig", "AffinePattern", "AffineSolution", "ApproxConfig",
    "ConvergenceError", "ENTIRE_COMPLEX_PLANE", "Feasibility", "GsvdResult",
    "InfeasiblePatternError", "LevelSetState", "PartitionedPencil",
    "ProblemFormatError", "SolveOptions", "StateSpaceSystem",
    "StructuredPattern", "StructuredSolution", "WitnessSearchError",
    "affine_pattern", "apply_perturbation", "approx_min_norm_at_s",
    "existence_check", "expand_perturbation", "finite_candidate_set",
    "gsvd_values", "history_rows", "inner_convex_step", "invariant_zeros",
    "ky_fan", "lifted_pencil", "masked_norm", "min_norm_at_s",
    "normalize_orientation", "norm_surface", "nullspace_basis",
    "partition_pencil", "pencil", "perturbation_at_s", "rank_with_tol",
    "ray_level_set", "real_lift", "real_lift_solve", "reduce_perturbation",
    "solve_affine", "solve_structured", "spectral_norm",
    "warm_start_from_structured", "weakly_unobservable_subspace",
    "witness_inequality_slack",
]
