"""Orthogonal and unitary matrices from Givens angles, built and differentiated
block by block over a round-robin (circle-method) pair schedule."""

from .backward import (BackwardWorkspace, StaleMatrixWarning, jvp_parallel, jvp_sequential,
                       jvp_with_reflection)
from .forward import OrthogonalConfig, forward_parallel, forward_restricted, random_angles
from .kernels import RotationParams, rotate_cols_inverse, rotate_rows
from .schedule import (CoordinatePair, PairIndexMap, ParameterError, RotationSchedule,
                       active_count, build_circle_schedule, pair_index_map, validate_schedule)
from .unitary import ComplexGradientResult, forward_unitary, jvp_unitary

__version__ = "0.1.0"

__all__ = [
    "BackwardWorkspace", "ComplexGradientResult", "CoordinatePair", "OrthogonalConfig",
    "PairIndexMap", "ParameterError", "RotationParams", "RotationSchedule",
    "StaleMatrixWarning", "active_count", "build_circle_schedule", "forward_parallel",
    "forward_restricted", "forward_unitary", "jvp_parallel", "jvp_sequential",
    "jvp_unitary", "jvp_with_reflection", "pair_index_map", "random_angles",
    "rotate_cols_inverse", "rotate_rows", "validate_schedule",
]
