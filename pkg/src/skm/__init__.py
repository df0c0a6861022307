"""Sampling Kaczmarz-Motzkin methods for linear feasibility ``A x <= b``."""

from .linalg import (
    FeasibilityProblem,
    InfeasibleRowError,
    euclidean_distance,
    normalize_system,
    positive_part,
    residual,
    residual_norm,
    smallest_singular_value,
)
from .solvers import (
    BlockConfig,
    HaltingRule,
    IterateState,
    RunTrace,
    SkmConfig,
    block_kaczmarz_solve,
    motzkin_solve,
    randomized_kaczmarz_solve,
    sample_constraints,
    select_max_violation,
    skm_solve,
    skm_step,
)
from .theory import (
    GainModel,
    HoffmanEstimate,
    certificate_check,
    encoding_length,
    expected_selected_residual_sq,
    gain,
    hoffman_enumerated,
    hoffman_from_equalities,
    iteration_bound,
    optimal_beta,
    theorem1_rate,
)

__all__ = [
    "FeasibilityProblem", "InfeasibleRowError", "euclidean_distance", "normalize_system",
    "positive_part", "residual", "residual_norm", "smallest_singular_value",
    "BlockConfig", "HaltingRule", "IterateState", "RunTrace", "SkmConfig",
    "block_kaczmarz_solve", "motzkin_solve", "randomized_kaczmarz_solve",
    "sample_constraints", "select_max_violation", "skm_solve", "skm_step",
    "GainModel", "HoffmanEstimate", "certificate_check", "encoding_length",
    "expected_selected_residual_sq", "gain", "hoffman_enumerated",
    "hoffman_from_equalities", "iteration_bound", "optimal_beta", "theorem1_rate",
]
