"""Rounding almost-synchronous quantum strategies to mixtures of projective maximally entangled strategies."""
from ._config import Tolerances, get_tolerances, set_tolerances
from .errors import AlmostSyncError
from .games import NonlocalGame, analyze, builtin_game, game_value
from .lab import NoiseModel, SweepConfig, SweepRow, fit_exponent, generate, sweep
from .rounding import (
    SpectralLadder,
    PMEDecomposition,
    build_ladder,
    commutation_defect,
    commutator_defect,
    global_consistency,
    lift_measurements,
    mixture_correlation,
    naimark_dilate,
    orthonormalize,
    pme_decompose,
    projection_round,
    residual,
)
from .strategy import (
    BipartiteState,
    Correlation,
    Measurement,
    MeasurementFamily,
    Strategy,
    SymmetricStrategy,
    canonical_purification,
    delta_sync,
    induce_correlation,
    symmetrize_side,
    tracial_eval,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AlmostSyncError",
    "analyze",
    "BipartiteState",
    "build_ladder",
    "builtin_game",
    "canonical_purification",
    "commutation_defect",
    "commutator_defect",
    "Correlation",
    "delta_sync",
    "fit_exponent",
    "game_value",
    "generate",
    "get_tolerances",
    "global_consistency",
    "induce_correlation",
    "lift_measurements",
    "Measurement",
    "MeasurementFamily",
    "mixture_correlation",
    "naimark_dilate",
    "NoiseModel",
    "NonlocalGame",
    "orthonormalize",
    "pme_decompose",
    "PMEDecomposition",
    "projection_round",
    "residual",
    "set_tolerances",
    "SpectralLadder",
    "Strategy",
    "sweep",
    "SweepConfig",
    "SweepRow",
    "SymmetricStrategy",
    "symmetrize_side",
    "Tolerances",
    "tracial_eval",
    "validate",
]
