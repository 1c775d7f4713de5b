"""Boundary-control reconstruction of frequency-domain Neumann-to-Dirichlet maps
from time-domain wave boundary data, with a 1D finite-difference test bed."""

from .elliptic import EllipticNDMap, elliptic_nd_map, elliptic_solve
from .estimator import NDMapReconstructor
from .grid import Grid, build_grid
from .harness import ExperimentConfig, add_noise, error_metrics, preset_config, run_experiment
from .operators import OperatorSet, apply_S_star, build_operators, build_time_operators
from .reconstruction import (
    ConnectingOperator,
    ReconstructionResult,
    RegularizedSystem,
    assemble_K,
    build_regularized_system,
    reconstruct,
    reconstruct_map,
    stability_probe,
)
from .wave import Coefficients, HyperbolicNDMap, WaveField, assemble_hyperbolic_nd_map, wave_solve

__version__ = "0.1.0"

__all__ = [
    "Coefficients",
    "ConnectingOperator",
    "EllipticNDMap",
    "ExperimentConfig",
    "Grid",
    "HyperbolicNDMap",
    "NDMapReconstructor",
    "OperatorSet",
    "ReconstructionResult",
    "RegularizedSystem",
    "WaveField",
    "add_noise",
    "apply_S_star",
    "assemble_K",
    "assemble_hyperbolic_nd_map",
    "build_grid",
    "build_operators",
    "build_regularized_system",
    "build_time_operators",
    "elliptic_nd_map",
    "elliptic_solve",
    "error_metrics",
    "preset_config",
    "reconstruct",
    "reconstruct_map",
    "run_experiment",
    "stability_probe",
    "wave_solve",
]
