"""Estimate a division rate ``B`` from sizes drawn from the stable profile of a
growth-fragmentation population.

Modules, bottom up: :mod:`numgrid` (tabulated functions), :mod:`eigensolve`
(direct problem), :mod:`sampling`, :mod:`kernels`, :mod:`bandwidth`,
:mod:`dilation`, :mod:`pipeline` and :mod:`harness`.
"""

from .bandwidth import BandwidthGrid, GLConfig, GLSelection, build_bandwidth_grid
from .dilation import CellAverages, StepFunction, apply_L, cell_averages, invert_Lk, inverse_L_series
from .eigensolve import EigenPair, ModelSpec, SolverOptions, solve_eigenpair
from .harness import ExperimentConfig, ExperimentReport, emit_report, run_experiment
from .kernels import GAUSSIAN, KernelSpec, KernelSums
from .numgrid import GridFunction, Interval
from .pipeline import EstimationResult, estimate_B, estimate_H, run_pipeline
from .sampling import SizeSample, ks_distance, rejection_sample

__version__ = "0.1.0"

__all__ = [
    "BandwidthGrid", "CellAverages", "EigenPair", "EstimationResult", "ExperimentConfig",
    "ExperimentReport", "GAUSSIAN", "GLConfig", "GLSelection", "GridFunction", "Interval",
    "KernelSpec", "KernelSums", "ModelSpec", "SizeSample", "SolverOptions", "StepFunction",
    "apply_L", "build_bandwidth_grid", "cell_averages", "emit_report", "estimate_B",
    "estimate_H", "invert_Lk", "inverse_L_series", "ks_distance", "rejection_sample",
    "run_experiment", "run_pipeline", "solve_eigenpair",
]
