"""Robust sparse subspace tracking by alpha-divergence weighted online power iteration."""

__version__ = "0.1.0"

from .metrics import DIVERGENT, SepTrace, sep, summarize_trace
from .numerics import least_squares_solve, qr_orthonormalize, small_eigenvalues
from .streams import NoiseSpec, StreamProcess, init_sparse_subspace, next_sample, sample_noise
from .tracker import (
    TrackerParams,
    TrackerState,
    alpha_weight,
    batch_power_iteration,
    default_threshold_k,
    init_tracker,
    threshold_columns,
    tracker_step,
)

__all__ = [
    "DIVERGENT",
    "NoiseSpec",
    "SepTrace",
    "StreamProcess",
    "TrackerParams",
    "TrackerState",
    "alpha_weight",
    "batch_power_iteration",
    "default_threshold_k",
    "init_sparse_subspace",
    "init_tracker",
    "least_squares_solve",
    "next_sample",
    "qr_orthonormalize",
    "sample_noise",
    "sep",
    "small_eigenvalues",
    "summarize_trace",
    "threshold_columns",
    "tracker_step",
]
