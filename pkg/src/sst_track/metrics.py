"""Subspace estimation performance (SEP) and trace summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .numerics import DimensionError, qr_orthonormalize

# SEP of an estimate orthogonal to the truth; written as "inf" in CSV files
DIVERGENT = math.inf


def sep(U_true, U_est):
    """Energy of ``U_est`` outside span(``U_true``) over the energy inside it.

    Both arguments must have orthonormal columns. Returns :data:`DIVERGENT`
    when the inside energy is below ``1e-14 * r``.
    """
    U_true = np.asarray(U_true)
    U_est = np.asarray(U_est)
    if U_true.shape != U_est.shape:
        raise DimensionError(f"shape mismatch: {U_true.shape} vs {U_est.shape}")
    r = U_est.shape[1]
    G = U_true.conj().T @ U_est
    inside = float(np.sum(np.abs(G) ** 2))
    if inside < 1e-14 * r:
        return DIVERGENT
    # U_est^H (I - P) U_est = (U_est - U_true G)^H (U_est - U_true G)
    outside = float(np.sum(np.abs(U_est - U_true @ G) ** 2))
    return outside / inside


def sep_against(A, U_est):
    """SEP against the span of a (not necessarily orthonormal) ground-truth matrix."""
    Q, _ = qr_orthonormalize(A)
    return sep(Q, U_est)


@dataclass
class SepTrace:
    algorithm: str
    seed: int
    config_digest: str = ""
    t: List[int] = field(default_factory=list)
    sep: List[float] = field(default_factory=list)
    weight: List[float] = field(default_factory=list)
    step_time_ns: List[int] = field(default_factory=list)

    def append(self, t, sep_value, weight, step_time_ns=0):
        if self.t and t <= self.t[-1]:
            raise ValueError("trace times must be strictly increasing")
        self.t.append(int(t))
        self.sep.append(float(sep_value))
        self.weight.append(float(weight))
        self.step_time_ns.append(int(step_time_ns))

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class TraceSummary:
    median: float
    mean: float
    last_decile_mean: float
    median_step_time_ns: float
    n_steps: int
    n_divergent: int


def summarize_trace(trace: SepTrace, burn_in: int) -> TraceSummary:
    t = np.asarray(trace.t)
    window = t > burn_in
    if not window.any():
        raise ValueError(f"no trace entries after burn-in {burn_in}")
    values = np.asarray(trace.sep)[window]
    times = np.asarray(trace.step_time_ns)[window]
    finite = values[np.isfinite(values)]
    n_div = int(values.size - finite.size)
    if finite.size == 0:
        nan = float("nan")
        return TraceSummary(nan, nan, nan, float(np.median(times)), int(values.size), n_div)
    tail = finite[int(0.9 * finite.size):]
    return TraceSummary(
        median=float(np.median(finite)),
        mean=float(np.mean(finite)),
        last_decile_mean=float(np.mean(tail)),
        median_step_time_ns=float(np.median(times)),
        n_steps=int(values.size),
        n_divergent=n_div,
    )
