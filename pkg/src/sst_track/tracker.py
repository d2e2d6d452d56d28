"""Online power iteration by thresholding, plain and alpha-divergence weighted.

One call to :func:`tracker_step` costs O(n r^2) flops and the persistent
state is the triple ``(U, S, E)``: ``2 n r + r^2`` scalars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .numerics import DimensionError, NonFiniteError, qr_orthonormalize, random_orthonormal


@dataclass(frozen=True)
class TrackerParams:
    r: int
    lam: float = 0.05
    alpha: float = 0.9
    p: float = 2.0
    k: Optional[int] = None  # None keeps every row (k = n)
    robust: bool = True

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be at least 1")
        if not 0.0 < self.lam <= 1.0:
            raise ValueError("lambda must lie in (0,1]")
        if self.robust and not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0,1)")
        if not 0.0 < self.p <= 2.0:
            raise ValueError("p must lie in (0,2]")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be at least 1")


@dataclass
class TrackerState:
    U: np.ndarray
    S: np.ndarray
    E: np.ndarray
    t: int = 0
    last_weight: float = 1.0
    last_residual: float = 0.0
    last_rank_deficient: bool = False

    @property
    def n(self):
        return self.U.shape[0]

    @property
    def r(self):
        return self.U.shape[1]

    def payload_size(self):
        """Number of scalars held across steps (U, S and E)."""
        return self.U.size + self.S.size + self.E.size


def init_tracker(n, params: TrackerParams, seed=0, dtype=float) -> TrackerState:
    if not n > params.r:
        raise DimensionError(f"need n > r, got n={n}, r={params.r}")
    if params.k is not None and params.k > n:
        raise DimensionError(f"k={params.k} exceeds n={n}")
    rng = np.random.default_rng(seed)
    U = random_orthonormal(n, params.r, rng, dtype=dtype)
    return TrackerState(
        U=U,
        S=np.zeros((n, params.r), dtype=U.dtype),
        E=np.eye(params.r, dtype=U.dtype),
    )


def threshold_columns(S, k):
    """Keep the ``k`` largest-magnitude entries of every column, zero the rest.

    Ties are broken in favour of the lower row index.
    """
    S = np.asarray(S)
    n = S.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if k == n:
        return S.copy()
    # stable sort on -|s| puts equal magnitudes in row order
    order = np.argsort(-np.abs(S), axis=0, kind="stable")
    keep = np.zeros(S.shape, dtype=bool)
    np.put_along_axis(keep, order[:k], True, axis=0)
    return np.where(keep, S, 0)


def alpha_weight(residual_norm, alpha, p):
    """Sample weight ``exp(-(1 - alpha)/2 * residual_norm**p)``.

    Huge residuals underflow to exactly 0 rather than overflowing.
    """
    if residual_norm < 0:
        raise ValueError("residual_norm must be nonnegative")
    try:
        expo = 0.5 * (1.0 - alpha) * float(residual_norm) ** p
    except OverflowError:
        return 0.0
    if not math.isfinite(expo) or expo > 745.0:
        return 0.0
    return math.exp(-expo)


def tracker_step(state: TrackerState, x, params: TrackerParams) -> TrackerState:
    x = np.asarray(x)
    if x.shape != (state.n,):
        raise DimensionError(f"sample has shape {x.shape}, expected ({state.n},)")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("sample contains NaN or Inf entries")
    U_prev = state.U
    w = U_prev.conj().T @ x
    e = x - U_prev @ w
    res = float(np.linalg.norm(e))
    omega = alpha_weight(res, params.alpha, params.p) if params.robust else 1.0
    lam = params.lam
    S = (1.0 - lam) * (state.S @ state.E) + (lam * omega) * np.outer(x, w.conj())
    k = params.k if params.k is not None else state.n
    S_hat = threshold_columns(S, k)
    U, deficient = qr_orthonormalize(S_hat)
    state.E = U_prev.conj().T @ U
    state.S = S
    state.U = U
    state.t += 1
    state.last_weight = omega
    state.last_residual = res
    state.last_rank_deficient = deficient
    return state


def default_threshold_k(n, r, sparsity=None):
    if not n > r >= 1:
        raise ValueError(f"need n > r >= 1, got n={n}, r={r}")
    if sparsity is not None:
        k = math.floor((1.0 - sparsity) * n + 0.5)
    else:
        k = math.floor(10 * r * math.log(n) + 0.5)
    return int(min(max(k, 1), n))


def batch_power_iteration(C, r, L, seed=0):
    """Block power iteration ``U <- Q(C U)`` for ``L`` sweeps from a seeded start."""
    C = np.asarray(C)
    n = C.shape[0]
    rng = np.random.default_rng(seed)
    U = random_orthonormal(n, r, rng, dtype=C.dtype)
    for _ in range(L):
        U, _ = qr_orthonormalize(C @ U)
    return U
