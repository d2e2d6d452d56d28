"""Direction-of-arrival tracking on a uniform linear array.

Signal model: ``x_t = A_t s_t + nu_t`` where column ``k`` of ``A_t`` is the
half-wavelength ULA steering vector for angle ``theta_k(t)``. The tracker
estimates span(A_t); LS-ESPRIT turns that basis into angles.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .numerics import DimensionError, least_squares_solve, small_eigenvalues
from .streams import NoiseSpec, draw_noise

MAX_EXHAUSTIVE_TRACKS = 8


class AngleDomainWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Trajectory:
    """Angle path in degrees: ``linear``, ``sawtooth`` or ``sinusoid``.

    linear:   ``a`` = start, ``b`` = slope per step
    sawtooth: ``a`` = min, ``b`` = max, ``period`` in steps
    sinusoid: ``a`` = center, ``b`` = amplitude, ``period`` in steps
    """

    kind: str
    a: float
    b: float
    period: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "sawtooth", "sinusoid"):
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.kind != "linear" and not self.period > 0:
            raise ValueError(f"{self.kind} trajectory needs a positive period")

    def __call__(self, t):
        if self.kind == "linear":
            return self.a + self.b * t
        if self.kind == "sawtooth":
            frac = (t % self.period) / self.period
            return self.a + (self.b - self.a) * frac
        return self.a + self.b * np.sin(2.0 * np.pi * t / self.period)

    def to_dict(self):
        d = {"kind": self.kind, "a": self.a, "b": self.b}
        if self.kind != "linear":
            d["period"] = self.period
        return d


DEFAULT_TRAJECTORIES = (
    Trajectory("linear", -40.0, 0.05),
    Trajectory("sawtooth", -20.0, 20.0, 400.0),
    Trajectory("sinusoid", 30.0, 10.0, 500.0),
)


@dataclass(frozen=True)
class SteeringConfig:
    n: int = 20
    trajectories: Tuple[Trajectory, ...] = DEFAULT_TRAJECTORIES
    noise: NoiseSpec = NoiseSpec()
    noiseless: bool = False

    @property
    def K(self):
        return len(self.trajectories)

    def angles(self, t):
        return np.array([traj(t) for traj in self.trajectories], dtype=float)

    def validate(self, T):
        if not 1 <= self.K <= self.n - 1:
            raise ValueError(f"source count {self.K} must lie in [1, n-1] for n={self.n}")
        ts = np.arange(T + 1)
        for i, traj in enumerate(self.trajectories):
            if np.max(np.abs(traj(ts))) >= 90.0:
                raise ValueError(f"trajectory {i} leaves (-90, 90) degrees within T={T}")


@dataclass
class DoaEstimate:
    t: int
    angles: np.ndarray  # indexed by track label
    truth: np.ndarray
    clipped: bool = False

    @property
    def abs_err(self):
        return np.abs(self.angles - self.truth)


def steering_matrix(angles_deg, n):
    angles_deg = np.atleast_1d(np.asarray(angles_deg, dtype=float))
    if np.any(np.abs(angles_deg) >= 90.0):
        raise ValueError("steering angles must lie strictly inside (-90, 90) degrees")
    omega = np.pi * np.sin(np.deg2rad(angles_deg))
    return np.exp(1j * np.outer(np.arange(n), omega))


def generate_doa_sample(cfg: SteeringConfig, t, rng):
    """One snapshot ``A_t s_t + nu_t`` with ``s_t ~ CN(0, I_K)``.

    The noise mixture is applied independently to the real and imaginary parts.
    Returns ``(x, heavy)`` where ``heavy`` flags sensors with an impulsive draw.
    """
    A = steering_matrix(cfg.angles(t), cfg.n)
    s = (rng.standard_normal(cfg.K) + 1j * rng.standard_normal(cfg.K)) / np.sqrt(2.0)
    nu_re, heavy_re = draw_noise(cfg.noise, cfg.n, rng)
    nu_im, heavy_im = draw_noise(cfg.noise, cfg.n, rng)
    x = A @ s
    if not cfg.noiseless:
        x = x + (nu_re + 1j * nu_im)
    return x, heavy_re | heavy_im


def esprit_angles(U, return_clipped=False):
    """LS-ESPRIT angles (degrees, ascending) from a basis of the signal subspace."""
    U = np.asarray(U)
    n, r = U.shape
    if n < r + 1:
        raise DimensionError(f"ESPRIT needs n >= r + 1, got n={n}, r={r}")
    Psi = least_squares_solve(U[:-1], U[1:])
    omega = np.angle(small_eigenvalues(Psi))
    ratio = omega / np.pi
    clipped = bool(np.any(np.abs(ratio) > 1.0))
    if clipped:
        warnings.warn("ESPRIT frequency outside [-pi, pi]; clipped", AngleDomainWarning)
    theta = np.sort(np.rad2deg(np.arcsin(np.clip(ratio, -1.0, 1.0))))
    if return_clipped:
        return theta, clipped
    return theta


def match_tracks(previous: Sequence[float], current: Sequence[float]):
    """Assign each current angle to a previous track.

    Returns an array ``out`` with ``out[i]`` the current angle assigned to
    track ``i`` of ``previous``. The assignment minimizes the total absolute
    angular difference: exhaustively for up to 8 tracks, greedily beyond.
    """
    prev = np.asarray(previous, dtype=float)
    cur = np.asarray(current, dtype=float)
    if prev.shape != cur.shape:
        raise ValueError(f"track count mismatch: {prev.size} vs {cur.size}")
    K = prev.size
    if K <= MAX_EXHAUSTIVE_TRACKS:
        best, best_cost = None, np.inf
        # permutations are generated in lexicographic order, so the identity wins ties
        for perm in itertools.permutations(range(K)):
            cost = np.abs(prev - cur[list(perm)]).sum()
            if cost < best_cost:
                best, best_cost = perm, cost
        return cur[list(best)]
    out = np.empty(K)
    free_prev, free_cur = set(range(K)), set(range(K))
    dist = np.abs(prev[:, None] - cur[None, :])
    for _ in range(K):
        i, j = min(((i, j) for i in free_prev for j in free_cur), key=lambda ij: dist[ij])
        out[i] = cur[j]
        free_prev.discard(i)
        free_cur.discard(j)
    return out


@dataclass
class TrackHistory:
    """Per-step labelled estimates; labels are positions in the truth vector."""

    estimates: List[DoaEstimate] = field(default_factory=list)

    def errors(self, burn_in=0):
        rows = [e.abs_err for e in self.estimates if e.t > burn_in]
        return np.array(rows)

    def median_abs_error(self, burn_in=0):
        return np.median(self.errors(burn_in), axis=0)
