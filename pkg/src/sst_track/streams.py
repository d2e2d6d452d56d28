"""Seeded synthetic streams: sparse drifting subspaces plus impulsive noise."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

NOISE_KINDS = ("gaussian_only", "laplace_mix", "cauchy_mix", "laplace_cauchy_mix")


class InfeasibleSparsityError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    """Per-entry mixture ``(1 - delta) N(0, sigma_n^2) + delta * heavy(mu, gamma)``."""

    kind: str = "cauchy_mix"
    delta: float = 0.1
    mu: float = 0.0
    gamma: float = 1.0
    sigma_n: float = 0.1

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("delta must lie in [0,1)")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.sigma_n > 0:
            raise ValueError("sigma_n must be positive")


def laplace_quantile(u, mu=0.0, gamma=1.0):
    u = np.asarray(u, dtype=float)
    d = u - 0.5
    return mu - gamma * np.sign(d) * np.log1p(-2.0 * np.abs(d))


def cauchy_quantile(u, mu=0.0, gamma=1.0):
    u = np.asarray(u, dtype=float)
    return mu + gamma * np.tan(np.pi * (u - 0.5))


def _uniform_open(rng, size):
    # rng.random() is in [0, 1); 0 would map to -inf under both quantiles
    u = rng.random(size)
    while np.any(u == 0.0):
        u = np.where(u == 0.0, rng.random(size), u)
    return u


def draw_noise(spec: NoiseSpec, n: int, rng):
    """Draw ``n`` i.i.d. mixture entries.

    Returns ``(nu, heavy)`` where ``heavy`` marks the entries that came from
    the heavy-tailed component. The number of random draws consumed does not
    depend on which component each entry lands in.
    """
    pick = rng.random(n)
    gauss = spec.sigma_n * rng.standard_normal(n)
    u = _uniform_open(rng, n)
    branch = rng.random(n)
    if spec.kind == "gaussian_only" or spec.delta == 0.0:
        return gauss, np.zeros(n, dtype=bool)
    heavy = pick < spec.delta
    if spec.kind == "laplace_mix":
        tail = laplace_quantile(u, spec.mu, spec.gamma)
    elif spec.kind == "cauchy_mix":
        tail = cauchy_quantile(u, spec.mu, spec.gamma)
    else:
        tail = np.where(
            branch < 0.5,
            laplace_quantile(u, spec.mu, spec.gamma),
            cauchy_quantile(u, spec.mu, spec.gamma),
        )
    return np.where(heavy, tail, gauss), heavy


def sample_noise(spec: NoiseSpec, n: int, rng) -> np.ndarray:
    return draw_noise(spec, n, rng)[0]


SUPPORT_MODES = ("columnwise", "shared")


def init_sparse_subspace(n: int, r: int, sparsity: float, seed=None, rng=None, support="columnwise"):
    """Draw a column-sparse ``n x r`` matrix and its support mask.

    Each column gets exactly ``round((1 - sparsity) n)`` nonzero rows chosen
    uniformly at random; the nonzeros are standard normal. Either ``seed`` or a
    ``numpy.random.Generator`` may be given.
    """
    if not 0.0 <= sparsity < 1.0:
        raise ValueError("sparsity must lie in [0,1)")
    if not n > r >= 1:
        raise ValueError(f"need n > r >= 1, got n={n}, r={r}")
    nnz = math.floor((1.0 - sparsity) * n + 0.5)
    if nnz < 1:
        raise InfeasibleSparsityError(f"sparsity {sparsity} leaves no nonzeros in dimension {n}")
    if support not in SUPPORT_MODES:
        raise ValueError(f"support must be one of {SUPPORT_MODES}, got {support!r}")
    if rng is None:
        rng = np.random.default_rng(seed)
    while True:
        Omega = np.zeros((n, r))
        if support == "shared":
            Omega[rng.choice(n, size=nnz, replace=False), :] = 1.0
        else:
            for j in range(r):
                Omega[rng.choice(n, size=nnz, replace=False), j] = 1.0
        A = Omega * rng.standard_normal((n, r))
        if np.linalg.matrix_rank(A) == r:
            return A, Omega


@dataclass
class Sample:
    t: int
    x: np.ndarray
    w: np.ndarray
    ell: np.ndarray
    nu: np.ndarray
    A_true: np.ndarray
    heavy: np.ndarray


@dataclass
class StreamProcess:
    """Ground-truth generator: ``A_t = Omega * (A_{t-1} + eps_t V_t)`` with redraws at change points."""

    n: int
    r: int
    A: np.ndarray
    Omega: np.ndarray
    epsilon: float
    sparsity: float
    noise: NoiseSpec
    change_points: Sequence[int] = ()
    support: str = "columnwise"
    t: int = 0
    rng: np.random.Generator = field(default_factory=np.random.default_rng, repr=False)
    # optional per-step override of epsilon; called with the new time index
    epsilon_schedule: Optional[Callable[[int], float]] = field(default=None, repr=False)

    @classmethod
    def create(cls, n, r, *, sparsity=0.8, epsilon=1e-2, noise=None, change_points=(), seed=0,
               support="columnwise"):
        rng = np.random.default_rng(seed)
        A, Omega = init_sparse_subspace(n, r, sparsity, rng=rng, support=support)
        return cls(
            n=n,
            r=r,
            A=A,
            Omega=Omega,
            epsilon=float(epsilon),
            sparsity=float(sparsity),
            noise=noise if noise is not None else NoiseSpec(),
            change_points=tuple(sorted(int(c) for c in change_points)),
            support=support,
            rng=rng,
        )


def evolve_subspace(proc: StreamProcess) -> StreamProcess:
    t = proc.t + 1
    if t in proc.change_points:
        proc.A, proc.Omega = init_sparse_subspace(
            proc.n, proc.r, proc.sparsity, rng=proc.rng, support=proc.support
        )
    else:
        eps = proc.epsilon_schedule(t) if proc.epsilon_schedule else proc.epsilon
        V = proc.rng.standard_normal((proc.n, proc.r))
        proc.A = proc.Omega * (proc.A + eps * V)
    proc.t = t
    return proc


def next_sample(proc: StreamProcess) -> Sample:
    evolve_subspace(proc)
    w = proc.rng.standard_normal(proc.r)
    ell = proc.A @ w
    nu, heavy = draw_noise(proc.noise, proc.n, proc.rng)
    return Sample(t=proc.t, x=ell + nu, w=w, ell=ell, nu=nu, A_true=proc.A.copy(), heavy=heavy)
