"""Dense linear algebra kernels shared by the trackers and ESPRIT.

All routines accept real or complex arrays. Conjugate transposes are used
throughout, so the real case is simply the conjugation-free special case.
"""

from __future__ import annotations

import numpy as np

RANK_TOL = 1e-12
MAX_EIG_DIM = 64


class DimensionError(ValueError):
    pass


class NonFiniteError(ValueError):
    pass


class RankDeficientError(np.linalg.LinAlgError):
    pass


class NonConvergenceError(np.linalg.LinAlgError):
    pass


def _as_matrix(M, name="M"):
    M = np.asarray(M)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {M.shape}")
    if not np.issubdtype(M.dtype, np.inexact):
        M = M.astype(float)
    if not np.all(np.isfinite(M)):
        raise NonFiniteError(f"{name} contains NaN or Inf entries")
    return M


def _gram_schmidt(M):
    """Classical Gram-Schmidt with one reorthogonalization pass (CGS2).

    Returns ``(Q, R, deficient)`` where ``deficient`` lists the columns whose
    norm after deflation fell under ``RANK_TOL`` times the largest column norm.
    Those columns of ``Q`` are left at zero and ``R`` has a zero diagonal there.
    Only columns of ``M`` are ever combined, so exact zero rows of ``M`` stay
    exactly zero in ``Q``.
    """
    n, r = M.shape
    Q = np.zeros((n, r), dtype=M.dtype)
    R = np.zeros((r, r), dtype=M.dtype)
    col_norms = np.linalg.norm(M, axis=0)
    cutoff = RANK_TOL * (col_norms.max() if r else 0.0)
    deficient = []
    kept = []
    for j in range(r):
        v = M[:, j].copy()
        if kept:
            Qk = Q[:, kept]
            for _ in range(2):
                c = Qk.conj().T @ v
                v -= Qk @ c
                R[kept, j] += c
        nv = np.linalg.norm(v)
        if nv <= cutoff or nv == 0.0:
            deficient.append(j)
            continue
        R[j, j] = nv
        Q[:, j] = v / nv
        kept.append(j)
    return Q, R, deficient


def _complete_basis(Q, slots):
    # Fill the given zero columns of Q with canonical directions e_1, e_2, ...
    # orthogonalized against everything already present.
    n = Q.shape[0]
    filled = [j for j in range(Q.shape[1]) if j not in slots]
    candidate = 0
    for j in slots:
        while candidate < n:
            v = np.zeros(n, dtype=Q.dtype)
            v[candidate] = 1.0
            candidate += 1
            if filled:
                Qf = Q[:, filled]
                for _ in range(2):
                    v -= Qf @ (Qf.conj().T @ v)
            nv = np.linalg.norm(v)
            # e_i already (nearly) inside the span: try the next one
            if nv > 1e-3:
                Q[:, j] = v / nv
                filled.append(j)
                break
        else:  # pragma: no cover - n >= r guarantees enough directions
            raise RuntimeError("ran out of completion directions")
    return Q


def qr_orthonormalize(M):
    """Thin Q-factor of ``M`` with deterministic rank-deficiency completion.

    Parameters
    ----------
    M : array_like, shape (n, r)
        Real or complex matrix with ``n >= r``.

    Returns
    -------
    Q : ndarray, shape (n, r)
        Orthonormal columns. Column ``j`` spans the part of ``M[:, j]`` not
        already spanned by earlier columns. Numerically dependent columns are
        replaced by canonical basis directions.
    rank_deficient : bool
        True when at least one column had to be completed.
    """
    M = _as_matrix(M)
    n, r = M.shape
    if r > n:
        raise DimensionError(f"cannot orthonormalize {r} columns in dimension {n}")
    Q, _, deficient = _gram_schmidt(M)
    if deficient:
        Q = _complete_basis(Q, deficient)
    return Q, bool(deficient)


def qr_factor(M):
    """Thin QR ``M = Q R`` for full-column-rank ``M``.

    Raises :class:`RankDeficientError` if the smallest diagonal of ``R`` is
    below ``RANK_TOL`` times the largest.
    """
    M = _as_matrix(M)
    n, r = M.shape
    if r > n:
        raise DimensionError(f"need rows >= cols, got shape {M.shape}")
    Q, R, deficient = _gram_schmidt(M)
    diag = np.abs(np.diag(R))
    if deficient or diag.min() <= RANK_TOL * diag.max():
        raise RankDeficientError(f"matrix has effective rank {r - len(deficient)} < {r}")
    return Q, R


def _back_substitute(R, B):
    r = R.shape[0]
    X = np.zeros((r, B.shape[1]), dtype=np.result_type(R, B))
    for i in range(r - 1, -1, -1):
        X[i] = (B[i] - R[i, i + 1:] @ X[i + 1:]) / R[i, i]
    return X


def least_squares_solve(A, B):
    """Minimize ``||A X - B||_F`` via the thin QR of ``A``.

    ``B`` may be a vector, in which case ``X`` is returned as a vector.
    """
    vector_rhs = np.ndim(B) == 1
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    if A.shape[0] != B.shape[0]:
        raise DimensionError(f"row mismatch: A is {A.shape}, B is {B.shape}")
    Q, R = qr_factor(A)
    X = _back_substitute(R, Q.conj().T @ B)
    # one step of iterative refinement on the normal-equation residual
    resid = B - A @ X
    X += _back_substitute(R, Q.conj().T @ resid)
    return X[:, 0] if vector_rhs else X


def small_eigenvalues(P):
    """All eigenvalues of a small square matrix, with multiplicity.

    Backed by LAPACK's Hessenberg QR (``numpy.linalg.eigvals``); a failure to
    converge is re-raised as :class:`NonConvergenceError`.
    """
    P = _as_matrix(P, "P")
    if P.shape[0] != P.shape[1]:
        raise DimensionError(f"P must be square, got {P.shape}")
    if P.shape[0] > MAX_EIG_DIM:
        raise DimensionError(f"small_eigenvalues is limited to {MAX_EIG_DIM}x{MAX_EIG_DIM}")
    try:
        vals = np.linalg.eigvals(P)
    except np.linalg.LinAlgError as exc:
        raise NonConvergenceError(str(exc)) from exc
    return vals.astype(complex)


def random_orthonormal(n, r, rng, dtype=float):
    """Q-factor of an ``n x r`` standard normal draw (complex normal if ``dtype`` is complex)."""
    G = rng.standard_normal((n, r))
    if np.issubdtype(np.dtype(dtype), np.complexfloating):
        G = (G + 1j * rng.standard_normal((n, r))) / np.sqrt(2.0)
    Q, _ = qr_orthonormalize(G)
    return Q
