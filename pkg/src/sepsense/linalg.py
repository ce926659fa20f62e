"""Symmetric eigenproblems by cyclic Jacobi rotations, and helpers built on it.

The sweep uses the round-robin (tournament) ordering: each round rotates
``n // 2`` disjoint index pairs at once, so a round is a handful of vectorized
row/column updates and every pair is visited exactly once per sweep.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError

JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
PSD_CLAMP = 1e-12


class JacobiResult(NamedTuple):
    eigenvalues: np.ndarray   # ascending
    eigenvectors: np.ndarray  # columns, orthonormal
    sweeps: int


def _check_symmetric(M: np.ndarray, rtol: float = 1e-10) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > rtol * max(scale, np.finfo(float).tiny):
        raise ValueError("matrix is not symmetric")


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p = np.array(players[: m // 2])
        q = np.array(players[m // 2:][::-1])
        keep = (p < n) & (q < n)
        lo, hi = np.minimum(p, q)[keep], np.maximum(p, q)[keep]
        rounds.append((lo, hi))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(M, tol: float = JACOBI_TOL,
                max_sweeps: int = JACOBI_MAX_SWEEPS) -> JacobiResult:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi.

    Iterates until the off-diagonal Frobenius norm is at most
    ``tol * ||M||_F``.

    Raises
    ------
    ValueError
        If ``M`` is not symmetric.
    ConvergenceError
        If ``max_sweeps`` sweeps do not reach the tolerance.
    """
    A = np.array(M, dtype=float)
    _check_symmetric(A)
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    target = tol * np.linalg.norm(A)
    rounds = _round_robin(n) if n > 1 else []

    def off_norm(X):
        return np.linalg.norm(X - np.diag(np.diag(X)))

    sweeps = 0
    while off_norm(A) > target:
        if sweeps == max_sweeps:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-norm {off_norm(A):.3e}, target {target:.3e})")
        for p, q in rounds:
            apq = A[p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            with np.errstate(over="ignore"):
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # A <- J^T A J with J[p,p] = J[q,q] = c, J[p,q] = s, J[q,p] = -s
            rp, rq = A[p, :].copy(), A[q, :]
            A[p, :] = c[:, None] * rp - s[:, None] * rq
            A[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = A[:, p].copy(), A[:, q]
            A[:, p] = cp * c - cq * s
            A[:, q] = cp * s + cq * c
            vp, vq = V[:, p].copy(), V[:, q]
            V[:, p] = vp * c - vq * s
            V[:, q] = vp * s + vq * c
            A[p, q] = 0.0
            A[q, p] = 0.0
        sweeps += 1

    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return JacobiResult(w[order], V[:, order], sweeps)


def spectral_interval(A, method: str = "jacobi") -> tuple[float, float]:
    """Interval ``[a, b]`` containing the spectrum of symmetric ``A``.

    ``method="jacobi"`` returns the extreme eigenvalues; ``"gershgorin"``
    returns the (wider) union of Gershgorin discs projected on the real line.
    """
    A = np.asarray(A, dtype=float)
    _check_symmetric(A)
    if method == "jacobi":
        w = jacobi_eigh(A).eigenvalues
        return float(w[0]), float(w[-1])
    if method == "gershgorin":
        d = np.diag(A)
        radius = np.sum(np.abs(A), axis=1) - np.abs(d)
        return float(np.min(d - radius)), float(np.max(d + radius))
    raise ValueError(f"unknown method {method!r}")


def sym_function(A, fn, eig: JacobiResult | None = None) -> np.ndarray:
    """``fn(A)`` for symmetric ``A`` through its Jacobi eigendecomposition."""
    w, X, _ = eig if eig is not None else jacobi_eigh(A)
    F = (X * fn(w)) @ X.T
    return 0.5 * (F + F.T)


def sym_sqrt(M) -> np.ndarray:
    """Principal square root of a symmetric positive semidefinite matrix.

    Eigenvalues down to ``-1e-12 * ||M||`` are clamped to zero; anything
    more negative raises ``ValueError``.
    """
    M = np.asarray(M, dtype=float)
    eig = jacobi_eigh(M)
    w = eig.eigenvalues
    scale = np.max(np.abs(w)) if w.size else 0.0
    if w.size and w[0] < -PSD_CLAMP * scale:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    return sym_function(M, lambda x: np.sqrt(np.clip(x, 0.0, None)), eig)


def spectral_norm(M, iters: int = 200, rtol: float = 1e-12, seed: int = 0) -> float:
    """Largest singular value by power iteration on ``M^T M``.

    The start vector is positive (ones plus a small seeded perturbation), so
    the Perron vector of a non-negative matrix is never missed.
    """
    M = np.asarray(M, dtype=float)
    if M.size == 0 or not np.any(M):
        return 0.0
    rng = np.random.default_rng(seed)
    x = 1.0 + 0.1 * rng.random(M.shape[1])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        y = M.T @ (M @ x)
        new = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        if abs(new - lam) <= rtol * abs(new):
            lam = new
            break
        lam = new
    # one more Rayleigh quotient with the normalized iterate
    lam = max(lam, float(x @ (M.T @ (M @ x))))
    return float(np.sqrt(lam))
