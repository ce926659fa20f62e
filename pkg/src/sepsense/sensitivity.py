"""Decaying sensitivity: block norms, empirical Lipschitz probes and decay fits.

For a function ``V`` and subsystem ``j`` the increment
``g_j(x) = V(x) - V(Lambda_j x)`` measures what ``z_j`` contributes at ``x``
relative to zeroing it.  ``V`` has gamma-decaying sensitivity when the
Lipschitz constant of ``g_j`` in ``z_i`` is at most
``gamma(dist(i, j)) ||z_j||``.  For quadratics ``x^T P x`` the Hessian blocks
of ``H = P + P^T`` give such a ``gamma`` directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .graph import UNREACHABLE, BlockStructure, InteractionGraph
from .linalg import spectral_norm

_LOG_FLOOR = 1e-300


@dataclass
class FunctionOracle:
    """A scalar function on ``R^n`` with an optional analytic gradient.

    ``value`` and ``gradient`` take a batch ``(N, n)`` and return ``(N,)``
    and ``(N, n)`` when ``vectorized`` is true; otherwise they are called
    point by point.
    """

    n: int
    value: Callable
    gradient: Callable | None = None
    blocks: BlockStructure | None = None
    domain: str = "cube"
    radius: float = 1.0
    vectorized: bool = True
    name: str = ""

    def __post_init__(self):
        if self.blocks is None:
            self.blocks = BlockStructure((1,) * self.n)
        if self.blocks.n != self.n:
            raise ValueError("block structure does not match the oracle dimension")
        if self.domain not in ("cube", "ball"):
            raise ValueError(f"unknown domain {self.domain!r}")

    def evaluate(self, X) -> np.ndarray | float:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if self.vectorized:
            out = np.asarray(self.value(X), dtype=float).reshape(-1)
        else:
            out = np.array([float(self.value(x)) for x in X])
        return float(out[0]) if single else out

    def evaluate_gradient(self, X) -> np.ndarray:
        if self.gradient is None:
            raise ValueError(f"oracle {self.name or '<anonymous>'} has no gradient")
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if self.vectorized:
            out = np.asarray(self.gradient(X), dtype=float).reshape(X.shape)
        else:
            out = np.array([np.asarray(self.gradient(x), dtype=float) for x in X])
        return out[0] if single else out

    @property
    def s(self) -> int:
        return self.blocks.s


def quadratic_oracle(P, blocks: BlockStructure | None = None, domain: str = "cube",
                     radius: float = 1.0) -> FunctionOracle:
    """``V(x) = x^T P x`` with gradient ``2 P x`` (``P`` symmetric)."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("P must be square")
    if np.linalg.norm(P - P.T) > 1e-10 * max(np.linalg.norm(P), 1e-300):
        raise ValueError("P must be symmetric")
    P = 0.5 * (P + P.T)
    return FunctionOracle(
        P.shape[0],
        value=lambda X: np.einsum("bi,bi->b", X @ P, X),
        gradient=lambda X: 2.0 * X @ P,
        blocks=blocks, domain=domain, radius=radius, name="quadratic")


def block_norm_matrix(H, blocks: BlockStructure) -> np.ndarray:
    """``s x s`` matrix of block spectral norms ``||H[i, j]||_2``."""
    H = np.asarray(H, dtype=float)
    if H.shape != (blocks.n, blocks.n):
        raise ValueError(f"H has shape {H.shape}, blocks describe n={blocks.n}")
    s = blocks.s
    if all(d == 1 for d in blocks.state_dims):
        return np.abs(H)
    out = np.zeros((s, s))
    for i in range(s):
        for j in range(s):
            out[i, j] = spectral_norm(H[blocks.state_slice(i), blocks.state_slice(j)],
                                      rtol=1e-14)
    return out


@dataclass
class DecayModel:
    """Decay profile ``gamma(k)``: ``C rho^k`` or ``C (k+1)^(-alpha)``.

    ``samples`` holds the observed values the model was fitted to, if any.
    """

    kind: str
    C: float
    rate: float
    samples: dict = field(default_factory=dict)
    fit_residual: float = 0.0

    def __post_init__(self):
        if self.kind not in ("exponential", "polynomial"):
            raise ValueError(f"unknown decay kind {self.kind!r}")
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.kind == "exponential" and not 0 < self.rate < 1:
            raise ValueError(f"exponential rate must lie in (0, 1), got {self.rate}")
        if self.kind == "polynomial" and not self.rate > 0:
            raise ValueError(f"polynomial rate must be positive, got {self.rate}")

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        if self.kind == "exponential":
            return self.C * self.rate ** k
        return self.C * (k + 1.0) ** (-self.rate)


def gamma_from_quadratic(P, g: InteractionGraph,
                         blocks: BlockStructure | None = None) -> dict[int, float]:
    """Decay samples ``gamma(k) = max_{dist(i,j)=k} ||H[i, j]||`` with ``H = P + P^T``.

    Distances ``k >= 1`` with no pair are omitted.
    """
    P = np.asarray(P, dtype=float)
    blocks = blocks or BlockStructure((1,) * g.s)
    if blocks.s != g.s:
        raise ValueError("graph and blocks disagree on s")
    N = block_norm_matrix(P + P.T, blocks)
    dist = g.dist
    samples = {}
    for k in np.unique(dist[(dist != UNREACHABLE) & (dist > 0)]):
        samples[int(k)] = float(np.max(N[dist == k]))
    return samples


def empirical_lipschitz(V: FunctionOracle, x, j: int) -> np.ndarray:
    """Lipschitz quotients of ``g_j`` obtained by zeroing each other block.

    Returns an ``s``-vector whose entry ``i`` is
    ``|g_j(x) - g_j(x~_i)| / ||x - x~_i||`` where ``x~_i`` has block ``i``
    zeroed.  Entry ``j`` and blocks with ``z_i = 0`` are ``nan``.
    """
    x = np.asarray(x, dtype=float)
    blocks = V.blocks
    s = blocks.s
    if not 0 <= j < s:
        raise IndexError(f"subsystem {j} out of range for s={s}")

    def zero(y, k):
        y = y.copy()
        y[blocks.state_slice(k)] = 0.0
        return y

    probes = [i for i in range(s) if i != j and np.any(x[blocks.state_slice(i)] != 0)]
    pts = [x, zero(x, j)]
    for i in probes:
        xi = zero(x, i)
        pts += [xi, zero(xi, j)]
    vals = V.evaluate(np.array(pts))
    gj = vals[0] - vals[1]
    out = np.full(s, np.nan)
    for k, i in enumerate(probes):
        gi = vals[2 + 2 * k] - vals[3 + 2 * k]
        out[i] = abs(gj - gi) / np.linalg.norm(x[blocks.state_slice(i)])
    return out


def fit_decay(samples: Mapping[int, float], kind: str = "exponential") -> DecayModel:
    """Least-squares fit of a decay model in log space.

    Exponential: ``log gamma = log C + k log rho``.  Polynomial:
    ``log gamma = log C - alpha log(k + 1)``.  Samples at or below 1e-300 are
    dropped; ``fit_residual`` is the RMS log-space residual.

    Raises
    ------
    ValueError
        With fewer than two usable samples, or if the fitted profile is not
        decreasing.
    """
    ks = np.array([k for k, v in samples.items() if v > _LOG_FLOOR], dtype=float)
    ys = np.log([samples[int(k)] for k in ks]) if ks.size else np.zeros(0)
    if ks.size < 2:
        raise ValueError("need at least two positive samples to fit a decay model")
    if kind == "exponential":
        X = ks
    elif kind == "polynomial":
        X = np.log(ks + 1.0)
    else:
        raise ValueError(f"unknown decay kind {kind!r}")
    design = np.column_stack([np.ones_like(X), X])
    (logC, slope), *_ = np.linalg.lstsq(design, ys, rcond=None)
    resid = float(np.sqrt(np.mean((design @ np.array([logC, slope]) - ys) ** 2)))
    rate = float(np.exp(slope)) if kind == "exponential" else float(-slope)
    return DecayModel(kind, float(np.exp(logC)), rate,
                      samples={int(k): float(samples[int(k)]) for k in ks},
                      fit_residual=resid)


def decay_profile(M, offsets=None) -> dict[int, float]:
    """Largest ``|M[i, j]|`` at each diagonal offset ``|i - j| >= 1``."""
    M = np.abs(np.asarray(M, dtype=float))
    n = M.shape[0]
    offsets = range(1, n) if offsets is None else offsets
    return {int(d): float(max(np.max(np.diag(M, d)), np.max(np.diag(M, -d))))
            for d in offsets}
