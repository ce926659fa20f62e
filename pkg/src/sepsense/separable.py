"""Separable approximation of functions with decaying sensitivity.

With ``x_{j,l}`` the lifting of the forward neighborhood values ``z_{j,l}``
(zeros elsewhere), the approximation is::

    V(x) ~ V(0) + Psi_l(x),   Psi_l(x) = sum_j V(x_{j,l}) - V(Lambda_j x_{j,l})

where ``Lambda_j`` zeroes block ``j``.  The error is bounded by
``||x||^2 ||D_l||_2`` with ``D_l[i, j] = gamma(dist(i, j))`` beyond radius
``l``.  Subsystems are zero-based.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .graph import UNREACHABLE, BlockStructure, GrowthBound, InteractionGraph, neighborhood
from .linalg import spectral_norm
from .sensitivity import DecayModel, FunctionOracle

ANCHORED_MAX_DIM = 5


def mask(x, j: int, blocks: BlockStructure | None = None) -> np.ndarray:
    """Copy of ``x`` with block ``j`` set to zero (``Lambda_j x``)."""
    x = np.array(x, dtype=float)
    blocks = blocks or BlockStructure((1,) * x.shape[-1])
    if not 0 <= j < blocks.s:
        raise IndexError(f"subsystem {j} out of range for s={blocks.s}")
    x[..., blocks.state_slice(j)] = 0.0
    return x


def embed(z, j: int, l: int, graph: InteractionGraph,
          blocks: BlockStructure | None = None) -> np.ndarray:
    """Lift neighborhood values ``z_{j,l}`` to ``x_{j,l}`` in ``R^n``."""
    blocks = blocks or BlockStructure((1,) * graph.s)
    idx = blocks.coordinates(neighborhood(graph, j, l, blocks).subsystems)
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != idx.size:
        raise ValueError(f"z has dimension {z.shape[-1]}, neighborhood needs {idx.size}")
    x = np.zeros(z.shape[:-1] + (blocks.n,))
    x[..., idx] = z
    return x


def restrict(x, j: int, l: int, graph: InteractionGraph,
             blocks: BlockStructure | None = None) -> np.ndarray:
    """Neighborhood values ``z_{j,l}`` of a full state ``x``."""
    blocks = blocks or BlockStructure((1,) * graph.s)
    idx = blocks.coordinates(neighborhood(graph, j, l, blocks).subsystems)
    return np.asarray(x, dtype=float)[..., idx]


class SeparableApprox:
    """``Psi_l`` for an oracle on a graph; see the module docstring."""

    def __init__(self, oracle: FunctionOracle, graph: InteractionGraph, l: int):
        if graph.s != oracle.blocks.s:
            raise ValueError("graph and oracle disagree on the number of subsystems")
        if l < 0:
            raise ValueError("l must be non-negative")
        self.oracle = oracle
        self.graph = graph
        self.l = int(l)
        self.blocks = oracle.blocks
        self.neighborhoods = [neighborhood(graph, j, l, self.blocks) for j in range(graph.s)]
        self.index_sets = [self.blocks.coordinates(nb.subsystems) for nb in self.neighborhoods]
        self.V0 = float(oracle.evaluate(np.zeros(oracle.n)))

    @property
    def d(self) -> int:
        """Largest neighborhood dimension, so ``Psi_l`` is ``d``-separable."""
        return max(nb.dim for nb in self.neighborhoods)

    def _lift_pair(self, j, z):
        x = np.zeros(z.shape[:-1] + (self.oracle.n,))
        x[..., self.index_sets[j]] = z
        return x, mask(x, j, self.blocks)

    def psi_component(self, j: int, z) -> float:
        """``Psi_l^j(z) = V(x_{j,l}) - V(Lambda_j x_{j,l})``."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.index_sets[j].size,):
            raise ValueError(f"z must have dimension {self.index_sets[j].size}")
        x, xm = self._lift_pair(j, z)
        v = self.oracle.evaluate(np.stack([x, xm]))
        return float(v[0] - v[1])

    def psi(self, x) -> float:
        """``Psi_l(x)`` (without ``V(0)``), with repeated lifted points evaluated once."""
        x = np.asarray(x, dtype=float)
        pts = []
        for j in range(self.graph.s):
            xj, xm = self._lift_pair(j, x[self.index_sets[j]])
            pts += [xj, xm]
        keys = [p.tobytes() for p in pts]
        unique = {}
        for k, p in zip(keys, pts):
            unique.setdefault(k, p)
        order = list(unique)
        vals = dict(zip(order, self.oracle.evaluate(np.array([unique[k] for k in order]))))
        total = 0.0
        for j in range(self.graph.s):
            total += vals[keys[2 * j]] - vals[keys[2 * j + 1]]
        return float(total)

    def psi_batch(self, X) -> np.ndarray:
        """``Psi_l`` at each row of ``X``; components summed in ascending ``j``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        total = np.zeros(X.shape[0])
        for j in range(self.graph.s):
            xj, xm = self._lift_pair(j, X[:, self.index_sets[j]])
            total += self.oracle.evaluate(xj) - self.oracle.evaluate(xm)
        return total

    def error(self, X) -> np.ndarray:
        """Observed ``|V(x) - Psi_l(x) - V(0)|`` at each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.abs(self.oracle.evaluate(X) - self.psi_batch(X) - self.V0)


# error bound matrix ----------------------------------------------------------


@dataclass
class ErrorBoundMatrix:
    D: np.ndarray
    norm1: float
    norm_inf: float
    norm2_upper: float
    norm2_exact: float
    l: int


def _gamma_callable(decay) -> Callable[[int], float]:
    if isinstance(decay, DecayModel) or callable(decay):
        return lambda k: float(decay(k))
    if isinstance(decay, Mapping):
        def lookup(k):
            if k not in decay:
                raise KeyError(f"decay samples have no entry for distance {k}")
            return float(decay[k])
        return lookup
    raise TypeError("decay must be a DecayModel, a callable or a mapping")


def matrix_norms(D) -> tuple[float, float, float, float]:
    """``(||D||_1, ||D||_inf, sqrt(||D||_1 ||D||_inf), ||D||_2)``."""
    D = np.asarray(D, dtype=float)
    if D.size == 0:
        return 0.0, 0.0, 0.0, 0.0
    n1 = float(np.max(np.sum(np.abs(D), axis=0)))
    ninf = float(np.max(np.sum(np.abs(D), axis=1)))
    return n1, ninf, math.sqrt(n1 * ninf), spectral_norm(D)


def error_bound_matrix(graph: InteractionGraph, decay, l: int) -> ErrorBoundMatrix:
    """``D_l[i, j] = gamma(dist(i, j))`` where ``dist(i, j) > l``, else 0.

    Unreachable pairs contribute 0.  ``decay`` is a :class:`DecayModel`, any
    callable ``k -> gamma(k)``, or a mapping of samples (a missing distance
    raises ``KeyError``).
    """
    if l < 0:
        raise ValueError("l must be non-negative")
    gamma = _gamma_callable(decay)
    dist = graph.dist
    D = np.zeros((graph.s, graph.s))
    far = (dist != UNREACHABLE) & (dist > l)
    cache = {}
    for i, j in zip(*np.nonzero(far)):
        k = int(dist[i, j])
        if k not in cache:
            cache[k] = gamma(k)
        D[i, j] = cache[k]
    if np.any(D < 0):
        raise ValueError("decay profile produced negative values")
    n1, ninf, up, ex = matrix_norms(D)
    return ErrorBoundMatrix(D, n1, ninf, up, ex, int(l))


# theorem bounds --------------------------------------------------------------


def exp_theorem_bound(C: float, rho: float, C_hat: float, mu: float, delta: float,
                      l: int) -> float:
    """``C~ delta^(l+1)`` with ``C~ = C C_hat / (1 - delta)``.

    Bounds ``||D_l||_2`` for ``gamma(k) = C rho^k`` on a graph whose growth
    satisfies ``r(k) <= C_hat mu^k``.
    """
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    if not 1 <= mu < 1 / rho:
        raise ValueError("mu must lie in [1, 1/rho)")
    if not rho * mu < delta < 1:
        raise ValueError("delta must lie in (rho*mu, 1)")
    if C <= 0 or C_hat <= 0 or l < 0:
        raise ValueError("C and C_hat must be positive and l non-negative")
    return C * C_hat / (1.0 - delta) * delta ** (l + 1)


def growth_sup_term(growth: GrowthBound, beta: float) -> float:
    """``sup_k r(k) (k+1)^(-beta)`` over the distances present in the graph."""
    if len(growth.r) == 0:
        return 0.0
    k = np.arange(1, len(growth.r) + 1, dtype=float)
    return float(np.max(growth.r * (k + 1.0) ** (-beta)))


def _power_tail(q: float, start: int, rel: float = 1e-15, cap: int = 10**7,
                chunk: int = 100_000) -> float:
    """Certified upper bound on ``sum_{k >= start} k^(-q)`` for ``q > 1``."""
    total = 0.0
    k0 = start
    while k0 < start + cap:
        k = np.arange(k0, k0 + chunk, dtype=float)
        terms = k ** (-q)
        below = np.nonzero(terms < rel * (total + np.cumsum(terms)))[0]
        if below.size:
            stop = below[0]
            total += float(np.sum(terms[:stop]))
            k0 += stop
            break
        total += float(np.sum(terms))
        k0 += chunk
    # sum_{k >= K} k^-q <= K^-q + int_K^inf t^-q dt
    return total + k0 ** (-q) + k0 ** (1.0 - q) / (q - 1.0)


def poly_theorem_bound(C: float, alpha: float, beta: float, sup_term: float,
                       l: int) -> float:
    """``C~ sum_{k >= l+2} k^(beta - alpha)`` with ``C~ = C sup_term``.

    The tail is a partial sum plus an integral-test remainder, so the value
    is an upper bound.
    """
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    if not alpha - beta > 1:
        raise ValueError("need beta < alpha - 1 for a convergent tail")
    if C <= 0 or sup_term < 0 or l < 0:
        raise ValueError("C must be positive, sup_term and l non-negative")
    return C * sup_term * _power_tail(alpha - beta, l + 2)


# anchored decomposition ------------------------------------------------------


class AnchoredDecomposition:
    """Anchored (at 0) decomposition ``f = sum_u f_u`` over coordinate subsets.

    ``f_u(x) = f(x_u; 0) - sum_{v strictly in u} f_v(x)``.  Components are
    evaluated at a full point ``x`` and depend only on ``x_u``.
    """

    def __init__(self, V: FunctionOracle, max_dim: int = ANCHORED_MAX_DIM):
        if V.n > max_dim or V.n > ANCHORED_MAX_DIM:
            raise ValueError(f"anchored decomposition limited to n <= {min(max_dim, ANCHORED_MAX_DIM)}")
        if V.blocks.s != V.n:
            raise ValueError("anchored decomposition needs one-dimensional blocks")
        self.V = V
        self.n = V.n
        self.subsets = [frozenset(u) for r in range(self.n + 1)
                        for u in itertools.combinations(range(self.n), r)]

    def components(self, x) -> dict[frozenset, float]:
        """All ``f_u(x)``, built bottom-up over subset size."""
        x = np.asarray(x, dtype=float)
        pts = np.zeros((len(self.subsets), self.n))
        for k, u in enumerate(self.subsets):
            idx = list(u)
            pts[k, idx] = x[idx]
        fvals = dict(zip(self.subsets, self.V.evaluate(pts)))
        comp = {}
        for u in self.subsets:
            val = fvals[u]
            for v in comp:
                if v < u:
                    val -= comp[v]
            comp[u] = val
        return comp

    def term(self, u) -> Callable[[np.ndarray], float]:
        u = frozenset(u)
        if u not in set(self.subsets):
            raise KeyError(f"{sorted(u)} is not a subset of range({self.n})")
        return lambda x: self.components(x)[u]


def anchored_terms(V: FunctionOracle, max_dim: int = ANCHORED_MAX_DIM) -> dict:
    """Map from every subset ``u`` to its component function ``x -> f_u(x)``."""
    dec = AnchoredDecomposition(V, max_dim)
    return {u: dec.term(u) for u in dec.subsets}


def anchored_psi_component(dec: AnchoredDecomposition, graph: InteractionGraph,
                           j: int, l: int, x) -> float:
    """Sum of ``f_u(x)`` over ``u`` containing ``j`` with every ``i in u`` in
    the forward neighborhood of ``j`` (``i >= j`` and ``dist(i, j) <= l``)."""
    nb = set(int(i) for i in neighborhood(graph, j, l).subsystems)
    comp = dec.components(x)
    return float(sum(val for u, val in comp.items() if j in u and u <= nb))
