"""Interaction graphs of subsystem-structured problems.

Vertices are subsystems ``0 .. s-1`` (zero-based throughout the Python API;
the CSV edge-list format is one-based).  An edge ``(i, j)`` means that
subsystem ``i`` influences subsystem ``j``, and ``dist[i, j]`` is the length
of the shortest directed path from ``i`` to ``j``.  Unreachable pairs carry
the sentinel :data:`UNREACHABLE`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

#: Distance sentinel for "no path".  Never use it in arithmetic; test with
#: :meth:`InteractionGraph.reachable` instead.
UNREACHABLE = -1

#: A block counts as structurally nonzero if its max-abs entry exceeds this.
BLOCK_ZERO_TOL = 1e-14


@dataclass(frozen=True)
class BlockStructure:
    """Partition of the state (and control) vector into subsystems.

    Parameters
    ----------
    state_dims : sequence of int
        ``n_1, ..., n_s``, all at least one.
    control_dims : sequence of int, optional
        ``m_1, ..., m_s``, zeros allowed.  Defaults to all zeros.
    """

    state_dims: tuple[int, ...]
    control_dims: tuple[int, ...] = ()

    def __post_init__(self):
        state = tuple(int(d) for d in self.state_dims)
        control = tuple(int(d) for d in self.control_dims) or (0,) * len(state)
        if len(state) < 1:
            raise ValueError("need at least one subsystem")
        if any(d < 1 for d in state):
            raise ValueError(f"state dimensions must be >= 1, got {state}")
        if len(control) != len(state):
            raise ValueError("control_dims and state_dims differ in length")
        if any(d < 0 for d in control):
            raise ValueError(f"control dimensions must be >= 0, got {control}")
        object.__setattr__(self, "state_dims", state)
        object.__setattr__(self, "control_dims", control)

    @classmethod
    def scalar(cls, s: int, controlled: bool = True) -> "BlockStructure":
        """``s`` one-dimensional subsystems, each with a scalar control."""
        return cls((1,) * s, (1 if controlled else 0,) * s)

    @property
    def s(self) -> int:
        return len(self.state_dims)

    @property
    def n(self) -> int:
        return sum(self.state_dims)

    @property
    def m(self) -> int:
        return sum(self.control_dims)

    @property
    def state_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.state_dims)]).astype(int)

    @property
    def control_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.control_dims)]).astype(int)

    def state_slice(self, j: int) -> slice:
        off = self.state_offsets
        return slice(int(off[j]), int(off[j + 1]))

    def control_slice(self, j: int) -> slice:
        off = self.control_offsets
        return slice(int(off[j]), int(off[j + 1]))

    def coordinates(self, subsystems: Iterable[int]) -> np.ndarray:
        """State coordinate indices of the given subsystems, in order."""
        off = self.state_offsets
        parts = [np.arange(off[j], off[j + 1]) for j in subsystems]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=int)


@dataclass(frozen=True, eq=False)
class InteractionGraph:
    """Directed, unweighted interaction graph with all-pairs distances."""

    s: int
    edges: frozenset
    dist: np.ndarray = field(repr=False)
    symmetric: bool = False

    def __post_init__(self):
        self.dist.setflags(write=False)

    @classmethod
    def from_edges(cls, s: int, edges: Iterable[tuple[int, int]],
                   symmetric: bool = False) -> "InteractionGraph":
        edge_set = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if not (0 <= i < s and 0 <= j < s):
                raise ValueError(f"edge {(i, j)} out of range for s={s}")
            if i != j:
                edge_set.add((i, j))
        if symmetric:
            edge_set |= {(j, i) for i, j in edge_set}
        return cls(s, frozenset(edge_set), _bfs_distances(s, edge_set), symmetric)

    def reachable(self) -> np.ndarray:
        return self.dist != UNREACHABLE

    def distance(self, i: int, j: int) -> float:
        """Distance from ``i`` to ``j`` as a float (``inf`` if unreachable)."""
        d = self.dist[i, j]
        return float("inf") if d == UNREACHABLE else float(d)

    def successors(self, i: int) -> list[int]:
        return sorted(j for (a, j) in self.edges if a == i)

    def __eq__(self, other):
        if not isinstance(other, InteractionGraph):
            return NotImplemented
        return self.s == other.s and self.edges == other.edges

    def __hash__(self):
        return hash((self.s, self.edges))


def _bfs_distances(s: int, edges: Iterable[tuple[int, int]]) -> np.ndarray:
    adj = [[] for _ in range(s)]
    for i, j in sorted(edges):
        adj[i].append(j)
    dist = np.full((s, s), UNREACHABLE, dtype=np.int64)
    for src in range(s):
        dist[src, src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if dist[src, v] == UNREACHABLE:
                    dist[src, v] = dist[src, u] + 1
                    queue.append(v)
    return dist


def sequential_graph(s: int) -> InteractionGraph:
    """Undirected path graph, ``dist(i, j) = |i - j|``."""
    return InteractionGraph.from_edges(s, [(i, i + 1) for i in range(s - 1)],
                                       symmetric=True)


def block_pattern(M, row_dims: Sequence[int], col_dims: Sequence[int],
                  tol: float = BLOCK_ZERO_TOL) -> np.ndarray:
    """Boolean block-sparsity pattern of a dense matrix.

    Block ``(i, j)`` is nonzero when its max-abs entry exceeds ``tol``.
    Blocks with a zero-sized side are reported as zero.
    """
    M = np.asarray(M, dtype=float)
    roff = np.concatenate([[0], np.cumsum(row_dims)]).astype(int)
    coff = np.concatenate([[0], np.cumsum(col_dims)]).astype(int)
    if M.shape != (roff[-1], coff[-1]):
        raise ValueError(f"matrix shape {M.shape} does not match block dims "
                         f"({roff[-1]}, {coff[-1]})")
    pattern = np.zeros((len(row_dims), len(col_dims)), dtype=bool)
    for i in range(len(row_dims)):
        for j in range(len(col_dims)):
            blk = M[roff[i]:roff[i + 1], coff[j]:coff[j + 1]]
            pattern[i, j] = blk.size > 0 and np.max(np.abs(blk)) > tol
    return pattern


def build_interaction_graph(blocks: BlockStructure, A_pattern, B_pattern,
                            Q_pattern, R_pattern) -> InteractionGraph:
    """Graph induced by the block sparsity of an LQR problem.

    There is an edge ``(j, i)`` (``z_j`` influences ``z_i``) when ``A[i, j]``
    or ``Q[i, j]`` is nonzero, when ``m_j > 0`` and ``B[i, j]`` is nonzero, or
    when ``m_i, m_j > 0`` and ``R[i, j]`` is nonzero.  The patterns are
    ``s x s`` boolean arrays (see :func:`block_pattern`).
    """
    s = blocks.s
    pats = []
    for name, p in zip("ABQR", (A_pattern, B_pattern, Q_pattern, R_pattern)):
        p = np.asarray(p, dtype=bool)
        if p.shape != (s, s):
            raise ValueError(f"{name}_pattern has shape {p.shape}, expected {(s, s)}")
        pats.append(p)
    A, B, Q, R = pats
    has_u = np.asarray(blocks.control_dims) > 0
    fires = A | Q | (B & has_u[None, :]) | (R & has_u[:, None] & has_u[None, :])
    edges = [(j, i) for i, j in zip(*np.nonzero(fires)) if i != j]
    return InteractionGraph.from_edges(s, edges)


def graph_from_matrices(blocks: BlockStructure, A, B, Q, R,
                        symmetric: bool = True) -> InteractionGraph:
    """Detect block patterns of dense ``A, B, Q, R`` and build the graph."""
    sd, cd = blocks.state_dims, blocks.control_dims
    g = build_interaction_graph(
        blocks,
        block_pattern(A, sd, sd),
        block_pattern(B, sd, cd),
        block_pattern(Q, sd, sd),
        block_pattern(R, cd, cd),
    )
    return symmetrize(g) if symmetric else g


def symmetrize(g: InteractionGraph) -> InteractionGraph:
    """Close the edge set under reversal and recompute distances."""
    return InteractionGraph.from_edges(g.s, g.edges, symmetric=True)


class Neighborhood(NamedTuple):
    subsystems: np.ndarray   # sorted subsystem indices
    dim: int                 # d_{j,l}: total state dimension of the set


def neighborhood(g: InteractionGraph, j: int, l: int,
                 blocks: BlockStructure | None = None) -> Neighborhood:
    """Forward neighborhood ``{i >= j : dist(i, j) <= l}`` of subsystem ``j``."""
    if not 0 <= j < g.s:
        raise IndexError(f"subsystem {j} out of range for s={g.s}")
    if l < 0:
        raise ValueError("radius must be non-negative")
    col = g.dist[j:, j]
    idx = j + np.nonzero((col != UNREACHABLE) & (col <= l))[0]
    dims = blocks.state_dims if blocks is not None else (1,) * g.s
    return Neighborhood(idx, int(sum(dims[i] for i in idx)))


@dataclass(frozen=True)
class GrowthBound:
    """Exact shell sizes ``r(1) .. r(s-1)`` and an optional ``C_hat * mu**l`` fit."""

    r: np.ndarray
    fitted_rate: tuple[float, float] | None = None

    def __call__(self, l: int) -> int:
        return int(self.r[l - 1]) if 1 <= l <= len(self.r) else 0


def growth_bound(g: InteractionGraph) -> GrowthBound:
    s = g.s
    r = np.zeros(max(s - 1, 0), dtype=int)
    for l in range(1, s):
        r[l - 1] = int(np.max(np.sum(g.dist == l, axis=1)))
    ls = np.arange(1, s)[r > 0]
    fitted = None
    if len(ls) >= 2:
        slope, intercept = np.polyfit(ls, np.log(r[r > 0]), 1)
        fitted = (float(np.exp(intercept)), float(np.exp(slope)))
    return GrowthBound(r, fitted)
