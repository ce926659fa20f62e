"""Benchmark problems: random banded LQR, heat equation, sin-product functions
and the Allen-Cahn state-dependent Riccati (SDRE) surrogate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .graph import BlockStructure
from .riccati import LQRProblem, care_closed_form, solve_care
from .sensitivity import FunctionOracle, quadratic_oracle


def neumann_laplacian(n: int) -> np.ndarray:
    """Unscaled 1-D Laplacian stencil with ghost-node Neumann rows.

    Interior rows are ``(1, -2, 1)``; the first and last rows are ``(-1, 1)``
    and ``(1, -1)``.  The matrix is symmetric with zero row sums.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    L = np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    L[0, 0] = L[-1, -1] = -1.0
    return L


def random_banded_lqr(n: int, bandwidth: int = 1, seed=0, symmetric: bool = True,
                      time_mode: str = "continuous") -> LQRProblem:
    """LQR problem with ``U(0, 1)`` entries of ``A`` inside the band, ``B = Q = R = I``.

    With ``symmetric=True`` (default) the upper band is drawn and mirrored,
    so the closed-form CARE applies at any size.  ``symmetric=False`` draws
    every in-band entry independently.
    """
    if not 1 <= bandwidth < n:
        raise ValueError(f"need 1 <= bandwidth < n, got bandwidth={bandwidth}, n={n}")
    rng = np.random.default_rng(seed)
    i, j = np.indices((n, n))
    band = np.abs(i - j) <= bandwidth
    # open interval (0, 1): redraw the (measure-zero) exact zeros
    U = rng.random((n, n))
    while np.any(U[band] == 0.0):
        U[U == 0.0] = rng.random(np.count_nonzero(U == 0.0))
    if symmetric:
        U = np.triu(U) + np.triu(U, 1).T
    A = np.where(band, U, 0.0)
    I = np.eye(n)
    return LQRProblem(A, I, I.copy(), I.copy(), BlockStructure.scalar(n), time_mode,
                      meta={"kind": "banded-lqr", "n": n, "bandwidth": bandwidth,
                            "seed": seed, "symmetric": symmetric})


def heat_lqr(n: int, sigma: float, gamma_tilde: float) -> LQRProblem:
    """Semi-discretized controlled heat equation on ``[0, 1]`` with ``dx = 1/n``.

    ``A = sigma L / dx^2``, ``B = I``, ``Q = dx I`` and ``R = gamma_tilde dx I``,
    so the closed form applies with ``c = dx`` and ``gamma = gamma_tilde dx``.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if sigma < 0 or gamma_tilde <= 0:
        raise ValueError("need sigma >= 0 and gamma_tilde > 0")
    dx = 1.0 / n
    A = sigma * neumann_laplacian(n) / dx ** 2
    I = np.eye(n)
    return LQRProblem(A, I, dx * I, gamma_tilde * dx * I, BlockStructure.scalar(n),
                      meta={"kind": "heat", "n": n, "sigma": sigma,
                            "gamma_tilde": gamma_tilde})


def lqr_value_oracle(prob: LQRProblem, domain: str = "cube", radius: float = 1.0,
                     method: str = "auto") -> tuple[FunctionOracle, np.ndarray]:
    """Quadratic value function ``x^T P x`` of a continuous LQR problem, and ``P``."""
    sol = solve_care(prob, method=method)
    return quadratic_oracle(sol.P, prob.blocks, domain, radius), sol.P


def sin_product_oracle(n: int, rho: float | None = None, alpha: float | None = None,
                       radius: float = 1.0) -> FunctionOracle:
    """``V(x) = sum_{i,j} sin(x_i) sin(x_j) w(|i - j|)``.

    Exactly one of ``rho`` (``w(k) = rho^k``, ``rho`` in (0, 1]) or ``alpha``
    (``w(k) = (k + 1)^(-alpha)``, ``alpha >= 0``) must be given.  The gradient
    is ``2 cos(x_k) sum_j sin(x_j) w(|k - j|)``.
    """
    if (rho is None) == (alpha is None):
        raise ValueError("give exactly one of rho or alpha")
    k = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(float)
    if rho is not None:
        if not 0 < rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        Wm = rho ** k
        name = f"sin-product(rho={rho})"
    else:
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
        Wm = (k + 1.0) ** (-alpha)
        name = f"sin-product(alpha={alpha})"

    def value(X):
        S = np.sin(X)
        return np.einsum("bi,bi->b", S @ Wm, S)

    def gradient(X):
        return 2.0 * np.cos(X) * (np.sin(X) @ Wm)

    return FunctionOracle(n, value, gradient, domain="cube", radius=radius, name=name)


# Allen-Cahn SDRE -------------------------------------------------------------


class RiccatiFailure(NumericalError):
    """CARE failure at a specific state; the state is kept in ``y``."""

    def __init__(self, message, y):
        super().__init__(message)
        self.y = np.asarray(y)


@dataclass
class SDREProblem:
    """Allen-Cahn semi-discretization with ``A(y) = sigma L / dx^2 + diag(1 - y^2)``."""

    n: int
    sigma: float
    delta1: float
    delta2: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need n >= 2")
        if self.sigma < 0 or self.delta1 <= 0 or self.delta2 <= 0:
            raise ValueError("need sigma >= 0 and positive delta1, delta2")
        dx = 1.0 / self.n
        self.L = self.sigma * neumann_laplacian(self.n) / dx ** 2

    @property
    def c(self) -> float:
        return self.delta1 / self.n

    @property
    def gamma(self) -> float:
        return self.delta2 / self.n

    def A(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return self.L + np.diag(1.0 - y * y)

    def linearization(self) -> LQRProblem:
        I = np.eye(self.n)
        return LQRProblem(self.A(np.zeros(self.n)), I, self.c * I, self.gamma * I)


def allen_cahn(n: int, sigma: float, delta1: float, delta2: float) -> SDREProblem:
    return SDREProblem(n, sigma, delta1, delta2)


def sdre_sample(prob: SDREProblem, y) -> tuple[float, np.ndarray]:
    """SDRE surrogate value ``y^T P(y) y`` and gradient ``2 P(y) y``.

    Raises
    ------
    RiccatiFailure
        If the pointwise Riccati solve fails; the offending state is attached.
    """
    y = np.asarray(y, dtype=float)
    try:
        P = care_closed_form(prob.A(y), prob.c, prob.gamma).P
    except (NumericalError, ValueError, np.linalg.LinAlgError) as exc:
        raise RiccatiFailure(f"Riccati solve failed: {exc}", y) from exc
    if not np.all(np.isfinite(P)):
        raise RiccatiFailure("Riccati solve produced non-finite entries", y)
    Py = P @ y
    return float(y @ Py), 2.0 * Py


def sdre_oracle(prob: SDREProblem, radius: float = 1.0) -> FunctionOracle:
    """Point-by-point oracle over :func:`sdre_sample` on the 2-norm ball."""
    return FunctionOracle(prob.n, lambda y: sdre_sample(prob, y)[0],
                          lambda y: sdre_sample(prob, y)[1],
                          domain="ball", radius=radius, vectorized=False,
                          name="allen-cahn-sdre")
