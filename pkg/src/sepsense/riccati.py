"""Algebraic Riccati equations and off-diagonal decay certificates.

Continuous time (CARE)::

    A^T P + P A - P B R^{-1} B^T P + Q = 0

Discrete time (DARE)::

    P = A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A + Q

For symmetric ``A`` with ``B = I``, ``Q = c I`` and ``R = gamma I`` the CARE
has the closed form ``P = gamma (sqrt(A^2 + (c/gamma) I) + A)``, and because
``P`` is an analytic function of a banded matrix its entries decay
exponentially away from the diagonal.  :func:`decay_certificate` computes
explicit constants ``K, rho`` with ``|P[i, j]| <= K rho^|i-j|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import ConvergenceError, NumericalError, StabilityError
from .graph import BlockStructure
from .linalg import _check_symmetric, jacobi_eigh, spectral_interval, sym_function

#: Largest state dimension for the dense Kronecker Lyapunov solver.
LYAPUNOV_MAX_N = 60

#: Relative Frobenius tolerance on ``A - A^T`` for the symmetric closed form.
SYMMETRY_RTOL = 1e-10


@dataclass
class LQRProblem:
    """Linear-quadratic regulator data ``(A, B, Q, R)``.

    ``time_mode`` is ``"continuous"`` or ``"discrete"``.  ``blocks`` defaults
    to scalar subsystems with one control each when ``B`` is square, and to
    a single subsystem holding all controls otherwise.
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    blocks: BlockStructure | None = None
    time_mode: str = "continuous"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        n, m = self.B.shape
        if self.A.shape != (n, n):
            raise ValueError(f"A has shape {self.A.shape}, B has {n} rows")
        if self.Q.shape != (n, n) or self.R.shape != (m, m):
            raise ValueError("Q must be n x n and R must be m x m")
        if self.time_mode not in ("continuous", "discrete"):
            raise ValueError(f"unknown time_mode {self.time_mode!r}")
        _check_symmetric(self.Q)
        _check_symmetric(self.R)
        self.Q = 0.5 * (self.Q + self.Q.T)
        self.R = 0.5 * (self.R + self.R.T)
        q_min = np.linalg.eigvalsh(self.Q)[0]
        if q_min < -1e-10:
            raise ValueError(f"Q is not positive semidefinite (min eigenvalue {q_min:.3e})")
        r_min = np.linalg.eigvalsh(self.R)[0]
        if r_min <= 0:
            raise ValueError(f"R is not positive definite (min eigenvalue {r_min:.3e})")
        if self.blocks is None:
            if m == n:
                self.blocks = BlockStructure.scalar(n)
            else:
                self.blocks = BlockStructure((n,), (m,))
        if self.blocks.n != n or self.blocks.m != m:
            raise ValueError("block structure does not match A and B")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def is_symmetric(self) -> bool:
        return bool(np.linalg.norm(self.A - self.A.T)
                    <= SYMMETRY_RTOL * max(np.linalg.norm(self.A), 1e-300))

    def scaled_identity_costs(self) -> tuple[float, float] | None:
        """``(c, gamma)`` if ``B = I``, ``Q = c I``, ``R = gamma I``; else ``None``."""
        n = self.n
        if self.B.shape != (n, n) or not np.array_equal(self.B, np.eye(n)):
            return None
        c, g = self.Q[0, 0], self.R[0, 0]
        if not (np.array_equal(self.Q, c * np.eye(n)) and np.array_equal(self.R, g * np.eye(n))):
            return None
        return float(c), float(g)

    def closed_form_applicable(self) -> bool:
        costs = self.scaled_identity_costs()
        return (self.time_mode == "continuous" and costs is not None
                and costs[0] > 0 and self.is_symmetric())


@dataclass
class RiccatiSolution:
    P: np.ndarray
    residual_norm: float
    closed_loop_stable: bool
    iterations: int
    K: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def sidecar(self) -> dict:
        return {"residual_norm": self.residual_norm, "iterations": self.iterations,
                "closed_loop_stable": self.closed_loop_stable, **self.info}


# residuals -----------------------------------------------------------------


def care_residual(P, A, B, Q, R) -> np.ndarray:
    BtP = B.T @ P
    return A.T @ P + P @ A - BtP.T @ np.linalg.solve(R, BtP) + Q


def dare_residual(P, A, B, Q, R) -> np.ndarray:
    return _dare_map(P, A, B, Q, R) - P


def _dare_map(P, A, B, Q, R):
    BtPA = B.T @ P @ A
    S = R + B.T @ P @ B
    return A.T @ P @ A - BtPA.T @ np.linalg.solve(S, BtPA) + Q


def _is_hurwitz(M) -> bool:
    return bool(np.all(np.linalg.eigvals(M).real < 0))


def _is_schur(M) -> bool:
    return bool(np.max(np.abs(np.linalg.eigvals(M))) < 1)


# closed form ---------------------------------------------------------------


def bandwidth(A, tol: float = 0.0) -> int:
    """Largest ``|i - j|`` with ``|A[i, j]| > tol``."""
    A = np.asarray(A)
    i, j = np.nonzero(np.abs(A) > tol)
    return int(np.max(np.abs(i - j))) if i.size else 0


def _closed_form_scalar(lam, c, gamma):
    # gamma * (sqrt(lam^2 + c/gamma) + lam), rewritten for lam < 0 to avoid cancellation
    root = np.sqrt(lam * lam + c / gamma)
    return np.where(lam >= 0, gamma * (root + lam), c / np.where(root - lam > 0, root - lam, 1.0))


def care_closed_form(A, c: float, gamma: float, method: str = "jacobi",
                     bandwidth_hint: int | None = None) -> RiccatiSolution:
    """CARE solution for symmetric ``A`` with ``B = I``, ``Q = c I``, ``R = gamma I``.

    Parameters
    ----------
    A : (n, n) array_like
        Symmetric system matrix.
    c, gamma : float
        Positive state and control cost weights.
    method : {"jacobi", "chebyshev"}
        ``"jacobi"`` evaluates ``gamma X sqrt(L^2 + c/gamma) X^T + gamma A``
        from a Jacobi eigendecomposition.  ``"chebyshev"`` expands the same
        matrix function in Chebyshev polynomials of the rescaled ``A``; far
        off-diagonal entries then carry errors proportional to their own
        size, which is what entrywise decay checks need.
    bandwidth_hint : int, optional
        Bandwidth of ``A`` for the Chebyshev path (detected if omitted).

    Raises
    ------
    ValueError
        If ``A`` is not symmetric or a weight is not positive.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if np.linalg.norm(A - A.T) > SYMMETRY_RTOL * max(np.linalg.norm(A), 1e-300):
        raise ValueError("closed form requires a symmetric A")
    if c <= 0 or gamma <= 0:
        raise ValueError("c and gamma must be positive")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    info = {"method": method}
    if method == "jacobi":
        eig = jacobi_eigh(A)
        P = sym_function(A, lambda w: _closed_form_scalar(w, c, gamma), eig)
        info["sweeps"] = eig.sweeps
    elif method == "chebyshev":
        p = bandwidth(A) if bandwidth_hint is None else int(bandwidth_hint)
        P, N = _chebyshev_care(A, c, gamma, max(p, 1))
        info["terms"] = N
    else:
        raise ValueError(f"unknown method {method!r}")
    I = np.eye(n)
    res = np.linalg.norm(care_residual(P, A, I, c * I, gamma * I))
    stable = _is_hurwitz(A - P / gamma)
    return RiccatiSolution(P, float(res), stable, 0, K=P / gamma, info=info)


def _care_symbol(a, b, c, gamma):
    """``F(x) = gamma (sqrt(y^2 + c/gamma) + y)`` with ``y`` the image of ``x in [-1, 1]`` in ``[a, b]``."""
    def F(x):
        y = (b - a) / 2 * x + (a + b) / 2
        return gamma * (mpmath.sqrt(y * y + c / gamma) + y)
    return F


def _chebyshev_coefficients(F, N: int) -> np.ndarray:
    """First ``N`` Chebyshev coefficients of ``F`` from ``N`` Gauss-Chebyshev nodes.

    Runs in the current mpmath precision; the cosine table is indexed by
    ``j (2k + 1) mod 4N`` so only ``4N`` cosines are evaluated.
    """
    four_n = 4 * N
    table = [mpmath.cos(mpmath.pi * m / (2 * N)) for m in range(four_n)]
    fvals = [F(table[2 * k + 1]) for k in range(N)]
    coeffs = np.empty(N)
    for j in range(N):
        acc = mpmath.fsum(fvals[k] * table[(j * (2 * k + 1)) % four_n] for k in range(N))
        coeffs[j] = float(2 * acc / N)
    coeffs[0] /= 2
    return coeffs


def _banded_matmul(At, diags, p, T):
    """``At @ T`` for ``At`` with bandwidth ``p``, from its stored diagonals."""
    out = diags[0][:, None] * T
    for d in range(1, p + 1):
        out[:-d] += diags[d][:, None] * T[d:]
        out[d:] += diags[-d][:, None] * T[:-d]
    return out


def _chebyshev_care(A, c, gamma, p):
    n = A.shape[0]
    a, b = spectral_interval(A)
    scale = max(abs(a), abs(b), 1.0)
    if b - a <= 1e-13 * scale:
        lam = 0.5 * (a + b)
        return float(_closed_form_scalar(lam, c, gamma)) * np.eye(n), 1
    cert = certificate_constants(a, b, c, gamma, p)
    log_chi = math.log(cert.chi)
    # truncation below 1e-8 of the smallest certified entry and 1e-17 of the largest
    N = max(math.ceil((n - 1) / p) + math.ceil(8 * math.log(10) / log_chi),
            math.ceil(17 * math.log(10) / log_chi)) + 2
    digits = int(N * log_chi / math.log(10)) + 25
    with mpmath.workdps(digits):
        coeffs = _chebyshev_coefficients(
            _care_symbol(mpmath.mpf(a), mpmath.mpf(b), mpmath.mpf(c), mpmath.mpf(gamma)), N)

    At = (2.0 * A - (a + b) * np.eye(n)) / (b - a)
    diags = {0: np.diag(At).copy()}
    for d in range(1, p + 1):
        diags[d] = np.diag(At, d).copy()     # At[i, i+d]
        diags[-d] = np.diag(At, -d).copy()   # At[i+d, i]
    T_prev, T_cur = np.eye(n), At.copy()
    P = coeffs[0] * T_prev + coeffs[1] * T_cur
    for k in range(2, N):
        T_prev, T_cur = T_cur, 2.0 * _banded_matmul(At, diags, p, T_cur) - T_prev
        P += coeffs[k] * T_cur
    return 0.5 * (P + P.T), N


# general CARE ----------------------------------------------------------------


def solve_lyapunov(A_cl, W) -> np.ndarray:
    """Solve ``A_cl^T X + X A_cl + W = 0`` through the ``n^2 x n^2`` Kronecker system.

    Raises
    ------
    ValueError
        If ``n`` exceeds :data:`LYAPUNOV_MAX_N`.
    NumericalError
        If the Kronecker system is singular.
    """
    A_cl = np.atleast_2d(np.asarray(A_cl, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    n = A_cl.shape[0]
    if n > LYAPUNOV_MAX_N:
        raise ValueError(f"Kronecker Lyapunov solver limited to n <= {LYAPUNOV_MAX_N}, got {n}")
    I = np.eye(n)
    # row-major vec: vec(A^T X) = (A^T kron I) vec X, vec(X A) = (I kron A^T) vec X
    K = np.kron(A_cl.T, I) + np.kron(I, A_cl.T)
    try:
        x = np.linalg.solve(K, -W.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular Lyapunov system (closed loop not Hurwitz?)") from exc
    X = x.reshape(n, n)
    return 0.5 * (X + X.T)


def care_newton(prob: LQRProblem, K0=None, tol: float = 1e-10,
                max_iter: int = 50) -> RiccatiSolution:
    """Newton-Kleinman iteration for the CARE.

    Starting from a stabilizing feedback ``K0`` each step solves the
    closed-loop Lyapunov equation
    ``(A - B K)^T P + P (A - B K) + Q + K^T R K = 0`` and sets
    ``K = R^{-1} B^T P``.  The default ``K0`` is ``R^{-1} B^T P0`` with ``P0``
    the closed-form solution for the symmetric part of ``A`` and unit weights.

    Raises
    ------
    ValueError
        If ``n`` is above the Lyapunov limit.
    StabilityError
        If the initial closed loop is not Hurwitz.
    ConvergenceError
        If the residual tolerance is not met within ``max_iter`` steps.
    """
    A, B, Q, R = prob.A, prob.B, prob.Q, prob.R
    n = prob.n
    if n > LYAPUNOV_MAX_N:
        raise ValueError(f"care_newton is limited to n <= {LYAPUNOV_MAX_N}")
    if K0 is None:
        P0 = care_closed_form(0.5 * (A + A.T), 1.0, 1.0).P
        K = np.linalg.solve(R, B.T @ P0)
    else:
        K = np.atleast_2d(np.asarray(K0, dtype=float))
    if not _is_hurwitz(A - B @ K):
        raise StabilityError("initial feedback does not stabilize the closed loop")

    P = np.zeros((n, n))
    for it in range(1, max_iter + 1):
        A_cl = A - B @ K
        P = solve_lyapunov(A_cl, Q + K.T @ R @ K)
        K = np.linalg.solve(R, B.T @ P)
        res = float(np.linalg.norm(care_residual(P, A, B, Q, R)))
        if res <= tol * (1.0 + np.linalg.norm(P)):
            return RiccatiSolution(P, res, _is_hurwitz(A - B @ K), it, K=K)
    raise ConvergenceError(f"Newton-Kleinman did not converge in {max_iter} steps "
                           f"(residual {res:.3e})")


def solve_care(prob: LQRProblem, method: str = "auto") -> RiccatiSolution:
    """Closed form when applicable, Newton-Kleinman otherwise."""
    if prob.time_mode != "continuous":
        raise ValueError("solve_care needs a continuous-time problem")
    if method in ("auto", "closed_form", "chebyshev") and prob.closed_form_applicable():
        c, g = prob.scaled_identity_costs()
        return care_closed_form(prob.A, c, g,
                                method="chebyshev" if method == "chebyshev" else "jacobi")
    if method in ("closed_form", "chebyshev"):
        raise ValueError("closed form needs symmetric A, B = I and scaled-identity Q, R")
    return care_newton(prob)


# DARE ----------------------------------------------------------------------


def solve_dare(prob: LQRProblem, tol: float = 1e-12, max_iter: int = 100_000,
               track_monotonicity: bool = False) -> RiccatiSolution:
    """Fixed-point (value) iteration for the DARE from ``P_0 = Q``.

    With ``track_monotonicity`` the smallest eigenvalue of every increment
    ``P_{k+1} - P_k`` is recorded in ``info["min_increment_eig"]``.

    Raises
    ------
    ConvergenceError
        If the update does not fall below ``tol (1 + ||P_k||_F)`` in time.
    """
    if prob.time_mode != "discrete":
        raise ValueError("solve_dare needs a discrete-time problem")
    A, B, Q, R = prob.A, prob.B, prob.Q, prob.R
    P = Q.copy()
    min_inc = np.inf
    for it in range(1, max_iter + 1):
        P_next = _dare_map(P, A, B, Q, R)
        P_next = 0.5 * (P_next + P_next.T)
        step = P_next - P
        if track_monotonicity:
            min_inc = min(min_inc, float(np.linalg.eigvalsh(step)[0]))
        done = np.linalg.norm(step) <= tol * (1.0 + np.linalg.norm(P))
        P = P_next
        if done:
            K = dare_feedback(P, prob)
            res = float(np.linalg.norm(dare_residual(P, A, B, Q, R)))
            info = {"min_increment_eig": min_inc} if track_monotonicity else {}
            return RiccatiSolution(P, res, _is_schur(A - B @ K), it, K=K, info=info)
    raise ConvergenceError(f"DARE iteration did not converge in {max_iter} steps")


def dare_feedback(P, prob: LQRProblem) -> np.ndarray:
    """Optimal discrete feedback ``K = (R + B^T P B)^{-1} B^T P A``."""
    B = prob.B
    try:
        return np.linalg.solve(prob.R + B.T @ P @ B, B.T @ P @ prob.A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("R + B^T P B is singular") from exc


# decay certificate -----------------------------------------------------------


@dataclass
class DecayCertificate:
    """Constants certifying ``|P[i, j]| <= K rho^|i-j|`` for ``i != j``."""

    theta: float
    chi: float
    rho: float
    M_F: float
    K: float
    spectral_interval: tuple[float, float]
    bandwidth: int
    interval_method: str = "jacobi"
    n_violations: int | None = None
    max_ratio: float | None = None

    def bound(self, d):
        return self.K * self.rho ** np.asarray(d, dtype=float)

    def verify(self, P) -> tuple[int, float]:
        """Count off-diagonal entries above the bound; also the worst ratio."""
        P = np.asarray(P)
        i, j = np.indices(P.shape)
        off = i != j
        ratio = np.abs(P[off]) / self.bound(np.abs(i - j)[off])
        return int(np.sum(ratio > 1.0)), float(ratio.max()) if ratio.size else 0.0


def care_symbol_real(x, a, b, c, gamma):
    """``F`` in double precision; accepts complex ``x`` (principal square root)."""
    y = (b - a) / 2 * np.asarray(x) + (a + b) / 2
    return gamma * (np.sqrt(y * y + c / gamma + 0j) + y)


def certificate_constants(a: float, b: float, c: float, gamma: float,
                          p: int) -> DecayCertificate:
    """Decay constants from the spectral interval ``[a, b]`` and bandwidth ``p``.

    ``theta = 2 / (gamma (b-a)^2) (sqrt((a^2 gamma + c)(b^2 gamma + c)) + a b gamma + c)``,
    ``chi = sqrt(theta) + sqrt(theta + 1)``, ``rho = chi^(-1/p)``,
    ``M_F = F(sqrt(theta + 1))`` and ``K = 2 chi M_F / (chi - 1)``.
    """
    if not b > a:
        raise ValueError("spectral interval collapses (b <= a); the ellipse is degenerate")
    if p < 1:
        raise ValueError("bandwidth must be at least 1")
    if c <= 0 or gamma <= 0:
        raise ValueError("c and gamma must be positive")
    theta = 2.0 / (gamma * (b - a) ** 2) * (
        math.sqrt((a * a * gamma + c) * (b * b * gamma + c)) + a * b * gamma + c)
    chi = math.sqrt(theta) + math.sqrt(theta + 1.0)
    rho = chi ** (-1.0 / p)
    M_F = float(care_symbol_real(math.sqrt(theta + 1.0), a, b, c, gamma).real)
    K = 2.0 * chi * M_F / (chi - 1.0)
    return DecayCertificate(theta, chi, rho, M_F, K, (float(a), float(b)), int(p))


def decay_certificate(A, c: float, gamma: float, bandwidth_p: int | None = None,
                      interval: str | tuple[float, float] = "jacobi",
                      verify: bool = True) -> DecayCertificate:
    """Certificate for the closed-form CARE solution of symmetric banded ``A``.

    Parameters
    ----------
    A : (n, n) array_like
        Symmetric banded matrix.
    c, gamma : float
        Cost weights of ``Q = c I`` and ``R = gamma I``.
    bandwidth_p : int, optional
        Bandwidth ``p``; detected from the sparsity of ``A`` if omitted
        (at least 1).
    interval : {"jacobi", "gershgorin"} or (a, b)
        How to enclose the spectrum.
    verify : bool
        Check the bound entrywise against the Chebyshev evaluation of ``P``
        and fill ``n_violations`` and ``max_ratio``.
    """
    A = np.asarray(A, dtype=float)
    _check_symmetric(A)
    p = bandwidth(A) if bandwidth_p is None else int(bandwidth_p)
    p = max(p, 1)
    if isinstance(interval, str):
        a, b = spectral_interval(A, interval)
        method = interval
    else:
        a, b = map(float, interval)
        method = "given"
    cert = certificate_constants(a, b, c, gamma, p)
    cert.interval_method = method
    if verify:
        P = care_closed_form(A, c, gamma, method="chebyshev", bandwidth_hint=p).P
        cert.n_violations, cert.max_ratio = cert.verify(P)
    return cert
