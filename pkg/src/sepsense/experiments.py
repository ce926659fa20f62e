"""Reusable experiment drivers shared by the command line and the test suite.

Every driver is deterministic given its arguments; random streams are split
from a single integer seed with :class:`numpy.random.SeedSequence`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError
from .graph import InteractionGraph, graph_from_matrices, sequential_graph
from .models import RiccatiFailure, SDREProblem, sdre_sample
from .linalg import spectral_interval
from .riccati import LQRProblem, care_closed_form, decay_certificate, solve_care
from .sensitivity import (FunctionOracle, decay_profile, fit_decay, gamma_from_quadratic,
                          quadratic_oracle)
from .separable import SeparableApprox, error_bound_matrix
from .snn import (Dataset, SNNModel, TrainConfig, TrainingReport, build_dense_network,
                  build_snn, count, make_dataset, mse, sample_domain, train)

log = logging.getLogger(__name__)


def split_seeds(seed, k: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(k)


# decay of the CARE solution --------------------------------------------------


@dataclass
class DecayCurve:
    column: int
    index: np.ndarray
    abs_entry: np.ndarray
    bound: np.ndarray
    certificate: object
    fitted_rho: float
    interval_widened: bool = False


def decay_curve(prob: LQRProblem, column: int = 0, interval: str = "jacobi") -> DecayCurve:
    """``|P[i, column]|`` against the certified bound ``K rho^|i - column|``.

    ``P`` is the Chebyshev evaluation of the closed form.  A problem whose
    ``A`` has a single eigenvalue gets its interval widened by one on each
    side so the certificate stays defined.
    """
    if not prob.closed_form_applicable():
        raise ValueError("decay bound needs symmetric A, B = I and scaled-identity Q, R")
    c, g = prob.scaled_identity_costs()
    A = prob.A
    n = prob.n
    if not 0 <= column < n:
        raise ValueError(f"column {column} out of range for n={n}")
    a, b = spectral_interval(A, interval)
    widened = not b > a
    if widened:
        a, b = a - 1.0, b + 1.0
    cert = decay_certificate(A, c, g, interval=(a, b))
    cert.interval_method = interval + ("+widened" if widened else "")
    P = care_closed_form(A, c, g, method="chebyshev", bandwidth_hint=cert.bandwidth).P
    idx = np.arange(n)
    col = np.abs(P[:, column])
    dist = np.abs(idx - column)
    bound = cert.bound(dist)
    samples = {int(d): float(v) for d, v in zip(dist, col) if d > 0}
    try:
        rho_fit = fit_decay(samples).rate
    except ValueError:
        rho_fit = float("nan")
    return DecayCurve(column, idx, col, bound, cert, rho_fit, widened)


def fitted_decay_rate(P, offsets=None) -> float:
    """Exponential fit to the largest ``|P[i, j]|`` per diagonal offset."""
    return fit_decay(decay_profile(P, offsets)).rate


# separable error curves ------------------------------------------------------


@dataclass
class SepErrorRow:
    l: int
    norm2_upper: float
    norm2_exact: float
    max_error: float
    mean_error: float
    max_ratio: float     # max of error / ||x||^2


def sep_error_curve(P, graph: InteractionGraph, l_values, samples: int = 1000,
                    domain: str = "ball", radius: float = 1.0, seed=0,
                    blocks=None) -> list[SepErrorRow]:
    """Observed separable-approximation error of ``x^T P x`` against ``||D_l||``."""
    oracle = quadratic_oracle(P, blocks, domain, radius)
    gam = gamma_from_quadratic(P, graph, oracle.blocks)
    X = sample_domain(oracle.n, samples, domain, radius, seed)
    sq = np.sum(X * X, axis=1)
    rows = []
    for l in l_values:
        D = error_bound_matrix(graph, gam, l)
        err = SeparableApprox(oracle, graph, l).error(X)
        ratio = np.where(sq > 0, err / np.where(sq > 0, sq, 1.0), 0.0)
        rows.append(SepErrorRow(int(l), D.norm2_upper, D.norm2_exact,
                                float(err.max()), float(err.mean()), float(ratio.max())))
    return rows


# training --------------------------------------------------------------------


@dataclass
class DataSplit:
    train: Dataset
    val: Dataset
    test: Dataset


def make_split(oracle: FunctionOracle, train_size: int, val_size: int, test_size: int,
               domain: str = "cube", radius: float = 1.0, seed=0,
               gradients: bool = True) -> DataSplit:
    s_tr, s_va, s_te = split_seeds(seed, 3)
    return DataSplit(make_dataset(oracle, train_size, domain, radius, s_tr, gradients),
                     make_dataset(oracle, val_size, domain, radius, s_va, gradients),
                     make_dataset(oracle, test_size, domain, radius, s_te, gradients))


@dataclass
class TrainOutcome:
    model: SNNModel
    report: TrainingReport
    test_mse: float
    counts: tuple


def fit_network(model: SNNModel, data: DataSplit, cfg: TrainConfig) -> TrainOutcome:
    report = train(model, data.train, data.val, cfg)
    return TrainOutcome(model, report, mse(model, data.test), count(model))


def train_snn(graph: InteractionGraph, l: int, M: int, data: DataSplit, cfg: TrainConfig,
              init_seed=0, blocks=None) -> TrainOutcome:
    return fit_network(build_snn(graph, l, M, seed=init_seed, blocks=blocks), data, cfg)


def train_dense(n: int, width: int, data: DataSplit, cfg: TrainConfig,
                init_seed=0) -> TrainOutcome:
    return fit_network(build_dense_network(n, width, seed=init_seed), data, cfg)


def lqr_graph(prob: LQRProblem) -> InteractionGraph:
    return graph_from_matrices(prob.blocks, prob.A, prob.B, prob.Q, prob.R, symmetric=True)


# scaling study ---------------------------------------------------------------


@dataclass
class ScalingRow:
    dim: int
    bandwidth: int
    M_min: int
    neurons: int
    params: int
    test_mse: float
    epochs: int


def minimal_width(prob: LQRProblem, l: int, cfg: TrainConfig, target: float = 1e-4,
                  train_size: int = 4096, val_size: int = 4096, test_size: int = 4096,
                  M_max: int = 64, seed=0, val_margin: float = 0.5) -> ScalingRow:
    """Smallest ``M`` in ``1, 2, 4, ...`` whose S-NN reaches test MSE ``<= target``.

    Data are sampled in the unit ball.  Training stops once the validation
    MSE falls below ``val_margin * target`` (or ``cfg.tolerance`` if smaller),
    so that sampling noise between validation and test sets does not decide
    the outcome.

    Raises
    ------
    NumericalError
        If no ``M <= M_max`` reaches the target.
    """
    cfg = replace(cfg, tolerance=min(cfg.tolerance, val_margin * target))
    P = solve_care(prob).P
    oracle = quadratic_oracle(P, prob.blocks, "ball", 1.0)
    data = make_split(oracle, train_size, val_size, test_size, "ball", 1.0, seed)
    graph = lqr_graph(prob)
    M = 1
    while M <= M_max:
        out = train_snn(graph, l, M, data, cfg, init_seed=seed, blocks=prob.blocks)
        log.info("n=%d M=%d test_mse=%.3e epochs=%d", prob.n, M, out.test_mse,
                 out.report.epochs)
        if out.test_mse <= target:
            c = out.counts
            return ScalingRow(prob.n, int(prob.meta.get("bandwidth", 0)), M, c.neurons,
                              c.parameters, out.test_mse, out.report.epochs)
        M *= 2
    raise NumericalError(f"no M <= {M_max} reached test MSE {target} at n={prob.n}")


# SDRE data -------------------------------------------------------------------


@dataclass
class SDREData:
    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    failures: list = field(default_factory=list)   # indices of skipped samples


def sdre_dataset(prob: SDREProblem, count_: int, radius: float = 1.0, seed=0) -> SDREData:
    """Ball samples labelled with the SDRE surrogate; failed solves are skipped."""
    X = sample_domain(prob.n, count_, "ball", radius, seed)
    keep, vals, grads, failed = [], [], [], []
    for k, y in enumerate(X):
        try:
            v, g = sdre_sample(prob, y)
        except RiccatiFailure as exc:
            log.warning("sample %d skipped: %s", k, exc)
            failed.append(k)
            continue
        keep.append(k)
        vals.append(v)
        grads.append(g)
    return SDREData(X[keep], np.array(vals), np.array(grads).reshape(len(keep), prob.n), failed)
