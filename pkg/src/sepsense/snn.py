"""Separable-structured neural networks (S-NN).

An S-NN is a sum of one-hidden-layer sigmoid subnetworks, one per subsystem
``j``, each reading only the coordinates of the forward graph neighborhood
``z_{j,l}``, plus a single output bias::

    W(x) = bias + sum_j sum_m w_out[j, m] * sigmoid(<w_in[j, :, m], z_{j,l}> + b[j, m])

Internally the input weights live in a dense, zero-masked ``n x (s*M)``
matrix so a batch costs a few BLAS calls.  The flat parameter vector keeps
the documented layout: per subnetwork ``j`` the input weights (``d_j x M``,
row-major), hidden biases (``M``) and output weights (``M``), then the
global output bias.

A fully connected single-hidden-layer network is the special case of one
subnetwork reading all ``n`` inputs (:func:`build_dense_network`).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .graph import BlockStructure, InteractionGraph, neighborhood

_CHUNK = 4096


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class Counts(NamedTuple):
    neurons: int      # hidden + input + output
    hidden: int
    parameters: int


class SNNModel:
    """Sum of sigmoid subnetworks over fixed input groups.

    Parameters
    ----------
    groups : sequence of int arrays
        Input coordinate indices read by each subnetwork.
    n : int
        Input dimension.
    M : int
        Hidden neurons per subnetwork.
    theta : ndarray, optional
        Flat parameter vector; zeros if omitted.
    meta : dict, optional
        Free-form description (graph summary, ``l``, block dims) kept for
        serialization.
    """

    def __init__(self, groups: Sequence[np.ndarray], n: int, M: int,
                 theta: np.ndarray | None = None, meta: dict | None = None):
        if M < 1:
            raise ValueError("M must be at least 1")
        self.n = int(n)
        self.M = int(M)
        self.groups = [np.asarray(g, dtype=int) for g in groups]
        for g in self.groups:
            if g.size == 0 or g.min() < 0 or g.max() >= n:
                raise ValueError("every group must be a non-empty subset of range(n)")
        self.meta = dict(meta or {})
        self._build_layout()
        if theta is None:
            theta = np.zeros(self.n_params)
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"theta has shape {theta.shape}, expected ({self.n_params},)")
        self.theta = theta.copy()

    def _build_layout(self):
        M = self.M
        win, rows, cols, bidx, widx = [], [], [], [], []
        pos = 0
        for j, g in enumerate(self.groups):
            d = g.size
            # input weights, row-major over (input k, neuron m)
            win.append(pos + np.arange(d * M))
            rows.append(np.repeat(g, M))
            cols.append(np.tile(j * M + np.arange(M), d))
            pos += d * M
            bidx.append(pos + np.arange(M))
            pos += M
            widx.append(pos + np.arange(M))
            pos += M
        self._win_idx = np.concatenate(win)
        self._win_rows = np.concatenate(rows)
        self._win_cols = np.concatenate(cols)
        self._b_idx = np.concatenate(bidx)
        self._wout_idx = np.concatenate(widx)
        self._bias_idx = pos
        self.n_params = pos + 1
        self.n_hidden = len(self.groups) * M

    # parameter views ---------------------------------------------------

    def unpack(self, theta: np.ndarray | None = None):
        """Dense ``(W, b, v, c)`` with ``W`` of shape ``(n, s*M)``."""
        theta = self.theta if theta is None else theta
        W = np.zeros((self.n, self.n_hidden))
        W[self._win_rows, self._win_cols] = theta[self._win_idx]
        return W, theta[self._b_idx], theta[self._wout_idx], float(theta[self._bias_idx])

    def pack(self, dW, db, dv, dc) -> np.ndarray:
        g = np.empty(self.n_params)
        g[self._win_idx] = dW[self._win_rows, self._win_cols]
        g[self._b_idx] = db
        g[self._wout_idx] = dv
        g[self._bias_idx] = dc
        return g

    def subnetwork(self, j: int):
        """``(w_in, b, w_out)`` of subnetwork ``j``; ``w_in`` is ``d_j x M``."""
        W, b, v, _ = self.unpack()
        sl = slice(j * self.M, (j + 1) * self.M)
        return W[self.groups[j]][:, sl], b[sl], v[sl]

    # evaluation ----------------------------------------------------------

    def forward(self, X) -> np.ndarray:
        return forward(self, X)

    def input_gradient(self, X) -> np.ndarray:
        return input_gradient(self, X)

    def copy(self) -> "SNNModel":
        return SNNModel(self.groups, self.n, self.M, self.theta, self.meta)

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "M": self.M,
            "groups": [g.tolist() for g in self.groups],
            "meta": self.meta,
            "theta": self.theta.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SNNModel":
        return cls([np.array(g) for g in d["groups"]], d["n"], d["M"],
                   np.array(d["theta"], dtype=float), d.get("meta"))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "SNNModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _seed_meta(seed):
    return int(seed) if isinstance(seed, (int, np.integer)) else None


def _glorot(rng, fan_in, fan_out, size):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size)


def _initialize(model: SNNModel, seed) -> None:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    theta = np.zeros(model.n_params)
    pos = 0
    for g in model.groups:
        d = g.size
        theta[pos:pos + d * model.M] = _glorot(rng, d, model.M, d * model.M)
        pos += d * model.M + 2 * model.M   # skip hidden biases and output weights
    # the s*M -> 1 output layer is initialized as one dense layer
    theta[model._wout_idx] = _glorot(rng, model.n_hidden, 1, model.n_hidden)
    model.theta = theta


def build_snn(graph: InteractionGraph, l: int, M: int, seed=0,
              blocks: BlockStructure | None = None) -> SNNModel:
    """S-NN with one subnetwork per subsystem over its radius-``l`` neighborhood."""
    if l < 0:
        raise ValueError("l must be non-negative")
    blocks = blocks or BlockStructure((1,) * graph.s)
    if blocks.s != graph.s:
        raise ValueError("block structure and graph disagree on s")
    groups = [blocks.coordinates(neighborhood(graph, j, l, blocks).subsystems)
              for j in range(graph.s)]
    meta = {
        "architecture": "snn",
        "l": int(l),
        "state_dims": list(blocks.state_dims),
        "graph": {"s": graph.s, "n_edges": len(graph.edges),
                  "symmetric": graph.symmetric},
        "seed": _seed_meta(seed),
    }
    model = SNNModel(groups, blocks.n, M, meta=meta)
    _initialize(model, seed)
    return model


def build_dense_network(n: int, width: int, seed=0) -> SNNModel:
    """Fully connected single-hidden-layer baseline."""
    model = SNNModel([np.arange(n)], n, width,
                     meta={"architecture": "dense", "width": int(width),
                           "seed": _seed_meta(seed)})
    _initialize(model, seed)
    return model


def count(model: SNNModel) -> Counts:
    """Exact neuron and parameter counts.

    ``parameters = sum_j (d_j M + M) + s M + 1`` and
    ``neurons = s M + n + 1`` (hidden, input and output neurons).
    """
    M, s = model.M, len(model.groups)
    params = sum(g.size * M + M for g in model.groups) + s * M + 1
    assert params == model.n_params
    return Counts(s * M + model.n + 1, s * M, params)


def _as_batch(X, n):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != n:
        raise ValueError(f"expected inputs of dimension {n}, got {X.shape[1]}")
    return X, single


def forward(model: SNNModel, X) -> np.ndarray:
    """Network output for a point ``(n,)`` or a batch ``(N, n)``."""
    X, single = _as_batch(X, model.n)
    W, b, v, c = model.unpack()
    out = np.empty(X.shape[0])
    for k in range(0, X.shape[0], _CHUNK):
        S = sigmoid(X[k:k + _CHUNK] @ W + b)
        out[k:k + _CHUNK] = S @ v + c
    return out[0] if single else out


def input_gradient(model: SNNModel, X) -> np.ndarray:
    """Analytic ``grad_x W`` for a point or a batch."""
    X, single = _as_batch(X, model.n)
    W, b, v, _ = model.unpack()
    out = np.empty_like(X)
    for k in range(0, X.shape[0], _CHUNK):
        S = sigmoid(X[k:k + _CHUNK] @ W + b)
        out[k:k + _CHUNK] = (S * (1.0 - S) * v) @ W.T
    return out[0] if single else out


# data ------------------------------------------------------------------


@dataclass
class Dataset:
    """Sampled points with target values and, optionally, target gradients."""

    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray | None = None
    domain: str = "cube"
    radius: float = 1.0

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        N, n = self.points.shape
        if self.values.shape != (N,):
            raise ValueError("values and points disagree in length")
        if self.gradients is not None:
            self.gradients = np.asarray(self.gradients, dtype=float)
            if self.gradients.shape != (N, n):
                raise ValueError("gradients must have the same shape as points")
        if self.domain not in ("cube", "ball"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if N and not np.all(in_domain(self.points, self.domain, self.radius)):
            raise ValueError(f"points lie outside the {self.domain} of radius {self.radius}")

    def __len__(self):
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def subset(self, idx) -> "Dataset":
        g = None if self.gradients is None else self.gradients[idx]
        return Dataset(self.points[idx], self.values[idx], g, self.domain, self.radius)


def in_domain(X, domain: str, radius: float, slack: float = 1e-12) -> np.ndarray:
    X = np.atleast_2d(X)
    if domain == "cube":
        return np.max(np.abs(X), axis=1) <= radius * (1 + slack)
    return np.linalg.norm(X, axis=1) <= radius * (1 + slack)


def sample_domain(n: int, count: int, domain: str = "cube", radius: float = 1.0,
                  seed=0) -> np.ndarray:
    """Uniform samples from ``[-R, R]^n`` (``"cube"``) or the 2-norm ball."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    if domain == "cube":
        return rng.uniform(-radius, radius, size=(count, n))
    if domain == "ball":
        d = rng.standard_normal((count, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = radius * rng.random(count) ** (1.0 / n)
        return d * r[:, None]
    raise ValueError(f"unknown domain {domain!r}")


def make_dataset(oracle, count: int, domain: str = "cube", radius: float = 1.0,
                 seed=0, gradients: bool = True) -> Dataset:
    """Sample a domain and label the points with ``oracle`` values (and gradients)."""
    X = sample_domain(oracle.n, count, domain, radius, seed)
    vals = oracle.evaluate(X)
    grads = oracle.evaluate_gradient(X) if gradients else None
    return Dataset(X, vals, grads, domain, radius)


# training --------------------------------------------------------------


@dataclass
class TrainConfig:
    nu_g: float = 0.0
    nu_z: float = 0.0
    batch_size: int = 64
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    tolerance: float = 1e-3
    max_epochs: int = 1000
    validation_interval: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.nu_g < 0 or self.nu_z < 0:
            raise ValueError("loss weights must be non-negative")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.max_epochs < 0 or self.validation_interval < 1:
            raise ValueError("invalid epoch settings")


def loss_and_grad(model: SNNModel, X, V, G=None, cfg: TrainConfig | None = None,
                  theta: np.ndarray | None = None):
    """Training loss and its exact gradient with respect to the parameters.

    ``loss = mean_b[(V_b - W(x_b))^2 + nu_g ||grad V_b - grad_x W(x_b)||^2]
    + nu_z (W(0)^2 + ||grad_x W(0)||^2)``; the zero-point penalty enters once
    per batch.
    """
    cfg = cfg or TrainConfig()
    nu_g, nu_z = cfg.nu_g, cfg.nu_z
    if nu_g > 0 and G is None:
        raise ValueError("gradient targets are required when nu_g > 0")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    V = np.asarray(V, dtype=float).reshape(-1)
    B = X.shape[0]
    W, b, v, c = model.unpack(theta)

    S = sigmoid(X @ W + b)
    Sp = S * (1.0 - S)
    r = S @ v + c - V
    loss = float(r @ r) / B
    dout = (2.0 / B) * r                       # dL/dW(x_b)
    dv = S.T @ dout
    dc = float(np.sum(dout))
    dA = dout[:, None] * Sp * v                # dL/d(pre-activation)
    dW = np.zeros_like(W)

    if nu_g > 0:
        Gv = Sp * v
        E = Gv @ W.T - G
        loss += nu_g * float(np.sum(E * E)) / B
        Ebar = (2.0 * nu_g / B) * E
        dW += Ebar.T @ Gv
        dG = Ebar @ W
        dv += np.sum(dG * Sp, axis=0)
        dA += dG * v * Sp * (1.0 - 2.0 * S)

    dW += X.T @ dA
    db = np.sum(dA, axis=0)

    if nu_z > 0:
        s0 = sigmoid(b)
        sp0 = s0 * (1.0 - s0)
        w0 = float(s0 @ v) + c
        g0v = sp0 * v
        g0 = W @ g0v
        loss += nu_z * (w0 * w0 + float(g0 @ g0))
        d0 = 2.0 * nu_z * w0
        dv += d0 * s0
        dc += d0
        db += d0 * sp0 * v
        e0 = 2.0 * nu_z * g0
        dW += np.outer(e0, g0v)
        dg0 = W.T @ e0
        dv += dg0 * sp0
        db += dg0 * v * sp0 * (1.0 - 2.0 * s0)

    return loss, model.pack(dW, db, dv, dc)


@dataclass
class AdamState:
    theta: np.ndarray
    m: np.ndarray = None
    v: np.ndarray = None
    t: int = 0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.m is None:
            self.m = np.zeros_like(self.theta)
        if self.v is None:
            self.v = np.zeros_like(self.theta)


def adam_step(state: AdamState, grad, cfg: TrainConfig) -> AdamState:
    """One bias-corrected ADAM update, applied in place; returns ``state``."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.theta.shape:
        raise ValueError("gradient and parameter shapes differ")
    state.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    state.m *= b1
    state.m += (1.0 - b1) * grad
    state.v *= b2
    state.v += (1.0 - b2) * grad * grad
    m_hat = state.m / (1.0 - b1 ** state.t)
    v_hat = state.v / (1.0 - b2 ** state.t)
    state.theta -= cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps_adam)
    return state


def mse(model: SNNModel, data: Dataset) -> float:
    r = forward(model, data.points) - data.values
    return float(np.mean(r * r))


@dataclass
class TrainingReport:
    theta: np.ndarray
    epochs: int
    val_history: list = field(default_factory=list)    # (epoch, val_mse)
    train_loss: list = field(default_factory=list)     # mean batch loss per epoch
    stop_reason: str = "max epochs"
    tolerance_reached: bool = False
    final_val_mse: float | None = None
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "stop_reason": self.stop_reason,
            "tolerance_reached": self.tolerance_reached,
            "final_val_mse": self.final_val_mse,
            "val_history": [[int(e), float(m)] for e, m in self.val_history],
            "train_loss": [float(x) for x in self.train_loss],
        }


def train(model: SNNModel, train_data: Dataset, val_data: Dataset, cfg: TrainConfig,
          callback: Callable[[int, float, float | None], None] | None = None
          ) -> TrainingReport:
    """Mini-batch ADAM training with periodic validation.

    Each epoch is one pass over a seeded shuffle of ``train_data``.  Every
    ``cfg.validation_interval`` epochs the plain MSE on ``val_data`` is
    compared with ``cfg.tolerance``; training stops once it falls below.
    The model's parameters are updated in place.
    """
    if len(train_data) == 0 or len(val_data) == 0:
        raise ValueError("training and validation sets must be non-empty")
    if train_data.n != model.n or val_data.n != model.n:
        raise ValueError("dataset dimension does not match the model")
    if cfg.nu_g > 0 and train_data.gradients is None:
        raise ValueError("nu_g > 0 requires gradient data")

    rng = np.random.default_rng(cfg.seed)
    state = AdamState(model.theta)
    report = TrainingReport(theta=model.theta, epochs=0)
    X, Y, G = train_data.points, train_data.values, train_data.gradients
    N, bs = len(train_data), cfg.batch_size
    t0 = time.perf_counter()

    for epoch in range(1, cfg.max_epochs + 1):
        perm = rng.permutation(N)
        total = 0.0
        for k in range(0, N, bs):
            idx = perm[k:k + bs]
            loss, grad = loss_and_grad(model, X[idx], Y[idx],
                                       None if G is None else G[idx], cfg, state.theta)
            adam_step(state, grad, cfg)
            total += loss * len(idx)
        report.train_loss.append(total / N)
        report.epochs = epoch
        model.theta = state.theta
        val = None
        if epoch % cfg.validation_interval == 0 or epoch == cfg.max_epochs:
            val = mse(model, val_data)
            report.val_history.append((epoch, val))
            report.final_val_mse = val
        if callback is not None:
            callback(epoch, report.train_loss[-1], val)
        if val is not None and val < cfg.tolerance:
            report.stop_reason = "tolerance"
            report.tolerance_reached = True
            break

    if report.final_val_mse is None:
        report.final_val_mse = mse(model, val_data)
    model.theta = state.theta
    report.theta = model.theta.copy()
    report.seconds = time.perf_counter() - t0
    return report
