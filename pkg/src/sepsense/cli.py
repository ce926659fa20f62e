"""Command-line experiment driver.

Usage::

    sepsense <command> --config cfg.json [--seed N] [--out DIR]

Commands: ``decay-bound``, ``sep-error``, ``train``, ``scaling``,
``sdre-data`` and ``sin-product``.  Exit status is 0 on success, 2 for an
invalid configuration and 3 for a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io, svg
from .errors import ConfigError, NumericalError
from .experiments import (DataSplit, decay_curve, lqr_graph, make_split, minimal_width,
                          sdre_dataset, sep_error_curve, split_seeds)
from .graph import sequential_graph
from .models import allen_cahn, heat_lqr, random_banded_lqr, sin_product_oracle
from .riccati import solve_care
from .sensitivity import quadratic_oracle
from .snn import (Dataset, TrainConfig, build_dense_network, build_snn, count, forward,
                  mse, train)

log = logging.getLogger("sepsense")

COMMANDS = ("decay-bound", "sep-error", "train", "scaling", "sdre-data", "sin-product")

SCHEMA = {
    "experiment": None,
    "seed": None,
    "output_dir": None,
    "problem": {"kind", "n", "bandwidth", "sigma", "gamma_tilde", "delta1", "delta2",
                "rho", "alpha", "symmetric", "column", "interval", "data_dir"},
    "snn": {"l", "M", "baseline_width"},
    "train": {"nu_g", "nu_z", "batch_size", "lr", "tolerance", "max_epochs",
              "train_size", "val_size", "test_size", "domain", "radius",
              "slice_pairs", "slice_grid"},
    "sep_error": {"l_max", "samples", "domain", "radius"},
    "scaling": {"dims", "bandwidths", "target", "M_max"},
}

PROBLEM_KINDS = ("banded-lqr", "heat", "sin-product", "allen-cahn")

DEFAULTS = {
    "problem": {"kind": "banded-lqr", "n": 20, "bandwidth": 1, "sigma": 1e-2,
                "gamma_tilde": 0.01, "delta1": 10.0, "delta2": 0.1, "rho": None,
                "alpha": None, "symmetric": True, "column": 1, "interval": "jacobi",
                "data_dir": None},
    "snn": {"l": 3, "M": 16, "baseline_width": 0},
    "train": {"nu_g": 0.5, "nu_z": 0.5, "batch_size": 64, "lr": 1e-3, "tolerance": 1e-3,
              "max_epochs": 1000, "train_size": 2 ** 15, "val_size": 2 ** 15,
              "test_size": 2 ** 15, "domain": "cube", "radius": 1.0,
              "slice_pairs": [[1, 2]], "slice_grid": 41},
    "sep_error": {"l_max": 6, "samples": 1000, "domain": "ball", "radius": 1.0},
    "scaling": {"dims": [20, 40, 60], "bandwidths": [1], "target": 1e-4, "M_max": 64},
}


# configuration -----------------------------------------------------------------


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def load_config(raw: dict, command: str, seed: int | None = None,
                out: str | None = None) -> dict:
    """Merge ``raw`` over the defaults and validate it.

    Raises
    ------
    ConfigError
        On unknown keys, wrong types or out-of-range values.
    """
    _require(isinstance(raw, dict), "config must be a JSON object")
    for key, val in raw.items():
        _require(key in SCHEMA, f"unknown config key {key!r}")
        if SCHEMA[key] is not None:
            _require(isinstance(val, dict), f"{key!r} must be an object")
            for sub in val:
                _require(sub in SCHEMA[key], f"unknown config key {key}.{sub}")
    if "experiment" in raw:
        _require(raw["experiment"] == command,
                 f"config is for {raw['experiment']!r}, command is {command!r}")
    cfg = {sec: {**DEFAULTS[sec], **raw.get(sec, {})} for sec in DEFAULTS}
    cfg["experiment"] = command
    cfg["seed"] = raw.get("seed", 0) if seed is None else seed
    cfg["output_dir"] = out or raw.get("output_dir") or "."
    _require(_is_int(cfg["seed"]) and cfg["seed"] >= 0, "seed must be a non-negative integer")
    _validate(cfg, command)
    return cfg


def _validate(cfg, command):
    p, s, t = cfg["problem"], cfg["snn"], cfg["train"]
    _require(p["kind"] in PROBLEM_KINDS, f"problem.kind must be one of {PROBLEM_KINDS}")
    _require(_is_int(p["n"]) and p["n"] >= 2, "problem.n must be an integer >= 2")
    _require(_is_int(p["bandwidth"]) and 1 <= p["bandwidth"] < p["n"],
             "problem.bandwidth must satisfy 1 <= bandwidth < n")
    _require(_is_num(p["sigma"]) and p["sigma"] >= 0, "problem.sigma must be >= 0")
    _require(_is_num(p["gamma_tilde"]) and p["gamma_tilde"] > 0, "problem.gamma_tilde must be > 0")
    _require(_is_num(p["delta1"]) and p["delta1"] > 0, "problem.delta1 must be > 0")
    _require(_is_num(p["delta2"]) and p["delta2"] > 0, "problem.delta2 must be > 0")
    _require(isinstance(p["symmetric"], bool), "problem.symmetric must be a boolean")
    _require(_is_int(p["column"]) and 1 <= p["column"] <= p["n"],
             "problem.column must be a one-based column index")
    _require(p["interval"] in ("jacobi", "gershgorin"),
             "problem.interval must be 'jacobi' or 'gershgorin'")
    for name in ("rho", "alpha"):
        vals = p[name]
        if vals is None:
            continue
        vals = vals if isinstance(vals, list) else [vals]
        _require(len(vals) > 0 and all(_is_num(v) for v in vals), f"problem.{name} must be numeric")
        if name == "rho":
            _require(all(0 < v <= 1 for v in vals), "problem.rho must lie in (0, 1]")
        else:
            _require(all(v >= 0 for v in vals), "problem.alpha must be >= 0")
    if p["kind"] == "sin-product":
        _require((p["rho"] is None) != (p["alpha"] is None),
                 "sin-product needs exactly one of problem.rho or problem.alpha")
        if command == "train":
            _require(not isinstance(p["rho"] if p["rho"] is not None else p["alpha"], list),
                     "train takes a single rho or alpha; use sin-product for sweeps")

    _require(_is_int(s["l"]) and s["l"] >= 0, "snn.l must be a non-negative integer")
    _require(_is_int(s["M"]) and s["M"] >= 1, "snn.M must be a positive integer")
    _require(_is_int(s["baseline_width"]) and s["baseline_width"] >= 0,
             "snn.baseline_width must be a non-negative integer")

    for k in ("nu_g", "nu_z"):
        _require(_is_num(t[k]) and t[k] >= 0, f"train.{k} must be >= 0")
    _require(_is_int(t["batch_size"]) and t["batch_size"] >= 1, "train.batch_size must be >= 1")
    _require(_is_num(t["lr"]) and t["lr"] > 0, "train.lr must be > 0")
    _require(_is_num(t["tolerance"]) and t["tolerance"] > 0, "train.tolerance must be > 0")
    _require(_is_int(t["max_epochs"]) and t["max_epochs"] >= 0, "train.max_epochs must be >= 0")
    for k in ("train_size", "val_size", "test_size"):
        _require(_is_int(t[k]) and t[k] >= 1, f"train.{k} must be a positive integer")
    _require(t["domain"] in ("cube", "ball"), "train.domain must be 'cube' or 'ball'")
    _require(_is_num(t["radius"]) and t["radius"] > 0, "train.radius must be > 0")
    _require(isinstance(t["slice_pairs"], list)
             and all(isinstance(q, list) and len(q) == 2 and all(_is_int(v) and 1 <= v <= p["n"] for v in q)
                     for q in t["slice_pairs"]),
             "train.slice_pairs must be a list of one-based coordinate pairs")
    _require(_is_int(t["slice_grid"]) and t["slice_grid"] >= 2, "train.slice_grid must be >= 2")

    e = cfg["sep_error"]
    _require(_is_int(e["l_max"]) and e["l_max"] >= 0, "sep_error.l_max must be >= 0")
    _require(_is_int(e["samples"]) and e["samples"] >= 1, "sep_error.samples must be >= 1")
    _require(e["domain"] in ("cube", "ball"), "sep_error.domain must be 'cube' or 'ball'")
    _require(_is_num(e["radius"]) and e["radius"] > 0, "sep_error.radius must be > 0")

    sc = cfg["scaling"]
    _require(isinstance(sc["dims"], list) and sc["dims"]
             and all(_is_int(d) and d >= 2 for d in sc["dims"]), "scaling.dims must list integers >= 2")
    _require(isinstance(sc["bandwidths"], list)
             and all(b in (1, 3) for b in sc["bandwidths"]) and sc["bandwidths"],
             "scaling.bandwidths must be drawn from {1, 3}")
    _require(all(b < d for b in sc["bandwidths"] for d in sc["dims"]),
             "every scaling bandwidth must be below every dimension")
    _require(_is_num(sc["target"]) and sc["target"] > 0, "scaling.target must be > 0")
    _require(_is_int(sc["M_max"]) and 1 <= sc["M_max"] <= 64, "scaling.M_max must lie in [1, 64]")

    needs = {
        "decay-bound": ("heat", "banded-lqr"),
        "sep-error": ("heat", "banded-lqr"),
        "train": PROBLEM_KINDS,
        "scaling": ("banded-lqr",),
        "sdre-data": ("allen-cahn",),
        "sin-product": ("sin-product",),
    }[command]
    _require(p["kind"] in needs, f"{command} does not support problem kind {p['kind']!r}")
    if command == "train" and p["kind"] == "allen-cahn":
        _require(p["data_dir"] is not None, "allen-cahn training needs problem.data_dir")


def _train_config(cfg, seed=None) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(nu_g=t["nu_g"], nu_z=t["nu_z"], batch_size=t["batch_size"], lr=t["lr"],
                       tolerance=t["tolerance"], max_epochs=t["max_epochs"],
                       seed=cfg["seed"] if seed is None else seed)


def _stream_seeds(seed) -> tuple[int, int]:
    """Integer seeds for batch shuffling and weight initialization."""
    a, b = split_seeds(seed, 2)
    return int(a.generate_state(1)[0]), int(b.generate_state(1)[0])


def _lqr_problem(p, seed):
    if p["kind"] == "heat":
        return heat_lqr(p["n"], p["sigma"], p["gamma_tilde"])
    return random_banded_lqr(p["n"], p["bandwidth"], seed=seed, symmetric=p["symmetric"])


# commands ----------------------------------------------------------------------


def cmd_decay_bound(cfg, out: Path) -> dict:
    p = cfg["problem"]
    prob = _lqr_problem(p, cfg["seed"])
    if not prob.is_symmetric():
        raise ConfigError("decay-bound needs a symmetric A (set problem.symmetric = true)")
    curve = decay_curve(prob, column=p["column"] - 1, interval=p["interval"])
    io.write_table(out / "decay.csv", ["index", "abs_P_entry", "bound"],
                   zip(curve.index + 1, curve.abs_entry, curve.bound))
    svg.line_chart(out / "decay.svg",
                   {"|P[i, col]|": (curve.index + 1, curve.abs_entry),
                    "certified bound": (curve.index + 1, curve.bound)},
                   title=f"Decay of column {p['column']}", xlabel="row index i",
                   ylabel="magnitude", log_y=True)
    cert = curve.certificate
    summary = {k: v for k, v in asdict(cert).items()}
    summary.update({"fitted_rho": curve.fitted_rho, "interval_widened": curve.interval_widened,
                    "column": p["column"]})
    io.write_json(out / "certificate.json", summary)
    return summary


def cmd_sep_error(cfg, out: Path) -> dict:
    p, e = cfg["problem"], cfg["sep_error"]
    prob = _lqr_problem(p, cfg["seed"])
    sol = solve_care(prob)
    graph = lqr_graph(prob)
    l_max = min(e["l_max"], graph.s - 1)
    rows = sep_error_curve(sol.P, graph, range(l_max + 1), e["samples"], e["domain"],
                           e["radius"], seed=split_seeds(cfg["seed"], 1)[0], blocks=prob.blocks)
    io.write_table(out / "sep_error.csv",
                   ["l", "bound_norm2_upper", "bound_norm2_exact", "max_observed_error",
                    "mean_observed_error", "max_observed_ratio"],
                   [(r.l, r.norm2_upper, r.norm2_exact, r.max_error, r.mean_error, r.max_ratio)
                    for r in rows])
    ls = [r.l for r in rows]
    svg.line_chart(out / "sep_error.svg",
                   {"||D_l||_2": (ls, [r.norm2_exact for r in rows]),
                    "max |V - Psi_l - V(0)| / ||x||^2": (ls, [r.max_ratio for r in rows])},
                   title="Separable approximation error", xlabel="l", ylabel="error",
                   log_y=True)
    violations = [r.l for r in rows if r.max_ratio > r.norm2_exact + 1e-9]
    summary = {"l_max": l_max, "bound_violations": violations, "residual_norm": sol.residual_norm}
    io.write_json(out / "sep_error.json", summary)
    return summary


def _problem_data(cfg):
    """Oracle-backed or file-backed train/val/test split, plus graph and blocks."""
    p, t = cfg["problem"], cfg["train"]
    seed = cfg["seed"]
    if p["kind"] == "allen-cahn":
        d = Path(p["data_dir"])
        try:
            X = io.read_array(d / "points.csv")
            y = io.read_array(d / "values.csv").reshape(-1)
            G = io.read_array(d / "grads.csv")
        except OSError as exc:
            raise ConfigError(f"cannot read SDRE data: {exc}") from exc
        need = t["train_size"] + t["val_size"] + t["test_size"]
        _require(len(X) >= need, f"data_dir holds {len(X)} points, config needs {need}")
        _require(X.shape[1] == p["n"], "data dimension does not match problem.n")
        r = float(np.max(np.linalg.norm(X, axis=1)))
        cuts = np.cumsum([t["train_size"], t["val_size"], t["test_size"]])
        parts = [slice(0, cuts[0]), slice(cuts[0], cuts[1]), slice(cuts[1], cuts[2])]
        sets = [Dataset(X[sl], y[sl], G[sl], "ball", max(r, 1e-300)) for sl in parts]
        return DataSplit(*sets), sequential_graph(p["n"]), None
    if p["kind"] == "sin-product":
        oracle = sin_product_oracle(p["n"], rho=p["rho"], alpha=p["alpha"], radius=t["radius"])
        graph, blocks = sequential_graph(p["n"]), None
    else:
        prob = _lqr_problem(p, seed)
        P = solve_care(prob).P
        oracle = quadratic_oracle(P, prob.blocks, t["domain"], t["radius"])
        graph, blocks = lqr_graph(prob), prob.blocks
    data = make_split(oracle, t["train_size"], t["val_size"], t["test_size"],
                      t["domain"], t["radius"], seed)
    return data, graph, blocks


def _slice_points(n, pair, k, radius):
    """``k x k`` grid on coordinates ``pair`` with every other coordinate at 0."""
    g = np.linspace(-radius, radius, k)
    X = np.zeros((k * k, n))
    gi, gj = np.meshgrid(g, g, indexing="xy")
    X[:, pair[0]] = gi.ravel()
    X[:, pair[1]] = gj.ravel()
    return X, g


def cmd_train(cfg, out: Path) -> dict:
    p, s, t = cfg["problem"], cfg["snn"], cfg["train"]
    data, graph, blocks = _problem_data(cfg)
    shuffle_seed, init_seed = _stream_seeds(cfg["seed"])
    tcfg = _train_config(cfg, seed=shuffle_seed)
    model = build_snn(graph, s["l"], s["M"], seed=init_seed, blocks=blocks)
    report = train(model, data.train, data.val, tcfg)
    test = mse(model, data.test)
    summary = {"snn": {**report.to_dict(), "test_mse": test,
                       "trained": report.epochs > 0,
                       "counts": count(model)._asdict()}}
    _write_curve(out / "loss_curve.csv", report)
    model.save(out / "model.json")

    if s["baseline_width"] > 0:
        base = build_dense_network(model.n, s["baseline_width"], seed=init_seed)
        brep = train(base, data.train, data.val, tcfg)
        summary["baseline"] = {**brep.to_dict(), "test_mse": mse(base, data.test),
                               "trained": brep.epochs > 0, "counts": count(base)._asdict()}
        _write_curve(out / "baseline_loss_curve.csv", brep)
        base.save(out / "baseline_model.json")

    oracle = None
    if p["kind"] in ("heat", "banded-lqr"):
        prob = _lqr_problem(p, cfg["seed"])
        oracle = quadratic_oracle(solve_care(prob).P, prob.blocks)
    elif p["kind"] == "sin-product":
        oracle = sin_product_oracle(p["n"], rho=p["rho"], alpha=p["alpha"])
    k = t["slice_grid"]
    radius = t["radius"] if p["kind"] != "allen-cahn" else data.train.radius
    for a, b in t["slice_pairs"]:
        X, g = _slice_points(model.n, (a - 1, b - 1), k, radius)
        W = forward(model, X).reshape(k, k)
        extent = (g[0], g[-1], g[0], g[-1])
        svg.heatmap(out / f"slice_W_{a}_{b}.svg", W, extent, title=f"W on (x{a}, x{b})",
                    xlabel=f"x{a}", ylabel=f"x{b}")
        if oracle is not None:
            V = oracle.evaluate(X).reshape(k, k)
            svg.heatmap(out / f"slice_V_{a}_{b}.svg", V, extent, title=f"V on (x{a}, x{b})",
                        xlabel=f"x{a}", ylabel=f"x{b}")
    io.write_json(out / "report.json", summary)
    return summary


def _write_curve(path, report):
    vals = dict(report.val_history)
    io.write_table(path, ["epoch", "train_loss", "val_mse"],
                   [(e + 1, loss, vals.get(e + 1, float("nan")))
                    for e, loss in enumerate(report.train_loss)])


def cmd_scaling(cfg, out: Path) -> dict:
    sc, t = cfg["scaling"], cfg["train"]
    tcfg = _train_config(cfg)
    rows = []
    for bw in sc["bandwidths"]:
        for n in sc["dims"]:
            prob = random_banded_lqr(n, bw, seed=cfg["seed"], symmetric=cfg["problem"]["symmetric"])
            row = minimal_width(prob, cfg["snn"]["l"], tcfg, sc["target"], t["train_size"],
                                t["val_size"], t["test_size"], sc["M_max"], seed=cfg["seed"])
            log.info("bandwidth %d, n=%d: M_min=%d", bw, n, row.M_min)
            rows.append(row)
    io.write_table(out / "scaling.csv",
                   ["dim", "bandwidth", "M_min", "neurons", "params", "test_mse"],
                   [(r.dim, r.bandwidth, r.M_min, r.neurons, r.params, r.test_mse) for r in rows])
    series = {}
    for bw in sc["bandwidths"]:
        sel = [r for r in rows if r.bandwidth == bw]
        series[f"params, bandwidth {bw}"] = ([r.dim for r in sel], [r.params for r in sel])
    svg.line_chart(out / "scaling.svg", series, title="S-NN size against dimension",
                   xlabel="dimension", ylabel="parameters")
    summary = {"rows": [asdict(r) for r in rows]}
    io.write_json(out / "scaling.json", summary)
    return summary


def cmd_sdre_data(cfg, out: Path) -> dict:
    p, t = cfg["problem"], cfg["train"]
    prob = allen_cahn(p["n"], p["sigma"], p["delta1"], p["delta2"])
    total = t["train_size"] + t["val_size"] + t["test_size"]
    data = sdre_dataset(prob, total, radius=t["radius"], seed=split_seeds(cfg["seed"], 1)[0])
    io.write_array(out / "points.csv", data.points, "x")
    io.write_array(out / "values.csv", data.values, "value")
    io.write_array(out / "grads.csv", data.gradients, "g")
    summary = {"requested": total, "written": len(data.values),
               "failed_indices": data.failures}
    io.write_json(out / "sdre_data.json", summary)
    return summary


def cmd_sin_product(cfg, out: Path) -> dict:
    p = cfg["problem"]
    name = "rho" if p["rho"] is not None else "alpha"
    values = p[name] if isinstance(p[name], list) else [p[name]]
    rows = []
    for v in values:
        sub = json.loads(json.dumps(cfg))
        sub["problem"][name] = v
        data, graph, _ = _problem_data(sub)
        shuffle_seed, init_seed = _stream_seeds(cfg["seed"])
        tcfg = _train_config(sub, seed=shuffle_seed)
        model = build_snn(graph, cfg["snn"]["l"], cfg["snn"]["M"], seed=init_seed)
        rep = train(model, data.train, data.val, tcfg)
        rows.append((v, mse(model, data.test), rep.epochs))
    io.write_table(out / "sin_product.csv", [name, "test_mse", "epochs"], rows)
    svg.line_chart(out / "sin_product.svg", {"test MSE": ([r[0] for r in rows], [r[1] for r in rows])},
                   title="Test error against decay parameter", xlabel=name, ylabel="MSE",
                   log_y=True)
    summary = {"parameter": name, "rows": [list(r) for r in rows]}
    io.write_json(out / "sin_product.json", summary)
    return summary


HANDLERS = {
    "decay-bound": cmd_decay_bound,
    "sep-error": cmd_sep_error,
    "train": cmd_train,
    "scaling": cmd_scaling,
    "sdre-data": cmd_sdre_data,
    "sin-product": cmd_sin_product,
}


def run(command: str, raw_config: dict, seed: int | None = None,
        out: str | None = None) -> dict:
    """Validate a configuration and run one command; returns its summary."""
    cfg = load_config(raw_config, command, seed, out)
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    io.write_json(out_dir / "config.json", cfg)
    return HANDLERS[command](cfg, out_dir)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sepsense", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON experiment configuration")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        summary = run(args.command, raw, args.seed, args.out)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(summary, indent=2, sort_keys=True, default=io._json_default))
    return 0


if __name__ == "__main__":
    sys.exit(main())
