"""Experiment harness: hyperparameter tuning and normalized-revenue pipelines.

One repetition draws fresh train/validation/test data, tunes each algorithm
on validation *revenue* (never on a surrogate loss), and scores the tuned
model's mean test revenue, normalized so that no reserve maps to 0 and the
per-record top bid maps to 1.  Result files are written deterministically:
the same config byte-for-byte reproduces them.
"""

from __future__ import annotations

import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .baselines import (
    CvxConfig,
    LinearModel,
    anchor_revenues,
    cvx_surrogate_fit,
    no_feature_fit,
    ridge_fit,
)
from .data import (
    GenSpec,
    continuous_feature_indices,
    generate,
    impute_highest_bid,
    load_csv_ex,
    standardize,
)
from .dc import DCConfig, train
from .errors import ConfigError, DataError, TrainingError
from .losses import revenue

__all__ = [
    "ALGORITHMS",
    "FIGURES",
    "ExperimentConfig",
    "ExperimentResult",
    "evaluate_revenue",
    "normalize",
    "tune",
    "fit_algorithm",
    "run_experiment",
    "save_result",
    "load_result",
    "emit_plot_data",
]

ALGORITHMS = ("dc", "cvx", "ridge", "nofeat")
FIGURES = ("fig6a", "fig6b", "fig6c", "fig6d", "fig7a", "fig7b")

_CONFIG_KEYS = {
    "generator_kind", "noise_std", "input_csv", "input_schema", "impute_b1",
    "standardize_continuous", "sample_sizes", "repetitions", "test_size",
    "base_seed", "algorithms", "gamma_grid", "alpha_grid", "reg_grid",
    "ridge_grid", "reg_mode", "dc_inner_solver", "dc_inner_budget",
    "dc_outer_max", "dc_restarts", "cvx_budget", "step_base",
    "record_reserves", "output_path",
}


@dataclass
class ExperimentConfig:
    """Full description of one experiment sweep; JSON-loadable."""

    sample_sizes: list = field(default_factory=lambda: [100, 200, 400, 800, 1600, 3200, 6400])
    generator_kind: str | None = None
    noise_std: float = 0.0
    input_csv: str | None = None
    input_schema: str | None = None
    impute_b1: bool = False
    standardize_continuous: bool = True
    repetitions: int = 10
    test_size: int = 5000
    base_seed: int = 0
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    gamma_grid: list = field(default_factory=lambda: [0.01, 0.02, 0.05, 0.1, 0.25, 0.5])
    alpha_grid: list = field(default_factory=lambda: [0.05, 0.1, 0.25, 0.5, 1.0])
    reg_grid: list = field(default_factory=lambda: list(np.logspace(-4, 2, 7)))
    ridge_grid: list = field(default_factory=lambda: list(np.logspace(-4, 2, 7)))
    reg_mode: str = "ridge"
    dc_inner_solver: str = "exact"
    dc_inner_budget: int = 2000
    dc_outer_max: int = 20
    dc_restarts: int = 2
    cvx_budget: int = 1500
    step_base: float = 0.5
    record_reserves: bool = True
    output_path: str | None = None

    def __post_init__(self):
        if (self.generator_kind is None) == (self.input_csv is None):
            raise ConfigError("configure exactly one of generator_kind or input_csv")
        if self.input_csv is not None and self.input_schema is None:
            raise ConfigError("input_csv needs input_schema")
        if not self.sample_sizes or any(int(s) < 1 for s in self.sample_sizes):
            raise ConfigError("sample_sizes must be a non-empty list of positive sizes")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.test_size < 1:
            raise ConfigError("test_size must be >= 1")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be non-negative")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown or not self.algorithms:
            raise ConfigError(f"algorithms must be a non-empty subset of {ALGORITHMS}")
        for name in ("gamma_grid", "alpha_grid", "reg_grid", "ridge_grid"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be non-empty")
        if self.reg_mode not in ("ridge", "ball"):
            raise ConfigError("reg_mode must be 'ridge' or 'ball'")
        self.sample_sizes = [int(s) for s in self.sample_sizes]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("experiment config must be a JSON object")
        unknown = sorted(set(d) - _CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc))

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = [float(x) if isinstance(x, (int, float, np.floating)) and f.name.endswith("_grid")
                     else x for x in v]
            out[f.name] = v
        return out


@dataclass
class ExperimentResult:
    """Per-(algorithm, size) repetition values and aggregates, plus reserves."""

    config: dict
    cells: dict      # algo -> str(size) -> {"revenue": [...], "normalized": [...], ...}
    anchors: dict    # str(size) -> {"no_reserve": [...], "highest_bid": [...]}
    reserves: list   # rows: (algorithm, sample_size, rep, record_index, reserve, b1)
    errors: list


def evaluate_revenue(predictor, dataset) -> float:
    """Mean revenue of a model or constant reserve over a dataset."""
    if len(dataset) == 0:
        raise DataError("cannot evaluate on an empty dataset")
    if isinstance(predictor, LinearModel):
        r = predictor.predict(dataset.X)
    else:
        r = np.full(len(dataset), float(predictor))
    return float(np.mean(revenue(r, dataset.b1, dataset.b2)))


def normalize(rev: float, anchors) -> float:
    """Map revenue onto the [no reserve]=0, [top-bid oracle]=1 scale."""
    lo, hi = anchors
    if hi == lo:
        return float("nan")  # degenerate anchors: scale undefined, not an error
    return (rev - lo) / (hi - lo)


def _grid_points(algorithm: str, config: ExperimentConfig):
    """Hyperparameter combinations in declared order (ties in tuning pick the first)."""
    if algorithm == "dc":
        return [{"gamma": float(g), "reg": float(r)}
                for g in config.gamma_grid for r in config.reg_grid]
    if algorithm == "cvx":
        return [{"alpha": float(a), "reg": float(r)}
                for a in config.alpha_grid for r in config.reg_grid]
    if algorithm == "ridge":
        return [{"ridge_lambda": float(r)} for r in config.ridge_grid]
    if algorithm == "nofeat":
        return [{}]
    raise ConfigError(f"unknown algorithm {algorithm!r}")


def fit_algorithm(algorithm: str, dataset, params: dict, config: ExperimentConfig):
    """Train one algorithm at one grid point; returns a LinearModel or a constant."""
    ball = config.reg_mode == "ball"
    if algorithm == "dc":
        cfg = DCConfig(
            gamma=params["gamma"],
            reg_mode=config.reg_mode,
            reg_lambda=0.0 if ball else params["reg"],
            norm_cap=params["reg"] if ball else None,
            inner_solver=config.dc_inner_solver,
            inner_budget=config.dc_inner_budget,
            outer_max=config.dc_outer_max,
            restarts=config.dc_restarts,
            step_base=config.step_base,
        )
        return train(dataset, cfg).model
    if algorithm == "cvx":
        cfg = CvxConfig(
            alpha=params["alpha"],
            reg_mode=config.reg_mode,
            reg_lambda=0.0 if ball else params["reg"],
            norm_cap=params["reg"] if ball else None,
            budget=config.cvx_budget,
            step_base=config.step_base,
        )
        return cvx_surrogate_fit(dataset, cfg)
    if algorithm == "ridge":
        return ridge_fit(dataset, params["ridge_lambda"])
    if algorithm == "nofeat":
        return no_feature_fit(dataset)
    raise ConfigError(f"unknown algorithm {algorithm!r}")


def tune(algorithm: str, config: ExperimentConfig, train_ds, val_ds):
    """Fit every grid point on train, pick the best validation revenue.

    Returns ``(params, model, table)`` where table lists (params, val_revenue)
    for each successful fit; selection is by empirical revenue only.
    """
    best = None
    table = []
    failures = []
    for params in _grid_points(algorithm, config):
        try:
            model = fit_algorithm(algorithm, train_ds, params, config)
        except TrainingError as exc:
            failures.append(f"{params}: {exc}")
            continue
        val_rev = evaluate_revenue(model, val_ds)
        table.append((params, val_rev))
        if best is None or val_rev > best[2]:
            best = (params, model, val_rev)
    if best is None:
        raise TrainingError(
            f"every {algorithm} fit failed; first failure: {failures[0] if failures else 'n/a'}"
        )
    return best[0], best[1], table


def _load_input_dataset(config: ExperimentConfig):
    dataset, layout = load_csv_ex(config.input_csv, config.input_schema)
    if config.impute_b1:
        dataset = impute_highest_bid(dataset)
    return dataset, layout


def _rep_seed(config: ExperimentConfig, rep: int, size_index: int) -> int:
    return (config.base_seed + rep) * 10_000 + size_index * 10


def _rep_datasets(config: ExperimentConfig, source, rep: int, size_index: int, m: int):
    """Train/val/test for one repetition at one sample size.

    Synthetic runs draw one pool of 2m+test records so train/val/test share
    any per-dataset latent state; CSV runs split the loaded file.
    """
    seed = _rep_seed(config, rep, size_index)
    if config.generator_kind is not None:
        n = 2 * m + config.test_size
        pool = generate(GenSpec(config.generator_kind, n, config.noise_std, seed))
        idx = np.arange(n)
        parts = (
            pool.take(idx[:m]),
            pool.take(idx[m : 2 * m]),
            pool.take(idx[2 * m : n]),
        )
    else:
        from .data import split

        dataset, layout = source
        parts = split(dataset, m, m, config.test_size, seed)
        if config.standardize_continuous:
            cols = continuous_feature_indices(layout)
            if cols:
                tr, stats = standardize(parts[0], cols)
                va, _ = standardize(parts[1], cols, stats)
                te, _ = standardize(parts[2], cols, stats)
                parts = (tr, va, te)
    return parts


def _reserve_rows(algorithm, size, rep, predictor, test_ds):
    if isinstance(predictor, LinearModel):
        res = predictor.predict(test_ds.X)
    else:
        res = np.full(len(test_ds), float(predictor))
    return [
        (algorithm, size, rep, i, float(res[i]), float(test_ds.b1[i]))
        for i in range(len(test_ds))
    ]


def run_experiment(config: ExperimentConfig, log=None) -> ExperimentResult:
    """Run every (repetition, sample size, algorithm) cell and aggregate.

    Per-cell failures are recorded and skipped so partial results survive;
    wall-clock timings go to ``log`` (default stderr), never into the result.
    """
    log = sys.stderr if log is None else log
    source = _load_input_dataset(config) if config.input_csv is not None else None

    cells = {a: {str(s): {"revenue": [], "normalized": [], "chosen": []}
                 for s in config.sample_sizes} for a in config.algorithms}
    anchors_out = {str(s): {"no_reserve": [], "highest_bid": []} for s in config.sample_sizes}
    reserves = []
    errors = []

    for rep in range(config.repetitions):
        for si, m in enumerate(config.sample_sizes):
            try:
                train_ds, val_ds, test_ds = _rep_datasets(config, source, rep, si, m)
            except (DataError, ConfigError) as exc:
                errors.append({"rep": rep, "size": m, "algorithm": None, "message": str(exc)})
                continue
            anchors = anchor_revenues(test_ds)
            anchors_out[str(m)]["no_reserve"].append(anchors[0])
            anchors_out[str(m)]["highest_bid"].append(anchors[1])
            for algo in config.algorithms:
                t0 = time.perf_counter()
                try:
                    params, model, _ = tune(algo, config, train_ds, val_ds)
                except TrainingError as exc:
                    errors.append({"rep": rep, "size": m, "algorithm": algo,
                                   "message": str(exc)})
                    continue
                rev = evaluate_revenue(model, test_ds)
                cell = cells[algo][str(m)]
                cell["revenue"].append(rev)
                cell["normalized"].append(normalize(rev, anchors))
                cell["chosen"].append(params)
                if config.record_reserves and rep == 0:
                    reserves.extend(_reserve_rows(algo, m, rep, model, test_ds))
                print(f"rep {rep} size {m} {algo}: rev={rev:.4f} "
                      f"({time.perf_counter() - t0:.1f}s)", file=log)

    if not any(cell["revenue"] for by_size in cells.values() for cell in by_size.values()):
        raise TrainingError("no experiment cell completed successfully")

    for by_size in cells.values():
        for cell in by_size.values():
            for key in ("revenue", "normalized"):
                vals = np.array(cell[key], float)
                ok = vals[np.isfinite(vals)]
                cell[f"mean_{key}"] = float(np.mean(ok)) if ok.size else None
                cell[f"std_{key}"] = float(np.std(ok, ddof=1)) if ok.size > 1 else 0.0

    return ExperimentResult(
        config=config.to_dict(),
        cells=cells,
        anchors=anchors_out,
        reserves=reserves,
        errors=errors,
    )


# --- persistence --------------------------------------------------------------

def _sanitize(obj):
    """NaN/inf become null so the results file stays strict JSON."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def save_result(result: ExperimentResult, out_dir) -> None:
    """Write results.json and reserves.csv; byte-identical across reruns."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    doc = _sanitize({
        "config": result.config,
        "cells": result.cells,
        "anchors": result.anchors,
        "errors": result.errors,
    })
    with open(os.path.join(out_dir, "results.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False,
                  default=_json_default)
        fh.write("\n")
    with open(os.path.join(out_dir, "reserves.csv"), "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["algorithm", "sample_size", "rep", "record_index", "reserve", "b1"])
        for row in sorted(result.reserves):
            out.writerow([row[0], row[1], row[2], row[3], repr(row[4]), repr(row[5])])


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def load_result(out_dir) -> ExperimentResult:
    import os

    path = os.path.join(out_dir, "results.json")
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"no results.json under {out_dir}")
    reserves = []
    rpath = os.path.join(out_dir, "reserves.csv")
    if os.path.exists(rpath):
        with open(rpath, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        for row in rows[1:]:
            reserves.append((row[0], int(row[1]), int(row[2]), int(row[3]),
                             float(row[4]), float(row[5])))
    return ExperimentResult(
        config=doc.get("config", {}),
        cells=doc["cells"],
        anchors=doc.get("anchors", {}),
        reserves=reserves,
        errors=doc.get("errors", []),
    )


# --- plot-ready tables ----------------------------------------------------------

def _fig7a_size(result: ExperimentResult) -> int:
    sizes = sorted({row[1] for row in result.reserves})
    if not sizes:
        raise DataError("no recorded reserves; rerun with record_reserves=true")
    return 800 if 800 in sizes else sizes[-1]


def emit_plot_data(result: ExperimentResult, figure_id: str) -> str:
    """CSV text for one figure.

    fig6a-d: (algorithm, sample_size, mean, std) of normalized test revenue.
    fig7a:   (algorithm, reserve_price), one row per test record, at the
             800-sample size when present (first repetition's models).
    fig7b:   (algorithm, sample_size, mean, std) of raw test revenue, with
             no_reserve / highest_bid anchor rows appended.
    """
    if figure_id not in FIGURES:
        raise ConfigError(f"unknown figure id {figure_id!r}; expected one of {FIGURES}")
    buf = io.StringIO()
    out = csv.writer(buf)

    if figure_id == "fig7a":
        out.writerow(["algorithm", "reserve_price"])
        size = _fig7a_size(result)
        for row in sorted(r for r in result.reserves if r[1] == size):
            out.writerow([row[0], repr(row[4])])
        return buf.getvalue()

    key = "revenue" if figure_id == "fig7b" else "normalized"
    out.writerow(["algorithm", "sample_size", "mean", "std"])
    for algo in sorted(result.cells):
        for size in sorted(result.cells[algo], key=int):
            cell = result.cells[algo][size]
            mean = cell.get(f"mean_{key}")
            if mean is None:
                continue
            out.writerow([algo, size, repr(float(mean)), repr(float(cell[f"std_{key}"]))])
    if figure_id == "fig7b":
        for name in ("no_reserve", "highest_bid"):
            for size in sorted(result.anchors, key=int):
                vals = np.array(result.anchors[size][name], float)
                if vals.size == 0:
                    continue
                std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
                out.writerow([name, size, repr(float(np.mean(vals))), repr(std)])
    return buf.getvalue()
