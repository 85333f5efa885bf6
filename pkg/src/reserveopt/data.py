"""Auction datasets: synthetic bid generators and CSV ingestion.

Feature vectors always carry a trailing offset coordinate fixed at 1, so a
linear model's last weight is its intercept.  Random generation draws every
record from its own counter-based stream (Philox keyed by ``(seed, index)``),
which makes parallel generation bit-identical to sequential generation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = [
    "GenSpec",
    "AuctionRecord",
    "AuctionDataset",
    "generate",
    "gen_gaussian_sum",
    "gen_lognormal",
    "load_schema",
    "load_csv",
    "load_csv_ex",
    "write_csv",
    "write_schema",
    "impute_highest_bid",
    "split",
    "continuous_feature_indices",
    "standardize",
    "schema_path_for",
]

GAUSSIAN_SUM = "gaussian_sum"
LOGNORMAL = "lognormal"

_SCHEMA_ROLES = {"continuous", "categorical", "bid1", "bid2", "item_id"}


@dataclass(frozen=True)
class GenSpec:
    """Synthetic dataset request: generator family, record count, noise, seed."""

    kind: str
    n: int
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (GAUSSIAN_SUM, LOGNORMAL):
            raise DataError(f"unknown generator kind {self.kind!r}")
        if self.n < 1:
            raise DataError(f"need n >= 1, got {self.n}")
        if self.noise_std < 0:
            raise DataError("noise_std must be non-negative")
        if self.seed < 0:
            raise DataError("seed must be non-negative")


@dataclass(frozen=True)
class AuctionRecord:
    x: np.ndarray
    b1: float
    b2: float
    item_id: str | None = None


class AuctionDataset:
    """Feature matrix (m, d) with offset column, plus top-two bids per row."""

    def __init__(self, X, b1, b2, item_ids=None):
        X = np.ascontiguousarray(X, dtype=float)
        b1 = np.ascontiguousarray(b1, dtype=float)
        b2 = np.ascontiguousarray(b2, dtype=float)
        if X.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {X.shape}")
        m = X.shape[0]
        if b1.shape != (m,) or b2.shape != (m,):
            raise DataError("bid arrays must match the number of feature rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(b1)) and np.all(np.isfinite(b2))):
            raise DataError("features and bids must be finite")
        bad = np.flatnonzero(~((b1 >= b2) & (b2 >= 0.0)))
        if bad.size:
            i = int(bad[0])
            raise DataError(f"row {i}: bids must satisfy b1 >= b2 >= 0, got ({b1[i]}, {b2[i]})")
        if m and X.shape[1] < 1:
            raise DataError("need at least the offset feature column")
        if m and not np.all(X[:, -1] == 1.0):
            raise DataError("last feature column must be the constant offset 1")
        if item_ids is not None:
            item_ids = [str(t) for t in item_ids]
            if len(item_ids) != m:
                raise DataError("item_ids must match the number of rows")
        self.X = X
        self.b1 = b1
        self.b2 = b2
        self.item_ids = item_ids

    def __len__(self):
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def max_bid(self) -> float:
        """Largest observed top bid (the scale constant of the problem)."""
        return float(self.b1.max()) if len(self) else 0.0

    def record(self, i: int) -> AuctionRecord:
        item = self.item_ids[i] if self.item_ids is not None else None
        return AuctionRecord(self.X[i].copy(), float(self.b1[i]), float(self.b2[i]), item)

    def take(self, idx) -> "AuctionDataset":
        idx = np.asarray(idx, int)
        items = [self.item_ids[i] for i in idx] if self.item_ids is not None else None
        return AuctionDataset(self.X[idx], self.b1[idx], self.b2[idx], items)


# --- random streams ----------------------------------------------------------

def _dataset_rng(seed: int) -> np.random.Generator:
    """Stream for per-dataset draws (e.g. the lognormal model's weight vector)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0,))))


def _record_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for record ``index``; key (seed, 1, index)."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(1, index)))
    )


def gen_gaussian_sum(spec: GenSpec) -> AuctionDataset:
    """Bids driven by the (absolute) sum of 21 standard-normal features.

    Per record: x = (x_tilde, 1) with x_tilde in R^20 standard normal, then
    v1 = |sum(x)| + e1 and v2 = |sum(x)/2 + e2| with independent N(0, s^2)
    noise; the larger clamped at zero is b1, the smaller is b2.  With s=0
    this makes b1 exactly twice b2.
    """
    if spec.kind != GAUSSIAN_SUM:
        raise DataError(f"expected kind {GAUSSIAN_SUM!r}")
    n, s = spec.n, spec.noise_std
    X = np.empty((n, 21))
    b1 = np.empty(n)
    b2 = np.empty(n)
    for i in range(n):
        draws = _record_rng(spec.seed, i).standard_normal(22)
        X[i, :20] = draws[:20]
        X[i, 20] = 1.0
        total = X[i].sum()
        v1 = abs(total) + s * draws[20]
        v2 = abs(total / 2.0 + s * draws[21])
        hi, lo = (v1, v2) if v1 >= v2 else (v2, v1)
        b1[i] = max(hi, 0.0)
        b2[i] = max(lo, 0.0)
    return AuctionDataset(X, b1, b2)


def gen_lognormal(spec: GenSpec) -> AuctionDataset:
    """Bids as the max/min of two lognormal draws tied to a hidden linear score.

    One weight vector w is drawn per dataset from a standard normal scaled
    to unit expected norm; each record then draws x as in the gaussian
    generator and two lognormal values with log-space locations ``x.w`` and
    ``x.w / 2`` and log-space scale 0.5.  The scaling keeps the log-space
    locations within a few units, so bids span a realistic range instead of
    ten orders of magnitude.
    """
    if spec.kind != LOGNORMAL:
        raise DataError(f"expected kind {LOGNORMAL!r}")
    n = spec.n
    w = _dataset_rng(spec.seed).standard_normal(21) / math.sqrt(21.0)
    X = np.empty((n, 21))
    b1 = np.empty(n)
    b2 = np.empty(n)
    for i in range(n):
        rng = _record_rng(spec.seed, i)
        X[i, :20] = rng.standard_normal(20)
        X[i, 20] = 1.0
        mu = float(X[i] @ w)
        s1 = rng.lognormal(mean=mu, sigma=0.5)
        s2 = rng.lognormal(mean=mu / 2.0, sigma=0.5)
        b1[i] = max(s1, s2)
        b2[i] = min(s1, s2)
    return AuctionDataset(X, b1, b2)


def generate(spec: GenSpec) -> AuctionDataset:
    if spec.kind == GAUSSIAN_SUM:
        return gen_gaussian_sum(spec)
    return gen_lognormal(spec)


# --- CSV + schema -------------------------------------------------------------

def schema_path_for(csv_path: str) -> str:
    return str(csv_path) + ".schema.json"


def load_schema(source) -> dict:
    """Schema descriptor: mapping column name -> role (see module docs)."""
    if isinstance(source, dict):
        schema = dict(source)
    else:
        try:
            with open(source, encoding="utf-8") as fh:
                schema = json.load(fh)
        except FileNotFoundError:
            raise DataError(f"schema file not found: {source}")
        except json.JSONDecodeError as exc:
            raise DataError(f"schema {source} is not valid JSON: {exc}")
    if not isinstance(schema, dict) or not schema:
        raise DataError("schema must be a non-empty JSON object")
    for col, role in schema.items():
        if role not in _SCHEMA_ROLES:
            raise DataError(f"column {col!r}: unknown role {role!r}")
    for role in ("bid1", "bid2", "item_id"):
        if sum(1 for r in schema.values() if r == role) > 1:
            raise DataError(f"schema declares role {role!r} more than once")
    if "bid2" not in schema.values():
        raise DataError("schema must declare a bid2 column")
    return schema


def _parse_float(raw, row, col):
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise DataError(f"data row {row}: column {col!r}: not numeric: {raw!r}")


def load_csv_ex(path, schema):
    """Read an auction CSV; returns ``(dataset, layout)``.

    Categorical columns are one-hot encoded over their sorted distinct file
    values, continuous columns are kept as read (standardization is a
    separate, split-aware step; see :func:`standardize`), and the offset
    coordinate is appended last.  A missing bid1 column is filled with bid2,
    leaving the dataset ready for :func:`impute_highest_bid`.  ``layout``
    lists one (source column, role, start, width) tuple per feature column
    of the encoded matrix.
    """
    schema = load_schema(schema)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise DataError(f"dataset file not found: {path}")
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"empty file: {path}")
    header, body = rows[0], rows[1:]
    if not body:
        raise DataError(f"no data rows in {path}")

    col_idx = {}
    for col in schema:
        if col not in header:
            raise DataError(f"missing column {col!r} in {path}")
        col_idx[col] = header.index(col)

    width = len(header)
    for r, row in enumerate(body, start=1):
        if len(row) != width:
            raise DataError(f"data row {r}: expected {width} cells, got {len(row)}")

    feature_cols = [(c, role) for c, role in schema.items() if role in ("continuous", "categorical")]
    levels = {}
    for col, role in feature_cols:
        if role == "categorical":
            levels[col] = sorted({row[col_idx[col]] for row in body})

    m = len(body)
    blocks = []
    layout = []
    start = 0
    for col, role in feature_cols:
        j = col_idx[col]
        if role == "continuous":
            vals = np.array([_parse_float(row[j], r, col) for r, row in enumerate(body, 1)])
            blocks.append(vals[:, None])
            layout.append((col, role, start, 1))
            start += 1
        else:
            lv = levels[col]
            pos = {v: k for k, v in enumerate(lv)}
            hot = np.zeros((m, len(lv)))
            for r, row in enumerate(body):
                hot[r, pos[row[j]]] = 1.0
            blocks.append(hot)
            layout.append((col, role, start, len(lv)))
            start += len(lv)
    blocks.append(np.ones((m, 1)))
    X = np.hstack(blocks)

    j2 = col_idx[[c for c, role in schema.items() if role == "bid2"][0]]
    b2 = np.array([_parse_float(row[j2], r, "bid2") for r, row in enumerate(body, 1)])
    bid1_cols = [c for c, role in schema.items() if role == "bid1"]
    if bid1_cols:
        j1 = col_idx[bid1_cols[0]]
        b1 = np.array([_parse_float(row[j1], r, "bid1") for r, row in enumerate(body, 1)])
    else:
        b1 = b2.copy()

    item_cols = [c for c, role in schema.items() if role == "item_id"]
    item_ids = [row[col_idx[item_cols[0]]] for row in body] if item_cols else None
    return AuctionDataset(X, b1, b2, item_ids), layout


def load_csv(path, schema) -> AuctionDataset:
    """Like :func:`load_csv_ex` but returns only the dataset."""
    return load_csv_ex(path, schema)[0]


def continuous_feature_indices(layout) -> list:
    """Encoded-column positions of the continuous features from a load layout."""
    return [start for _, role, start, _ in layout if role == "continuous"]


def write_csv(dataset: AuctionDataset, path) -> None:
    """Write the encoded dataset: feature columns x0..x{d-2}, b1, b2, item_id.

    The offset column is implicit and not written; floats use repr so a
    write/load round trip preserves values bit for bit.
    """
    d = dataset.dim
    names = [f"x{j}" for j in range(d - 1)] + ["b1", "b2"]
    if dataset.item_ids is not None:
        names.append("item_id")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(names)
        for i in range(len(dataset)):
            row = [repr(float(v)) for v in dataset.X[i, : d - 1]]
            row += [repr(float(dataset.b1[i])), repr(float(dataset.b2[i]))]
            if dataset.item_ids is not None:
                row.append(dataset.item_ids[i])
            out.writerow(row)


def write_schema(dataset: AuctionDataset, path) -> None:
    """Sidecar schema for a dataset written by :func:`write_csv` (all continuous)."""
    schema = {f"x{j}": "continuous" for j in range(dataset.dim - 1)}
    schema["b1"] = "bid1"
    schema["b2"] = "bid2"
    if dataset.item_ids is not None:
        schema["item_id"] = "item_id"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema, fh, indent=2, sort_keys=False)
        fh.write("\n")


def impute_highest_bid(dataset: AuctionDataset) -> AuctionDataset:
    """Fill in unobserved top bids from per-item mean sale prices.

    Treats b2 as the observed sale price, averages it within each item_id
    group, and sets each record's b1 to the max of that mean and its own
    price, which keeps every pair valid.
    """
    if dataset.item_ids is None:
        raise DataError("imputation needs an item_id column")
    sums: dict = {}
    counts: dict = {}
    for item, price in zip(dataset.item_ids, dataset.b2):
        sums[item] = sums.get(item, 0.0) + float(price)
        counts[item] = counts.get(item, 0) + 1
    means = {item: sums[item] / counts[item] for item in sums}
    b1 = np.array([max(means[item], float(p)) for item, p in zip(dataset.item_ids, dataset.b2)])
    return AuctionDataset(dataset.X, b1, dataset.b2, dataset.item_ids)


def split(dataset: AuctionDataset, train_n: int, val_n: int, test_n: int, seed: int):
    """Disjoint uniform train/val/test subsets, deterministic in the seed."""
    total = train_n + val_n + test_n
    if min(train_n, val_n, test_n) < 0:
        raise DataError("split sizes must be non-negative")
    if total > len(dataset):
        raise DataError(f"split needs {total} records, dataset has {len(dataset)}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(2,))))
    perm = rng.permutation(len(dataset))
    tr = dataset.take(perm[:train_n])
    va = dataset.take(perm[train_n : train_n + val_n])
    te = dataset.take(perm[train_n + val_n : total])
    return tr, va, te


def standardize(dataset: AuctionDataset, columns, stats=None):
    """Scale the given feature columns to zero mean / unit variance.

    ``stats`` as returned by a previous call lets validation and test splits
    reuse the training split's statistics.  Returns (dataset, (mean, std)).
    """
    columns = np.asarray(columns, int)
    if stats is None:
        mean = dataset.X[:, columns].mean(axis=0)
        std = dataset.X[:, columns].std(axis=0)
        std = np.where(std > 0, std, 1.0)
    else:
        mean, std = stats
    X = dataset.X.copy()
    X[:, columns] = (X[:, columns] - mean) / std
    return AuctionDataset(X, dataset.b1, dataset.b2, dataset.item_ids), (mean, std)
