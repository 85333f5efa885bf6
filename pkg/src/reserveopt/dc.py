"""Difference-of-convex trainer for linear reserve models.

Training alternates two phases.  The DCA phase repeatedly linearizes the
subtracted convex piece of the surrogate at the current iterate and runs
the shared subgradient engine on the resulting convex problem.  The line
search phase then minimizes the full training objective exactly along the
ray through the current iterate, which the surrogate's positive
homogeneity reduces to a valley-function sum handled by the sweep solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .baselines import LinearModel, initial_weights
from .errors import ConfigError, DataError
from .losses import dc_u, dc_v_subgradient, surrogate_loss
from .optim import ball_projection, hinge_qp, subgradient_descent
from .vsum import VFunction, minimize_sum

__all__ = [
    "DCConfig",
    "TrainTrace",
    "objective",
    "grand_v_subgradient",
    "dca_inner",
    "dca",
    "line_search",
    "train",
    "predict_reserve",
]


@dataclass(frozen=True)
class DCConfig:
    """Trainer settings: surrogate width, regularization, budgets, tolerances."""

    gamma: float = 0.1
    reg_mode: str = "ridge"          # "ridge": +lambda*||w||^2; "ball": ||w|| <= norm_cap
    reg_lambda: float = 1e-3
    norm_cap: float | None = None
    inner_solver: str = "exact"      # "exact": dual-CD QP (ridge mode); "subgradient"
    inner_budget: int = 2000
    inner_tol: float = 1e-8
    step_base: float = 0.5
    outer_max: int = 50
    outer_tol: float = 1e-6
    seed: int = 0
    restarts: int = 0                # extra random restarts; off by default

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.reg_mode not in ("ridge", "ball"):
            raise ConfigError(f"reg_mode must be 'ridge' or 'ball', got {self.reg_mode!r}")
        if self.reg_mode == "ridge" and not self.reg_lambda >= 0:
            raise ConfigError("reg_lambda must be non-negative")
        if self.reg_mode == "ball" and not (self.norm_cap and self.norm_cap > 0):
            raise ConfigError("ball mode needs a positive norm_cap")
        if self.inner_solver not in ("exact", "subgradient"):
            raise ConfigError(f"inner_solver must be 'exact' or 'subgradient', got {self.inner_solver!r}")
        if self.inner_budget < 1 or self.inner_tol <= 0 or self.step_base <= 0:
            raise ConfigError("inner_budget, inner_tol and step_base must be positive")
        if self.outer_max < 0 or self.outer_tol <= 0:
            raise ConfigError("outer_max must be >= 0 and outer_tol positive")
        if self.restarts < 0 or self.seed < 0:
            raise ConfigError("restarts and seed must be non-negative")

    @property
    def _exact_inner(self) -> bool:
        # the dual-CD QP needs the quadratic term: ridge mode with lambda > 0
        return self.inner_solver == "exact" and self.reg_mode == "ridge" and self.reg_lambda > 0


@dataclass
class TrainTrace:
    """Objective after every phase (non-increasing) plus the final model."""

    objectives: list
    phases: list
    model: LinearModel


def _check_dims(w, dataset):
    w = np.asarray(w, float)
    if w.shape != (dataset.dim,):
        raise ValueError(f"weight shape {w.shape} does not match feature dimension {dataset.dim}")
    return w


def objective(w, dataset, gamma) -> float:
    """Summed surrogate loss of the linear model over the dataset."""
    w = _check_dims(w, dataset)
    return float(np.sum(surrogate_loss(dataset.X @ w, dataset.b1, dataset.b2, gamma)))


def grand_v_subgradient(w, dataset, gamma) -> np.ndarray:
    """Subgradient of the summed subtracted piece: sum_i v'(w.x_i) * x_i."""
    w = _check_dims(w, dataset)
    s = dc_v_subgradient(dataset.X @ w, dataset.b1, dataset.b2, gamma)
    return dataset.X.T @ s


def _training_objective(w, dataset, config) -> float:
    f = objective(w, dataset, config.gamma)
    if config.reg_mode == "ridge":
        f += config.reg_lambda * float(w @ w)
    return f


def dca_inner(w_prev, dataset, config: DCConfig) -> np.ndarray:
    """One DCA step: minimize the convex model with v linearized at w_prev.

    In ridge mode with the "exact" solver the problem collapses to a
    hinge-loss QP (the max of the two lines equals a ramp plus a scaled
    hinge at the top bid) and is solved by dual coordinate ascent.  The
    "subgradient" solver runs the shared c/sqrt(t) engine instead and is
    the only choice under a norm cap.  Either way the returned point never
    scores worse than w_prev on the linearized objective, which is what
    makes the outer DCA objective non-increasing.
    """
    w_prev = _check_dims(w_prev, dataset)
    X, b1, b2 = dataset.X, dataset.b1, dataset.b2
    gamma = config.gamma
    g_v = grand_v_subgradient(w_prev, dataset, gamma)
    ridge = config.reg_lambda if config.reg_mode == "ridge" else 0.0

    def obj(w):
        f = float(np.sum(dc_u(X @ w, b1, b2, gamma))) - float(g_v @ w)
        return f + ridge * float(w @ w)

    if config._exact_inner:
        q = X.sum(axis=0) / gamma - g_v
        w = hinge_qp(X, b1, q, cap=(1.0 + gamma) / gamma, lam=ridge,
                     w_start=w_prev, tol=config.inner_tol)
        return w if obj(w) <= obj(w_prev) else w_prev.copy()

    def grad(w):
        r = X @ w
        s = np.where(r < b1, -1.0, 1.0 / gamma)
        g = X.T @ s - g_v
        if ridge:
            g = g + 2.0 * ridge * w
        return g

    project = ball_projection(config.norm_cap) if config.reg_mode == "ball" else None
    w, _ = subgradient_descent(
        obj, grad, w_prev, budget=config.inner_budget, step_base=config.step_base,
        tol=config.inner_tol, project=project,
    )
    return w


def dca(w0, dataset, config: DCConfig) -> np.ndarray:
    """Iterate dca_inner until the training objective stalls.

    The training objective (surrogate sum, plus the ridge penalty when that
    mode is active) is non-increasing across iterations.
    """
    w = _check_dims(w0, dataset)
    if config.reg_mode == "ball":
        w = ball_projection(config.norm_cap)(w)
    f = _training_objective(w, dataset, config)
    for _ in range(config.outer_max):
        w_new = dca_inner(w, dataset, config)
        f_new = _training_objective(w_new, dataset, config)
        if f_new > f:  # numerical safety; best-iterate makes this rare
            w_new, f_new = w, f
        done = abs(f - f_new) <= config.outer_tol * max(1.0, abs(f))
        w, f = w_new, f_new
        if done:
            break
    return w


def line_search(w, dataset, gamma, lambda_cap=None) -> np.ndarray:
    """Exact minimization of the surrogate sum along the ray through w.

    Records with non-positive projection contribute a constant along the
    ray and drop out; the rest become valley functions in the step size,
    which the sweep solver minimizes over [0, lambda_cap].  Returns the
    rescaled weight vector; a zero w is returned unchanged (no direction).
    """
    w = _check_dims(w, dataset)
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        return w.copy()
    u = w / norm
    dots = dataset.X @ u
    vs = [
        VFunction.from_direction(float(d), float(h), float(l), gamma)
        for d, h, l in zip(dots, dataset.b1, dataset.b2)
        if d > 0.0
    ]
    if not vs:
        return np.zeros_like(w)  # objective constant along the ray; eta*=0
    eta, _ = minimize_sum(vs, lambda_cap)
    return eta * u


def _run_alternation(w, dataset, config: DCConfig):
    cap = config.norm_cap if config.reg_mode == "ball" else None
    objs = [objective(w, dataset, config.gamma)]
    phases = ["init"]
    slack = lambda f: 1e-12 * max(1.0, abs(f))
    f_outer = objs[0]
    for _ in range(config.outer_max):
        w_t = dca(w, dataset, config)
        f_t = objective(w_t, dataset, config.gamma)
        if f_t > objs[-1] + slack(objs[-1]):
            # a ridge-regularized DCA step may trade raw fit for penalty;
            # keep the previous iterate so the trace stays monotone
            w_t, f_t = w, objs[-1]
        objs.append(min(f_t, objs[-1]))
        phases.append("dca")

        w_ls = line_search(w_t, dataset, config.gamma, cap)
        f_ls = objective(w_ls, dataset, config.gamma)
        if f_ls > f_t + slack(f_t):
            w_ls, f_ls = w_t, f_t
        objs.append(min(f_ls, objs[-1]))
        phases.append("line_search")

        w = w_ls
        if abs(f_outer - f_ls) <= config.outer_tol * max(1.0, abs(f_outer)):
            break
        f_outer = f_ls
    return w, objs, phases


def train(dataset, config: DCConfig) -> TrainTrace:
    """Full trainer: ridge-based start, then alternating DCA and line search."""
    if len(dataset) == 0:
        raise DataError("cannot train on an empty dataset")
    cap = config.norm_cap if config.reg_mode == "ball" else None
    w0 = initial_weights(dataset, cap)
    w, objs, phases = _run_alternation(w0, dataset, config)

    if config.restarts:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed)))
        scale = max(1.0, float(np.linalg.norm(w0)))
        for _ in range(config.restarts):
            wr = rng.standard_normal(dataset.dim) * scale / math.sqrt(dataset.dim)
            if cap is not None:
                wr = ball_projection(cap)(wr)
            w_alt, objs_alt, phases_alt = _run_alternation(wr, dataset, config)
            if objs_alt[-1] < objs[-1]:
                w, objs, phases = w_alt, objs_alt, phases_alt

    return TrainTrace(objs, phases, LinearModel(w))


def predict_reserve(model, x):
    """Reserve price for one feature vector or a batch: max(0, w.x)."""
    w = model.w if isinstance(model, LinearModel) else np.asarray(model, float)
    x = np.asarray(x, float)
    if x.shape[-1] != w.shape[0]:
        raise ValueError(f"feature dimension {x.shape[-1]} != model dimension {w.shape[0]}")
    return np.maximum(x @ w, 0.0)
