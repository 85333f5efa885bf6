"""The three comparison strategies plus the revenue normalization anchors.

Ridge regresses the top bid and prices at the prediction; the convex
surrogate learner minimizes the piecewise-linear upper bound; the
feature-free optimizer picks the single best reserve on the training log.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .losses import convex_surrogate_kink, convex_surrogate_loss, convex_surrogate_slope
from .optim import ball_projection, subgradient_descent
from .vsum import empirical_reserve

__all__ = [
    "LinearModel",
    "RidgeConfig",
    "CvxConfig",
    "ridge_fit",
    "cvx_surrogate_fit",
    "no_feature_fit",
    "anchor_revenues",
    "initial_weights",
]


@dataclass(frozen=True)
class LinearModel:
    """Linear reserve hypothesis; the last weight multiplies the offset coordinate."""

    w: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        if self.w.ndim != 1 or not np.all(np.isfinite(self.w)):
            raise ConfigError("model weights must be a finite 1-D vector")

    def raw_scores(self, X):
        X = np.asarray(X, float)
        if X.shape[-1] != self.w.shape[0]:
            raise ValueError(f"feature dimension {X.shape[-1]} != model dimension {self.w.shape[0]}")
        return X @ self.w

    def predict(self, X):
        """Reserve prices for feature rows: raw scores clamped at zero."""
        return np.maximum(self.raw_scores(X), 0.0)


@dataclass(frozen=True)
class RidgeConfig:
    ridge_lambda: float = 1e-3

    def __post_init__(self):
        if not (np.isfinite(self.ridge_lambda) and self.ridge_lambda >= 0):
            raise ConfigError(f"ridge_lambda must be finite and >= 0, got {self.ridge_lambda}")


@dataclass(frozen=True)
class CvxConfig:
    """Convex-surrogate learner settings; regularize by penalty or norm cap."""

    alpha: float = 0.5
    reg_mode: str = "ridge"
    reg_lambda: float = 1e-3
    norm_cap: float | None = None
    budget: int = 2000
    step_base: float = 0.5
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.reg_mode not in ("ridge", "ball"):
            raise ConfigError(f"reg_mode must be 'ridge' or 'ball', got {self.reg_mode!r}")
        if self.reg_mode == "ridge" and not self.reg_lambda >= 0:
            raise ConfigError("reg_lambda must be non-negative")
        if self.reg_mode == "ball" and not (self.norm_cap and self.norm_cap > 0):
            raise ConfigError("ball mode needs a positive norm_cap")
        if self.budget < 1 or self.step_base <= 0 or self.tol <= 0:
            raise ConfigError("budget, step_base and tol must be positive")


def ridge_fit(dataset, ridge_lambda: float) -> LinearModel:
    """Solve the regularized normal equations for the top bid.

    A singular system at ridge_lambda=0 falls back to 1e-10 with a warning.
    """
    if len(dataset) == 0:
        raise DataError("cannot fit on an empty dataset")
    if ridge_lambda < 0:
        raise ConfigError("ridge_lambda must be non-negative")
    X = dataset.X
    rhs = X.T @ dataset.b1
    gram = X.T @ X

    def attempt(lam):
        w = np.linalg.solve(gram + lam * np.eye(dataset.dim), rhs)
        resid = gram @ w + lam * w - rhs
        rel = float(np.linalg.norm(resid)) / max(1.0, float(np.linalg.norm(rhs)))
        return w, rel

    lam = float(ridge_lambda)
    try:
        w, rel = attempt(lam)
    except np.linalg.LinAlgError:
        w, rel = None, np.inf
    if (w is None or rel > 1e-8 or not np.all(np.isfinite(w))) and lam == 0.0:
        warnings.warn("singular normal equations at ridge_lambda=0; refitting with 1e-10")
        w, rel = attempt(1e-10)
    if w is None or not np.all(np.isfinite(w)):
        raise DataError("normal equations unsolvable for this dataset")
    return LinearModel(w)


def cvx_surrogate_fit(dataset, config: CvxConfig) -> LinearModel:
    """Minimize the summed convex surrogate (plus regularizer) by subgradient descent."""
    if len(dataset) == 0:
        raise DataError("cannot fit on an empty dataset")
    X, b1, b2 = dataset.X, dataset.b1, dataset.b2
    alpha = config.alpha
    kink = convex_surrogate_kink(b1, b2, alpha)
    slope = convex_surrogate_slope(b1, b2, alpha)
    ridge = config.reg_lambda if config.reg_mode == "ridge" else 0.0

    def obj(w):
        f = float(np.sum(convex_surrogate_loss(X @ w, b1, b2, alpha)))
        return f + ridge * float(w @ w)

    def grad(w):
        r = X @ w
        s = np.where(r <= kink, -1.0, slope)  # left slope at the kink
        g = X.T @ s
        if ridge:
            g = g + 2.0 * ridge * w
        return g

    project = ball_projection(config.norm_cap) if config.reg_mode == "ball" else None
    w0 = initial_weights(dataset, config.norm_cap if config.reg_mode == "ball" else None)
    w, _ = subgradient_descent(
        obj, grad, w0, budget=config.budget, step_base=config.step_base,
        tol=config.tol, project=project,
    )
    return LinearModel(w)


def no_feature_fit(dataset, lambda_cap=None) -> float:
    """Best constant reserve on the training log (features ignored)."""
    if len(dataset) == 0:
        raise DataError("cannot fit on an empty dataset")
    r_star, _ = empirical_reserve(dataset.b1, dataset.b2, lambda_cap)
    return r_star


def anchor_revenues(dataset):
    """Normalization anchors: mean revenue with no reserve, and at the top bid."""
    if len(dataset) == 0:
        raise DataError("anchors need a non-empty dataset")
    return float(dataset.b2.mean()), float(dataset.b1.mean())


def initial_weights(dataset, norm_cap=None) -> np.ndarray:
    """Shared starting point for the iterative learners.

    A lightly regularized ridge fit of the top bid, scaled into the norm
    ball when one applies; if the fit fails the fallback is a pure offset
    model at the best constant reserve.
    """
    try:
        w = ridge_fit(dataset, 1e-3).w
        if not np.all(np.isfinite(w)):
            raise DataError("non-finite ridge solution")
    except (DataError, np.linalg.LinAlgError):
        w = np.zeros(dataset.dim)
        w[-1], _ = empirical_reserve(dataset.b1, dataset.b2, norm_cap)
    if norm_cap is not None:
        n = float(np.linalg.norm(w))
        if n > norm_cap:
            w = w * (norm_cap / n)
    return w
