"""Convex optimization engines shared across the package.

``subgradient_descent`` serves any convex objective: steps follow the
classic c/sqrt(t) schedule along the normalized subgradient direction,
with best-iterate tracking; the base step c is scaled once by the starting
point's norm so the same ``step_base`` works across data scales.

``hinge_qp`` solves the specific quadratic program
``min_w  lam*||w||^2 + q.w + C * sum_i max(t_i - w.x_i, 0)``
exactly via dual coordinate ascent (the liblinear scheme): each dual
coordinate has a closed-form clipped update, and the primal solution is
recovered from the maintained vector ``X^T mu - q``.  The DC trainer's
linearized inner step is exactly of this form.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .errors import TrainingError

__all__ = ["subgradient_descent", "ball_projection", "hinge_qp"]


def ball_projection(radius: float):
    """Euclidean projection onto the ball of the given radius."""

    def project(w):
        n = float(np.linalg.norm(w))
        if n > radius:
            return w * (radius / n)
        return w

    return project


def subgradient_descent(objective, subgradient, w0, *, budget, step_base=0.5,
                        tol=1e-8, project=None):
    """Minimize a convex function; returns ``(w_best, f_best)``.

    The best iterate (including the start) is tracked, so the result never
    has a worse objective than ``w0``.  Stops early when a check window
    passes without relative improvement better than ``tol``.  Raises
    TrainingError if the objective turns non-finite.
    """
    w = np.array(w0, dtype=float)
    if project is not None:
        w = project(w)
    best_f = float(objective(w))
    if not math.isfinite(best_f):
        raise TrainingError("objective non-finite at the starting point")
    best_w = w.copy()

    c = step_base * max(1.0, float(np.linalg.norm(w)))
    check = max(50, budget // 20)
    window_best = best_f

    for t in range(1, budget + 1):
        g = np.asarray(subgradient(w), dtype=float)
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            break  # a true subgradient of zero certifies optimality
        w = w - (c / math.sqrt(t)) * (g / gn)
        if project is not None:
            w = project(w)
        f = float(objective(w))
        if not math.isfinite(f):
            raise TrainingError("objective diverged to a non-finite value")
        if f < best_f:
            best_f = f
            best_w = w.copy()
        if t % check == 0:
            if window_best - best_f <= tol * max(1.0, abs(best_f)):
                break
            window_best = best_f

    return best_w, best_f


@numba.njit(cache=True)
def _hinge_qp_epochs(X, targets, z, mu, xsq, cap, lam, tol_abs, max_epochs):
    m, d = X.shape
    epochs = 0
    for _ in range(max_epochs):
        epochs += 1
        worst = 0.0
        for i in range(m):
            if xsq[i] == 0.0:
                continue
            dot = 0.0
            for j in range(d):
                dot += X[i, j] * z[j]
            g = targets[i] - dot / (2.0 * lam)  # dual ascent direction
            if mu[i] <= 0.0:
                pg = g if g > 0.0 else 0.0
            elif mu[i] >= cap:
                pg = g if g < 0.0 else 0.0
            else:
                pg = g
            if pg != 0.0:
                if abs(pg) > worst:
                    worst = abs(pg)
                nxt = mu[i] + 2.0 * lam * g / xsq[i]
                if nxt < 0.0:
                    nxt = 0.0
                elif nxt > cap:
                    nxt = cap
                step = nxt - mu[i]
                if step != 0.0:
                    mu[i] = nxt
                    for j in range(d):
                        z[j] += step * X[i, j]
        if worst <= tol_abs:
            break
    return epochs


def hinge_qp(X, targets, q, cap, lam, w_start=None, tol=1e-9, max_epochs=2000):
    """Solve ``min_w lam*||w||^2 + q.w + cap * sum_i max(t_i - w.x_i, 0)``.

    Dual coordinate ascent over ``0 <= mu_i <= cap`` with the primal
    recovered as ``(X^T mu - q) / (2*lam)``.  ``w_start`` seeds the duals
    through complementary slackness, which makes repeated nearby solves
    cheap.  Requires ``lam > 0``.
    """
    X = np.ascontiguousarray(X, dtype=float)
    targets = np.asarray(targets, dtype=float)
    q = np.asarray(q, dtype=float)
    if not lam > 0:
        raise TrainingError("hinge_qp needs a positive quadratic weight")
    if w_start is None:
        mu = np.zeros(len(targets))
    else:
        mu = np.where(X @ np.asarray(w_start, float) < targets, float(cap), 0.0)
    z = X.T @ mu - q
    xsq = np.einsum("ij,ij->i", X, X)
    scale = max(1.0, float(np.max(np.abs(targets))) if targets.size else 1.0)
    _hinge_qp_epochs(X, targets, z, mu, xsq, float(cap), float(lam),
                     tol * scale, int(max_epochs))
    return z / (2.0 * lam)
