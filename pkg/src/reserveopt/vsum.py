"""Exact minimization of sums of piecewise-linear valley-shaped losses.

A :class:`VFunction` is flat at ``-a1`` up to the second bid, decreases
linearly to its minimum at the top bid, increases linearly back to zero at
``(1+eta)*b1`` and stays zero after that.  The auction surrogate loss has
this shape, as does its restriction to any ray through feature space, so
one solver covers both the feature-free optimizer and the trainer's line
search.

``minimize_sum`` runs the boundary-point sweep: sort the 3m points where
some summand changes linear piece, then update four running coefficients
in constant time per point, so each ``F(n_j)`` costs O(1) after an
O(m log m) sort.  ``minimize_sum_bruteforce`` is the quadratic reference
used by the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "VFunction",
    "sweep_values",
    "minimize_sum",
    "minimize_sum_bruteforce",
    "empirical_reserve",
]


@dataclass(frozen=True)
class VFunction:
    """One valley-shaped summand, parametrized by its bids, width and up-slope.

    The four piece coefficients are tied together so the curve is continuous:
    ``a1 = eta*a3*b2`` (flat level), ``a2 = eta*a3`` (descending slope) and
    ``a4 = a3*(1+eta)*b1`` (intercept of the ascending piece).
    """

    b1: float
    b2: float
    eta: float
    a3: float

    def __post_init__(self):
        if not (math.isfinite(self.b1) and math.isfinite(self.b2)):
            raise ValueError("bids must be finite")
        if not 0.0 <= self.b2 <= self.b1:
            raise ValueError(f"need b1 >= b2 >= 0, got ({self.b1}, {self.b2})")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.a3 > 0:
            raise ValueError(f"a3 must be positive, got {self.a3}")

    @property
    def a1(self) -> float:
        return self.eta * self.a3 * self.b2

    @property
    def a2(self) -> float:
        return self.eta * self.a3

    @property
    def a4(self) -> float:
        return self.a3 * (1.0 + self.eta) * self.b1

    @classmethod
    def from_surrogate(cls, b1: float, b2: float, gamma: float) -> "VFunction":
        """The surrogate loss of one bid pair as a VFunction (eta=gamma, a3=1/gamma)."""
        if not gamma > 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        return cls(b1=float(b1), b2=float(b2), eta=gamma, a3=1.0 / gamma)

    @classmethod
    def from_direction(cls, dot: float, b1: float, b2: float, gamma: float) -> "VFunction | None":
        """Restriction of one record's surrogate loss to a ray through feature space.

        For a unit direction u with ``dot = u . x > 0``, the map
        ``eta -> surrogate_loss(eta*dot, b1, b2)`` is again valley-shaped, with
        boundary points divided by ``dot``.  Returns None for ``dot <= 0``: the
        record's loss is then constant ``-b2`` along the ray and drops out of
        the minimization.
        """
        if not gamma > 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        if dot <= 0.0:
            return None
        return cls(b1=float(b1) / dot, b2=float(b2) / dot, eta=gamma, a3=dot / gamma)

    def value(self, r):
        """Evaluate the curve at reserve r (scalar or array)."""
        r = np.asarray(r, float)
        return np.where(
            r <= self.b2,
            -self.a1,
            np.where(
                r <= self.b1,
                -self.a2 * r,
                np.where(r <= (1.0 + self.eta) * self.b1, self.a3 * r - self.a4, 0.0),
            ),
        )


def _coefficient_arrays(vs):
    b1 = np.array([v.b1 for v in vs], float)
    b2 = np.array([v.b2 for v in vs], float)
    eta = np.array([v.eta for v in vs], float)
    a3 = np.array([v.a3 for v in vs], float)
    a1 = eta * a3 * b2
    a2 = eta * a3
    a4 = a3 * (1.0 + eta) * b1
    return b1, b2, eta, a1, a2, a3, a4


def _sum_at(r, arrays):
    """Direct summation of all piece values at a single reserve."""
    b1, b2, eta, a1, a2, a3, a4 = arrays
    vals = np.where(
        r <= b2, -a1,
        np.where(r <= b1, -a2 * r, np.where(r <= (1.0 + eta) * b1, a3 * r - a4, 0.0)),
    )
    return float(vals.sum())


def _sweep(vs):
    """Sorted boundary points, F at each point, and post-event coefficient states.

    Events are sorted by (value, kind) with kind ordering b2 < b1 < (1+eta)b1
    so coefficient updates at duplicated values are deterministic.  The state
    *before* event j is valid for evaluating F at points[j]; the returned
    cumulative state *after* event j is valid on (points[j], points[j+1]].
    """
    b1, b2, eta, a1, a2, a3, a4 = _coefficient_arrays(vs)
    m = b1.size
    zeros = np.zeros(m)

    points = np.concatenate([b2, b1, (1.0 + eta) * b1])
    kinds = np.repeat(np.arange(3), m)
    # Coefficient deltas applied when the sweep crosses each boundary point:
    # leaving the flat piece, leaving the descending piece, reaching zero.
    d1 = np.concatenate([a1, zeros, zeros])
    d2 = np.concatenate([-a2, a2, zeros])
    d3 = np.concatenate([zeros, a3, -a3])
    d4 = np.concatenate([zeros, -a4, a4])

    order = np.lexsort((kinds, points))
    points = points[order]
    kinds = kinds[order]

    c1 = np.cumsum(d1[order]) - a1.sum()
    c2 = np.cumsum(d2[order])
    c3 = np.cumsum(d3[order])
    c4 = np.cumsum(d4[order])

    def before(c, init):
        out = np.empty_like(c)
        out[0] = init
        out[1:] = c[:-1]
        return out

    values = (
        before(c1, -a1.sum())
        + before(c4, 0.0)
        + (before(c2, 0.0) + before(c3, 0.0)) * points
    )
    return points, kinds, values, (c1, c2, c3, c4)


def sweep_values(vs):
    """All 3m sorted boundary points of the sum and F evaluated at each."""
    if not vs:
        raise ValueError("need at least one VFunction")
    points, _, values, _ = _sweep(vs)
    return points, values


def _check_cap(lambda_cap):
    if lambda_cap is not None and not lambda_cap > 0:
        raise ValueError(f"lambda_cap must be positive, got {lambda_cap}")


def _tie_window(m, f_min):
    # Two different summation orders of the same F perturb exact ties by
    # O(m * eps * |F|); break ties inside that noise band toward small r so
    # the sweep and the brute-force reference pick the same minimizer.
    return 64.0 * np.finfo(float).eps * m * max(1.0, abs(f_min))


def _pick_smallest(cand_r, cand_f, m):
    f_min = float(np.min(cand_f))
    ok = cand_f <= f_min + _tie_window(m, f_min)
    j = int(np.argmax(ok))  # candidates ordered by r: first hit is smallest
    return float(cand_r[j]), float(cand_f[j])


def minimize_sum(vs, lambda_cap=None):
    """Minimize ``F(r) = sum_i vs[i](r)`` over r in [0, inf) or [0, lambda_cap].

    Returns ``(r_star, f_star)``.  F is evaluated at every boundary point
    (plus the cap) but the reported minimizer is always a top bid or the
    cap, which is where the minimum provably lives; near-equal values tie
    toward the smallest reserve.  Cost is one sort plus constant work per
    boundary point.
    """
    if not vs:
        raise ValueError("need at least one VFunction")
    _check_cap(lambda_cap)
    m = len(vs)

    points, kinds, values, (c1, c2, c3, c4) = _sweep(vs)
    eligible = kinds == 1
    if lambda_cap is None:
        f_min = float(np.min(values))
        cand_r = points[eligible]
        cand_f = values[eligible]
    else:
        cap = float(lambda_cap)
        k = int(np.searchsorted(points, cap, side="right"))
        if k == 0:
            # cap sits left of every boundary point: every summand still flat
            f_cap = float(-sum(v.a1 for v in vs))
        else:
            f_cap = float(c1[k - 1] + c4[k - 1] + (c2[k - 1] + c3[k - 1]) * cap)
        f_min = float(min(np.min(values[:k]), f_cap)) if k else f_cap
        keep = eligible[:k]
        cand_r = np.append(points[:k][keep], cap)
        cand_f = np.append(values[:k][keep], f_cap)

    ok = cand_f <= f_min + _tie_window(m, f_min)
    j = int(np.argmax(ok)) if ok.any() else int(np.argmin(cand_f))
    return float(cand_r[j]), float(cand_f[j])


def minimize_sum_bruteforce(vs, lambda_cap=None):
    """Quadratic-cost reference minimizer: directly sum F over {b1_i} and the cap."""
    if not vs:
        raise ValueError("need at least one VFunction")
    _check_cap(lambda_cap)

    cand = np.unique(np.array([v.b1 for v in vs], float))
    if lambda_cap is not None:
        cap = float(lambda_cap)
        cand = np.append(cand[cand <= cap], cap)

    arrays = _coefficient_arrays(vs)
    values = np.array([_sum_at(float(r), arrays) for r in cand])
    return _pick_smallest(cand, values, len(vs))


def empirical_reserve(b1, b2, lambda_cap=None):
    """Best single reserve for a bid log: argmax of summed true revenue.

    Candidates are the top bids (and the cap); sorting plus prefix sums give
    O(m log m) total cost.  Returns ``(r_star, revenue_sum)`` with ties
    broken toward the smallest reserve.
    """
    b1 = np.asarray(b1, float)
    b2 = np.asarray(b2, float)
    if b1.size == 0:
        raise ValueError("need at least one bid pair")
    _check_cap(lambda_cap)

    cand = np.unique(b1)
    if lambda_cap is not None:
        cap = float(lambda_cap)
        cand = np.append(cand[cand <= cap], cap)

    b1s = np.sort(b1)
    b2s = np.sort(b2)
    csum2 = np.concatenate(([0.0], np.cumsum(b2s)))

    n_b2_le = np.searchsorted(b2s, cand, side="right")
    n_b1_lt = np.searchsorted(b1s, cand, side="left")
    sum_b2_above = csum2[-1] - csum2[n_b2_le]
    paying = n_b2_le - n_b1_lt
    revs = sum_b2_above + cand * paying

    r_star, f_star = _pick_smallest(cand, -revs, b1.size)
    return r_star, -f_star
