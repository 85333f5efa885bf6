"""Loss and revenue functions for second-price auctions with reserve.

Every function is a pure pointwise evaluation, broadcasts over numpy
arrays, and treats money as float64.  The outcome of one auction is fully
determined by the reserve price ``r`` and the two top bids ``b1 >= b2``:
the winner pays ``max(b2, r)`` when ``r <= b1`` and nothing is sold when
``r > b1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BidPair",
    "revenue",
    "loss",
    "loss_lipschitz_part",
    "loss_jump_part",
    "surrogate_loss",
    "upper_surrogate_loss",
    "convex_surrogate_loss",
    "convex_surrogate_kink",
    "convex_surrogate_slope",
    "dc_u",
    "dc_v",
    "dc_v_subgradient",
]


@dataclass(frozen=True)
class BidPair:
    """Ordered pair of the highest and second-highest bid of one auction."""

    b1: float
    b2: float

    def __post_init__(self):
        if not (math.isfinite(self.b1) and math.isfinite(self.b2)):
            raise ValueError("bids must be finite")
        if not 0.0 <= self.b2 <= self.b1:
            raise ValueError(f"bids must satisfy b1 >= b2 >= 0, got ({self.b1}, {self.b2})")


def _check_gamma(gamma):
    if not np.all(np.asarray(gamma) > 0):
        raise ValueError(f"gamma must be positive, got {gamma}")


def _ramp(r, b1, gamma):
    # Shared by surrogate_loss and dc_u/dc_v so that the decomposition
    # identity u - v == surrogate holds bitwise on the ramp region.
    return (r - (1.0 + gamma) * b1) / gamma


def revenue(r, b1, b2):
    """Seller revenue of one auction: b2 if r < b2, r if b2 <= r <= b1, else 0."""
    r, b1, b2 = np.broadcast_arrays(np.asarray(r, float), b1, b2)
    return np.where(r < b2, b2, np.where(r <= b1, r, 0.0))


def loss(r, b1, b2):
    """Negated revenue; the quantity every learner in this package minimizes."""
    return -revenue(r, b1, b2)


def loss_lipschitz_part(r, b1, b2):
    """The 1-Lipschitz component of the loss (saturates at -b1 past the top bid)."""
    r, b1, b2 = np.broadcast_arrays(np.asarray(r, float), b1, b2)
    return np.where(r < b2, -b2, np.where(r <= b1, -r, -b1))


def loss_jump_part(r, b1, b2):
    """The discontinuous component of the loss: the b1-sized jump when r > b1."""
    r, b1, b2 = np.broadcast_arrays(np.asarray(r, float), b1, b2)
    return np.where(r > b1, b1, 0.0)


def surrogate_loss(r, b1, b2, gamma):
    """Continuous lower bound on the loss with a linear ramp of slope 1/gamma.

    Matches the true loss everywhere except on ``(b1, (1+gamma)*b1]`` where
    the jump back to zero is replaced by the ramp.  Positive homogeneous:
    scaling r and both bids by ``eta > 0`` scales the value by ``eta``.
    """
    _check_gamma(gamma)
    r, b1, b2 = np.broadcast_arrays(np.asarray(r, float), b1, b2)
    ramp = _ramp(r, b1, gamma)
    return np.where(
        r <= b2, -b2, np.where(r <= b1, -r, np.where(r <= (1.0 + gamma) * b1, ramp, 0.0))
    )


def upper_surrogate_loss(r, b1, b2, gamma):
    """Continuous upper bound on the loss, ramping up over ``((1-gamma)*b1, b1]``.

    Exposed for evaluation and comparison only; it is a loose bound near the
    loss minimum and no trainer in this package uses it.  Requires
    ``gamma in (0, 1)``.  When ``b1 == b2`` the slope max-term resolves to
    ``(1-gamma)/gamma`` and the middle branch is empty.
    """
    g = np.asarray(gamma)
    if not np.all((g > 0.0) & (g < 1.0)):
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    r, b1, b2 = np.broadcast_arrays(np.asarray(r, float), b1, b2)
    gap = b1 - b2
    ratio = np.where(gap > 0, b2 / np.where(gap > 0, gap, 1.0), -np.inf)
    slope = np.maximum((1.0 - gamma) / gamma, ratio)
    knee = np.maximum((1.0 - gamma) * b1, b2)
    return np.where(
        r <= b2, -b2, np.where(r <= knee, -r, np.where(r <= b1, slope * (r - b1), 0.0))
    )


def convex_surrogate_kink(b1, b2, alpha):
    """Location ``b1 + alpha*(b2 - b1)`` where the convex surrogate stops tracking -r."""
    b1, b2 = np.broadcast_arrays(np.asarray(b1, float), b2)
    return b1 + alpha * (b2 - b1)


def convex_surrogate_slope(b1, b2, alpha):
    """Ascending slope of the convex surrogate, with the tie denominator floored."""
    b1, b2 = np.broadcast_arrays(np.asarray(b1, float), b2)
    denom = np.maximum(alpha * (b1 - b2), 1e-9 * np.maximum(1.0, b1))
    return ((1.0 - alpha) * b1 + alpha * b2) / denom


def convex_surrogate_loss(r, b1, b2, alpha):
    """Piecewise-linear convex upper bound on the loss (the inconsistent baseline).

    Equal to ``-r`` left of the kink and rising with a fixed positive slope
    through zero at ``b1``.  ``alpha`` in (0, 1] controls the kink position.
    """
    a = np.asarray(alpha)
    if not np.all((a > 0.0) & (a <= 1.0)):
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    r, b1, b2 = np.broadcast_arrays(np.asarray(r, float), b1, b2)
    kink = convex_surrogate_kink(b1, b2, alpha)
    slope = convex_surrogate_slope(b1, b2, alpha)
    return np.where(r < kink, -r, slope * (r - b1))


def dc_u(r, b1, b2, gamma):
    """First convex piece of the surrogate's difference-of-convex split.

    ``dc_u - dc_v == surrogate_loss`` pointwise, and
    ``dc_u(r) == max(-r, (r - (1+gamma)*b1)/gamma)``.
    """
    _check_gamma(gamma)
    r, b1, b2 = np.broadcast_arrays(np.asarray(r, float), b1, b2)
    return np.where(r < b1, -r, _ramp(r, b1, gamma))


def dc_v(r, b1, b2, gamma):
    """Second convex piece of the difference-of-convex split (the part DCA linearizes)."""
    _check_gamma(gamma)
    r, b1, b2 = np.broadcast_arrays(np.asarray(r, float), b1, b2)
    return np.where(r < b2, b2 - r, np.where(r > (1.0 + gamma) * b1, _ramp(r, b1, gamma), 0.0))


def dc_v_subgradient(r, b1, b2, gamma):
    """A subgradient of ``dc_v`` in r: -1, 0 or 1/gamma, flat value at the kinks."""
    _check_gamma(gamma)
    r, b1, b2 = np.broadcast_arrays(np.asarray(r, float), b1, b2)
    return np.where(r < b2, -1.0, np.where(r <= (1.0 + gamma) * b1, 0.0, 1.0 / gamma))
