"""Sweep minimizer vs the quadratic brute-force oracle."""

import numpy as np
import pytest

from reserveopt.losses import revenue, surrogate_loss
from reserveopt.vsum import (
    VFunction,
    empirical_reserve,
    minimize_sum,
    minimize_sum_bruteforce,
    sweep_values,
)


def random_vfunctions(rng, m, gamma):
    """Bid pairs from a uniform/lognormal mixture, as surrogate v-functions."""
    if rng.random() < 0.5:
        a = rng.uniform(0.0, 10.0, size=m)
        b = rng.uniform(0.0, 10.0, size=m)
    else:
        a = rng.lognormal(0.5, 0.8, size=m)
        b = rng.lognormal(0.5, 0.8, size=m)
    hi, lo = np.maximum(a, b), np.minimum(a, b)
    return [VFunction.from_surrogate(h, l, gamma) for h, l in zip(hi, lo)]


def test_vfunction_coefficients_and_values():
    v = VFunction(b1=2.0, b2=1.0, eta=0.5, a3=2.0)
    assert v.a1 == 1.0 and v.a2 == 1.0 and v.a4 == 6.0
    assert v.value(2.0) == -2.0
    assert v.value(3.01) == 0.0
    assert v.value(0.5) == -1.0
    # continuity at the three boundary points
    for x in (v.b2, v.b1, (1 + v.eta) * v.b1):
        assert v.value(x - 1e-10) == pytest.approx(float(v.value(x + 1e-10)), abs=1e-8)


def test_vfunction_validation():
    with pytest.raises(ValueError):
        VFunction(b1=1.0, b2=2.0, eta=0.5, a3=1.0)
    with pytest.raises(ValueError):
        VFunction(b1=2.0, b2=1.0, eta=0.0, a3=1.0)
    with pytest.raises(ValueError):
        VFunction(b1=2.0, b2=1.0, eta=0.5, a3=0.0)
    with pytest.raises(ValueError):
        VFunction.from_surrogate(2.0, 1.0, 0.0)


def test_from_surrogate_matches_loss():
    v = VFunction.from_surrogate(10.0, 4.0, 0.1)
    assert (v.a1, v.a2, v.a3, v.a4) == (4.0, 1.0, 10.0, pytest.approx(110.0))
    assert v.value(7.0) == -7.0 == surrogate_loss(7.0, 10, 4, 0.1)
    assert float(v.value(10.5)) == pytest.approx(-5.0)
    rs = np.linspace(-1, 13, 200)
    np.testing.assert_allclose(v.value(rs), surrogate_loss(rs, 10, 4, 0.1), atol=1e-12)


def test_from_direction_homogeneity_identity():
    v = VFunction.from_direction(2.0, 10.0, 4.0, 0.1)
    assert float(v.value(5.0)) == pytest.approx(float(surrogate_loss(10.0, 10, 4, 0.1)))
    etas = np.linspace(0.0, 8.0, 300)
    np.testing.assert_allclose(
        v.value(etas), surrogate_loss(etas * 2.0, 10, 4, 0.1), rtol=1e-12, atol=1e-12
    )
    assert VFunction.from_direction(-1.0, 10.0, 4.0, 0.1) is None
    assert VFunction.from_direction(0.0, 10.0, 4.0, 0.1) is None

    ident = VFunction.from_direction(1.0, 10.0, 4.0, 0.1)
    ref = VFunction.from_surrogate(10.0, 4.0, 0.1)
    np.testing.assert_allclose(ident.value(etas), ref.value(etas), atol=1e-12)


def test_minimize_sum_single():
    vs = [VFunction.from_surrogate(2.0, 1.0, 0.5)]
    assert minimize_sum(vs) == (2.0, -2.0)
    assert minimize_sum_bruteforce(vs) == (2.0, -2.0)


def test_minimize_sum_flat_tie_breaks_low():
    vs = [VFunction.from_surrogate(1.0, 0.0, 1.0), VFunction.from_surrogate(2.0, 0.0, 1.0)]
    # F is constant -2 on [1, 2]; smallest minimizer wins
    r, f = minimize_sum(vs)
    assert (r, f) == (1.0, -2.0)
    assert minimize_sum_bruteforce(vs) == (1.0, -2.0)


def test_minimize_sum_with_cap():
    vs = [VFunction.from_surrogate(1.0, 0.0, 1.0), VFunction.from_surrogate(2.0, 0.0, 1.0)]
    # cap below both top bids: optimum pinned at the cap, F(0.5) = -0.5 - 0.5
    r, f = minimize_sum(vs, lambda_cap=0.5)
    assert r == 0.5
    assert f == pytest.approx(-1.0)
    assert minimize_sum_bruteforce(vs, lambda_cap=0.5) == (0.5, pytest.approx(-1.0))


def test_minimize_sum_errors():
    with pytest.raises(ValueError):
        minimize_sum([])
    with pytest.raises(ValueError):
        minimize_sum_bruteforce([])
    vs = [VFunction.from_surrogate(2.0, 1.0, 0.5)]
    with pytest.raises(ValueError):
        minimize_sum(vs, lambda_cap=0.0)


def test_oracle_equivalence_random_instances():
    rng = np.random.default_rng(7)
    b1_all = []
    for trial in range(60):
        m = int(rng.integers(1, 80))
        gamma = float(rng.choice([1e-3, 0.1, 1.0]))
        vs = random_vfunctions(rng, m, gamma)
        cap = None if rng.random() < 0.5 else float(rng.uniform(0.1, 12.0))
        r_fast, f_fast = minimize_sum(vs, cap)
        r_slow, f_slow = minimize_sum_bruteforce(vs, cap)
        scale = max(v.b1 for v in vs)
        assert abs(f_fast - f_slow) <= 1e-9 * m * max(1.0, scale)
        assert r_fast == r_slow
        b1s = {v.b1 for v in vs}
        assert r_fast in b1s or (cap is not None and r_fast == cap)
        b1_all.append(scale)


def test_cap_below_every_top_bid_returns_cap():
    rng = np.random.default_rng(3)
    vs = random_vfunctions(rng, 40, 0.1)
    cap = 0.5 * min(v.b1 for v in vs)
    if cap <= 0:
        cap = 1e-3
    r, _ = minimize_sum(vs, lambda_cap=cap)
    assert r == cap


def test_sweep_values_match_direct_summation():
    rng = np.random.default_rng(11)
    for gamma in (1e-3, 0.1, 1.0):
        vs = random_vfunctions(rng, 120, gamma)
        points, values = sweep_values(vs)
        assert np.all(np.diff(points) >= 0)
        direct = np.zeros_like(points)
        for v in vs:
            direct += v.value(points)
        # tolerance scaled by the coefficient magnitudes the sweep accumulates
        scale = sum(v.a1 for v in vs) + sum(abs(v.a4) for v in vs)
        np.testing.assert_allclose(values, direct, atol=1e-9 * max(1.0, scale))


def test_empirical_reserve_examples():
    assert empirical_reserve([5.0], [2.0]) == (5.0, 5.0)
    # tie between r=1 (1+1) and r=2 (0+2): smallest wins
    assert empirical_reserve([1.0, 2.0], [0.0, 0.0]) == (1.0, 2.0)
    # r=1 pays 1+1=2; r=2 kills the first auction (reserve above its top bid)
    # and pays 2 on the second: tie again, smallest candidate wins
    assert empirical_reserve([1.0, 2.0], [0.9, 0.0]) == (1.0, 2.0)


def test_empirical_reserve_matches_bruteforce():
    rng = np.random.default_rng(5)
    for _ in range(40):
        m = int(rng.integers(1, 60))
        a = rng.uniform(0, 10, m)
        b = rng.uniform(0, 10, m)
        b1, b2 = np.maximum(a, b), np.minimum(a, b)
        cap = None if rng.random() < 0.5 else float(rng.uniform(0.5, 12.0))
        r_fast, rev_fast = empirical_reserve(b1, b2, cap)

        cand = np.unique(b1)
        if cap is not None:
            cand = np.append(cand[cand <= cap], cap)
        best_r, best_rev = None, -np.inf
        for r in cand:
            total = float(np.sum(revenue(r, b1, b2)))
            if total > best_rev:
                best_r, best_rev = float(r), total
        assert r_fast == best_r
        assert rev_fast == pytest.approx(best_rev, abs=1e-9 * m)


def test_empirical_reserve_beats_trivial_choices():
    rng = np.random.default_rng(19)
    a = rng.lognormal(0.3, 0.7, 200)
    b = rng.lognormal(0.3, 0.7, 200)
    b1, b2 = np.maximum(a, b), np.minimum(a, b)
    _, rev = empirical_reserve(b1, b2)
    assert rev >= float(np.sum(revenue(0.0, b1, b2))) - 1e-9
    for r in b1[:50]:
        assert rev >= float(np.sum(revenue(r, b1, b2))) - 1e-9


def test_empirical_reserve_errors():
    with pytest.raises(ValueError):
        empirical_reserve([], [])
