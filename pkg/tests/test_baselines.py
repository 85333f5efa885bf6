"""Ridge, convex-surrogate and feature-free baselines against closed forms."""

import numpy as np
import pytest
from conftest import make_dataset, offset_only_dataset, random_bids, random_feature_dataset

from reserveopt.baselines import (
    CvxConfig,
    LinearModel,
    anchor_revenues,
    cvx_surrogate_fit,
    initial_weights,
    no_feature_fit,
    ridge_fit,
)
from reserveopt.errors import ConfigError, DataError
from reserveopt.losses import convex_surrogate_loss
from reserveopt.vsum import empirical_reserve


def test_linear_model_validation():
    m = LinearModel(np.array([1.0, 2.0]))
    np.testing.assert_allclose(m.predict(np.array([[1.0, 1.0], [-5.0, 1.0]])), [3.0, 0.0])
    with pytest.raises(ConfigError):
        LinearModel(np.array([np.nan, 1.0]))
    with pytest.raises(ValueError):
        m.predict(np.ones((2, 3)))


def test_ridge_recovers_exact_linear_bids():
    rng = np.random.default_rng(0)
    F = rng.standard_normal((50, 4))
    w_true = np.array([1.5, -2.0, 0.5, 3.0, 1.0])
    X = np.hstack([F, np.ones((50, 1))])
    b1 = X @ w_true + 10.0  # keep bids positive
    w_true_shift = w_true.copy()
    w_true_shift[-1] += 10.0
    ds = make_dataset(F, b1, b1 * 0.5)
    model = ridge_fit(ds, 0.0)
    np.testing.assert_allclose(model.w, w_true_shift, atol=1e-8)


def test_ridge_huge_lambda_shrinks_to_zero():
    rng = np.random.default_rng(1)
    ds = random_feature_dataset(rng, 40, 3)
    w = ridge_fit(ds, 1e12).w
    assert np.linalg.norm(w) < 1e-6


def test_ridge_two_point_closed_form():
    # offset-only: (m + lambda) w = sum(b1) -> w = 8 / 2.5
    ds = offset_only_dataset([3.0, 5.0], [1.0, 2.0])
    assert ridge_fit(ds, 0.5).w[0] == pytest.approx(8.0 / 2.5, rel=1e-12)

    # two points, one feature plus offset, lambda=0: exact interpolation
    ds2 = make_dataset([[1.0], [2.0]], b1=[1.0, 3.0], b2=[0.5, 1.0])
    np.testing.assert_allclose(ridge_fit(ds2, 0.0).w, [2.0, -1.0], atol=1e-10)


def test_ridge_singular_falls_back_with_warning():
    # duplicated feature column makes the gram matrix singular at lambda=0
    F = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    ds = make_dataset(F, b1=[1.0, 2.0, 3.0], b2=[0.0, 0.0, 0.0])
    with pytest.warns(UserWarning):
        model = ridge_fit(ds, 0.0)
    assert np.all(np.isfinite(model.w))
    with pytest.raises(ConfigError):
        ridge_fit(ds, -1.0)
    with pytest.raises(DataError):
        ridge_fit(offset_only_dataset([], []), 1.0)


def test_ridge_normal_equation_residual():
    rng = np.random.default_rng(2)
    for lam in (0.0, 1e-3, 1.0, 50.0):
        ds = random_feature_dataset(rng, 60, 5)
        w = ridge_fit(ds, lam).w
        lhs = ds.X.T @ ds.X @ w + lam * w
        rhs = ds.X.T @ ds.b1
        assert np.linalg.norm(lhs - rhs) <= 1e-8 * max(1.0, np.linalg.norm(rhs))


def test_cvx_config_validation():
    CvxConfig()
    with pytest.raises(ConfigError):
        CvxConfig(alpha=0.0)
    with pytest.raises(ConfigError):
        CvxConfig(alpha=1.2)
    with pytest.raises(ConfigError):
        CvxConfig(reg_mode="ball")  # needs a cap
    with pytest.raises(ConfigError):
        CvxConfig(budget=0)


def test_cvx_matches_1d_grid_oracle():
    rng = np.random.default_rng(4)
    b1, b2 = random_bids(rng, 30)
    ds = offset_only_dataset(b1, b2)
    alpha = 0.5
    cfg = CvxConfig(alpha=alpha, reg_mode="ball", norm_cap=float(b1.max() * 1.5),
                    budget=6000, step_base=0.3)
    model = cvx_surrogate_fit(ds, cfg)
    w = float(model.w[0])

    def obj(r):
        return float(np.sum(convex_surrogate_loss(r, b1, b2, alpha)))

    grid = np.linspace(0.0, cfg.norm_cap, 1001)
    vals = [obj(r) for r in grid]
    j = int(np.argmin(vals))
    cell = grid[1] - grid[0]
    assert obj(w) <= vals[j] + 1e-3 * max(1.0, abs(vals[j]))
    assert abs(w - grid[j]) <= 2 * cell


def test_cvx_huge_penalty_shrinks_to_zero():
    rng = np.random.default_rng(5)
    ds = random_feature_dataset(rng, 40, 3)
    cfg = CvxConfig(alpha=0.5, reg_mode="ridge", reg_lambda=1e9, budget=2000)
    model = cvx_surrogate_fit(ds, cfg)
    assert np.linalg.norm(model.w) < 1e-2


def test_cvx_doubling_budget_never_hurts():
    rng = np.random.default_rng(6)
    ds = random_feature_dataset(rng, 50, 4)

    def final_obj(budget):
        cfg = CvxConfig(alpha=0.25, reg_mode="ridge", reg_lambda=1e-3, budget=budget)
        model = cvx_surrogate_fit(ds, cfg)
        r = ds.X @ model.w
        f = float(np.sum(convex_surrogate_loss(r, ds.b1, ds.b2, 0.25)))
        return f + 1e-3 * float(model.w @ model.w)

    assert final_obj(2000) <= final_obj(1000) + 1e-12


def test_cvx_reserves_sit_below_dc_reserves():
    # the convex surrogate over-penalizes high reserves, so on the noiseless
    # synthetic task its predicted reserves are systematically lower
    from reserveopt.data import GenSpec, generate
    from reserveopt.dc import DCConfig, train

    pool = generate(GenSpec("gaussian_sum", 1300, 0.0, 13))
    tr = pool.take(np.arange(300))
    te = pool.take(np.arange(300, 1300))
    dc_model = train(tr, DCConfig(gamma=0.05, reg_mode="ridge", reg_lambda=5.0,
                                  outer_max=10, restarts=1)).model
    cvx_model = cvx_surrogate_fit(tr, CvxConfig(alpha=0.25, reg_mode="ridge",
                                                reg_lambda=1.0, budget=1500))
    assert cvx_model.predict(te.X).mean() < dc_model.predict(te.X).mean()


def test_no_feature_fit_delegates_to_empirical_reserve():
    rng = np.random.default_rng(7)
    b1, b2 = random_bids(rng, 80)
    ds = offset_only_dataset(b1, b2)
    assert no_feature_fit(ds) == empirical_reserve(b1, b2)[0]
    assert no_feature_fit(ds, lambda_cap=0.5) == empirical_reserve(b1, b2, 0.5)[0]
    with pytest.raises(DataError):
        no_feature_fit(offset_only_dataset([], []))


def test_anchor_examples_and_ordering():
    ds = make_dataset([[0.0], [0.0]], b1=[5.0, 3.0], b2=[2.0, 1.0])
    assert anchor_revenues(ds) == (1.5, 4.0)
    one = make_dataset([[0.0]], b1=[5.0], b2=[2.0])
    assert anchor_revenues(one) == (2.0, 5.0)
    tied = make_dataset([[0.0]], b1=[3.0], b2=[3.0])
    lo, hi = anchor_revenues(tied)
    assert lo == hi == 3.0

    rng = np.random.default_rng(8)
    for _ in range(20):
        b1, b2 = random_bids(rng, 30)
        lo, hi = anchor_revenues(offset_only_dataset(b1, b2))
        assert lo <= hi
    with pytest.raises(DataError):
        anchor_revenues(offset_only_dataset([], []))


def test_initial_weights_fallback_and_cap():
    rng = np.random.default_rng(9)
    ds = random_feature_dataset(rng, 30, 3)
    w = initial_weights(ds, norm_cap=0.1)
    assert np.linalg.norm(w) <= 0.1 + 1e-12
    w_free = initial_weights(ds)
    assert np.all(np.isfinite(w_free))
