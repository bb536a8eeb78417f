import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flashpath.data import Dataset, StandardizedDataset, standardize
from flashpath.exceptions import DataError
from flashpath.linear import (DeltaSchedule, PathState, advance_step, direction_vector,
                              fit_block_paths, fit_flash_path, gamma_forward_check, gamma_lasso,
                              path_coefficients_at, relaxation_point, zero_cross_gamma)

from oracles import (centered_orthonormal, gamma_lasso_bisection, greedy_forward,
                     lasso_kkt_violation, soft_threshold)


def _random_sd(seed, n=30, p=8, rho=0.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    if rho:
        X = np.sqrt(rho) * rng.standard_normal((n, 1)) + np.sqrt(1 - rho) * X
    beta = np.zeros(p)
    k = min(3, p)
    beta[:k] = rng.normal(0, 2, k)
    y = X @ beta + rng.standard_normal(n)
    return standardize(Dataset(X, y))


def _orthonormal_sd(z):
    """Standardized data with an identity Gram matrix and ``X^T y = z``."""
    n = 10
    X = centered_orthonormal(n, len(z), np.random.default_rng(0))
    y = X @ np.asarray(z, dtype=float)
    return StandardizedDataset(X, y, X.mean(axis=0) * 0, np.ones(len(z)), 0.0)


# --------------------------------------------------------------------------
# Schedules
# --------------------------------------------------------------------------


def test_schedules():
    assert DeltaSchedule.global_(0.3).delta_at(7) == 0.3
    b = DeltaSchedule.block(2)
    assert [b.delta_at(s) for s in (1, 2, 3)] == [0.0, 1.0, 0.0]
    e = DeltaSchedule.explicit([0.5, 1.0])
    assert [e.delta_at(s) for s in (1, 2, 3)] == [0.5, 1.0, 0.0]
    for s in (DeltaSchedule.global_(0.25), b, e):
        assert DeltaSchedule.from_dict(s.to_dict()) == s


@pytest.mark.parametrize("bad", [-0.1, 1.5])
def test_schedule_rejects_out_of_range(bad):
    with pytest.raises(DataError):
        DeltaSchedule.global_(bad)
    with pytest.raises(DataError):
        DeltaSchedule.explicit([0.2, bad])


# --------------------------------------------------------------------------
# Step geometry
# --------------------------------------------------------------------------


def test_hand_example_gamma_lasso_half():
    sd = _orthonormal_sd([2.0, 1.0])
    state = PathState.initial(sd)
    state = PathState(state.beta, (0,), {}, 0, state.corr)
    h = direction_vector(sd, (0,), state.corr[[0]])
    np.testing.assert_allclose(h, [2.0, 0.0], atol=1e-12)
    assert gamma_lasso(sd, state, h) == pytest.approx(0.5, abs=1e-12)


def test_hand_example_half_shrink_step():
    sd = _orthonormal_sd([2.0, 1.0])
    _, pieces = advance_step(sd, PathState.initial(sd), 0.5)
    assert len(pieces) == 1
    assert pieces[0].gamma == pytest.approx(0.75)
    np.testing.assert_allclose(pieces[0].beta_end, [1.5, 0.0], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_gamma_lasso_matches_bisection(seed):
    rng = np.random.default_rng(seed)
    sd = _random_sd(seed, n=25, p=6)
    k = int(rng.integers(1, 4))
    path = fit_flash_path(sd, 0.0)
    # state at the start of step k of the lasso path
    bps = [b for b in path.breakpoints if b.removed == ()]
    if len(bps) < k:
        return
    b = bps[k - 1]
    c = sd.Xs.T @ (sd.ys - sd.Xs @ b.beta_start)
    state = PathState(np.array(b.beta_start), b.active_before, {}, k, c)
    h = direction_vector(sd, b.active_before, c[list(b.active_before)])
    g = gamma_lasso(sd, state, h)
    ref = gamma_lasso_bisection(sd.Xs, c, list(b.active_before), h)
    assert g == pytest.approx(ref, abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_gamma_forward_is_one(seed):
    rng = np.random.default_rng(seed)
    sd = _random_sd(seed, n=20, p=7)
    k = int(rng.integers(1, 6))
    active = tuple(int(j) for j in rng.choice(7, k, replace=False))
    beta = np.zeros(7)
    beta[list(active)] = rng.normal(size=k)
    c = sd.Xs.T @ (sd.ys - sd.Xs @ beta)
    state = PathState(beta, active, {}, 0, c)
    h = direction_vector(sd, active, c[list(active)])
    assert gamma_forward_check(sd, state, h) == pytest.approx(1.0, abs=1e-10)


def test_zero_cross_gamma():
    state = PathState(np.array([1.0, -0.5, 0.0]), (0, 1), {}, 0, np.zeros(3))
    assert zero_cross_gamma(state, np.array([-4.0, 1.0, 0.0])) == (0.25, 0)
    assert zero_cross_gamma(state, np.array([1.0, -1.0, 0.0])) is None
    assert zero_cross_gamma(state, np.array([-4.0, 1.0, 0.0]), upper=0.2) is None


# --------------------------------------------------------------------------
# Path properties
# --------------------------------------------------------------------------


def test_orthonormal_lasso_is_soft_threshold():
    z = np.array([3.0, -2.0, 1.2, 0.4, -0.1])
    sd = _orthonormal_sd(z)
    path = fit_flash_path(sd, 0.0)
    for b in path.breakpoints:
        lam = np.abs(sd.Xs.T @ (sd.ys - sd.Xs @ b.beta_end)).max()
        np.testing.assert_allclose(b.beta_end, soft_threshold(z, lam), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([0.0, 0.6]))
def test_lasso_breakpoints_satisfy_kkt(seed, rho):
    sd = _random_sd(seed, n=30, p=10, rho=rho)
    for b in fit_flash_path(sd, 0.0).breakpoints:
        assert lasso_kkt_violation(sd.Xs, sd.ys, b.beta_end) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_forward_path_matches_greedy_ols(seed):
    sd = _random_sd(seed, n=25, p=7)
    path = fit_flash_path(sd, 1.0)
    ref = greedy_forward(sd.Xs, sd.ys, len(path))
    for b, (act, beta) in zip(path.breakpoints, ref):
        assert set(b.active_after) == set(act)
        np.testing.assert_allclose(b.beta_end, beta, atol=1e-8)


def test_lasso_path_matches_sklearn_lars():
    sklearn = pytest.importorskip("sklearn.linear_model")
    sd = _random_sd(11, n=40, p=12, rho=0.5)
    path = fit_flash_path(sd, 0.0)
    alphas, _, coefs = sklearn.lars_path(np.array(sd.Xs), np.array(sd.ys), method="lasso")
    ours = np.array([np.zeros(12)] + [b.beta_end for b in path.breakpoints]).T
    lams = [np.abs(sd.Xs.T @ sd.ys).max()] + [b.max_abs_corr for b in path.breakpoints]
    # sklearn scales alpha by 1/n
    for lam, col in zip(lams, ours.T):
        k = np.argmin(np.abs(alphas * sd.n - lam))
        np.testing.assert_allclose(col, coefs[:, k], atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([0.0, 0.3, 0.7]))
def test_relax_end_is_active_set_ols(seed, delta):
    sd = _random_sd(seed, n=30, p=9, rho=0.5)
    for b in fit_flash_path(sd, delta).breakpoints:
        act = list(b.active_before)
        r = sd.ys - sd.Xs @ b.relax_end
        assert np.abs(sd.Xs[:, act].T @ r).max() <= 1e-8
        outside = np.setdiff1d(np.arange(sd.p), act)
        assert np.all(b.relax_end[outside] == 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([0.0, 0.5]))
def test_active_correlations_scale_by_one_minus_gamma(seed, delta):
    sd = _random_sd(seed, n=30, p=9, rho=0.6)
    for b in fit_flash_path(sd, delta).breakpoints:
        act = list(b.active_before)
        c0 = sd.Xs[:, act].T @ (sd.ys - sd.Xs @ b.beta_start)
        c1 = sd.Xs[:, act].T @ (sd.ys - sd.Xs @ b.beta_end)
        np.testing.assert_allclose(c1, (1 - b.gamma) * c0, atol=1e-8)


def test_zero_crossing_removes_and_suspends():
    # a design known to produce removals on the lasso path
    found = False
    for seed in range(40):
        sd = _random_sd(seed, n=20, p=10, rho=0.8)
        path = fit_flash_path(sd, 0.0)
        for b in path.breakpoints:
            if b.removed:
                found = True
                for j in b.removed:
                    assert b.beta_end[j] == 0.0
                    assert j not in b.active_after
        if found:
            break
    assert found


def test_delta_one_never_removes():
    for seed in range(10):
        path = fit_flash_path(_random_sd(seed, rho=0.8), 1.0)
        assert all(not b.removed for b in path.breakpoints)


def test_breakpoint_steps_increase():
    path = fit_flash_path(_random_sd(3, rho=0.7), 0.3)
    steps = [b.step for b in path.breakpoints]
    assert steps == list(range(1, len(steps) + 1))
    flash = [b.flash_step for b in path.breakpoints]
    assert flash == sorted(flash)


def test_path_terminates_at_full_ols_when_n_exceeds_p():
    sd = _random_sd(4, n=30, p=6)
    last = fit_flash_path(sd, 0.25).breakpoints[-1]
    ols, *_ = np.linalg.lstsq(sd.Xs, sd.ys, rcond=None)
    np.testing.assert_allclose(last.beta_end, ols, atol=1e-8)


def test_active_set_capped_when_p_exceeds_n():
    sd = _random_sd(5, n=10, p=25)
    path = fit_flash_path(sd, 0.0)
    assert max(len(b.active_after) for b in path.breakpoints) <= 9


def test_collinear_column_is_skipped_with_warning():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 3))
    # an exact duplicate ties with its twin on the L1 path
    X = np.column_stack([X, X[:, 0]])
    y = 3 * X[:, 0] + X[:, 1] + 0.1 * rng.standard_normal(20)
    sd = standardize(Dataset(X, y))
    with pytest.warns(UserWarning, match="collinear"):
        path = fit_flash_path(sd, 0.0)
    assert path.warnings
    assert all(not (0 in b.active_after and 3 in b.active_after) for b in path.breakpoints)


def test_max_steps_and_validation():
    sd = _random_sd(6)
    path = fit_flash_path(sd, 1.0, max_steps=2)
    assert len(path) == 2
    with pytest.raises(DataError):
        fit_flash_path(sd, 0.0, max_steps=0)


def test_block_schedule_forward_step_lands_on_ols():
    sd = _random_sd(7, n=30, p=8)
    path = fit_flash_path(sd, DeltaSchedule.block(3))
    step3 = [b for b in path.breakpoints if b.flash_step == 3]
    last = step3[-1]
    np.testing.assert_allclose(last.beta_end, last.relax_end, atol=1e-10)
    assert fit_flash_path(sd, DeltaSchedule.block(0)).to_dict()["breakpoints"] == \
        fit_flash_path(sd, 0.0).to_dict()["breakpoints"]


def test_block_paths_share_prefix_with_direct_fits():
    sd = _random_sd(8, n=30, p=10, rho=0.4)
    many = fit_block_paths(sd, 4)
    for l_star, path in many.items():
        direct = fit_flash_path(sd, DeltaSchedule.block(l_star))
        assert len(path) == len(direct)
        for a, b in zip(path.breakpoints, direct.breakpoints):
            np.testing.assert_array_equal(a.beta_end, b.beta_end)


def test_relaxation_point_interpolates():
    path = fit_flash_path(_random_sd(9), 0.0)
    b = path.breakpoints[2]
    np.testing.assert_allclose(relaxation_point(b, 0.25),
                               0.75 * b.beta_end + 0.25 * b.relax_end)
    with pytest.raises(DataError):
        relaxation_point(b, 1.2)


def test_coefficients_on_original_scale():
    rng = np.random.default_rng(10)
    X = rng.normal(5, 3, (40, 4))
    y = 2 + X @ np.array([1.0, 0, -0.5, 0]) + 0.01 * rng.standard_normal(40)
    d = Dataset(X, y)
    path = fit_flash_path(standardize(d), 1.0)
    coef = path_coefficients_at(path, len(path))
    ols = np.linalg.lstsq(np.column_stack([np.ones(40), X]), y, rcond=None)[0]
    np.testing.assert_allclose(coef.beta, ols[1:], atol=1e-8)
    assert coef.intercept == pytest.approx(ols[0], abs=1e-7)
    with pytest.raises(IndexError):
        path_coefficients_at(path, len(path) + 1)


def test_path_json_roundtrip():
    path = fit_flash_path(_random_sd(12), 0.5)
    d = json.loads(path.to_json())
    assert d["schedule"] == {"kind": "global", "delta": 0.5}
    assert len(d["breakpoints"]) == len(path)
    bp = d["breakpoints"][0]
    for key in ("step", "entered", "removed", "gamma_L", "gamma", "active", "beta_end",
                "relax_end"):
        assert key in bp


def test_fit_is_deterministic():
    sd = _random_sd(13, rho=0.5)
    assert fit_flash_path(sd, 0.4).to_json() == fit_flash_path(sd, 0.4).to_json()
