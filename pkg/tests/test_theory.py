import csv
import io
import math

import numpy as np
import pytest

from flashpath.data import CoefficientEstimate
from flashpath.exceptions import DataError
from flashpath.theory import (RECOVERY_METHODS, RecoveryDesign, build_claim1_design,
                              mu_flash_bound, mu_lasso_bound, recovery_experiment,
                              signed_support_match)


@pytest.mark.parametrize("S, expected", [(1, 1.0), (2, 1 / 3), (10, 1 / 19)])
def test_lasso_bound_values(S, expected):
    assert mu_lasso_bound(S) == pytest.approx(expected, rel=1e-15)


def test_lasso_bound_domain():
    with pytest.raises(DataError):
        mu_lasso_bound(0)


@pytest.mark.parametrize("S, q1, q2, expected", [
    (10, 0.5, 0.5, 1 / 15),
    (5, 0.4, 0.2, 0.125),
])
def test_flash_bound_values(S, q1, q2, expected):
    assert mu_flash_bound(S, q1, q2) == pytest.approx(expected, rel=1e-15)


def test_flash_bound_collapses_at_smallest_large_fraction():
    S = 8
    assert mu_flash_bound(S, 1 / S, 1 / S) == pytest.approx(mu_lasso_bound(S), rel=1e-12)


@pytest.mark.parametrize("args", [(0, 0.5, 0.5), (10, 0.05, 0.5), (10, 0.5, 1.2),
                                  (10, 0.7, 0.7)])
def test_flash_bound_domain(args):
    with pytest.raises(DataError):
        mu_flash_bound(*args)


def test_flash_bound_dominates_lasso_bound_small_lattice():
    for S in range(1, 13):
        for a in range(1, S + 1):
            for b in range(1, S + 1 - a + 1):
                q1, q2 = a / S, b / S
                if q1 + q2 > 1 + 1e-12:
                    continue
                fl, l1 = mu_flash_bound(S, q1, q2), mu_lasso_bound(S)
                assert fl >= l1
                if a > 1:
                    assert fl > l1


def test_design_block_eigenvalues():
    d = build_claim1_design(2, 5, 0.3)
    block = d.Sigma[np.ix_([0, 1, 2], [0, 1, 2])]
    eig = np.sort(np.linalg.eigvalsh(block))
    np.testing.assert_allclose(eig, [0.4, 1.3, 1.3], atol=1e-12)
    assert d.min_eigenvalue == pytest.approx(0.4)


def test_design_layout():
    d = build_claim1_design(3, 7, 0.2, noise_index=5, q1=2 / 3)
    block = [0, 1, 2, 5]
    for a in range(7):
        for b in range(7):
            if a == b:
                expected = 1.0
            elif a in block and b in block:
                expected = -0.2
            else:
                expected = 0.0
            assert d.Sigma[a, b] == expected
    assert d.beta_true[0] == d.beta_true[1] == -1.0
    assert d.beta_true[2] == pytest.approx(-1.0 / (10 * math.sqrt(3)))
    assert np.all(d.beta_true[3:] == 0)
    assert d.q2 == pytest.approx(1 / 3)


def test_zero_rho_gives_identity():
    np.testing.assert_array_equal(build_claim1_design(4, 9, 0.0).Sigma, np.eye(9))


@pytest.mark.parametrize("kw", [dict(S=4, p=10, rho=0.25), dict(S=4, p=10, rho=-0.1),
                                dict(S=4, p=4, rho=0.1),
                                dict(S=4, p=10, rho=0.1, noise_index=2)])
def test_design_errors(kw):
    with pytest.raises(DataError):
        build_claim1_design(**kw)


def test_recovery_design_validation():
    with pytest.raises(DataError, match="positive definite"):
        RecoveryDesign(np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 0.0]), 1, 1.0, 1.0, 1.0)
    with pytest.raises(DataError, match="symmetric"):
        RecoveryDesign(np.array([[1.0, 0.1], [0.0, 1.0]]), np.array([1.0, 0.0]), 1, 1.0, 1.0, 0.1)
    with pytest.raises(DataError, match="nonzeros"):
        RecoveryDesign(np.eye(2), np.array([1.0, 1.0]), 1, 1.0, 1.0, 0.0)


def test_signed_support_match_cases():
    truth = np.array([-1.0, 2.0, 0.0, 0.0])
    assert signed_support_match(truth, truth)
    assert signed_support_match(CoefficientEstimate(3 * truth, 1.0), truth)
    assert not signed_support_match([-1.0, 2.0, 0.1, 0.0], truth)
    assert not signed_support_match([1.0, 2.0, 0.0, 0.0], truth)
    assert not signed_support_match([-1.0, 0.0, 0.0, 0.0], truth)
    with pytest.raises(DataError):
        signed_support_match([1.0], truth)


def test_signed_support_invariant_to_positive_rescaling():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = rng.normal(size=6) * (rng.random(6) < 0.5)
        b = rng.normal(size=6) * (rng.random(6) < 0.5)
        s = rng.uniform(0.01, 100)
        assert signed_support_match(a, b) == signed_support_match(s * a, s * b)


def test_easy_regime_all_methods_recover():
    d = build_claim1_design(3, 8, 0.0)
    rep = recovery_experiment(d, 100, 0.1, methods=RECOVERY_METHODS, reps=20, seed=1)
    for m in RECOVERY_METHODS:
        assert rep.rate(m) >= 0.95, m


def test_claim1_lasso_fails_about_half_the_time():
    S = 5
    d = build_claim1_design(S, 20, 1.05 * mu_lasso_bound(S))
    rep = recovery_experiment(d, 200, 0.0, methods=("Lasso",), reps=100, seed=3)
    # at least half fail; 0.15 covers two binomial standard errors
    assert rep.rate("Lasso") <= 0.5 + 0.15


def test_block_flash_beats_lasso_on_claim1_design():
    S = 5
    d = build_claim1_design(S, 20, 1.05 * mu_lasso_bound(S), q1=0.6)
    assert d.rho < mu_flash_bound(S, d.q1, d.q2) * (1 - 0.1)
    rep = recovery_experiment(d, 200, 0.05, reps=40, seed=4)
    assert rep.rate("FLASH_B") > rep.rate("Lasso")


def test_recovery_report_csv_and_determinism():
    d = build_claim1_design(2, 6, 0.2)
    a = recovery_experiment(d, 40, 0.1, reps=5, seed=9)
    b = recovery_experiment(d, 40, 0.1, reps=5, seed=9)
    assert a.to_csv() == b.to_csv()
    rows = list(csv.DictReader(io.StringIO(a.to_csv())))
    assert list(rows[0]) == ["method", "rho", "S", "q1", "q2", "n", "reps", "recovery_rate",
                             "failures"]
    assert [r["method"] for r in rows] == ["Lasso", "FLASH_B"]
    assert float(rows[0]["rho"]) == 0.2


def test_recovery_experiment_errors():
    d = build_claim1_design(3, 8, 0.0)
    with pytest.raises(DataError):
        recovery_experiment(d, 4, 0.1)
    with pytest.raises(DataError):
        recovery_experiment(d, 50, 0.1, reps=0)
    with pytest.raises(DataError):
        recovery_experiment(d, 50, 0.1, methods=("Ridge",))
    with pytest.raises(KeyError):
        recovery_experiment(d, 50, 0.1, reps=1).rate("Forward")
