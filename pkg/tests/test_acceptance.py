"""Exit criteria.  Each test carries ``criterion(n)``; the terminal summary
prints one ``Criterion n: PASS/FAIL`` line per test.

Criteria 5, 6, 9 and 10 run the command-line tool end to end and together
take roughly ten minutes on one core.
"""

import csv
import math

import numpy as np
import pytest

from flashpath.cli import main
from flashpath.data import Dataset, standardize
from flashpath.glm import GlmData, fit_glm_flash_path, glm_gradient_corr
from flashpath.linear import DeltaSchedule, PathState, direction_vector, fit_flash_path, \
    gamma_forward_check
from flashpath.theory import build_claim1_design, mu_flash_bound, mu_lasso_bound

from oracles import (centered_orthonormal, greedy_forward, lasso_kkt_violation,
                     logistic_ml_1d, logistic_ml_irls, soft_threshold)

pytestmark = pytest.mark.acceptance

SEED = 20240611


def _instance(rng, n_max=50, p_max=12):
    p = int(rng.integers(2, p_max + 1))
    n = int(rng.integers(p + 3, n_max + 1))
    rho = float(rng.choice([0.0, 0.3, 0.7]))
    X = rng.standard_normal((n, p))
    if rho:
        X = math.sqrt(rho) * rng.standard_normal((n, 1)) + math.sqrt(1 - rho) * X
    beta = np.zeros(p)
    k = int(rng.integers(1, p + 1))
    beta[rng.choice(p, k, replace=False)] = rng.normal(0, 2, k)
    y = X @ beta + rng.standard_normal(n)
    return standardize(Dataset(X, y))


# --------------------------------------------------------------------------
# Linear engine
# --------------------------------------------------------------------------


@pytest.mark.criterion(1)
def test_criterion_1_endpoint_equivalences(record_property):
    rng = np.random.default_rng([SEED, 1])
    worst_kkt = worst_soft = worst_fwd = 0.0
    for _ in range(100):
        sd = _instance(rng)
        for b in fit_flash_path(sd, 0.0).breakpoints:
            worst_kkt = max(worst_kkt, lasso_kkt_violation(sd.Xs, sd.ys, b.beta_end))

        # orthonormal design of the same size: the L1 path is soft thresholding
        Q = centered_orthonormal(sd.n, sd.p, rng)
        orth = standardize(Dataset(Q, rng.normal(size=sd.n)))
        z = orth.Xs.T @ orth.ys
        for b in fit_flash_path(orth, 0.0).breakpoints:
            lam = np.abs(orth.Xs.T @ (orth.ys - orth.Xs @ b.beta_end)).max()
            worst_soft = max(worst_soft, np.abs(b.beta_end - soft_threshold(z, lam)).max())

        path = fit_flash_path(sd, 1.0)
        ref = greedy_forward(sd.Xs, sd.ys, len(path))
        for b, (act, beta) in zip(path.breakpoints, ref):
            assert set(b.active_after) == set(act)
            worst_fwd = max(worst_fwd, np.abs(b.beta_end - beta).max())
    record_property("detail", f"kkt {worst_kkt:.1e}, soft {worst_soft:.1e}, "
                              f"forward {worst_fwd:.1e}")
    assert worst_kkt <= 1e-6
    assert worst_soft <= 1e-8
    assert worst_fwd <= 1e-8


@pytest.mark.criterion(2)
def test_criterion_2_forward_step_length_is_one(record_property):
    rng = np.random.default_rng([SEED, 2])
    worst = 0.0
    for _ in range(100):
        sd = _instance(rng)
        k = int(rng.integers(1, sd.p + 1))
        active = tuple(int(j) for j in rng.choice(sd.p, k, replace=False))
        beta = np.zeros(sd.p)
        beta[list(active)] = rng.normal(size=k)
        c = sd.Xs.T @ (sd.ys - sd.Xs @ beta)
        state = PathState(beta, active, {}, 0, c)
        h = direction_vector(sd, active, c[list(active)])
        worst = max(worst, abs(gamma_forward_check(sd, state, h) - 1.0))
    record_property("detail", f"max |gamma_F - 1| {worst:.1e}")
    assert worst <= 1e-10


@pytest.mark.criterion(3)
def test_criterion_3_active_correlations_scale(record_property):
    rng = np.random.default_rng([SEED, 3])
    worst, moves = 0.0, 0
    for i in range(50):
        sd = _instance(rng)
        schedule = (DeltaSchedule.block(int(rng.integers(1, 4))) if i % 5 == 4
                    else float(rng.choice([0.0, 0.25, 0.5, 0.75, 1.0])))
        for b in fit_flash_path(sd, schedule).breakpoints:
            act = list(b.active_before)
            c0 = sd.Xs[:, act].T @ (sd.ys - sd.Xs @ b.beta_start)
            c1 = sd.Xs[:, act].T @ (sd.ys - sd.Xs @ b.beta_end)
            worst = max(worst, np.abs(c1 - (1 - b.gamma) * c0).max())
            moves += 1
    record_property("detail", f"{moves} moves, max deviation {worst:.1e}")
    assert worst <= 1e-8


@pytest.mark.criterion(4)
def test_criterion_4_relaxation_endpoint_normal_equations(record_property):
    rng = np.random.default_rng([SEED, 4])
    worst = 0.0
    for _ in range(50):
        sd = _instance(rng)
        for b in fit_flash_path(sd, float(rng.choice([0.0, 0.5, 1.0]))).breakpoints:
            act = list(b.active_before)
            r = sd.ys - sd.Xs @ b.relax_end
            worst = max(worst, np.abs(sd.Xs[:, act].T @ r).max())
            outside = np.setdiff1d(np.arange(sd.p), act)
            assert np.all(b.relax_end[outside] == 0.0)
    record_property("detail", f"max normal-equation residual {worst:.1e}")
    assert worst <= 1e-8


# --------------------------------------------------------------------------
# Benchmarks through the command-line tool
# --------------------------------------------------------------------------


def _read_rows(path):
    with open(path, newline="") as fh:
        return {r["method"]: r for r in csv.DictReader(fh)}


RUNS = {
    5: ["simulate", "--scenario", "table1_row1"],
    6: ["simulate", "--scenario", "table2_row1"],
    9: ["recovery", "--S", "5", "--p", "20", "--q1", "0.6", "--noise-sd", "0.05",
        "--n", "200", "--reps", "100", "--seed", "0"],
}


@pytest.fixture(scope="session")
def outputs(tmp_path_factory):
    """First run of each benchmark command, produced on demand."""
    root = tmp_path_factory.mktemp("criteria")
    made = {}

    def get(number, tag="a"):
        key = (number, tag)
        if key not in made:
            out = root / f"criterion{number}_{tag}.csv"
            assert main(RUNS[number] + ["--output", str(out)]) == 0
            made[key] = out
        return made[key]

    return get


@pytest.mark.criterion(5)
def test_criterion_5_linear_benchmark(outputs, record_property):
    rows = _read_rows(outputs(5))
    g, lasso = rows["FLASH_G"], rows["Lasso"]
    l2_g, l2_l = float(g["l2_sq"]), float(lasso["l2_sq"])
    fp_g, fp_l = float(g["false_pos"]), float(lasso["false_pos"])
    record_property("detail", f"L2 FLASH_G {l2_g:.3f} vs Lasso {l2_l:.3f}; "
                              f"FP {fp_g:.2f} vs {fp_l:.2f}")
    assert g["reps"] == "50"
    assert 0.15 <= l2_g <= 0.40
    assert l2_g < l2_l
    assert fp_g < fp_l


@pytest.mark.criterion(6)
def test_criterion_6_logistic_benchmark(outputs, record_property):
    rows = _read_rows(outputs(6))
    b, gl = rows["GLM-FLASH_B"], rows["GLasso"]
    l2_b, l2_gl = float(b["l2_sq"]), float(gl["l2_sq"])
    record_property("detail", f"L2 FLASH_B {l2_b:.3f} vs GLasso {l2_gl:.3f}")
    assert b["reps"] == "30"
    assert l2_b < l2_gl
    assert 0.30 <= l2_b <= 0.70


@pytest.mark.criterion(9)
def test_criterion_9_recovery(outputs, record_property):
    rows = _read_rows(outputs(9))
    lasso, block = float(rows["Lasso"]["recovery_rate"]), float(rows["FLASH_B"]["recovery_rate"])
    rho = float(rows["Lasso"]["rho"])
    record_property("detail", f"Lasso {lasso:.2f}, FLASH_B {block:.2f}")
    assert rho == pytest.approx(1.05 * mu_lasso_bound(5), rel=1e-15)
    assert rows["Lasso"]["reps"] == "100"
    assert lasso <= 0.6
    assert block >= lasso + 0.2


@pytest.mark.criterion(10)
def test_criterion_10_determinism(outputs, record_property):
    same = []
    for number in (5, 6, 9):
        first = outputs(number).read_bytes()
        second = outputs(number, "b").read_bytes()
        same.append(first == second)
    record_property("detail", "identical bytes: " + ", ".join(
        f"{n}={s}" for n, s in zip((5, 6, 9), same)))
    assert all(same)


# --------------------------------------------------------------------------
# GLM engine
# --------------------------------------------------------------------------


def _logistic_instance(rng):
    n = int(rng.integers(60, 151))
    p = int(rng.integers(3, 9))
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    k = int(rng.integers(1, min(4, p) + 1))
    beta[rng.choice(p, k, replace=False)] = rng.choice([-1, 1], k) * rng.uniform(0.3, 1.0, k)
    y = (rng.random(n) < 1 / (1 + np.exp(-(X @ beta)))).astype(float)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    return GlmData.from_dataset(Dataset(X, y))


def _weighted_kkt(gd, pt):
    g = glm_gradient_corr(gd, pt.beta, pt.intercept)
    worst = abs(float(np.sum(gd.y - pt.mu)))
    for j, lam in zip(pt.active, pt.lam):
        if pt.beta[j] != 0:
            worst = max(worst, abs(g[j] - lam * np.sign(pt.beta[j])))
        else:
            worst = max(worst, abs(g[j]) - lam)
    return worst


def _active_sequence(sets):
    out = []
    for s in sets:
        s = frozenset(s)
        if not out or out[-1] != s:
            out.append(s)
    return out


@pytest.mark.criterion(7)
def test_criterion_7_glm_paths(record_property):
    rng = np.random.default_rng([SEED, 7])
    worst_kkt = worst_1d = worst_ml = 0.0
    for i in range(20):
        gd = _logistic_instance(rng)
        delta = (0.0, 0.5)[i % 2]
        for pt in fit_glm_flash_path(gd, delta).points:
            worst_kkt = max(worst_kkt, _weighted_kkt(gd, pt))

        for pt in fit_glm_flash_path(gd, 1.0).points:
            if pt.kind != "ml":
                continue
            act = list(pt.active)
            if len(act) == 1:
                a, b = logistic_ml_1d(gd.X[:, act[0]], gd.y)
                worst_1d = max(worst_1d, abs(pt.beta[act[0]] - b), abs(pt.intercept - a))
            else:
                a, b = logistic_ml_irls(gd.X[:, act], gd.y)
                worst_ml = max(worst_ml, np.abs(pt.beta[act] - b).max(), abs(pt.intercept - a))

    matches = 0
    for _ in range(20):
        sd = _instance(rng, n_max=50, p_max=10)
        lin = fit_flash_path(sd, 0.0)
        ls = _active_sequence(s for b in lin.breakpoints for s in (b.active_before, b.active_after))
        gp = fit_glm_flash_path(GlmData(sd.Xs, sd.ys, "gaussian"), 0.0, max_points=20_000)
        gs = _active_sequence(pt.active for pt in gp.points)
        matches += gs == ls
    record_property("detail", f"kkt {worst_kkt:.1e}, 1-D ML {worst_1d:.1e}, "
                              f"multi ML {worst_ml:.1e}, sequences {matches}/20")
    assert worst_kkt <= 1e-4
    assert worst_1d <= 1e-6
    assert worst_ml <= 1e-6
    assert matches == 20


# --------------------------------------------------------------------------
# Theory
# --------------------------------------------------------------------------


@pytest.mark.criterion(8)
def test_criterion_8_theory_bounds(record_property):
    checked = strict = designs = 0
    for S in range(1, 31):
        grid = sorted({k / S for k in range(1, S + 1)} | set(np.linspace(1 / S, 1, 9)))
        for q1 in grid:
            for q2 in grid:
                if q1 + q2 > 1 + 1e-12:
                    continue
                fl, l1 = mu_flash_bound(S, q1, q2), mu_lasso_bound(S)
                assert fl >= l1
                if q1 * S > 1 + 1e-9:
                    assert fl > l1
                    strict += 1
                checked += 1
        for frac in (0.0, 0.25, 0.5, 0.9, 0.99, 0.999):
            for p in (S + 1, S + 6):
                d = build_claim1_design(S, p, frac / S)
                assert d.min_eigenvalue > 1e-10
                designs += 1
    record_property("detail", f"{checked} (S, q1, q2) points, {strict} strict, "
                              f"{designs} designs positive definite")
