"""Correlation bounds for signed-support recovery and Monte-Carlo checks.

``mu_lasso_bound`` and ``mu_flash_bound`` give the largest pairwise
predictor correlation under which the L1 path and block FLASH,
respectively, are guaranteed to contain the true signed support.  The
counterexample design puts correlation ``-rho`` between every pair in the
support plus one noise variable, with negative true coefficients, so that
the noise variable looks attractive to the L1 path.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import CoefficientEstimate, Dataset, standardize
from .exceptions import DataError, FlashError
from .linear import DeltaSchedule, fit_block_paths, fit_flash_path

PD_TOL = 1e-10
RECOVERY_METHODS = ("Lasso", "FLASH_B", "Forward", "FLASH_G")


def mu_lasso_bound(S: int) -> float:
    """``1 / (2S - 1)``."""
    if S < 1:
        raise DataError(f"S must be >= 1, got {S}")
    return 1.0 / (2 * S - 1)


def mu_flash_bound(S: int, q1: float, q2: float) -> float:
    """Block FLASH bound for a support with a fraction ``q1`` of large and
    ``q2`` of small coefficients.

    ``min{1 / (2(1 - q2)S - 1), 1 / ((2 - q1)S)}``
    """
    if S < 1:
        raise DataError(f"S must be >= 1, got {S}")
    lo = 1.0 / S - 1e-12
    if not (lo <= q1 <= 1.0 and lo <= q2 <= 1.0):
        raise DataError(f"q1 and q2 must lie in [1/S, 1], got q1={q1}, q2={q2}")
    if q1 + q2 > 1.0 + 1e-12:
        raise DataError(f"q1 + q2 must not exceed 1, got {q1 + q2}")
    d1 = 2.0 * (1.0 - q2) * S - 1.0
    first = 1.0 / d1 if d1 > 0 else math.inf
    return min(first, 1.0 / ((2.0 - q1) * S))


@dataclass(frozen=True)
class RecoveryDesign:
    """Population correlation matrix and true coefficients."""

    Sigma: np.ndarray
    beta_true: np.ndarray
    S: int
    q1: float
    q2: float
    rho: float
    noise_index: Optional[int] = None

    def __post_init__(self):
        Sigma = np.array(self.Sigma, dtype=float)
        beta = np.array(self.beta_true, dtype=float)
        if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1] or beta.shape != (Sigma.shape[0],):
            raise DataError("Sigma must be p x p and beta_true of length p")
        if not np.allclose(Sigma, Sigma.T, atol=0.0) or not np.allclose(np.diag(Sigma), 1.0):
            raise DataError("Sigma must be symmetric with unit diagonal")
        if np.linalg.eigvalsh(Sigma).min() <= PD_TOL:
            raise DataError("Sigma is not positive definite")
        if np.count_nonzero(beta) != self.S:
            raise DataError(f"beta_true has {np.count_nonzero(beta)} nonzeros, expected {self.S}")
        Sigma.setflags(write=False)
        beta.setflags(write=False)
        object.__setattr__(self, "Sigma", Sigma)
        object.__setattr__(self, "beta_true", beta)

    @property
    def p(self) -> int:
        return self.Sigma.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.Sigma).min())


def build_claim1_design(S: int, p: int, rho: float, noise_index: int | None = None, *,
                        q1: float = 1.0, q2: float | None = None, large: float = 1.0,
                        separation: float | None = None) -> RecoveryDesign:
    """Counterexample design: support ``K = {0..S-1}`` and one noise variable.

    Every pair inside ``K + {noise_index}`` has correlation ``-rho``; all
    other off-diagonal entries are zero.  The first ``round(q1*S)`` support
    coefficients equal ``-large`` and the rest ``-large / separation``
    (``separation`` defaults to ``10 * sqrt(S)``).
    """
    if S < 1 or p < S + 1:
        raise DataError(f"need S >= 1 and p >= S + 1, got S={S}, p={p}")
    if not 0.0 <= rho < 1.0 / S:
        raise DataError(f"rho must lie in [0, 1/S) = [0, {1.0 / S:.6g}), got {rho}")
    if noise_index is None:
        noise_index = S
    if not S <= noise_index < p:
        raise DataError(f"noise index must lie outside the support and below p, got {noise_index}")
    n_large = int(round(q1 * S))
    if not 1 <= n_large <= S:
        raise DataError(f"q1 = {q1} gives {n_large} large coefficients")
    if q2 is None:
        q2 = (S - n_large) / S if n_large < S else 1.0 / S
    if separation is None:
        separation = 10.0 * math.sqrt(S)
    if separation <= 0 or large <= 0:
        raise DataError("coefficient magnitudes must be positive")
    block = list(range(S)) + [noise_index]
    Sigma = np.eye(p)
    for a in block:
        for b in block:
            if a != b:
                Sigma[a, b] = -rho
    beta = np.zeros(p)
    beta[:n_large] = -large
    beta[n_large:S] = -large / separation
    return RecoveryDesign(Sigma, beta, S, float(q1), float(q2), float(rho), noise_index)


def signed_support_match(estimate, truth) -> bool:
    """True when ``sign(estimate) == sign(truth)`` in every coordinate."""
    if isinstance(estimate, CoefficientEstimate):
        estimate = estimate.beta
    est = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.shape != truth.shape:
        raise DataError(f"shape mismatch {est.shape} vs {truth.shape}")
    return bool(np.array_equal(np.sign(est), np.sign(truth)))


@dataclass(frozen=True)
class RecoveryRate:
    method: str
    successes: int
    reps: int
    failures: int

    @property
    def recovery_rate(self) -> float:
        return self.successes / self.reps if self.reps else float("nan")


@dataclass(frozen=True)
class RecoveryReport:
    design: RecoveryDesign
    n: int
    noise_sd: float
    reps: int
    seed: int
    rates: tuple[RecoveryRate, ...]

    def rate(self, method: str) -> float:
        for r in self.rates:
            if r.method == method:
                return r.recovery_rate
        raise KeyError(method)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "rho", "S", "q1", "q2", "n", "reps", "recovery_rate", "failures"])
        d = self.design
        for r in self.rates:
            w.writerow([r.method, _fmt(d.rho), d.S, _fmt(d.q1), _fmt(d.q2), self.n, r.reps,
                        _fmt(r.recovery_rate), r.failures])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _sample(design: RecoveryDesign, n: int, noise_sd: float, rng) -> Dataset:
    L = np.linalg.cholesky(design.Sigma)
    X = rng.standard_normal((n, design.p)) @ L.T
    y = X @ design.beta_true + noise_sd * rng.standard_normal(n)
    return Dataset(X, y)


def _paths(d: Dataset, method: str, l_star_max: int):
    sd = standardize(d)
    if method == "Lasso":
        return [fit_flash_path(sd, 0.0)]
    if method == "Forward":
        return [fit_flash_path(sd, 1.0)]
    if method == "FLASH_G":
        return [fit_flash_path(sd, dlt) for dlt in (0.0, 0.25, 0.5, 0.75, 1.0)]
    if method == "FLASH_B":
        return list(fit_block_paths(sd, l_star_max).values())
    raise DataError(f"unknown recovery method {method!r}; choose from {RECOVERY_METHODS}")


def path_recovers(paths, truth) -> bool:
    """Does any unrelaxed breakpoint of any path have the true signed support?"""
    for path in paths:
        for step in range(1, len(path) + 1):
            if signed_support_match(path.coefficients_at(step).beta, truth):
                return True
    return False


def recovery_experiment(design: RecoveryDesign, n: int, noise_sd: float,
                        methods: Sequence[str] = ("Lasso", "FLASH_B"), reps: int = 100,
                        seed: int = 0, l_star_max: int | None = None) -> RecoveryReport:
    """Monte-Carlo rate at which each method's path contains the true signed support.

    Replicate ``r`` draws ``n`` rows from ``N(0, Sigma)`` and Gaussian noise
    from ``numpy.random.default_rng([seed, r])``.  A fit error counts as a
    failure to recover and is tallied separately.
    """
    if n <= design.S + 1:
        raise DataError(f"need n > S + 1, got n={n}, S={design.S}")
    if reps < 1:
        raise DataError("reps must be >= 1")
    for m in methods:
        if m not in RECOVERY_METHODS:
            raise DataError(f"unknown recovery method {m!r}; choose from {RECOVERY_METHODS}")
    if l_star_max is None:
        l_star_max = int(min(20, n // 4, design.p))
    wins = {m: 0 for m in methods}
    fails = {m: 0 for m in methods}
    for r in range(reps):
        d = _sample(design, n, noise_sd, np.random.default_rng([seed, r]))
        for m in methods:
            try:
                ok = path_recovers(_paths(d, m, l_star_max), design.beta_true)
            except (FlashError, np.linalg.LinAlgError):
                fails[m] += 1
                continue
            wins[m] += ok
    rates = tuple(RecoveryRate(m, wins[m], reps, fails[m]) for m in methods)
    return RecoveryReport(design, n, noise_sd, reps, seed, rates)
