"""Monte-Carlo benchmark: equicorrelated designs, sparse truths, validation tuning.

Replicate ``r`` of a scenario draws everything from
``numpy.random.default_rng([seed, r])`` in the order design, support,
coefficients, noise, so results do not depend on how replicates are
scheduled across worker processes.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data import CoefficientEstimate, Dataset
from .exceptions import DataError, FlashError
from .tuning import GlmOptions, method_by_name, validation_select

LINEAR_METHODS = ("FLASH_G", "FLASH_B", "Lasso", "Relaxo", "Forward")
GLM_METHODS = ("GLM-FLASH_B", "GRelaxo", "GLasso", "GForward")
MAX_CLASS_RETRIES = 10


@dataclass(frozen=True)
class SimulationScenario:
    """One simulation setting.  ``reps`` and ``seed`` fix the replicate streams.

    ``glm_max_active`` and ``glm_lam_min_ratio`` bound the GLM path fits;
    validation-selected logistic models sit far from both limits.
    """

    n: int
    p: int
    S: int
    rho: float = 0.0
    sigma_beta: float = 1.0
    coef_law: str = "normal"
    family: str = "linear"
    valid_frac: float = 0.5
    reps: int = 200
    seed: int = 0
    name: str = "scenario"
    methods: tuple[str, ...] = ()
    glm_max_active: Optional[int] = 50
    glm_lam_min_ratio: float = 0.01

    def __post_init__(self):
        if self.n < 2 or self.p < 1:
            raise DataError(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if not 0 <= self.S <= self.p:
            raise DataError(f"S must lie in [0, p], got {self.S}")
        if not 0.0 <= self.rho < 1.0:
            raise DataError(f"rho must lie in [0, 1), got {self.rho}")
        if not 0.0 < self.valid_frac <= 1.0:
            raise DataError(f"valid_frac must lie in (0, 1], got {self.valid_frac}")
        if self.coef_law not in ("normal", "pointmass"):
            raise DataError(f"coef_law must be 'normal' or 'pointmass', got {self.coef_law!r}")
        if self.family not in ("linear", "bernoulli"):
            raise DataError(f"family must be 'linear' or 'bernoulli', got {self.family!r}")
        if self.reps < 1:
            raise DataError("reps must be >= 1")
        if self.sigma_beta < 0:
            raise DataError("sigma_beta must be >= 0")
        allowed = LINEAR_METHODS if self.family == "linear" else GLM_METHODS
        for m in self.methods:
            if m not in allowed:
                raise DataError(f"method {m!r} does not apply to family {self.family!r}")

    @property
    def n_valid(self) -> int:
        return max(1, int(round(self.valid_frac * self.n)))

    @property
    def default_methods(self) -> tuple[str, ...]:
        if self.methods:
            return self.methods
        return LINEAR_METHODS if self.family == "linear" else GLM_METHODS

    @classmethod
    def parse(cls, text: str, source: str = "<scenario>") -> "SimulationScenario":
        """Read ``key = value`` lines; ``#`` starts a comment."""
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise DataError(f"{source}:{lineno}: unknown scenario key {key!r}")
            try:
                kw[key] = _convert(key, value)
            except ValueError:
                raise DataError(f"{source}:{lineno}: bad value {value!r} for key {key!r}") from None
        missing = [k for k in ("n", "p", "S") if k not in kw]
        if missing:
            raise DataError(f"{source}: missing required key(s) {', '.join(missing)}")
        return cls(**kw)

    @classmethod
    def from_file(cls, path) -> "SimulationScenario":
        path = Path(path)
        return cls.parse(path.read_text(encoding="utf-8"), str(path))


_INT_KEYS = {"n", "p", "S", "reps", "seed"}
_FLOAT_KEYS = {"rho", "sigma_beta", "valid_frac", "glm_lam_min_ratio"}


def _convert(key: str, value: str):
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key == "glm_max_active":
        return None if value.lower() in ("", "none") else int(value)
    if key == "methods":
        return tuple(m.strip() for m in value.split(",") if m.strip())
    if key in ("coef_law", "family"):
        return value.lower()
    return value


def bundled_scenario(name: str) -> Path:
    """Path of a scenario file shipped with the package (e.g. ``table1_row1``)."""
    path = Path(__file__).parent / "scenarios" / f"{name.removesuffix('.cfg')}.cfg"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled scenario {name!r}")
    return path


# --------------------------------------------------------------------------
# Data generation
# --------------------------------------------------------------------------


def _design(rng, rows: int, p: int, rho: float) -> np.ndarray:
    z = rng.standard_normal((rows, p))
    if rho == 0.0:
        return z
    g = rng.standard_normal((rows, 1))
    return math.sqrt(rho) * g + math.sqrt(1.0 - rho) * z


def _truth(rng, scn: SimulationScenario) -> np.ndarray:
    support = np.sort(rng.choice(scn.p, size=scn.S, replace=False))
    beta = np.zeros(scn.p)
    if scn.coef_law == "pointmass":
        beta[support] = rng.choice([-0.5, 0.5], size=scn.S)
    else:
        beta[support] = scn.sigma_beta * rng.standard_normal(scn.S)
    return beta


def gen_linear(scn: SimulationScenario, rep_index: int):
    """``(train, valid, beta_true)`` for replicate ``rep_index``; unit noise variance."""
    if scn.family != "linear":
        raise DataError("gen_linear needs a linear scenario")
    rng = np.random.default_rng([scn.seed, rep_index])
    rows = scn.n + scn.n_valid
    X = _design(rng, rows, scn.p, scn.rho)
    beta = _truth(rng, scn)
    y = X @ beta + rng.standard_normal(rows)
    return Dataset(X[:scn.n], y[:scn.n]), Dataset(X[scn.n:], y[scn.n:]), beta


def gen_glm(scn: SimulationScenario, rep_index: int):
    """Bernoulli-logit ``(train, valid, beta_true)``.

    A draw in which either split has a single class is redrawn from the
    stream ``[seed, rep_index, attempt]``, at most ten times.
    """
    if scn.family != "bernoulli":
        raise DataError("gen_glm needs a bernoulli scenario")
    rows = scn.n + scn.n_valid
    for attempt in range(MAX_CLASS_RETRIES + 1):
        key = [scn.seed, rep_index] if attempt == 0 else [scn.seed, rep_index, attempt]
        rng = np.random.default_rng(key)
        X = _design(rng, rows, scn.p, scn.rho)
        beta = _truth(rng, scn)
        prob = 1.0 / (1.0 + np.exp(-(X @ beta)))
        y = (rng.random(rows) < prob).astype(float)
        ytr, yva = y[:scn.n], y[scn.n:]
        if 0 < ytr.sum() < ytr.size and 0 < yva.sum() < yva.size:
            return Dataset(X[:scn.n], ytr), Dataset(X[scn.n:], yva), beta
    raise DataError(f"replicate {rep_index}: single-class response after "
                    f"{MAX_CLASS_RETRIES} redraws")


def generate(scn: SimulationScenario, rep_index: int):
    return (gen_linear if scn.family == "linear" else gen_glm)(scn, rep_index)


# --------------------------------------------------------------------------
# Metrics and aggregation
# --------------------------------------------------------------------------


def evaluate_metrics(estimate, beta_true) -> tuple[int, int, float]:
    """False positives, false negatives and squared L2 error of the slopes."""
    if isinstance(estimate, CoefficientEstimate):
        estimate = estimate.beta
    est = np.asarray(estimate, dtype=float)
    truth = np.asarray(beta_true, dtype=float)
    if est.shape != truth.shape:
        raise DataError(f"shape mismatch {est.shape} vs {truth.shape}")
    fp = int(np.sum((truth == 0) & (est != 0)))
    fn = int(np.sum((truth != 0) & (est == 0)))
    return fp, fn, float(np.sum((est - truth) ** 2))


@dataclass(frozen=True)
class SimulationMetrics:
    false_pos: float
    false_neg: float
    l2_sq: float
    l2_sq_se: float

    @classmethod
    def aggregate(cls, triples: Sequence[tuple[int, int, float]]) -> "SimulationMetrics":
        k = len(triples)
        if k == 0:
            nan = float("nan")
            return cls(nan, nan, nan, nan)
        fp = math.fsum(t[0] for t in triples) / k
        fn = math.fsum(t[1] for t in triples) / k
        l2 = math.fsum(t[2] for t in triples) / k
        se = float("nan")
        if k > 1:
            var = math.fsum((t[2] - l2) ** 2 for t in triples) / (k - 1)
            se = math.sqrt(var / k)
        return cls(fp, fn, l2, se)


@dataclass(frozen=True)
class MethodSummary:
    scenario: str
    method: str
    metrics: SimulationMetrics
    reps: int
    excluded: int


@dataclass(frozen=True)
class BenchmarkResult:
    scenario: SimulationScenario
    rows: tuple[MethodSummary, ...]
    per_rep: dict = field(default_factory=dict, compare=False)

    def row(self, method: str) -> MethodSummary:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "method", "false_pos", "false_neg", "l2_sq", "l2_sq_se",
                    "reps", "excluded"])
        for r in self.rows:
            m = r.metrics
            w.writerow([r.scenario, r.method, _fmt(m.false_pos), _fmt(m.false_neg),
                        _fmt(m.l2_sq), _fmt(m.l2_sq_se), r.reps, r.excluded])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _glm_options(scn: SimulationScenario) -> GlmOptions:
    return GlmOptions(max_active=scn.glm_max_active, lam_min_ratio=scn.glm_lam_min_ratio)


def run_replicate(scn: SimulationScenario, methods: Sequence[str], rep_index: int) -> dict:
    """Metrics per method for one replicate; ``None`` marks a failed fit."""
    train, valid, beta = generate(scn, rep_index)
    out = {}
    for name in methods:
        method = method_by_name(name)
        try:
            res = validation_select(train, valid, method, glm=_glm_options(scn))
            out[name] = evaluate_metrics(res.best.coef, beta)
        except (FlashError, np.linalg.LinAlgError, FloatingPointError):
            out[name] = None
    return out


def _replicate_task(args):
    scn, methods, rep = args
    return run_replicate(scn, methods, rep)


def run_benchmark(scn: SimulationScenario, methods: Sequence[str] | None = None,
                  reps: int | None = None, workers: int = 1) -> BenchmarkResult:
    """Run ``reps`` replicates, tune each method on the validation split,
    and average false positives, false negatives and squared L2 error.

    ``workers > 1`` spreads replicates over processes; the result is
    identical to the serial run.
    """
    methods = tuple(methods) if methods else scn.default_methods
    for m in methods:
        method_by_name(m)
    reps = scn.reps if reps is None else int(reps)
    if reps < 1:
        raise DataError("reps must be >= 1")
    tasks = [(scn, methods, r) for r in range(reps)]
    if workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_replicate_task, tasks))
    else:
        results = [_replicate_task(t) for t in tasks]
    rows = []
    for m in methods:
        ok = [res[m] for res in results if res[m] is not None]
        rows.append(MethodSummary(scn.name, m, SimulationMetrics.aggregate(ok), reps,
                                  reps - len(ok)))
    per_rep = {m: [res[m] for res in results] for m in methods}
    return BenchmarkResult(scn, tuple(rows), per_rep)
