"""Model selection over shrinkage schedule, path step and relaxation.

Every method fits one or more paths on training data and turns each
``(path, step, phi)`` triple into a candidate coefficient vector.  The
candidate with the lowest validation error wins (mean squared error on the
original response scale for least squares, deviance for logistic models).
Near-ties go to the model with fewer nonzero coefficients, then the
earlier step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .data import CoefficientEstimate, Dataset, standardize
from .exceptions import ConvergenceError, DataError
from .glm import (GlmData, GlmPath, deviance_from_mu, fit_glm_flash_path, glm_block_paths,
                  glm_corrector, glm_destandardize, glm_forward_path, _mean)
from .linear import DeltaSchedule, FlashPath, fit_block_paths, fit_flash_path

PHI_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)
DELTA_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)
TIE_RTOL = 1e-12

LINEAR_KINDS = ("global", "block", "lasso", "relaxo", "forward")
GLM_KINDS = ("glasso", "grelaxo", "gforward", "gblock")


@dataclass(frozen=True)
class Method:
    """A tuning recipe.  Build one with the factory functions below."""

    name: str
    kind: str
    delta_grid: tuple[float, ...] = DELTA_GRID
    l_star_max: Optional[int] = None
    phi_grid: tuple[float, ...] = PHI_GRID

    def __post_init__(self):
        if self.kind not in LINEAR_KINDS + GLM_KINDS:
            raise DataError(f"unknown method kind {self.kind!r}")
        object.__setattr__(self, "delta_grid", tuple(float(d) for d in self.delta_grid))
        object.__setattr__(self, "phi_grid", tuple(float(f) for f in self.phi_grid))
        if not self.delta_grid or any(not 0.0 <= d <= 1.0 for d in self.delta_grid):
            raise DataError("delta grid must be a nonempty subset of [0, 1]")
        if not self.phi_grid or any(not 0.0 <= f <= 1.0 for f in self.phi_grid):
            raise DataError("phi grid must be a nonempty subset of [0, 1]")
        if self.l_star_max is not None and self.l_star_max < 0:
            raise DataError("l_star_max must be >= 0")

    @property
    def is_glm(self) -> bool:
        return self.kind in GLM_KINDS

    def block_limit(self, n: int) -> int:
        if self.l_star_max is not None:
            return int(self.l_star_max)
        return int(min(20, n // 4))


def GlobalFlash(delta_grid=DELTA_GRID, phi_grid=PHI_GRID) -> Method:
    return Method("FLASH_G", "global", tuple(delta_grid), None, tuple(phi_grid))


def BlockFlash(l_star_max: int | None = None, phi_grid=PHI_GRID) -> Method:
    return Method("FLASH_B", "block", (0.0,), l_star_max, tuple(phi_grid))


def Lasso() -> Method:
    return Method("Lasso", "lasso", (0.0,), None, (0.0,))


def Relaxo(phi_grid=PHI_GRID) -> Method:
    return Method("Relaxo", "relaxo", (0.0,), None, tuple(phi_grid))


def Forward() -> Method:
    return Method("Forward", "forward", (1.0,), None, (0.0,))


def GLasso() -> Method:
    return Method("GLasso", "glasso", (0.0,), None, (0.0,))


def GRelaxo(phi_grid=PHI_GRID) -> Method:
    return Method("GRelaxo", "grelaxo", (0.0,), None, tuple(phi_grid))


def GForward() -> Method:
    return Method("GForward", "gforward", (1.0,), None, (0.0,))


def GlmBlockFlash(l_star_max: int | None = None) -> Method:
    return Method("GLM-FLASH_B", "gblock", (0.0,), l_star_max, (0.0,))


METHODS = {
    "FLASH_G": GlobalFlash,
    "FLASH_B": BlockFlash,
    "Lasso": Lasso,
    "Relaxo": Relaxo,
    "Forward": Forward,
    "GLasso": GLasso,
    "GRelaxo": GRelaxo,
    "GForward": GForward,
    "GLM-FLASH_B": GlmBlockFlash,
}


def method_by_name(name: str) -> Method:
    try:
        return METHODS[name]()
    except KeyError:
        raise DataError(f"unknown method {name!r}; choose from {', '.join(METHODS)}") from None


# --------------------------------------------------------------------------
# Candidates
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CandidatePoint:
    """One ``(schedule, step, phi)`` coordinate and its coefficients and score.

    ``coef`` is ``None`` for cross-validation table rows, which exist only
    as fold averages.
    """

    schedule: DeltaSchedule
    step: int
    phi: float
    coef: Optional[CoefficientEstimate]
    score: float = float("nan")
    nonzeros: int = -1

    def __post_init__(self):
        if self.nonzeros < 0 and self.coef is not None:
            object.__setattr__(self, "nonzeros", int(np.count_nonzero(self.coef.beta)))

    @property
    def key(self) -> tuple[str, float]:
        """``("l_star", l)`` for block schedules, ``("delta", d)`` otherwise."""
        if self.schedule.kind == "block":
            return "l_star", self.schedule.l_star
        return "delta", self.schedule.delta

    @property
    def coordinate(self) -> tuple:
        return self.key + (self.step, self.phi)

    def row(self) -> dict:
        name, value = self.key
        return {name: value, "step": self.step, "phi": self.phi, "score": self.score,
                "nonzeros": self.nonzeros}


@dataclass(frozen=True)
class TuningResult:
    method: str
    best: CandidatePoint
    table: tuple[CandidatePoint, ...]
    mode: str = "validation"

    def to_dict(self) -> dict:
        b = self.best
        name, value = b.key
        best = {name: value, "step": b.step, "phi": b.phi, "score": b.score}
        if b.coef is not None:
            best.update(support=list(b.coef.support), beta=b.coef.beta.tolist(),
                        intercept=b.coef.intercept)
        return {"method": self.method, "mode": self.mode, "best": best,
                "table": [c.row() for c in self.table]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def enumerate_candidates(path: FlashPath, phi_grid=PHI_GRID) -> list[CandidatePoint]:
    """One unscored candidate per (breakpoint, phi) pair."""
    if len(path) == 0:
        raise DataError("path has no breakpoints")
    out = []
    for step in range(1, len(path) + 1):
        for phi in phi_grid:
            out.append(CandidatePoint(path.schedule, step, float(phi),
                                      path.coefficients_at(step, phi)))
    return out


def _glm_ml_refit(gd: GlmData, active, warm) -> tuple[float, np.ndarray]:
    try:
        pt = glm_corrector(gd, active, np.zeros(len(active)), warm)
        return pt.intercept, np.array(pt.beta)
    except ConvergenceError as exc:
        beta = np.zeros(gd.p)
        beta[list(active)] = exc.iterate[1]
        return exc.iterate[0], beta


def enumerate_glm_candidates(gd: GlmData, path: GlmPath, phi_grid=(0.0,)
                             ) -> list[CandidatePoint]:
    """Candidates for every non-initial path point; ``phi > 0`` moves toward
    the unpenalized fit on the point's active set."""
    out = []
    refits: dict[frozenset, tuple[float, np.ndarray]] = {}
    for idx, pt in enumerate(path.points):
        if pt.kind == "start":
            continue
        for phi in phi_grid:
            if phi == 0.0:
                b0, beta = pt.intercept, np.array(pt.beta)
            else:
                key = frozenset(pt.active)
                if key not in refits:
                    refits[key] = _glm_ml_refit(gd, pt.active, pt)
                m0, mb = refits[key]
                b0 = (1.0 - phi) * pt.intercept + phi * m0
                beta = (1.0 - phi) * pt.beta + phi * mb
            coef = glm_destandardize(beta, b0, gd.scaling)
            out.append(CandidatePoint(path.schedule, idx, float(phi), coef))
    return out


# --------------------------------------------------------------------------
# Path fitting per method
# --------------------------------------------------------------------------


def _linear_candidates(train: Dataset, method: Method, max_steps=None) -> list[CandidatePoint]:
    sd = standardize(train)
    paths: list[FlashPath] = []
    if method.kind == "global":
        paths = [fit_flash_path(sd, d, max_steps) for d in method.delta_grid]
    elif method.kind in ("lasso", "relaxo"):
        paths = [fit_flash_path(sd, 0.0, max_steps)]
    elif method.kind == "forward":
        paths = [fit_flash_path(sd, 1.0, max_steps)]
    elif method.kind == "block":
        limit = method.block_limit(sd.n)
        if limit == 0:
            paths = [fit_flash_path(sd, DeltaSchedule.block(0), max_steps)]
        else:
            paths = list(fit_block_paths(sd, limit, max_steps).values())
    out = []
    for path in paths:
        if len(path):
            out.extend(enumerate_candidates(path, method.phi_grid))
    return out


@dataclass(frozen=True)
class GlmOptions:
    """Speed knobs for the GLM path fits used in tuning."""

    eps: float = 0.05
    max_points: Optional[int] = None
    max_active: Optional[int] = None
    lam_min_ratio: float = 1e-6


def _glm_candidates(train: Dataset, method: Method, opts: GlmOptions,
                    family: str = "bernoulli") -> list[CandidatePoint]:
    gd = GlmData.from_dataset(train, family)
    kw = dict(max_points=opts.max_points, lam_min_ratio=opts.lam_min_ratio,
              max_active=opts.max_active)
    if method.kind in ("glasso", "grelaxo"):
        paths = [fit_glm_flash_path(gd, 0.0, opts.eps, **kw)]
    elif method.kind == "gforward":
        cap = min(gd.p, gd.n - 1)
        if opts.max_active is not None:
            cap = min(cap, opts.max_active)
        paths = [glm_forward_path(gd, cap)]
    else:
        limit = method.block_limit(gd.n)
        if limit == 0:
            paths = [fit_glm_flash_path(gd, DeltaSchedule.block(0), opts.eps, **kw)]
        else:
            paths = [p for p in glm_block_paths(gd, limit, opts.eps, **kw).values()
                     if "l_star_unreachable" not in p.flags]
            if not paths:
                paths = [fit_glm_flash_path(gd, DeltaSchedule.block(0), opts.eps, **kw)]
    out = []
    for path in paths:
        out.extend(enumerate_glm_candidates(gd, path, method.phi_grid))
    return out


def _score_linear(coef: CoefficientEstimate, X: np.ndarray, y: np.ndarray) -> float:
    r = y - coef.predict(X)
    return float(r @ r) / len(y)


def _score_glm(coef: CoefficientEstimate, X: np.ndarray, y: np.ndarray, family: str) -> float:
    return deviance_from_mu(y, _mean(coef.predict(X), family), family)


def _pick(cands: list[CandidatePoint], scale: float) -> CandidatePoint:
    if not cands:
        raise DataError("no candidates to select from")
    scores = np.array([c.score for c in cands])
    best = float(np.nanmin(scores))
    tol = TIE_RTOL * max(abs(best), scale)
    tied = [c for c in cands if c.score <= best + tol]
    return min(tied, key=lambda c: (c.nonzeros, c.step, c.score))


def _score_scale(valid: Dataset) -> float:
    return float(np.mean(valid.y ** 2)) or 1.0


# --------------------------------------------------------------------------
# Selectors
# --------------------------------------------------------------------------


def validation_select(train: Dataset, valid: Dataset, method: Method | str, *,
                      max_steps: int | None = None, glm: GlmOptions | None = None,
                      family: str = "bernoulli") -> TuningResult:
    """Fit on ``train``, score every candidate on ``valid``, return the best.

    Parameters
    ----------
    train, valid : Dataset
        Must have the same columns.
    method : Method or str
        Linear methods score by mean squared error, GLM methods by deviance.
    max_steps : int, optional
        Step cap for linear paths.
    glm : GlmOptions, optional
        Grid and size limits for GLM paths.
    family : str
        Response family for GLM methods.
    """
    if isinstance(method, str):
        method = method_by_name(method)
    if valid.n == 0:
        raise DataError("validation set is empty")
    if valid.p != train.p:
        raise DataError(f"train has {train.p} predictors but validation has {valid.p}")
    if method.is_glm:
        cands = _glm_candidates(train, method, glm or GlmOptions(), family)
        scored = [replace(c, score=_score_glm(c.coef, valid.X, valid.y, family)) for c in cands]
        scale = 1.0
    else:
        cands = _linear_candidates(train, method, max_steps)
        scored = [replace(c, score=_score_linear(c.coef, valid.X, valid.y)) for c in cands]
        scale = _score_scale(valid)
    return TuningResult(method.name, _pick(scored, scale), tuple(scored), "validation")


def fold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Contiguous blocks of a seeded random permutation of ``range(n)``."""
    if k < 2:
        raise DataError(f"need at least 2 folds, got {k}")
    if k > n:
        raise DataError(f"{k} folds requested for only {n} observations")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(block) for block in np.array_split(perm, k)]


def kfold_cv_select(d: Dataset, k: int, method: Method | str, seed: int = 0, *,
                    max_steps: int | None = None, glm: GlmOptions | None = None,
                    family: str = "bernoulli") -> TuningResult:
    """K-fold cross-validation over the method's candidate coordinates.

    Each coordinate's score is the mean of its per-fold errors.  Only
    coordinates reached in every fold are eligible.  The winner is refit on
    all of ``d``; if the full-data path is shorter, its last step is used.
    """
    if isinstance(method, str):
        method = method_by_name(method)
    folds = fold_indices(d.n, k, seed)
    per_coord: dict[tuple, list[float]] = {}
    first: dict[tuple, CandidatePoint] = {}
    for f, test_idx in enumerate(folds):
        mask = np.ones(d.n, dtype=bool)
        mask[test_idx] = False
        # a test fold may hold a single row, so it stays as raw arrays
        train = d.subset(np.flatnonzero(mask))
        Xt, yt = d.X[test_idx], d.y[test_idx]
        if method.is_glm:
            cands = _glm_candidates(train, method, glm or GlmOptions(), family)
            scores = [_score_glm(c.coef, Xt, yt, family) for c in cands]
        else:
            cands = _linear_candidates(train, method, max_steps)
            scores = [_score_linear(c.coef, Xt, yt) for c in cands]
        for c, s in zip(cands, scores):
            per_coord.setdefault(c.coordinate, []).append(s)
            first.setdefault(c.coordinate, c)
    table = []
    for coord, scores in per_coord.items():
        if len(scores) == k:
            c = first[coord]
            table.append(CandidatePoint(c.schedule, c.step, c.phi, None,
                                        float(np.mean(scores)), c.nonzeros))
    if not table:
        raise DataError("no candidate coordinate is shared by all folds")
    best = _pick(table, 1.0 if method.is_glm else _score_scale(d))
    # refit on all data at the chosen coordinate
    if method.is_glm:
        full = _glm_candidates(d, method, glm or GlmOptions(), family)
    else:
        full = _linear_candidates(d, method, max_steps)
    same_key = [c for c in full if c.key == best.key and c.phi == best.phi]
    if not same_key:
        raise DataError("the selected schedule produced no path on the full data")
    step = min(best.step, max(c.step for c in same_key))
    refit = next(c for c in same_key if c.step == step)
    nnz = int(np.count_nonzero(refit.coef.beta))
    best = CandidatePoint(best.schedule, best.step, best.phi, refit.coef, best.score, nnz)
    return TuningResult(method.name, best, tuple(table), "cv")


def _select(train, valid_or_cv, method, seed, **kw) -> TuningResult:
    if isinstance(valid_or_cv, Dataset):
        return validation_select(train, valid_or_cv, method, **kw)
    return kfold_cv_select(train, int(valid_or_cv), method, seed, **kw)


def fit_global_flash(train: Dataset, valid_or_cv: Dataset | int, delta_grid=DELTA_GRID,
                     phi_grid=PHI_GRID, seed: int = 0, **kw) -> TuningResult:
    """Global FLASH tuned on a validation set or, given an integer, by k-fold CV."""
    return _select(train, valid_or_cv, GlobalFlash(delta_grid, phi_grid), seed, **kw)


def fit_block_flash(train: Dataset, valid_or_cv: Dataset | int, l_star_max: int | None = None,
                    phi_grid=PHI_GRID, seed: int = 0, **kw) -> TuningResult:
    """Block FLASH tuned on a validation set or, given an integer, by k-fold CV."""
    return _select(train, valid_or_cv, BlockFlash(l_star_max, phi_grid), seed, **kw)
