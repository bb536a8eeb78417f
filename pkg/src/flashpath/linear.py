"""Piecewise-linear FLASH path for least squares.

The path starts from the null model and, at each step, activates the
predictor with the largest absolute residual correlation, then moves the
active coefficients along the least-squares direction

    h_A = (X_A^T X_A)^{-1} c_A

by ``gamma = gamma_L + delta_l * (1 - gamma_L)``, where ``gamma_L`` is the
Lasso (LARS) step length and ``gamma = 1`` lands on the active-set OLS fit.
``delta_l = 0`` reproduces the Lasso path (with the usual drop rule for
coefficients that cross zero) and ``delta_l = 1`` reproduces Forward
Selection.

Every breakpoint also stores the end point of its relaxation segment,
``beta_start + h``, which is the OLS fit on the active set.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ._cholesky import GramFactor
from .data import CoefficientEstimate, Scaling, StandardizedDataset, destandardize
from .exceptions import DataError, SingularGramError, StepBudgetError

CORR_TOL = 1e-8
EVENT_TOL = 1e-10
DENOM_TOL = 1e-12


# --------------------------------------------------------------------------
# Shrinkage schedules
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaSchedule:
    """Per-step shrinkage plan.

    Use the constructors :meth:`global_`, :meth:`block` and :meth:`explicit`.
    Steps are numbered from 1.
    """

    kind: str
    delta: float = 0.0
    l_star: int = 0
    deltas: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "global":
            if not 0.0 <= self.delta <= 1.0:
                raise DataError(f"delta must lie in [0, 1], got {self.delta}")
        elif self.kind == "block":
            # l_star = 0 never takes the forward step: the plain L1 path
            if self.l_star < 0:
                raise DataError(f"block break point must be >= 0, got {self.l_star}")
        elif self.kind == "explicit":
            object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
            if any(not 0.0 <= d <= 1.0 for d in self.deltas):
                raise DataError("explicit deltas must lie in [0, 1]")
        else:
            raise DataError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def global_(cls, delta: float) -> "DeltaSchedule":
        return cls("global", delta=float(delta))

    @classmethod
    def block(cls, l_star: int) -> "DeltaSchedule":
        return cls("block", l_star=int(l_star))

    @classmethod
    def explicit(cls, deltas: Iterable[float]) -> "DeltaSchedule":
        return cls("explicit", deltas=tuple(deltas))

    def delta_at(self, step: int) -> float:
        if self.kind == "global":
            return self.delta
        if self.kind == "block":
            return 1.0 if step == self.l_star else 0.0
        return self.deltas[step - 1] if step <= len(self.deltas) else 0.0

    def to_dict(self) -> dict:
        if self.kind == "global":
            return {"kind": "global", "delta": self.delta}
        if self.kind == "block":
            return {"kind": "block", "l_star": self.l_star}
        return {"kind": "explicit", "deltas": list(self.deltas)}

    @classmethod
    def from_dict(cls, d: dict) -> "DeltaSchedule":
        if d["kind"] == "global":
            return cls.global_(d["delta"])
        if d["kind"] == "block":
            return cls.block(d["l_star"])
        return cls.explicit(d["deltas"])


# --------------------------------------------------------------------------
# Path records
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PathState:
    """Snapshot of the path between steps (coefficients on the standardized scale).

    ``suspended`` maps a variable removed after its coefficient hit zero to
    the absolute correlation it would have had, had it stayed active.
    """

    beta: np.ndarray
    active: tuple[int, ...]
    suspended: dict
    step: int
    corr: np.ndarray
    barred: frozenset = frozenset()

    @classmethod
    def initial(cls, sd: StandardizedDataset) -> "PathState":
        return cls(np.zeros(sd.p), (), {}, 0, sd.Xs.T @ sd.ys)


@dataclass(frozen=True)
class Breakpoint:
    """One linear piece of the path, from ``beta_start`` to ``beta_end``.

    ``step`` numbers breakpoints consecutively; ``flash_step`` is the
    algorithm step (one per activated variable) the piece belongs to.
    A step that is interrupted by a zero crossing or a rejoin produces
    several pieces.  ``entered`` is the variable that joined the active set
    right before this piece and ``removed`` lists variables dropped at its end.
    """

    step: int
    flash_step: int
    delta: float
    active_before: tuple[int, ...]
    direction: np.ndarray
    gamma_L: float
    gamma: float
    beta_start: np.ndarray
    beta_end: np.ndarray
    relax_end: np.ndarray
    entered: Optional[int]
    removed: tuple[int, ...]
    max_abs_corr: float
    active_after: tuple[int, ...] = ()

    def relaxation_point(self, phi: float) -> np.ndarray:
        return relaxation_point(self, phi)

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "flash_step": self.flash_step,
            "delta": self.delta,
            "entered": self.entered,
            "removed": list(self.removed),
            "gamma_L": self.gamma_L,
            "gamma": self.gamma,
            "max_abs_corr": self.max_abs_corr,
            "active": list(self.active_before),
            "beta_end": self.beta_end.tolist(),
            "relax_end": self.relax_end.tolist(),
        }


@dataclass(frozen=True)
class FlashPath:
    breakpoints: tuple[Breakpoint, ...]
    schedule: DeltaSchedule
    scaling: Scaling
    warnings: tuple[str, ...] = ()

    def __len__(self):
        return len(self.breakpoints)

    def coefficients_at(self, step: int, phi: float = 0.0) -> CoefficientEstimate:
        return path_coefficients_at(self, step, phi)

    def to_dict(self) -> dict:
        return {
            "schedule": self.schedule.to_dict(),
            "standardization": self.scaling.to_dict(),
            "breakpoints": [b.to_dict() for b in self.breakpoints],
            "warnings": list(self.warnings),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


# --------------------------------------------------------------------------
# Step geometry
# --------------------------------------------------------------------------


def direction_vector(sd: StandardizedDataset, active: Sequence[int], c_active) -> np.ndarray:
    """Least-squares direction ``h`` with ``h_A = (X_A^T X_A)^{-1} c_A``."""
    active = list(active)
    h = np.zeros(sd.p)
    if not active:
        return h
    gram = GramFactor(sd.Xs)
    for j in active:
        if not gram.append(j):
            raise SingularGramError(
                f"column {j} is linearly dependent on the other active columns", index=j
            )
    h[active] = gram.solve(np.asarray(c_active, dtype=float))
    return h


def _lasso_candidates(c, a, istar, candidates) -> np.ndarray:
    ci, ai = c[istar], a[istar]
    cj, aj = c[candidates], a[candidates]
    num = np.concatenate([ci - cj, ci + cj])
    den = np.concatenate([ai - aj, ai + aj])
    ok = np.abs(den) > DENOM_TOL
    g = np.full(num.shape, np.inf)
    g[ok] = num[ok] / den[ok]
    return g


def _gamma_lasso(c, a, active, candidates) -> float:
    if len(candidates) == 0 or len(active) == 0:
        return 1.0
    active = np.asarray(active)
    istar = active[np.argmax(np.abs(c[active]))]
    g = _lasso_candidates(c, a, istar, np.asarray(candidates))
    g = g[(g > DENOM_TOL) & (g < 1.0)]
    return float(g.min()) if g.size else 1.0


def _inactive_candidates(p, active, suspended, barred) -> np.ndarray:
    mask = np.ones(p, dtype=bool)
    mask[list(active)] = False
    mask[list(suspended)] = False
    mask[list(barred)] = False
    return np.flatnonzero(mask)


def gamma_lasso(sd: StandardizedDataset, state: PathState, h) -> float:
    """Step length along ``h`` until an inactive absolute correlation ties
    the largest active one (1 when no such tie happens before the OLS point).

    Suspended and barred variables do not compete.
    """
    h = np.asarray(h, dtype=float)
    a = sd.Xs.T @ (sd.Xs @ h)
    cand = _inactive_candidates(sd.p, state.active, state.suspended, state.barred)
    return _gamma_lasso(state.corr, a, state.active, cand)


def gamma_forward_check(sd: StandardizedDataset, state: PathState, h) -> float:
    """Step length until the active correlations vanish; equals 1 by construction."""
    h = np.asarray(h, dtype=float)
    active = np.asarray(state.active)
    istar = active[np.argmax(np.abs(state.corr[active]))]
    return float(state.corr[istar] / (sd.Xs[:, istar] @ (sd.Xs @ h)))


def zero_cross_gamma(state: PathState, h, upper: float = math.inf):
    """Earliest ``gamma`` in ``(0, upper)`` at which an active, nonzero
    coefficient reaches zero along ``h``; ``None`` if there is none.

    Returns ``(gamma0, j)``.
    """
    h = np.asarray(h, dtype=float)
    act = np.asarray(state.active, dtype=int)
    if act.size == 0:
        return None
    b, hj = state.beta[act], h[act]
    ok = (b != 0.0) & (hj != 0.0)
    g0 = np.full(act.size, np.inf)
    g0[ok] = -b[ok] / hj[ok]
    g0[(g0 <= EVENT_TOL) | (g0 >= upper)] = np.inf
    k = int(np.argmin(g0))
    if not np.isfinite(g0[k]):
        return None
    return float(g0[k]), int(act[k])


def _rejoin_gamma(c, a, suspended, upper):
    best = None
    for j in sorted(suspended):
        r = suspended[j]
        for num, den in ((c[j] - r, a[j] - r), (c[j] + r, a[j] + r)):
            if abs(den) <= DENOM_TOL:
                continue
            g = num / den
            if EVENT_TOL < g < upper and (best is None or g < best[0]):
                best = (float(g), int(j))
    return best


# --------------------------------------------------------------------------
# Engine
# --------------------------------------------------------------------------


class _Engine:
    """Mutable fitting state; one instance per path fit."""

    def __init__(self, sd: StandardizedDataset, state: PathState | None = None,
                 corr_tol: float | None = None):
        self.sd = sd
        self.X = sd.Xs
        self.n, self.p = sd.Xs.shape
        self.cap = min(self.p, self.n - 1)
        self.tol = corr_tol if corr_tol is not None else CORR_TOL * max(
            1.0, float(np.linalg.norm(sd.ys)))
        self.gram = GramFactor(self.X)
        self.warnings: list[str] = []
        self.breakpoints: list[Breakpoint] = []
        if state is None:
            state = PathState.initial(sd)
        self.beta = np.array(state.beta, dtype=float)
        self.active: list[int] = []
        for j in state.active:
            if not self.gram.append(j):
                raise SingularGramError(f"active column {j} is collinear", index=j)
            self.active.append(j)
        self.suspended = dict(state.suspended)
        self.barred = set(state.barred)
        self.step_no = state.step
        self.c = self._correlations()

    def clone(self) -> "_Engine":
        other = object.__new__(_Engine)
        other.__dict__.update(self.__dict__)
        other.gram = GramFactor(self.X)
        other.gram.active = list(self.gram.active)
        other.gram.L = self.gram.L.copy()
        other.warnings = list(self.warnings)
        other.breakpoints = list(self.breakpoints)
        other.beta = self.beta.copy()
        other.active = list(self.active)
        other.suspended = dict(self.suspended)
        other.barred = set(self.barred)
        other.c = self.c.copy()
        return other

    def _correlations(self) -> np.ndarray:
        return self.X.T @ (self.sd.ys - self.X @ self.beta)

    def state(self) -> PathState:
        return PathState(self.beta.copy(), tuple(self.active), dict(self.suspended),
                         self.step_no, self.c.copy(), frozenset(self.barred))

    def max_abs_corr(self) -> float:
        if self.barred:
            mask = np.ones(self.p, dtype=bool)
            mask[list(self.barred)] = False
            return float(np.abs(self.c[mask]).max(initial=0.0))
        return float(np.abs(self.c).max())

    def _add(self, j: int) -> bool:
        if self.gram.append(j):
            self.active.append(j)
            return True
        self.barred.add(j)
        msg = f"variable {j} is collinear with the active set and was skipped"
        self.warnings.append(msg)
        warnings.warn(msg, stacklevel=3)
        return False

    def _activate(self) -> Optional[int]:
        if len(self.active) >= self.cap:
            return None
        absc = np.abs(self.c)
        ready = sorted(j for j, r in self.suspended.items()
                       if absc[j] >= r - 1e-12 * max(1.0, r))
        for j in ready:
            del self.suspended[j]
            if self._add(j):
                return j
        while True:
            cand = _inactive_candidates(self.p, self.active, self.suspended, self.barred)
            if cand.size == 0:
                return None
            j = int(cand[np.argmax(absc[cand])])
            if absc[j] <= self.tol:
                return None
            if self._add(j):
                return j

    def done(self) -> bool:
        if self.max_abs_corr() <= self.tol:
            return True
        if len(self.active) >= self.cap:
            return float(np.abs(self.c[self.active]).max()) <= self.tol
        return False

    def advance(self, delta: float) -> list[Breakpoint]:
        """Run one algorithm step with shrinkage ``delta``."""
        self.step_no += 1
        entered = self._activate()
        pieces: list[Breakpoint] = []
        budget = 4 * self.p + 10
        for _ in range(budget):
            if not self.active:
                break
            act = list(self.active)
            hA = self.gram.solve(self.c[act])
            h = np.zeros(self.p)
            h[act] = hA
            a = self.X.T @ (self.X[:, act] @ hA)
            if len(act) >= self.cap:
                cand = np.zeros(0, dtype=int)
            else:
                cand = _inactive_candidates(self.p, act, self.suspended, self.barred)
            gL = _gamma_lasso(self.c, a, act, cand)
            gamma = gL + delta * (1.0 - gL)

            event = None
            if delta < 1.0:
                zc = zero_cross_gamma(_view(self.beta, act), h, gamma)
                if zc is not None:
                    event = ("remove",) + zc
            rj = None
            if len(act) < self.cap:
                rj = _rejoin_gamma(self.c, a, self.suspended,
                                   event[1] if event else gamma)
            if rj is not None:
                event = ("rejoin",) + rj
            move = event[1] if event else gamma

            beta_start = self.beta.copy()
            c_before = self.c
            self.beta = beta_start + move * h
            removed: tuple[int, ...] = ()
            if event and event[0] == "remove":
                j = event[2]
                self.beta[j] = 0.0
            self.c = self._correlations()
            scale = 1.0 - move
            for k in self.suspended:
                self.suspended[k] *= scale
            next_entered = None
            if event and event[0] == "remove":
                j = event[2]
                self.suspended[j] = abs(c_before[j]) * scale
                self.active.remove(j)
                self.gram.remove(j)
                removed = (j,)
            elif event and event[0] == "rejoin":
                j = event[2]
                del self.suspended[j]
                if self._add(j):
                    next_entered = j

            pieces.append(Breakpoint(
                step=len(self.breakpoints) + len(pieces) + 1,
                flash_step=self.step_no,
                delta=float(delta),
                active_before=tuple(act),
                direction=_ro(h),
                gamma_L=float(gL),
                gamma=float(move),
                beta_start=_ro(beta_start),
                beta_end=_ro(self.beta.copy()),
                relax_end=_ro(beta_start + h),
                entered=entered,
                removed=removed,
                max_abs_corr=self.max_abs_corr(),
                active_after=tuple(self.active),
            ))
            entered = next_entered
            if event is None:
                break
        else:
            raise StepBudgetError(
                f"step {self.step_no} needed more than {budget} events")
        self.breakpoints.extend(pieces)
        return pieces


def _ro(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _view(beta, active) -> PathState:
    # lightweight state for zero_cross_gamma
    return PathState(beta, tuple(active), {}, 0, beta)


def advance_step(sd: StandardizedDataset, state: PathState, delta: float):
    """Advance ``state`` by one algorithm step; return ``(new_state, pieces)``."""
    if not 0.0 <= delta <= 1.0:
        raise DataError(f"delta must lie in [0, 1], got {delta}")
    eng = _Engine(sd, state)
    pieces = eng.advance(delta)
    return eng.state(), pieces


def fit_flash_path(sd: StandardizedDataset, schedule: DeltaSchedule | float = 0.0,
                   max_steps: int | None = None) -> FlashPath:
    """Fit the FLASH path on standardized data.

    Parameters
    ----------
    sd : StandardizedDataset
    schedule : DeltaSchedule or float
        A bare float is read as a global shrinkage ``delta``.
    max_steps : int, optional
        Cap on algorithm steps; defaults to ``8 * min(n, p)``.
    """
    if not isinstance(schedule, DeltaSchedule):
        schedule = DeltaSchedule.global_(schedule)
    if max_steps is None:
        max_steps = 8 * min(sd.n, sd.p)
    if max_steps < 1:
        raise DataError("max_steps must be >= 1")
    eng = _run(_Engine(sd), schedule, max_steps)
    return FlashPath(tuple(eng.breakpoints), schedule, sd.scaling, tuple(eng.warnings))


def _run(eng: _Engine, schedule: DeltaSchedule, max_steps: int) -> _Engine:
    while eng.step_no < max_steps and not eng.done():
        before = len(eng.breakpoints)
        eng.advance(schedule.delta_at(eng.step_no + 1))
        if len(eng.breakpoints) == before:
            break
    return eng


def fit_block_paths(sd: StandardizedDataset, l_star_max: int,
                    max_steps: int | None = None) -> dict[int, FlashPath]:
    """Block paths for ``l_star = 1..l_star_max``.

    All of them agree with the ``delta = 0`` path up to step ``l_star - 1``,
    so that prefix is computed once.
    """
    if max_steps is None:
        max_steps = 8 * min(sd.n, sd.p)
    eng = _Engine(sd)
    out: dict[int, FlashPath] = {}
    for l_star in range(1, l_star_max + 1):
        schedule = DeltaSchedule.block(l_star)
        branch = _run(eng.clone(), schedule, max_steps)
        out[l_star] = FlashPath(tuple(branch.breakpoints), schedule, sd.scaling,
                                tuple(branch.warnings))
        if eng.step_no >= max_steps or eng.done():
            continue
        eng.advance(0.0)
    return out


def relaxation_point(b: Breakpoint, phi: float) -> np.ndarray:
    """``(1 - phi) * beta_end + phi * relax_end``."""
    if not 0.0 <= phi <= 1.0:
        raise DataError(f"phi must lie in [0, 1], got {phi}")
    if phi == 0.0:
        return np.array(b.beta_end)
    if phi == 1.0:
        return np.array(b.relax_end)
    return (1.0 - phi) * b.beta_end + phi * b.relax_end


def path_coefficients_at(path: FlashPath, step: int, phi: float = 0.0) -> CoefficientEstimate:
    """Original-scale coefficients at breakpoint ``step`` (1-based), relaxed by ``phi``."""
    if not 1 <= step <= len(path.breakpoints):
        raise IndexError(f"step {step} outside 1..{len(path.breakpoints)}")
    return destandardize(relaxation_point(path.breakpoints[step - 1], phi), path.scaling)
