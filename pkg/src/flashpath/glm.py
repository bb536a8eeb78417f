"""FLASH for generalized linear models (Bernoulli-logit and Gaussian-identity).

The path is traced on a multiplicative grid of per-coordinate penalties.
At every grid point the weighted L1 problem

    minimize  -loglik(b0, beta) + sum_{j in A} lam_j |beta_j|,  beta_{A^c} = 0

is solved exactly (the *corrector*), warm-started from a linear
extrapolation of the two previous solutions (the *predictor*).  When an
inactive gradient catches up with the largest active penalty, or an active
coefficient reaches zero, the active penalties are scaled by ``1 - delta``
before the active set is updated.  ``delta = 0`` gives the L1-penalized
(GLasso) path and ``delta = 1`` gives greedy forward selection with
maximum-likelihood refits.

The intercept is never penalized.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, solve

from .data import CoefficientEstimate, Dataset, Scaling, standardize
from .exceptions import ConvergenceError, DataError
from .linear import DeltaSchedule

ETA_CLAMP = 30.0
W_FLOOR = 1e-6
MU_CLIP = 1e-12
FAMILIES = ("bernoulli", "gaussian")


@dataclass(frozen=True)
class GlmData:
    """Standardized design ``X``, raw response ``y`` and the response family."""

    X: np.ndarray
    y: np.ndarray
    family: str = "bernoulli"
    scaling: Optional[Scaling] = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.family not in FAMILIES:
            raise DataError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise DataError(f"inconsistent shapes X{X.shape}, y{y.shape}")
        if self.family == "bernoulli":
            if not np.all((y == 0) | (y == 1)):
                raise DataError("Bernoulli response must be coded 0/1")
            if y.min() == y.max():
                raise DataError("Bernoulli response has a single class")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_dataset(cls, d: Dataset, family: str = "bernoulli") -> "GlmData":
        """Standardize the predictors of ``d``; the response is kept as is."""
        sd = standardize(Dataset(d.X, d.y - d.y.mean() + 0.0, d.column_names))
        scaling = Scaling(sd.col_means, sd.col_scales, 0.0)
        return cls(sd.Xs, d.y, family, scaling)


# --------------------------------------------------------------------------
# Likelihood pieces
# --------------------------------------------------------------------------


def _eta(gd: GlmData, beta, intercept) -> np.ndarray:
    return intercept + gd.X @ np.asarray(beta, dtype=float)


def _mean(eta: np.ndarray, family: str) -> np.ndarray:
    if family == "gaussian":
        return eta
    return 1.0 / (1.0 + np.exp(-np.clip(eta, -ETA_CLAMP, ETA_CLAMP)))


def _loglik_eta(y, eta, family) -> float:
    if family == "gaussian":
        return float(y @ eta - 0.5 * eta @ eta)
    e = np.clip(eta, -ETA_CLAMP, ETA_CLAMP)
    return float(y @ e - np.logaddexp(0.0, e).sum())


def glm_mu(gd: GlmData, beta, intercept: float) -> np.ndarray:
    """Fitted means: inverse-logit (linear predictor clamped to +-30) or identity."""
    return _mean(_eta(gd, beta, intercept), gd.family)


def glm_loglik(gd: GlmData, beta, intercept: float) -> float:
    """Canonical-link log likelihood ``sum(y*eta - b(eta))``."""
    return _loglik_eta(gd.y, _eta(gd, beta, intercept), gd.family)


def glm_gradient_corr(gd: GlmData, beta, intercept: float) -> np.ndarray:
    """``X^T (y - mu)``, the log-likelihood gradient in ``beta``."""
    return gd.X.T @ (gd.y - glm_mu(gd, beta, intercept))


def null_intercept(gd: GlmData) -> float:
    ybar = float(gd.y.mean())
    if gd.family == "gaussian":
        return ybar
    return float(np.log(ybar / (1.0 - ybar)))


def deviance_from_mu(y, mu, family: str = "bernoulli") -> float:
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if family == "gaussian":
        r = y - mu
        return float(r @ r)
    m = np.clip(mu, MU_CLIP, 1.0 - MU_CLIP)
    return float(-2.0 * (y @ np.log(m) + (1.0 - y) @ np.log1p(-m)))


def deviance(gd: GlmData, mu) -> float:
    """Bernoulli deviance ``-2 sum[y log mu + (1-y) log(1-mu)]`` or the RSS."""
    return deviance_from_mu(gd.y, mu, gd.family)


# --------------------------------------------------------------------------
# Weighted L1 quadratic subproblem
# --------------------------------------------------------------------------


def _qp_objective(H, b, lam, x) -> float:
    return float(0.5 * x @ H @ x - b @ x + lam @ np.abs(x))


def _solve_pd(A, rhs):
    try:
        return solve(A, rhs, assume_a="pos", check_finite=False)
    except LinAlgError:
        return np.linalg.lstsq(A, rhs, rcond=None)[0]


def _l1_qp(H, b, lam, x0) -> np.ndarray:
    """Minimize ``0.5 x'Hx - b'x + sum(lam*|x|)`` by feature-sign search.

    Entries with ``lam == 0`` are unpenalized.  ``x0`` is the warm start.
    """
    m = b.size
    free = lam <= 0.0
    x = np.array(x0, dtype=float)
    tol = 1e-10 * max(1.0, float(np.abs(b).max()))
    theta = np.sign(x)
    theta[free] = 0.0
    for _ in range(20 * m + 50):
        grad = H @ x - b
        nz = (x != 0.0) | free
        if np.abs(grad[nz] + lam[nz] * theta[nz]).max(initial=0.0) <= tol:
            excess = np.abs(grad) - lam
            excess[nz] = -np.inf
            i = int(np.argmax(excess))
            if excess[i] <= tol:
                return x
            theta[i] = -np.sign(grad[i])
            act = nz.copy()
            act[i] = True
        else:
            act = nz
        A = np.flatnonzero(act)
        x_new = np.zeros(m)
        x_new[A] = _solve_pd(H[np.ix_(A, A)], b[A] - lam[A] * theta[A])
        # candidate points: the new solution and every sign change on the way
        ts = [1.0]
        flip = act & ~free & (x != 0.0) & (np.sign(x_new) != np.sign(x))
        for i in np.flatnonzero(flip):
            t = x[i] / (x[i] - x_new[i])
            if 0.0 < t < 1.0:
                ts.append(float(t))
        f0 = _qp_objective(H, b, lam, x)
        best_f, best_x = np.inf, None
        for t in ts:
            cand = x + t * (x_new - x)
            if t < 1.0:
                k = np.flatnonzero(flip)
                hit = k[np.isclose(x[k] / (x[k] - x_new[k]), t, rtol=1e-12, atol=0.0)]
                cand[hit] = 0.0
            f = _qp_objective(H, b, lam, cand)
            if f < best_f:
                best_f, best_x = f, cand
        # accept ties: near the optimum the new point may only match f0 to rounding
        if best_f > f0 + 1e-13 * max(1.0, abs(f0)):
            break
        x = best_x
        theta = np.sign(x)
        theta[free] = 0.0
    return _l1_qp_cd(H, b, lam, x)


def _l1_qp_cd(H, b, lam, x, sweeps=10000) -> np.ndarray:
    x = np.array(x, dtype=float)
    diag = np.diag(H).copy()
    for _ in range(sweeps):
        change = 0.0
        for i in range(x.size):
            z = b[i] - H[i] @ x + diag[i] * x[i]
            new = np.sign(z) * max(abs(z) - lam[i], 0.0) / diag[i]
            change = max(change, abs(new - x[i]))
            x[i] = new
        if change <= 1e-14 * max(1.0, np.abs(x).max()):
            break
    return x


# --------------------------------------------------------------------------
# Corrector and predictor
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GlmPathPoint:
    """Exact solution of the weighted L1 problem for penalties ``lam`` on ``active``."""

    lam: np.ndarray
    beta: np.ndarray
    intercept: float
    active: tuple[int, ...]
    mu: np.ndarray
    iterations: int = 0
    kkt: float = 0.0
    kind: str = "grid"
    flash_step: int = 0

    @property
    def max_lam(self) -> float:
        return float(np.max(self.lam, initial=0.0))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "flash_step": self.flash_step,
            "active": list(self.active),
            "lam_active": self.lam.tolist(),
            "max_lam": self.max_lam,
            "beta": self.beta.tolist(),
            "intercept": self.intercept,
        }


def _objective(gd, Z, v, lam_full) -> float:
    return -_loglik_eta(gd.y, Z @ v, gd.family) + float(lam_full @ np.abs(v))


def _kkt(g, v, lam_full) -> float:
    nz = v != 0.0
    r = np.where(nz, np.abs(g - lam_full * np.sign(v)), np.maximum(np.abs(g) - lam_full, 0.0))
    return float(r.max())


def _correct(gd, active, lam_active, v0, *, tol=1e-8, kkt_tol=1e-6, max_iter=500):
    """Newton iterations with an exact L1 subproblem; returns ``(v, iters, kkt)``."""
    active = list(active)
    Z = np.empty((gd.n, len(active) + 1))
    Z[:, 0] = 1.0
    Z[:, 1:] = gd.X[:, active]
    lam_full = np.concatenate([[0.0], np.asarray(lam_active, dtype=float)])
    v = np.array(v0, dtype=float)
    f = _objective(gd, Z, v, lam_full)
    gauss = gd.family == "gaussian"
    H = Z.T @ Z if gauss else None
    kkt = np.inf
    for it in range(1, max_iter + 1):
        mu = _mean(Z @ v, gd.family)
        g = Z.T @ (gd.y - mu)
        if not gauss:
            w = np.maximum(mu * (1.0 - mu), W_FLOOR)
            H = Z.T @ (w[:, None] * Z)
        v_qp = _l1_qp(H, H @ v + g, lam_full, v)
        d = v_qp - v
        t = 1.0
        while True:
            v_new = v + t * d
            if t < 1.0:
                v_new[v_qp == 0.0] *= 1.0  # keep sign pattern from the line search
            f_new = _objective(gd, Z, v_new, lam_full)
            if f_new <= f + 1e-13 * max(1.0, abs(f)):
                break
            t *= 0.5
            if t < 1e-10:
                v_new, f_new = v, f
                break
        step = float(np.abs(v_new - v).max(initial=0.0))
        v, f = v_new, f_new
        g = Z.T @ (gd.y - _mean(Z @ v, gd.family))
        kkt = _kkt(g, v, lam_full)
        if step <= tol and kkt <= kkt_tol:
            return v, it, kkt
    raise ConvergenceError(
        f"corrector did not converge in {max_iter} iterations (KKT residual {kkt:.3g})",
        iterate=(float(v[0]), v[1:].copy()), kkt_residual=kkt,
    )


def _point(gd, active, lam_active, v, iters, kkt, kind, flash_step) -> GlmPathPoint:
    beta = np.zeros(gd.p)
    beta[list(active)] = v[1:]
    lam = np.array(lam_active, dtype=float)
    mu = _mean(v[0] + gd.X @ beta, gd.family)
    for a in (beta, lam, mu):
        a.setflags(write=False)
    return GlmPathPoint(lam, beta, float(v[0]), tuple(active), mu, iters, kkt, kind, flash_step)


def _warm_vector(warm, active) -> np.ndarray:
    intercept, beta = warm
    return np.concatenate([[intercept], np.asarray(beta, dtype=float)[list(active)]])


def glm_corrector(gd: GlmData, active, lam_active, warm=None, *, max_iter: int = 500
                  ) -> GlmPathPoint:
    """Solve the weighted L1 problem on ``active`` with penalties ``lam_active``.

    ``warm`` is a :class:`GlmPathPoint` or an ``(intercept, beta)`` pair with
    ``beta`` of length p; it defaults to the intercept-only fit.  Raises
    :class:`ConvergenceError` after ``max_iter`` Newton iterations.
    """
    active = list(active)
    lam_active = np.asarray(lam_active, dtype=float)
    if lam_active.shape != (len(active),) or np.any(lam_active < 0):
        raise DataError("need one non-negative penalty per active variable")
    if warm is None:
        warm = (null_intercept(gd), np.zeros(gd.p))
    elif isinstance(warm, GlmPathPoint):
        warm = (warm.intercept, warm.beta)
    v, it, kkt = _correct(gd, active, lam_active, _warm_vector(warm, active), max_iter=max_iter)
    return _point(gd, active, lam_active, v, it, kkt, "corrector", 0)


def glm_predictor(prev: GlmPathPoint, lam_next, before: GlmPathPoint | None = None):
    """Warm start ``(intercept, beta)`` for penalties ``lam_next``.

    With ``before`` on the same active set the two solutions are
    extrapolated linearly in ``max(lam)``; otherwise ``prev`` is copied.
    """
    t_next = float(np.max(lam_next, initial=0.0))
    if before is None or before.active != prev.active or before.max_lam == prev.max_lam:
        return prev.intercept, np.array(prev.beta)
    r = (t_next - prev.max_lam) / (prev.max_lam - before.max_lam)
    beta = prev.beta + r * (prev.beta - before.beta)
    mask = np.zeros(prev.beta.size, dtype=bool)
    mask[list(prev.active)] = True
    beta[~mask] = 0.0
    return prev.intercept + r * (prev.intercept - before.intercept), beta


# --------------------------------------------------------------------------
# Path
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GlmPath:
    points: tuple[GlmPathPoint, ...]
    schedule: DeltaSchedule
    eps: float
    family: str
    scaling: Optional[Scaling] = None
    flags: tuple[str, ...] = ()

    @property
    def delta(self) -> float:
        return self.schedule.delta if self.schedule.kind == "global" else float("nan")

    def __len__(self):
        return len(self.points)

    def coefficients_at(self, index: int) -> CoefficientEstimate:
        """Original-scale coefficients of point ``index`` (0-based)."""
        pt = self.points[index]
        return glm_destandardize(pt.beta, pt.intercept, self.scaling)

    def to_dict(self) -> dict:
        d = {
            "family": self.family,
            "schedule": self.schedule.to_dict(),
            "eps": self.eps,
            "flags": list(self.flags),
            "points": [pt.to_dict() for pt in self.points],
        }
        if self.scaling is not None:
            d["standardization"] = self.scaling.to_dict()
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def glm_destandardize(beta, intercept, scaling: Optional[Scaling]) -> CoefficientEstimate:
    beta = np.asarray(beta, dtype=float)
    if scaling is None:
        return CoefficientEstimate(beta, intercept)
    b = beta / scaling.col_scales
    return CoefficientEstimate(b, intercept - float(b @ scaling.col_means))


@dataclass
class _Builder:
    """Mutable path state; ``clone`` shares the data and copies the rest."""

    gd: GlmData
    eps: float
    lam_floor: float
    cap: int
    max_points: int
    use_predictor: bool = True
    gap_tol: float = 1e-5
    active: list = field(default_factory=list)
    lam: dict = field(default_factory=dict)
    intercept: float = 0.0
    beta: np.ndarray = None
    points: list = field(default_factory=list)
    step: int = 0
    ml_done: bool = False
    finished: bool = False
    flags: list = field(default_factory=list)
    iterations: int = 0

    def clone(self) -> "_Builder":
        b = _Builder(self.gd, self.eps, self.lam_floor, self.cap, self.max_points,
                     self.use_predictor, self.gap_tol)
        b.active = list(self.active)
        b.lam = dict(self.lam)
        b.intercept = self.intercept
        b.beta = self.beta.copy()
        b.points = list(self.points)
        b.step = self.step
        b.ml_done = self.ml_done
        b.finished = self.finished
        b.flags = list(self.flags)
        b.iterations = self.iterations
        return b

    # -- helpers --------------------------------------------------------

    def start(self):
        gd = self.gd
        self.intercept = null_intercept(gd)
        self.beta = np.zeros(gd.p)
        g = glm_gradient_corr(gd, self.beta, self.intercept)
        j = int(np.argmax(np.abs(g)))
        self.active = [j]
        self.lam = {j: float(abs(g[j]))}
        self.step = 1
        self.lam_floor *= abs(g[j])
        v = np.array([self.intercept, 0.0])
        self._emit(v, 0, 0.0, "start")

    def _lam_vec(self, scale=1.0) -> np.ndarray:
        return np.array([self.lam[j] for j in self.active]) * scale

    def _max_lam(self) -> float:
        return max((self.lam[j] for j in self.active), default=0.0)

    def _emit(self, v, iters, kkt, kind) -> GlmPathPoint:
        pt = _point(self.gd, self.active, self._lam_vec(), v, iters, kkt, kind, self.step)
        self.points.append(pt)
        self.intercept = pt.intercept
        self.beta = np.array(pt.beta)
        if len(self.points) >= self.max_points:
            self.finished = True
        return pt

    def _solve(self, lam_vec, warm):
        v0 = _warm_vector(warm, self.active)
        try:
            v, it, kkt = _correct(self.gd, self.active, lam_vec, v0)
        except ConvergenceError as exc:
            exc.path = tuple(self.points)
            raise
        self.iterations += it
        return v, it, kkt

    def _warm(self, lam_vec):
        if not self.use_predictor:
            return null_intercept(self.gd), np.zeros(self.gd.p)
        pts = self.points
        prev = _point(self.gd, self.active, self._lam_vec(), _warm_vector(
            (self.intercept, self.beta), self.active), 0, 0.0, "", self.step)
        before = pts[-2] if len(pts) >= 2 and pts[-1].active == tuple(self.active) else None
        if before is not None and before.active != prev.active:
            before = None
        return glm_predictor(prev, lam_vec, before)

    def _inactive_max(self, v) -> tuple[float, int]:
        beta = np.zeros(self.gd.p)
        beta[self.active] = v[1:]
        g = np.abs(glm_gradient_corr(self.gd, beta, v[0]))
        g[self.active] = -np.inf
        if not np.isfinite(g).any():
            return -np.inf, -1
        j = int(np.argmax(g))
        return float(g[j]), j

    def _status(self, v, scale, prev_nonzero):
        gap = self._inactive_max(v)[0] - self._max_lam() * scale
        newly_zero = bool(np.any((v[1:] == 0.0) & prev_nonzero))
        return gap, newly_zero

    # -- one grid move ----------------------------------------------------

    def grid_move(self, delta: float):
        """Advance one grid point; handle any event found on the way."""
        scale_new = 1.0 - self.eps
        if self._max_lam() * scale_new <= self.lam_floor:
            self.finished = True
            return
        prev_v = _warm_vector((self.intercept, self.beta), self.active)
        prev_nonzero = prev_v[1:] != 0.0
        lam_new = self._lam_vec(scale_new)
        v, it, kkt = self._solve(lam_new, self._warm(lam_new))
        gap, zero = self._status(v, scale_new, prev_nonzero)
        if gap < 0.0 and not zero:
            self._rescale(scale_new)
            self._emit(v, it, kkt, "grid")
            return
        if not zero and gap <= self.gap_tol:
            scale, v, it, kkt = scale_new, v, it, kkt
        else:
            scale, v, it, kkt = self._locate(scale_new, v, it, kkt, gap, zero, prev_nonzero)
        self._rescale(scale)
        self._emit(v, it, kkt, "event")
        self._event(delta, v)

    def _locate(self, lo, v_lo, it_lo, kkt_lo, gap_lo, zero_lo, prev_nonzero):
        hi, gap_hi = 1.0, self._inactive_max(
            _warm_vector((self.intercept, self.beta), self.active))[0] - self._max_lam()
        target = 0.5 * self.gap_tol
        last = None
        for _ in range(80):
            if zero_lo or last == "lo2":
                mid = 0.5 * (lo + hi)
            else:
                f_lo, f_hi = gap_lo - target, gap_hi - target
                mid = lo + (hi - lo) * f_lo / (f_lo - f_hi) if f_lo != f_hi else 0.5 * (lo + hi)
                width = hi - lo
                mid = min(max(mid, lo + 1e-3 * width), hi - 1e-3 * width)
            lam_mid = self._lam_vec(mid)
            v, it, kkt = self._solve(lam_mid, (v_lo[0], _embed(self.gd.p, self.active, v_lo)))
            gap, zero = self._status(v, mid, prev_nonzero)
            if gap >= 0.0 or zero:
                if not zero and gap <= self.gap_tol:
                    return mid, v, it, kkt
                last = "lo2" if last == "lo" else "lo"
                lo, v_lo, it_lo, kkt_lo, gap_lo, zero_lo = mid, v, it, kkt, gap, zero
            else:
                last = "hi"
                hi, gap_hi = mid, gap
            if hi - lo <= 1e-10 * hi:
                break
        return lo, v_lo, it_lo, kkt_lo

    def _rescale(self, scale):
        for j in self.active:
            self.lam[j] *= scale

    def _event(self, delta: float, v):
        """Shrink by ``1 - delta``, drop zero coefficients, maybe add a variable."""
        if delta > 0.0:
            self._rescale(1.0 - delta)
            v, it, kkt = self._solve(self._lam_vec(), (v[0], _embed(self.gd.p, self.active, v)))
            self._emit(v, it, kkt, "shrink")
        self._update_active(v)

    def _update_active(self, v):
        zeros = [j for j, b in zip(self.active, v[1:]) if b == 0.0 and self.lam[j] > 0.0]
        g_max, j_star = self._inactive_max(v)
        crossing = j_star >= 0 and g_max >= self._max_lam()
        for j in zeros:
            self.active.remove(j)
            del self.lam[j]
        if crossing and j_star not in zeros:
            if len(self.active) >= self.cap:
                self.finished = True
                return
            self.active.append(j_star)
            self.lam[j_star] = g_max
            self.step += 1
            self.ml_done = False
        if not self.active or self._max_lam() <= 0.0:
            self.finished = True

    def ml_move(self):
        """Unpenalized refit on the active set (shrinkage ``delta = 1``)."""
        for j in self.active:
            self.lam[j] = 0.0
        v0 = (self.intercept, self.beta)
        v, it, kkt = self._solve(self._lam_vec(), v0)
        self.ml_done = True
        self._emit(v, it, kkt, "ml")
        g = np.abs(glm_gradient_corr(self.gd, self.points[-1].beta, v[0]))
        g[self.active] = -np.inf
        if len(self.active) >= self.cap or not np.isfinite(g).any() or g.max() <= 0.0:
            self.finished = True
            return
        j_star = int(np.argmax(g))
        self.active.append(j_star)
        self.lam[j_star] = float(g[j_star])
        self.step += 1
        self.ml_done = False

    def run(self, schedule: DeltaSchedule, snapshot=None):
        while not self.finished:
            if snapshot is not None:
                snapshot(self)
            delta = schedule.delta_at(self.step)
            if delta >= 1.0:
                if not self.ml_done:
                    self.ml_move()
                    continue
            self.grid_move(delta)
        return self


def _embed(p, active, v) -> np.ndarray:
    beta = np.zeros(p)
    beta[list(active)] = v[1:]
    return beta


def _builder(gd, eps, max_points, lam_min_ratio, max_active, predictor) -> _Builder:
    if not 0.0 < eps <= 0.2:
        raise DataError(f"eps must lie in (0, 0.2], got {eps}")
    cap = min(gd.p, gd.n - 1)
    if max_active is not None:
        cap = min(cap, int(max_active))
    if max_points is None:
        max_points = 10 * min(gd.n, gd.p)
    b = _Builder(gd, float(eps), float(lam_min_ratio), cap, int(max_points), predictor)
    b.start()
    return b


def _as_path(b: _Builder, schedule, flags=()) -> GlmPath:
    return GlmPath(tuple(b.points), schedule, b.eps, b.gd.family, b.gd.scaling,
                   tuple(b.flags) + tuple(flags))


def fit_glm_flash_path(gd: GlmData, delta: float | DeltaSchedule = 0.0, eps: float = 0.05,
                       max_points: int | None = None, *, lam_min_ratio: float = 1e-6,
                       max_active: int | None = None, predictor: bool = True) -> GlmPath:
    """Trace the GLM FLASH path.

    Parameters
    ----------
    gd : GlmData
    delta : float or DeltaSchedule
        Shrinkage applied when the active set is about to change.
    eps : float
        Relative penalty decrease between grid points.
    max_points : int, optional
        Cap on emitted points (default ``10 * min(n, p)``).
    lam_min_ratio : float
        Stop once the largest active penalty falls below this fraction of
        its starting value.
    max_active : int, optional
        Cap on the active-set size (never above ``min(p, n - 1)``).
    predictor : bool
        Warm-start each corrector from the linear predictor (otherwise from
        the intercept-only fit).
    """
    schedule = delta if isinstance(delta, DeltaSchedule) else DeltaSchedule.global_(delta)
    b = _builder(gd, eps, max_points, lam_min_ratio, max_active, predictor)
    b.run(schedule)
    return _as_path(b, schedule)


def fit_glm_block_flash(gd: GlmData, l_star: int, eps: float = 0.05,
                        max_points: int | None = None, *, lam_min_ratio: float = 1e-6,
                        max_active: int | None = None) -> GlmPath:
    """L1 path until ``l_star`` variables are active, an unpenalized refit of
    those variables, then the L1 path again with them left unpenalized.

    If the path ends before ``l_star`` variables enter, the plain L1 path is
    returned with the flag ``"l_star_unreachable"``.
    """
    if l_star < 1:
        raise DataError("l_star must be >= 1")
    schedule = DeltaSchedule.block(l_star)
    b = _builder(gd, eps, max_points, lam_min_ratio, max_active, True)
    b.run(schedule)
    flags = () if any(pt.kind == "ml" for pt in b.points) else ("l_star_unreachable",)
    return _as_path(b, schedule, flags)


def glm_block_paths(gd: GlmData, l_star_max: int, eps: float = 0.05,
                    max_points: int | None = None, *, lam_min_ratio: float = 1e-6,
                    max_active: int | None = None) -> dict[int, GlmPath]:
    """Block paths for every ``l_star`` in ``1..l_star_max`` sharing the L1 prefix."""
    base = _builder(gd, eps, max_points, lam_min_ratio, max_active, True)
    snaps: dict[int, _Builder] = {}

    def snapshot(b):
        if b.step not in snaps and b.step <= l_star_max:
            snaps[b.step] = b.clone()

    base.run(DeltaSchedule.global_(0.0), snapshot=snapshot)
    out = {}
    for l_star in range(1, l_star_max + 1):
        schedule = DeltaSchedule.block(l_star)
        if l_star in snaps:
            b = snaps[l_star].clone().run(schedule)
            out[l_star] = _as_path(b, schedule)
        else:
            out[l_star] = _as_path(base, schedule, ("l_star_unreachable",))
    return out


def glm_forward_path(gd: GlmData, max_steps: int | None = None) -> GlmPath:
    """Greedy forward selection: add the variable with the largest absolute
    gradient, refit by maximum likelihood, repeat.

    Refits that fail to converge (typically under separation) keep the last
    iterate, whose linear predictor is clamped, and emit a warning.
    """
    cap = min(gd.p, gd.n - 1)
    if max_steps is None:
        max_steps = cap
    max_steps = min(max_steps, cap)
    intercept = null_intercept(gd)
    beta = np.zeros(gd.p)
    active: list[int] = []
    points = [_point(gd, (), np.zeros(0), np.array([intercept]), 0, 0.0, "start", 0)]
    flags = []
    for step in range(1, max_steps + 1):
        g = np.abs(glm_gradient_corr(gd, beta, intercept))
        g[active] = -np.inf
        j = int(np.argmax(g))
        if g[j] <= 0.0:
            break
        active.append(j)
        v0 = np.concatenate([[intercept], beta[active]])
        try:
            v, it, kkt = _correct(gd, active, np.zeros(len(active)), v0)
        except ConvergenceError as exc:
            msg = f"step {step}: maximum-likelihood refit did not converge ({exc})"
            warnings.warn(msg, stacklevel=2)
            flags.append(msg)
            v = np.concatenate([[exc.iterate[0]], exc.iterate[1]])
            it, kkt = 0, exc.kkt_residual
        pt = _point(gd, active, np.zeros(len(active)), v, it, kkt, "ml", step)
        points.append(pt)
        intercept, beta = pt.intercept, np.array(pt.beta)
    return GlmPath(tuple(points), DeltaSchedule.global_(1.0), 0.0, gd.family, gd.scaling,
                   tuple(flags))
