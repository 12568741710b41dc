"""Tail estimates of the scaled spectral and volume functionals.

Curves are sampled on a geometric radius grid.  A liminf/limsup is replaced
by the min/max of the transformed curve over the last ``m = 4`` points, and
every estimate carries a status:

* ``Converged``: the window's spread is below 2% of ``max(|mean|, 0.5)``
  (the floor covers rates tending to zero);
* ``Unbounded``: the transformed curve grew more than tenfold across the grid;
* ``TrendOnly``: anything else;
* ``NotApplicable``: the functional is undefined (exterior rates on
  infinite-volume models).

Logarithmic rates use secant slopes between consecutive grid points, e.g.
``(log v_k - log v_{k-1}) / (log r_k - log r_{k-1})`` instead of
``log v_k / log r_k``.  Both have the same limit, but the secant removes the
constant prefactor that biases the raw ratio by ``log C / log r``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import Ball, Exterior, ModelError, WeightModel, exterior_volume, log_volume
from .model import CONVERGENT
from .slsolve import ResolutionError, lambda1_region

CONVERGED = "Converged"
TREND_ONLY = "TrendOnly"
UNBOUNDED = "Unbounded"
NOT_APPLICABLE = "NotApplicable"

EIGENVALUE = "eigenvalue"
VOLUME = "volume"
EXTERIOR_VOLUME = "exterior-volume"
QUANTITIES = (EIGENVALUE, VOLUME, EXTERIOR_VOLUME)

SCALINGS = ("r2", "loglog", "loglin", "neglog")
WINDOW = 4
SPREAD = 0.02
SPREAD_FLOOR = 0.5
GROWTH = 10.0
EXP_CAP = 60.0
R_MAX = float(2**14)


@dataclass(frozen=True)
class RadiusGrid:
    r0: float = 2.0
    ratio: float = math.sqrt(2.0)
    count: int = 24

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError(f"grid start must be > 0, got {self.r0}")
        if not 1.0 < self.ratio <= 4.0:
            raise ValueError(f"grid ratio must lie in (1, 4], got {self.ratio}")
        if self.count < 8:
            raise ValueError(f"grid needs at least 8 points, got {self.count}")

    def radii(self, cap: Optional[float] = None) -> np.ndarray:
        r = self.r0 * self.ratio ** np.arange(self.count)
        if cap is not None:
            r = r[r <= cap * (1 + 1e-12)]
        return r


def radius_cap(model: WeightModel) -> Optional[float]:
    """Exponential ends are sampled only up to ``r = 60 / rate``."""
    rate = model.exp_rate
    return EXP_CAP / rate if rate else None


@dataclass
class SampleCurve:
    model_id: str
    quantity: str
    r: np.ndarray
    values: np.ndarray  # nan where the point failed
    errors: np.ndarray
    log_values: np.ndarray
    failures: dict = field(default_factory=dict)

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.log_values)


def _sample_point(model, quantity, r, tol, max_doublings):
    """Return ``(value, error, log_value)``; raises on failure."""
    if quantity == EIGENVALUE:
        s = lambda1_region(model, Ball(float(r)), tol=tol, max_doublings=max_doublings)
        return s.lam, s.error_estimate, math.log(s.lam)
    if quantity == VOLUME:
        lv = log_volume(model, float(r))
        return math.exp(min(lv, 700.0)) if lv < 700 else math.inf, 0.0, lv
    res = exterior_volume(model, float(r))
    if res.status != CONVERGENT:
        return math.inf, math.inf, math.inf
    return math.exp(res.value), (res.error or 0.0), res.value


def sample_curve(
    model: WeightModel,
    quantity: str,
    grid=None,
    tol: float = 1e-6,
    max_doublings: int = 8,
    jobs: int = 1,
) -> SampleCurve:
    """Sample ``quantity`` at every grid radius; failed points become ``nan``."""
    if quantity not in QUANTITIES:
        raise ValueError(f"quantity must be one of {QUANTITIES}, got {quantity!r}")
    if grid is None:
        grid = RadiusGrid()
    radii = grid.radii(radius_cap(model)) if isinstance(grid, RadiusGrid) else _check_radii(grid)

    def work(r):
        try:
            return _sample_point(model, quantity, r, tol, max_doublings), None
        except (ResolutionError, ModelError, ArithmeticError, ValueError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, radii))
    else:
        results = [work(r) for r in radii]
    n = len(radii)
    values, errors, logs = np.full(n, np.nan), np.full(n, np.nan), np.full(n, np.nan)
    failures = {}
    for i, (res, msg) in enumerate(results):
        if res is None:
            failures[float(radii[i])] = msg
        else:
            values[i], errors[i], logs[i] = res
    return SampleCurve(model.model_id, quantity, radii, values, errors, logs, failures)


def _check_radii(radii) -> np.ndarray:
    r = np.asarray(radii, dtype=float)
    if r.ndim != 1 or r.size < 8:
        raise ValueError("grid needs at least 8 points")
    q = r[1:] / r[:-1]
    if np.any(q <= 1.0) or np.any(q > 4.0):
        raise ValueError("grid ratios must lie in (1, 4]")
    return r


# ---------------------------------------------------------------------------
# tail estimates


@dataclass(frozen=True)
class Estimate:
    value: float
    status: str
    window: tuple = ()
    trend: int = 0  # sign of the change across the window
    error: float = 0.0
    last: float = math.nan  # last transformed value

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "status": self.status,
            "window": list(self.window),
            "trend": self.trend,
            "error": self.error,
            "last": self.last,
        }


def transform(curve: SampleCurve, scaling: str):
    """Transformed sequence ``(r, y)`` over the valid points of ``curve``."""
    ok = curve.valid
    r, lv = curve.r[ok], curve.log_values[ok]
    if scaling == "r2":
        return r, r * r * np.exp(lv)
    if scaling == "loglog":
        return r[1:], np.diff(lv) / np.diff(np.log(r))
    if scaling == "loglin":
        return r[1:], np.diff(lv) / np.diff(r)
    if scaling == "neglog":
        return r[1:], -np.diff(lv) / np.diff(r)
    raise ValueError(f"scaling must be one of {SCALINGS}, got {scaling!r}")


def classify_window(y: np.ndarray, mode: str, window: int = WINDOW) -> Estimate:
    if mode not in ("liminf", "limsup"):
        raise ValueError(f"mode must be liminf or limsup, got {mode!r}")
    if y.size < window:
        raise ValueError(f"need at least {window} valid points, got {y.size}")
    tail = y[-window:]
    lo, hi = float(tail.min()), float(tail.max())
    pick = lo if mode == "liminf" else hi
    trend = int(np.sign(tail[-1] - tail[0]))
    last = float(y[-1])
    if y[0] > 0 and y[-1] > GROWTH * y[0] and trend > 0:
        return Estimate(math.inf, UNBOUNDED, tuple(map(float, tail)), trend, math.inf, last)
    spread = hi - lo
    mean = float(np.mean(tail))
    if spread <= SPREAD * max(abs(mean), SPREAD_FLOOR):
        return Estimate(pick, CONVERGED, tuple(map(float, tail)), trend, spread, last)
    return Estimate(pick, TREND_ONLY, tuple(map(float, tail)), trend, spread, last)


def scaled_tail_estimate(curve: SampleCurve, scaling: str, mode: str) -> Estimate:
    """Tail-window surrogate of ``liminf``/``limsup`` of a transformed curve."""
    _, y = transform(curve, scaling)
    return classify_window(y, mode)


# ---------------------------------------------------------------------------
# spectral limits


def _limit_by_doubling(sample, start, tol, r_max):
    """Monotone limit of ``sample(x)`` as ``x`` doubles.

    Stops when the last change is below ``tol`` and the geometric (Aitken)
    estimate of the remaining change is below ``tol`` too.
    """
    x = start
    prev, prev_d = sample(x), None
    history = [prev]
    while 2 * x <= r_max:
        x *= 2
        cur = sample(x)
        history.append(cur)
        d = abs(cur - prev)
        remaining = 0.0
        if prev_d:
            rho = d / prev_d
            remaining = d * rho / (1.0 - rho) if rho < 1.0 else math.inf
        if d < tol and remaining < tol and prev_d is not None:
            return Estimate(cur, CONVERGED, tuple(history[-WINDOW:]), int(np.sign(cur - prev)), d + remaining, cur)
        prev, prev_d = cur, d
    trend = int(np.sign(history[-1] - history[-2])) if len(history) > 1 else 0
    return Estimate(history[-1], TREND_ONLY, tuple(history[-WINDOW:]), trend, prev_d or math.inf, history[-1])


def lambda1_M(model: WeightModel, tol: float = 1e-3, solver_tol: float = 1e-6, r_max: float = R_MAX) -> Estimate:
    """``lim lambda_1(B_r)`` over doubling radii."""
    if not tol > 0:
        raise ValueError("tol must be > 0")
    sample = lambda r: lambda1_region(model, Ball(r), tol=solver_tol).lam
    return _limit_by_doubling(sample, 2.0, tol, r_max)


def lambda1_ess(model: WeightModel, tol: float = 1e-3, solver_tol: float = 1e-6, r_max: float = R_MAX) -> Estimate:
    """``lim_r lim_R lambda_1(Exterior(r, R))``: inner R-doubling, outer r-doubling."""
    if not tol > 0:
        raise ValueError("tol must be > 0")
    start = max(2.0, 2.0 * model.collar)

    def inner(r):
        est = _limit_by_doubling(
            lambda R: lambda1_region(model, Exterior(r, r + R), tol=solver_tol).lam,
            1.0, tol, r_max,
        )
        return est.value

    return _limit_by_doubling(inner, start, tol, r_max)


# ---------------------------------------------------------------------------
# profile


@dataclass
class AsymptoticProfile:
    model_id: str
    Lambda_star: Estimate
    nu_star: Estimate
    mu_star_sup: Estimate
    mu_star_inf: Estimate
    alpha_star_inf: Estimate
    alpha_star_sup: Estimate
    LambdaTilde_star: Estimate
    lambda1_M: Estimate
    lambda1_ess: Estimate
    finite_volume: Optional[bool]
    curves: dict = field(default_factory=dict, repr=False)

    FIELDS = (
        "Lambda_star",
        "nu_star",
        "mu_star_sup",
        "mu_star_inf",
        "alpha_star_inf",
        "alpha_star_sup",
        "LambdaTilde_star",
        "lambda1_M",
        "lambda1_ess",
    )

    def to_dict(self) -> dict:
        out = {"model_id": self.model_id, "finite_volume": self.finite_volume}
        for name in self.FIELDS:
            out[name] = getattr(self, name).to_dict()
        return out

    def replace(self, **changes) -> "AsymptoticProfile":
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return AsymptoticProfile(**data)


def _safe(fn, *args):
    try:
        return fn(*args)
    except ValueError:
        return Estimate(math.nan, TREND_ONLY, (), 0, math.inf, math.nan)


_NA = Estimate(math.nan, NOT_APPLICABLE)


def profile(
    model: WeightModel,
    grid=None,
    tol: float = 1e-6,
    limit_tol: float = 1e-3,
    max_doublings: int = 8,
    jobs: int = 1,
) -> AsymptoticProfile:
    """All tail functionals of ``model`` with per-field statuses."""
    grid = grid or RadiusGrid()
    eig = sample_curve(model, EIGENVALUE, grid, tol, max_doublings, jobs)
    vol = sample_curve(model, VOLUME, grid, tol, max_doublings, jobs)
    ext = sample_curve(model, EXTERIOR_VOLUME, grid, tol, max_doublings, jobs)
    finite = model.finite_volume
    if finite:
        a_inf = _safe(scaled_tail_estimate, ext, "neglog", "liminf")
        a_sup = _safe(scaled_tail_estimate, ext, "neglog", "limsup")
    else:
        a_inf = a_sup = _NA
    return AsymptoticProfile(
        model_id=model.model_id,
        Lambda_star=_safe(scaled_tail_estimate, eig, "r2", "liminf"),
        nu_star=_safe(scaled_tail_estimate, vol, "loglog", "liminf"),
        mu_star_sup=_safe(scaled_tail_estimate, vol, "loglin", "limsup"),
        mu_star_inf=_safe(scaled_tail_estimate, vol, "loglin", "liminf"),
        alpha_star_inf=a_inf,
        alpha_star_sup=a_sup,
        LambdaTilde_star=_safe(scaled_tail_estimate, eig, "neglog", "liminf"),
        lambda1_M=lambda1_M(model, limit_tol, tol),
        lambda1_ess=lambda1_ess(model, limit_tol, tol),
        finite_volume=finite,
        curves={EIGENVALUE: eig, VOLUME: vol, EXTERIOR_VOLUME: ext},
    )
