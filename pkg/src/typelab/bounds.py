"""Explicit analytic constants and bounds for the spectral type tests.

* ``g(A) = 1 - 1/(4 sh^2(A/4)) - 4/sh^2(A)`` and its root ``t0``;
* the doubling factor ``C2(C1) = 1 + sh^2(sqrt(C1)/2)`` and its threshold;
* optimal cut-offs ``chi0`` and the functional ``J = chi'^2 - A^2 chi^2``;
* the growth-to-eigenvalue bound ``U(nu)``;
* the lower bound ``lambda_1(B_r) >= inf (eta'/eta)^2 / 4``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import optimize

from .model import ModelError, WeightModel
from .slsolve import TestFunction

DELTA_MIN = 1e-6
J_SAMPLES = 1 << 12


def g_function(A: float) -> float:
    if not A > 0:
        raise ValueError(f"g is defined for A > 0, got {A}")
    return 1.0 - 1.0 / (4.0 * math.sinh(A / 4.0) ** 2) - 4.0 / math.sinh(A) ** 2


def growth_factor(C1: float) -> float:
    """Volume doubling factor ``C2`` implied by ``lambda_1(B_r) >= C1 / r^2``."""
    if C1 < 0:
        raise ValueError(f"C1 must be >= 0, got {C1}")
    return 1.0 + math.sinh(math.sqrt(C1) / 2.0) ** 2


@dataclass(frozen=True)
class Thresholds:
    t0: float
    four_t0_sq: float
    lemma34_threshold: float

    def growth_factor(self, C1: float) -> float:
        return growth_factor(C1)

    def to_dict(self) -> dict:
        return {
            "t0": self.t0,
            "four_t0_sq": self.four_t0_sq,
            "lemma34_threshold": self.lemma34_threshold,
        }


def solve_t0(tol: float = 1e-13) -> Thresholds:
    """Root of ``g`` on ``[2, 2.5]`` plus the derived threshold constants."""
    if not 0 < tol <= 1e-9:
        raise ValueError(f"tol must lie in (0, 1e-9], got {tol}")
    assert g_function(2.0) < 0.0 < g_function(2.5)
    t0 = optimize.brentq(g_function, 2.0, 2.5, xtol=tol, rtol=4 * np.finfo(float).eps)
    return Thresholds(
        t0=t0,
        four_t0_sq=4.0 * t0 * t0,
        lemma34_threshold=4.0 * math.log(2.0 + math.sqrt(3.0)) ** 2,
    )


# ---------------------------------------------------------------------------
# cut-offs


@dataclass(frozen=True)
class CutoffSpec:
    a: float
    b: float
    A: float
    rising: bool = True

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"cut-off interval needs a < b, got [{self.a}, {self.b}]")
        if not self.A > 0:
            raise ValueError(f"cut-off rate must be > 0, got {self.A}")


class Cutoff:
    """``sh(A x) / sh(A (b - a))`` with ``x`` the distance from the zero end."""

    def __init__(self, spec: CutoffSpec):
        self.spec = spec
        self._norm = float(np.sinh(spec.A * (spec.b - spec.a)))  # same ufunc as __call__

    def _x(self, t):
        t = np.asarray(t, dtype=float)
        s = self.spec
        return (t - s.a) if s.rising else (s.b - t)

    def __call__(self, t):
        return np.sinh(self.spec.A * self._x(t)) / self._norm

    def derivative(self, t):
        sign = 1.0 if self.spec.rising else -1.0
        return sign * self.spec.A * np.cosh(self.spec.A * self._x(t)) / self._norm

    @property
    def interval(self):
        return self.spec.a, self.spec.b


def chi_opt(spec: CutoffSpec) -> Cutoff:
    return Cutoff(spec)


def j_min(A: float, length: float) -> float:
    """Closed-form minimum of ``sup J`` over admissible cut-offs."""
    return A * A / math.sinh(A * length) ** 2


def _check_ends(v0, v1):
    ends = {round(float(v0), 12), round(float(v1), 12)}
    if ends != {0.0, 1.0}:
        raise ValueError(f"cut-off must take the values 0 and 1 at its ends, got {v0}, {v1}")


def J_sup(chi: Union[TestFunction, Callable], A: float, interval=None) -> float:
    """``sup (chi'^2 - A^2 chi^2)`` over the cut-off's interval.

    Piecewise-linear functions are handled exactly per segment.  Other
    callables are sampled at ``2^12`` points (analytic derivative if the
    object offers ``derivative``, central differences otherwise) and the
    sampled maximum is raised by ``max|second difference| / 8``.
    """
    if isinstance(chi, TestFunction):
        g, v = chi.grid, chi.values
        _check_ends(v[0], v[-1])
        slope2 = (np.diff(v) / np.diff(g)) ** 2
        lo, hi = v[:-1], v[1:]
        crosses = lo * hi <= 0.0
        min_sq = np.where(crosses, 0.0, np.minimum(lo * lo, hi * hi))
        return float(np.max(slope2 - A * A * min_sq))
    if interval is None:
        interval = getattr(chi, "interval", None)
    if interval is None:
        raise ValueError("interval is required for a plain callable")
    a, b = interval
    t = np.linspace(a, b, J_SAMPLES + 1)
    v = np.asarray(chi(t), dtype=float)
    _check_ends(v[0], v[-1])
    if hasattr(chi, "derivative"):
        dv = np.asarray(chi.derivative(t), dtype=float)
    else:
        dv = np.gradient(v, t, edge_order=2)
    J = dv * dv - A * A * v * v
    margin = float(np.max(np.abs(np.diff(J, 2)))) / 8.0 if J.size > 2 else 0.0
    return float(np.max(J)) + margin


# ---------------------------------------------------------------------------
# growth-to-eigenvalue bound


def _u_objective(delta, nu):
    """``[acosh(delta^(-nu/2)) / (1 - delta)]^2``; equals the log form since
    ``sqrt(x - 1) + sqrt(x) = exp(acosh(sqrt(x)))``."""
    delta = np.asarray(delta, dtype=float)
    ly = -0.5 * nu * np.log(delta)
    em = np.expm1(np.minimum(ly, 20.0))  # acosh(1 + em) without cancellation near nu = 0
    ach = np.where(ly > 20.0, ly + math.log(2.0), np.log1p(em + np.sqrt(em * (em + 2.0))))
    return (ach / (1.0 - delta)) ** 2


def upper_bound_U(nu: float, coarse: int = 513) -> float:
    """``inf_{0<delta<1} [log((delta^-nu - 1)^(1/2) + delta^(-nu/2)) / (1 - delta)]^2``."""
    if not nu >= 0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    if nu == 0:
        return 0.0
    grid = np.linspace(DELTA_MIN, 1.0 - DELTA_MIN, coarse)
    vals = _u_objective(grid, nu)
    k = int(np.argmin(vals))
    steps = np.sign(np.diff(vals))
    if np.any(steps[:k] > 0) or np.any(steps[k:] < 0):
        raise ArithmeticError(f"U objective is not unimodal on the coarse grid (nu={nu})")
    if k == 0 or k == coarse - 1:
        return float(vals[k])
    f = lambda d: float(_u_objective(d, nu))
    res = optimize.minimize_scalar(
        f, bracket=(grid[k - 1], grid[k], grid[k + 1]), method="golden", tol=1e-12
    )
    return float(min(res.fun, vals[k]))


def argmin_U(nu: float) -> float:
    """Minimizing ``delta`` (for reporting)."""
    if nu <= 0:
        return float("nan")
    f = lambda d: float(_u_objective(d, nu))
    return float(
        optimize.minimize_scalar(f, bounds=(DELTA_MIN, 1 - DELTA_MIN), method="bounded").x
    )


# ---------------------------------------------------------------------------
# warp-ratio lower bound


def prop61_bound(model: WeightModel, r: float, samples: int = 20001) -> float:
    """``(1/4) inf_{|t|<=r} (eta'/eta)^2`` on a dense grid including ``t = +-r``."""
    if model.kind != "cylinder" or model.log_eta is None:
        raise ModelError(f"{model.model_id}: warp primitive eta is not available")
    if not r > 0:
        raise ValueError(f"r must be > 0, got {r}")
    t = np.linspace(-r, r, samples)
    log_ratio = model.log_deta(t) - model.log_eta(t)
    return 0.25 * math.exp(2.0 * float(np.min(log_ratio)))
