"""First Dirichlet eigenvalue of ``f -> -(w f')' / w`` on radial intervals.

Discretization: symmetric second-order finite differences on a grid that is
uniform in a stretched coordinate ``s`` with ``t = c0 + beta * sinh(s)``.  In
``s`` the problem reads ``-(W f_s)_s = lam * B f`` with ``W = w / t_s`` and
``B = w * t_s``, giving a generalized symmetric tridiagonal pencil.  Only
differences of ``log w`` enter the pencil, so extreme weights do not
overflow.  The smallest eigenvalue comes from inertia bisection
(:mod:`typelab._sturm`); grid doubling with Richardson extrapolation
supplies the error estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _sturm
from .model import LOG_TWO_PI, Annulus, Ball, Exterior, ModelError, WeightModel

DIRICHLET = "dirichlet"
NATURAL = "natural"

BASE_CELLS = 1 << 10
MAX_CELLS = 1 << 21
RESOLUTION = 0.25  # max cell width times local log-weight variation


class ResolutionError(RuntimeError):
    """Raised when grid refinement does not converge to the requested tolerance."""

    def __init__(self, message, estimates):
        super().__init__(f"{message} (last estimates: {estimates})")
        self.estimates = tuple(estimates)


@dataclass(frozen=True)
class EigenSample:
    region: object
    lam: float
    error_estimate: float
    grid_points: int
    mode: int = 0


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    left: str = DIRICHLET
    right: str = DIRICHLET


def region_intervals(model: WeightModel, region) -> list:
    """Radial intervals whose minimum eigenvalue equals ``lambda_1(region)``."""
    cyl = model.kind == "cylinder"
    if isinstance(region, Ball):
        if cyl:
            return [Interval(-region.r, region.r)]
        return [Interval(0.0, region.r, NATURAL, DIRICHLET)]
    if isinstance(region, Annulus):
        parts = [Interval(region.a, region.b)]
        if cyl:
            parts.append(Interval(-region.b, -region.a))
        return parts
    if isinstance(region, Exterior):
        parts = [Interval(region.r, region.R)]
        if cyl:
            parts.append(Interval(-region.R, -region.r))
        return parts
    raise ModelError(f"unsupported region {region!r}")


# ---------------------------------------------------------------------------
# grid maps


@dataclass(frozen=True)
class _Map:
    center: float
    beta: Optional[float]  # None means the identity map

    def s_range(self, lo, hi):
        if self.beta is None:
            return lo, hi
        return math.asinh((lo - self.center) / self.beta), math.asinh((hi - self.center) / self.beta)

    def t(self, s):
        if self.beta is None:
            return s.copy()
        return self.center + self.beta * np.sinh(s)

    def log_dt(self, s):
        if self.beta is None:
            return np.zeros_like(s)
        a = np.abs(s)
        return math.log(self.beta) + a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def _variation(log_w, t):
    """``|L'| + sqrt|L''|`` by central differences."""
    d = 1e-4 * np.maximum(1.0, np.abs(t))
    f0, fp, fm = log_w(t), log_w(t + d), log_w(t - d)
    d1 = (fp - fm) / (2 * d)
    d2 = (fp - 2 * f0 + fm) / (d * d)
    out = np.abs(d1) + np.sqrt(np.abs(d2))
    return np.where(np.isfinite(out), out, 0.0)


def _choose_map(model: WeightModel, iv: Interval):
    """Pick the stretch ``beta`` needing the fewest cells; return ``(map, cells)``."""
    length = iv.hi - iv.lo
    if iv.left == NATURAL:
        cands = [_Map(iv.lo, None)]
    else:
        if iv.lo < 0.0 < iv.hi:
            center = 0.0
        else:
            center = iv.lo if abs(iv.lo) <= abs(iv.hi) else iv.hi
        cands = [_Map(0.0, None)]
        beta = 0.25
        while beta < length:
            cands.append(_Map(center, beta))
            beta *= 4.0
    best = None
    for mp in cands:
        s_lo, s_hi = mp.s_range(iv.lo, iv.hi)
        s = np.linspace(s_lo, s_hi, 4097)[1:-1]
        t = mp.t(s)
        if iv.left == NATURAL:
            keep = t > iv.lo + 0.01 * length
            s, t = s[keep], t[keep]
        demand = (s_hi - s_lo) * np.exp(mp.log_dt(s)) * _variation(model.log_weight, t)
        cells = max(BASE_CELLS, int(math.ceil(demand.max() / RESOLUTION)))
        if best is None or cells < best[1]:
            best = (mp, cells)
    return best


# ---------------------------------------------------------------------------
# pencil assembly


def _pencil(model, iv, mp, cells, k=0):
    """Return ``(m, p, v)`` ratio arrays for ``cells`` cells."""
    s_lo, s_hi = mp.s_range(iv.lo, iv.hi)
    ds = (s_hi - s_lo) / cells
    log_w = model.log_weight
    if iv.left == NATURAL:
        s_nodes = s_lo + (np.arange(cells) + 0.5) * ds
        s_faces = s_lo + np.arange(cells + 1) * ds
    else:
        s_nodes = s_lo + np.arange(1, cells) * ds
        s_faces = s_lo + (np.arange(cells) + 0.5) * ds
    t_nodes = mp.t(s_nodes)
    t_faces = mp.t(s_faces)
    with np.errstate(divide="ignore"):
        lw_nodes = log_w(t_nodes)
        lw_faces = log_w(t_faces)
    q = lw_nodes + mp.log_dt(s_nodes)
    pf = lw_faces - mp.log_dt(s_faces)
    scale = 1.0 / (ds * ds)
    with np.errstate(under="ignore"):
        m = np.exp(pf[:-1] - q) * scale
        p = np.exp(pf[1:] - q) * scale
    if iv.left == NATURAL:
        m[0] = 0.0
        p[-1] *= 2.0  # Dirichlet face half a cell from the last node
    if k:
        if model.kind != "cylinder":
            raise ModelError("Fourier modes are defined for cylinder models only")
        v = k * k * np.exp(np.minimum(2.0 * (LOG_TWO_PI - lw_nodes), 690.0))
    else:
        v = np.zeros_like(m)
    return m, p, v


def _solve_interval(model, iv, tol, max_doublings, k=0):
    mp, cells = _choose_map(model, iv)
    raw, extrap = [], []
    guess = None
    for level in range(max_doublings + 1):
        n = cells << level
        if n > MAX_CELLS:
            break
        m, p, v = _pencil(model, iv, mp, n, k)
        lam = _sturm.lowest(m, p, v, guess)
        guess = lam
        raw.append(lam)
        if len(raw) >= 2:
            extrap.append((4.0 * raw[-1] - raw[-2]) / 3.0)
        if len(extrap) >= 2:
            diff = abs(extrap[-1] - extrap[-2])
            if diff <= tol * abs(extrap[-1]):
                return extrap[-1], diff / 3.0, n
    last = extrap[-2:] if len(extrap) >= 2 else raw[-2:]
    raise ResolutionError(f"no convergence on [{iv.lo}, {iv.hi}] at tol={tol}", last)


def lambda1_region(
    model: WeightModel, region, tol: float = 1e-8, max_doublings: int = 8, mode: int = 0
) -> EigenSample:
    """First Dirichlet eigenvalue of ``region`` (minimum over its radial pieces)."""
    if not tol > 0:
        raise ValueError("tol must be > 0")
    best = None
    for iv in region_intervals(model, region):
        lam, err, n = _solve_interval(model, iv, tol, max_doublings, mode)
        if best is None or lam < best[0]:
            best = (lam, err, n)
    return EigenSample(region, best[0], best[1], best[2], mode)


def fourier_mode_lambda1(
    model: WeightModel, region, k: int, tol: float = 1e-8, max_doublings: int = 8
) -> float:
    """Lowest eigenvalue of the ``k``-th angular mode (potential ``k^2 / eta'^2``)."""
    if model.kind != "cylinder":
        raise ModelError("Fourier modes are defined for cylinder models only")
    if k < 0 or int(k) != k:
        raise ValueError(f"mode index must be a nonnegative integer, got {k}")
    return lambda1_region(model, region, tol, max_doublings, int(k)).lam


# ---------------------------------------------------------------------------
# Rayleigh quotients


@dataclass(frozen=True)
class TestFunction:
    """Continuous piecewise-linear function given by samples on ``grid``."""

    grid: np.ndarray
    values: np.ndarray

    __test__ = False  # not a pytest class

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise ValueError("grid and values must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, f: Callable, a: float, b: float, n: int = 4097) -> "TestFunction":
        grid = np.linspace(a, b, n)
        return cls(grid, np.asarray(f(grid), dtype=float))

    @property
    def interval(self):
        return float(self.grid[0]), float(self.grid[-1])

    def __call__(self, t):
        return np.interp(t, self.grid, self.values)


_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


def rayleigh(model: WeightModel, testfn: TestFunction) -> float:
    """``int w phi'^2 / int w phi^2`` for a piecewise-linear test function."""
    g, v = testfn.grid, testfn.values.copy()
    natural_left = model.kind == "plane" and g[0] == 0.0
    eps = 1e-12 * float(np.max(np.abs(v)))  # roundoff in sampled boundary values
    if abs(v[-1]) > eps or (not natural_left and abs(v[0]) > eps):
        raise ValueError("test function must vanish at the Dirichlet ends of its interval")
    v[-1] = 0.0
    if not natural_left:
        v[0] = 0.0
    if model.kind == "plane" and g[0] < 0.0:
        raise ValueError("plane test functions live on t >= 0")
    h = np.diff(g)
    slope = np.diff(v) / h
    x = 0.5 * (_GL8_X + 1.0)
    t = g[:-1, None] + h[:, None] * x[None, :]
    phi = v[:-1, None] + (v[1:] - v[:-1])[:, None] * x[None, :]
    lw = model.log_weight(t)
    shift = np.max(lw)
    wq = np.exp(lw - shift) * (0.5 * _GL8_W)[None, :] * h[:, None]
    denom = float(np.sum(wq * phi**2))
    if denom <= 0.0:
        raise ValueError("test function has zero norm")
    numer = float(np.sum(wq.sum(axis=1) * slope**2))
    return numer / denom
