"""Rotationally symmetric model manifolds reduced to a radial weight.

A model is described by the log of its weight density ``w(t)``, the area of
the level set ``{rho = |t|}``.  Cylinders ``R x S^1`` with metric
``dt^2 + eta'(t)^2 dtheta^2`` have ``w = 2*pi*eta'``; planes of dimension
``n`` have ``w = omega_{n-1} * sigma(t)^(n-1)`` on ``t >= 0``.  Everything
downstream works with ``log w`` so that weights such as ``exp(t / log t)``
never overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize, special
from scipy.interpolate import BPoly, CubicHermiteSpline

from ._expr import compile_expression

TWO_PI = 2.0 * math.pi
LOG_TWO_PI = math.log(TWO_PI)
DEFAULT_COLLAR = 1.5
QUAD_TOL = 1e-10

CONVERGENT = "Convergent"
DIVERGENT = "Divergent"
INCONCLUSIVE = "Inconclusive"

PARABOLIC = "Parabolic"
HYPERBOLIC = "Hyperbolic"


class ModelError(ValueError):
    """Raised for invalid family parameters or unsupported operations."""


# ---------------------------------------------------------------------------
# end behaviour


@dataclass(frozen=True)
class EndClass:
    """Asymptotic class of ``log w`` along one end.

    ``log w(t) ~ lead * t**t_power * log(t)**log_power + poly * log(t)``
    as ``t -> +inf`` (``t`` measured as distance along the end).
    """

    kind: str
    lead: float = 0.0
    t_power: float = 0.0
    log_power: float = 0.0
    poly: float = 0.0

    @classmethod
    def power(cls, exponent: float) -> "EndClass":
        return cls("power", poly=float(exponent))

    @classmethod
    def exp(cls, rate: float, sign: int) -> "EndClass":
        return cls("exp", lead=sign * float(rate), t_power=1.0)

    @classmethod
    def logpower(cls, lead, t_power, log_power, poly=0.0) -> "EndClass":
        return cls("log-power", float(lead), float(t_power), float(log_power), float(poly))

    @classmethod
    def generic(cls) -> "EndClass":
        return cls("generic")

    def _dominant(self) -> bool:
        return self.lead != 0.0 and (
            self.t_power > 0.0 or (self.t_power == 0.0 and self.log_power > 1.0)
        )

    def integrable(self, sign: int, k: float = 0.0) -> Optional[bool]:
        """Does ``int^inf t**k * w(t)**sign dt`` converge?  ``None`` if unknown."""
        if self.kind == "generic":
            return None
        if self._dominant():
            return sign * self.lead < 0.0
        coef = sign * self.poly + k
        if self.lead != 0.0 and self.t_power == 0.0 and self.log_power == 1.0:
            coef += sign * self.lead
        elif self.lead != 0.0:
            return None
        return coef < -1.0

    def cubic_volume_integrable(self) -> Optional[bool]:
        """Does this end's share of ``int^inf v(r) / r^3 dr`` converge?"""
        finite = self.integrable(+1)
        if finite is None:
            return None
        if finite:
            return True
        if self._dominant():
            return False
        # w ~ t**B with B >= -1 so v ~ r**(B+1) (or log r when B = -1)
        return self.poly < 1.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lead": self.lead,
            "t_power": self.t_power,
            "log_power": self.log_power,
            "poly": self.poly,
        }


# ---------------------------------------------------------------------------
# model and regions


@dataclass(frozen=True)
class WeightModel:
    kind: str  # "cylinder" or "plane"
    family: str
    params: tuple
    log_weight: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    ends: dict = field(compare=False)
    section: float = TWO_PI
    dim: int = 2
    log_eta: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, repr=False, compare=False
    )
    collar: float = 0.0

    @property
    def model_id(self) -> str:
        if not self.params:
            return self.family
        inner = ",".join(f"{k}={_fmt_param(v)}" for k, v in self.params)
        return f"{self.family}({inner})"

    @property
    def param_dict(self) -> dict:
        return dict(self.params)

    def weight(self, t):
        return np.exp(self.log_weight(np.asarray(t, dtype=float)))

    def log_deta(self, t):
        """``log(w / section)``: ``log eta'`` for cylinders."""
        return self.log_weight(np.asarray(t, dtype=float)) - math.log(self.section)

    def eta(self, t):
        if self.log_eta is None:
            raise ModelError(f"{self.model_id}: warp primitive eta is not available")
        return np.exp(self.log_eta(np.asarray(t, dtype=float)))

    @property
    def end_names(self) -> tuple:
        return ("+", "-") if self.kind == "cylinder" else ("+",)

    def end_log_weight(self, end: str) -> Callable:
        """``log w`` as a function of distance ``s > 0`` along ``end``."""
        if end == "+":
            return self.log_weight
        if end == "-" and self.kind == "cylinder":
            return lambda s: self.log_weight(-np.asarray(s, dtype=float))
        raise ModelError(f"{self.model_id} has no end {end!r}")

    @property
    def finite_volume(self) -> Optional[bool]:
        flags = [self.ends[e].integrable(+1) for e in self.end_names]
        if any(f is False for f in flags):
            return False
        if all(f is True for f in flags):
            return True
        return None

    @property
    def exp_rate(self) -> Optional[float]:
        """Largest pure exponential rate among the ends (``None`` if none)."""
        rates = [
            abs(c.lead)
            for c in self.ends.values()
            if c.kind == "exp" and c.t_power == 1.0 and c.log_power == 0.0
        ]
        return max(rates) if rates else None


def _fmt_param(v):
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


@dataclass(frozen=True)
class Ball:
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ModelError(f"Ball radius must be > 0, got {self.r}")


@dataclass(frozen=True)
class Annulus:
    a: float
    b: float

    def __post_init__(self):
        if not 0 < self.a < self.b:
            raise ModelError(f"Annulus needs 0 < a < b, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class Exterior:
    r: float
    R: float

    def __post_init__(self):
        if not 0 < self.r < self.R:
            raise ModelError(f"Exterior needs 0 < r < R, got r={self.r}, R={self.R}")


Region = Ball | Annulus | Exterior


# ---------------------------------------------------------------------------
# smoothing collar


def _stencil_derivs(f, t0, h=1e-3):
    tt = t0 + h * np.arange(-3, 4)
    y = np.asarray(f(tt), dtype=float)
    d1 = (-y[0] + 9 * y[1] - 45 * y[2] + 45 * y[4] - 9 * y[5] + y[6]) / (60 * h)
    d2 = (
        2 * y[0] - 27 * y[1] + 270 * y[2] - 490 * y[3] + 270 * y[4] - 27 * y[5] + 2 * y[6]
    ) / (180 * h * h)
    return [y[3], d1, d2]


_GL_X, _GL_W = np.polynomial.legendre.leggauss(96)


class _Collar:
    """C^2 positive interpolation of ``log eta'`` on ``[-c, c]``.

    A quintic Hermite polynomial matches ``log eta'`` and two derivatives at
    both junctions.  ``eta`` on the collar continues the left outer primitive.
    Used when only ``eta'`` is prescribed outside the collar.
    """

    def __init__(self, outer_log_deta, outer_log_eta_minus, c):
        self.c = c
        self.hermite = BPoly.from_derivatives(
            [-c, c], [_stencil_derivs(outer_log_deta, -c), _stencil_derivs(outer_log_deta, c)]
        )
        self.eta_minus_c = math.exp(float(outer_log_eta_minus(np.array([-c]))[0]))

    def log_deta(self, t):
        return self.hermite(np.asarray(t, dtype=float))

    def log_integral(self):
        """``log int_{-c}^{c} eta'``."""
        c = self.c
        vals = self.hermite(c * _GL_X)
        shift = vals.max()
        return shift + math.log(c * np.dot(_GL_W, np.exp(vals - shift)))

    def log_eta(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        half = 0.5 * (t + self.c)
        s = half[:, None] * (_GL_X[None, :] + 1.0) - self.c
        return np.log(self.eta_minus_c + half * (np.exp(self.log_deta(s)) @ _GL_W))


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10.0 - 15.0 * x + 6.0 * x * x)


class _RatioCollar:
    """Collar interpolating ``h = eta'/eta = (log eta)'`` on ``[-c, c]``.

    Used when ``eta`` is prescribed on both sides.  With ``B`` a C^2 plateau
    bump (zero to second order at the junctions) and ``T`` the second-order
    Taylor polynomial of the outer ratio at the nearest junction,
    ``h = (1 - B) T + m B``; the constant ``m`` makes ``int h`` equal the jump
    of ``log eta``.  ``h`` is piecewise polynomial, so ``log eta`` is
    integrated exactly by Gauss-Legendre on each piece.
    """

    _X, _W = np.polynomial.legendre.leggauss(8)

    def __init__(self, outer_log_deta, outer_log_eta, c):
        self.c = c
        ratio = lambda t: np.exp(outer_log_deta(t) - outer_log_eta(t))
        self.jet_minus = _stencil_derivs(ratio, -c)
        self.jet_plus = _stencil_derivs(ratio, c)
        ends = outer_log_eta(np.array([-c, c]))
        self.log_eta_minus_c = float(ends[0])
        jump = float(ends[1] - ends[0])
        # narrow the transitions until the plateau level is comfortably positive
        for k in range(12):
            self.delta = c / (3.0 * 2**k)
            self.m = 0.0
            taylor_part = float(self._integral(np.array([c]))[0])
            self.m = (jump - taylor_part) / (2.0 * c - self.delta)
            if self.m >= 0.25 * jump / c and np.all(self.ratio(np.linspace(-c, c, 2001)) > 0):
                return
        raise ModelError("collar interpolation would make the weight non-positive")

    def _taylor(self, t):
        c = self.c
        hm, dm, qm = self.jet_minus
        hp, dp, qp = self.jet_plus
        xm, xp = t + c, t - c
        return np.where(
            t < 0.0, hm + dm * xm + 0.5 * qm * xm * xm, hp + dp * xp + 0.5 * qp * xp * xp
        )

    def ratio(self, t):
        t = np.asarray(t, dtype=float)
        c, d = self.c, self.delta
        bump = _smoothstep((c + t) / d) * _smoothstep((c - t) / d)
        return (1.0 - bump) * self._taylor(t) + self.m * bump

    def _integral(self, t):
        """``int_{-c}^{t} h``; exact because ``h`` is polynomial on each piece."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        c, d = self.c, self.delta
        out = np.zeros_like(t)
        for lo, hi in ((-c, -c + d), (-c + d, c - d), (c - d, c)):
            top = np.clip(t, lo, hi)
            half = 0.5 * (top - lo)
            nodes = lo + half[:, None] * (self._X[None, :] + 1.0)
            out += half * (self.ratio(nodes) @ self._W)
        return out

    def log_eta(self, t):
        return self.log_eta_minus_c + self._integral(t)

    def log_deta(self, t):
        return self.log_eta(t) + np.log(self.ratio(t))


def _assemble(outer_log_deta, outer_log_eta_minus, outer_log_eta_plus, collar):
    """Glue outer formulas and the collar into full ``log eta'`` and ``log eta``."""
    c = collar.c

    def log_deta(t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        inside = np.abs(t) < c
        out[inside] = collar.log_deta(t[inside])
        out[~inside] = outer_log_deta(t[~inside])
        return out

    def log_eta(t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        lo = t <= -c
        hi = t >= c
        mid = ~(lo | hi)
        out[lo] = outer_log_eta_minus(t[lo])
        out[hi] = outer_log_eta_plus(t[hi])
        if mid.any():
            out[mid] = collar.log_eta(t[mid])
        return out

    return log_deta, log_eta


def _sided(minus, plus):
    def f(t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, plus(np.where(t > 0, t, 1.0)), minus(np.where(t < 0, t, -1.0)))

    return f


# ---------------------------------------------------------------------------
# family constructors


def _log_abs(t):
    return np.log(np.abs(t))


def _power_model(alpha, c):
    if not alpha > 0:
        raise ModelError(f"power family: alpha must be > 0, got {alpha}")

    def outer(t):
        t = np.asarray(t, dtype=float)
        return np.where(
            t > 0,
            math.log(2 * alpha) + (alpha - 1) * np.log(np.abs(t)),
            math.log(alpha) - (alpha + 1) * np.log(np.abs(t)),
        )

    eta_minus = lambda t: -alpha * _log_abs(t)
    eta_plus = lambda t: math.log(2.0) + alpha * _log_abs(t)
    collar = _RatioCollar(outer, _sided(eta_minus, eta_plus), c)
    log_deta, log_eta = _assemble(outer, eta_minus, eta_plus, collar)
    ends = {"+": EndClass.power(alpha - 1), "-": EndClass.power(-alpha - 1)}
    return log_deta, log_eta, ends


def _exp_model(alpha, c):
    if not alpha > 0:
        raise ModelError(f"exp family: alpha must be > 0, got {alpha}")
    outer = lambda t: -alpha * np.abs(np.asarray(t, dtype=float))
    eta_minus = lambda t: alpha * np.asarray(t, dtype=float) - math.log(alpha)
    collar = _Collar(outer, eta_minus, c)
    eta_c = math.exp(-alpha * c) / alpha + math.exp(collar.log_integral())
    eta_plus = lambda t: np.log(
        eta_c + (math.exp(-alpha * c) - np.exp(-alpha * np.asarray(t, dtype=float))) / alpha
    )
    log_deta, log_eta = _assemble(outer, eta_minus, eta_plus, collar)
    ends = {"+": EndClass.exp(alpha, -1), "-": EndClass.exp(alpha, -1)}
    return log_deta, log_eta, ends


def _mu_functions(spec, params):
    """Return ``(log_mu, I)`` with ``I(t) = int_1^t mu`` for ``t >= 1``."""
    if spec == "log-beta":
        beta = params.get("beta")
        if beta is None or not beta > 0:
            raise ModelError(f"mu-family log-beta: beta must be > 0, got {beta}")
        log_mu = lambda t: beta * np.log(np.log(t)) - np.log(t)
        integral = lambda t: np.log(t) ** (1 + beta) / (1 + beta)
        end = lambda s: EndClass.logpower(s / (1 + beta), 0.0, 1 + beta, -1.0)
        return log_mu, integral, end, ("beta", float(beta))
    if spec == "power":
        a = params.get("alpha")
        if a is None or not 0 < a < 1:
            raise ModelError(f"mu-family power: alpha must satisfy 0 < alpha < 1, got {a}")
        log_mu = lambda t: -a * np.log(t)
        integral = lambda t: (np.asarray(t, dtype=float) ** (1 - a) - 1.0) / (1 - a)
        end = lambda s: EndClass.logpower(s / (1 - a), 1 - a, 0.0, -a)
        return log_mu, integral, end, ("alpha", float(a))
    if spec == "log":
        g = params.get("gamma")
        if g is None or not g > 0:
            raise ModelError(f"mu-family log: gamma must be > 0, got {g}")
        log_mu = lambda t: -g * np.log(np.log1p(t))
        if g == 1.0:
            base = special.expi(math.log(2.0))
            integral = lambda t: special.expi(np.log1p(np.asarray(t, dtype=float))) - base
        else:
            integral = _tabulated_integral(lambda t: np.exp(log_mu(t)))
        end = lambda s: EndClass.logpower(s, 1.0, -g, 0.0)
        return log_mu, integral, end, ("gamma", float(g))
    raise ModelError(f"mu-family: unknown mu spec {spec!r} (use log-beta, power, log)")


def _tabulated_integral(mu, t_max=1e9, n=6000):
    """``int_1^t mu`` by cumulative Gauss-Legendre on a log grid, Hermite-interpolated."""
    x16, w16 = np.polynomial.legendre.leggauss(16)
    knots = np.exp(np.linspace(0.0, math.log(t_max), n))
    a, b = knots[:-1], knots[1:]
    nodes = 0.5 * (b - a)[:, None] * (x16[None, :] + 1.0) + a[:, None]
    pieces = 0.5 * (b - a) * (mu(nodes) @ w16)
    values = np.concatenate([[0.0], np.cumsum(pieces)])
    spline = CubicHermiteSpline(knots, values, mu(knots))
    return lambda t: spline(np.asarray(t, dtype=float))


def _mu_model(spec, params, c):
    log_mu, integral, end, key = _mu_functions(spec, params)

    def outer(t):
        t = np.asarray(t, dtype=float)
        s = np.abs(t)
        return np.where(
            t > 0, math.log(2.0) + integral(s) + log_mu(s), -integral(s) + log_mu(s)
        )

    eta_minus = lambda t: -integral(np.abs(t))
    eta_plus = lambda t: math.log(2.0) + integral(np.asarray(t, dtype=float))
    collar = _RatioCollar(outer, _sided(eta_minus, eta_plus), c)
    log_deta, log_eta = _assemble(outer, eta_minus, eta_plus, collar)
    ends = {"+": end(+1), "-": end(-1)}
    return log_deta, log_eta, ends, (("mu", spec), key)


def make_model(family: str, params: Optional[dict] = None, collar: float = DEFAULT_COLLAR):
    """Build a builtin model.

    Families: ``flat-cylinder``, ``power`` (alpha), ``exp`` (alpha), ``dprs``,
    ``mu-family`` (mu in {log-beta, power, log} with beta/alpha/gamma),
    ``euclid`` (n), and ``generic`` (kind, log_weight expression in ``t``).
    """
    params = dict(params or {})
    if not 1.0 < collar <= DEFAULT_COLLAR:
        raise ModelError(f"collar half-width must lie in (1, {DEFAULT_COLLAR}], got {collar}")

    def cylinder(log_deta, log_eta, ends, ptuple, c=collar):
        return WeightModel(
            kind="cylinder",
            family=family,
            params=ptuple,
            log_weight=lambda t: LOG_TWO_PI + log_deta(t),
            ends=ends,
            log_eta=log_eta,
            collar=c,
        )

    if family == "flat-cylinder":
        _no_extra(family, params, ())
        zero = lambda t: np.zeros_like(np.asarray(t, dtype=float))
        ends = {"+": EndClass.power(0.0), "-": EndClass.power(0.0)}
        return cylinder(zero, None, ends, (), c=0.0)
    if family == "power":
        _no_extra(family, params, ("alpha",))
        alpha = _number(params, "alpha", family)
        return cylinder(*_power_model(alpha, collar), (("alpha", alpha),))
    if family == "exp":
        _no_extra(family, params, ("alpha",))
        alpha = _number(params, "alpha", family)
        return cylinder(*_exp_model(alpha, collar), (("alpha", alpha),))
    if family == "dprs":
        _no_extra(family, params, ())
        ident = lambda t: np.asarray(t, dtype=float).copy()
        ends = {"+": EndClass.exp(1.0, +1), "-": EndClass.exp(1.0, -1)}
        return cylinder(ident, ident, ends, (), c=0.0)
    if family == "mu-family":
        spec = params.get("mu")
        _no_extra(family, params, ("mu", "beta", "alpha", "gamma"))
        numeric = {k: float(v) for k, v in params.items() if k != "mu"}
        log_deta, log_eta, ends, ptuple = _mu_model(spec, numeric, collar)
        return cylinder(log_deta, log_eta, ends, ptuple)
    if family == "euclid":
        _no_extra(family, params, ("n",))
        n = params.get("n")
        if not isinstance(n, int) or isinstance(n, bool) or n < 2:
            raise ModelError(f"euclid family: n must be an integer >= 2, got {n!r}")
        omega = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
        log_omega = math.log(omega)
        def log_w(t):
            with np.errstate(divide="ignore"):
                return log_omega + (n - 1) * np.log(np.asarray(t, dtype=float))
        return WeightModel(
            kind="plane",
            family=family,
            params=(("n", n),),
            log_weight=log_w,
            ends={"+": EndClass.power(n - 1)},
            section=omega,
            dim=n,
        )
    if family == "generic":
        _no_extra(family, params, ("kind", "log_weight"))
        kind = params.get("kind", "cylinder")
        if kind not in ("cylinder", "plane"):
            raise ModelError(f"generic family: kind must be cylinder or plane, got {kind!r}")
        expr = params.get("log_weight")
        if not isinstance(expr, str):
            raise ModelError("generic family: log_weight expression string is required")
        log_w = compile_expression(expr)
        ends = {e: EndClass.generic() for e in (("+", "-") if kind == "cylinder" else ("+",))}
        return WeightModel(
            kind=kind,
            family=family,
            params=(("kind", kind), ("log_weight", expr)),
            log_weight=log_w,
            ends=ends,
            section=TWO_PI if kind == "cylinder" else 1.0,
        )
    raise ModelError(f"unknown family {family!r}")


def _number(params, key, family):
    value = params.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelError(f"{family} family: {key} must be a number, got {value!r}")
    return float(value)


def _no_extra(family, params, allowed):
    extra = sorted(set(params) - set(allowed))
    if extra:
        raise ModelError(f"{family} family: unexpected parameter(s) {', '.join(extra)}")


# ---------------------------------------------------------------------------
# log-space quadrature


def log_quad(log_f, a, b, points=None):
    """``(log int_a^b exp(log_f), relative error)``; ``b`` may be ``inf``."""
    if b == math.inf:
        probe = a + np.concatenate([[0.0], np.geomspace(1e-3, 64.0, 64)])
    else:
        probe = np.linspace(a, b, 513)
    vals = np.asarray(log_f(probe), dtype=float)
    shift = float(np.nanmax(vals))
    if not np.isfinite(shift):
        return -math.inf, 0.0
    f = lambda t: math.exp(float(log_f(np.array([t]))[0]) - shift)
    kwargs = dict(epsabs=0.0, epsrel=QUAD_TOL, limit=500)
    if points is not None and b != math.inf:
        pts = [p for p in points if a < p < b]
        if pts:
            kwargs["points"] = pts
    if b == math.inf and points is None:
        # split so that the infinite piece starts where the integrand is known
        mid = a + 64.0
        v1, e1 = integrate.quad(f, a, mid, **kwargs)
        v2, e2 = integrate.quad(f, mid, math.inf, **kwargs)
        value, err = v1 + v2, e1 + e2
    else:
        value, err = integrate.quad(f, a, b, **kwargs)
    if value <= 0.0:
        return -math.inf, math.inf
    return shift + math.log(value), err / value


# ---------------------------------------------------------------------------
# volumes


def log_volume(model: WeightModel, r: float) -> float:
    """``log |B_r|`` with ``B_r = {|t| < r}``."""
    if not r > 0:
        raise ModelError(f"radius must be > 0, got {r}")
    if model.kind == "cylinder" and model.log_eta is not None:
        le = model.log_eta(np.array([r, -r]))
        return LOG_TWO_PI + le[0] + math.log1p(-math.exp(le[1] - le[0]))
    return log_volume_quad(model, r)


def log_volume_quad(model: WeightModel, r: float) -> float:
    """``log |B_r|`` by adaptive quadrature of the weight."""
    if model.kind == "plane":
        return log_quad(model.log_weight, 0.0, r)[0]
    c = model.collar
    return log_quad(model.log_weight, -r, r, points=[-c, c] if c else None)[0]


def volume(model: WeightModel, r: float) -> float:
    return math.exp(log_volume(model, r))


@dataclass(frozen=True)
class EndIntegralResult:
    value: float
    status: str
    method: str
    error: float = 0.0


def _end_tail(model, end, a, sign):
    """``int_a^inf w^sign`` along ``end`` (in log form): symbolic, then numeric."""
    cls = model.ends[end]
    log_w = model.end_log_weight(end)
    log_f = lambda s: sign * log_w(s)
    verdict = cls.integrable(sign)
    if verdict is False:
        return EndIntegralResult(math.inf, DIVERGENT, "symbolic")
    if verdict is True:
        lv, rel = log_quad(log_f, a, math.inf)
        return EndIntegralResult(lv, CONVERGENT, "symbolic", rel)
    return certify_tail(log_f, a)


def certify_tail(log_f, a, max_doublings=160):
    """Doubling-window certification of ``int_a^inf exp(log_f)``.

    Returns the log of the partial sum for Convergent results.
    """
    log_total = -math.inf
    small_run = 0
    history = []
    lo = a
    for _ in range(max_doublings):
        hi = 2.0 * lo
        log_inc, _ = log_quad(log_f, lo, hi)
        log_total = np.logaddexp(log_total, log_inc)
        history.append(log_total)
        if log_total > math.log(1e6) and len(history) >= 4:
            slope = np.polyfit(np.arange(4), np.exp(np.array(history[-4:]) - log_total), 1)[0]
            if slope > 0:
                return EndIntegralResult(math.inf, DIVERGENT, "numeric")
        if log_inc - log_total < math.log(1e-12):
            small_run += 1
            if small_run >= 3:
                return EndIntegralResult(float(log_total), CONVERGENT, "numeric")
        else:
            small_run = 0
        lo = hi
    return EndIntegralResult(math.nan, INCONCLUSIVE, "numeric")


def exterior_volume(model: WeightModel, r: float) -> EndIntegralResult:
    """``|M \\ B_r|``; ``value`` holds the log of the volume when Convergent."""
    if not r > 0:
        raise ModelError(f"radius must be > 0, got {r}")
    parts = [_end_tail(model, e, r, +1) for e in model.end_names]
    if any(p.status == DIVERGENT for p in parts):
        return EndIntegralResult(math.inf, DIVERGENT, parts[0].method)
    if any(p.status == INCONCLUSIVE for p in parts):
        return EndIntegralResult(math.nan, INCONCLUSIVE, "numeric")
    logv = float(np.logaddexp.reduce([p.value for p in parts]))
    method = "symbolic" if all(p.method == "symbolic" for p in parts) else "numeric"
    return EndIntegralResult(logv, CONVERGENT, method, max(p.error for p in parts))


# ---------------------------------------------------------------------------
# end integrals, capacity, type


def _check_end_start(model, a):
    if model.kind == "cylinder" and a < model.collar:
        raise ModelError(f"a={a} lies inside the smoothing collar |t| < {model.collar}")
    if not a > 0:
        raise ModelError(f"a must be > 0, got {a}")


def end_reciprocal_integral(model: WeightModel, end: str, a: float) -> EndIntegralResult:
    """``int_a^inf dt / eta'`` (cylinder) or ``int_a^inf dt / sigma^(n-1)`` (plane)."""
    _check_end_start(model, a)
    res = _end_tail(model, end, a, -1)
    if res.status != CONVERGENT:
        return res
    value = model.section * math.exp(res.value)
    return EndIntegralResult(value, CONVERGENT, res.method, res.error)


@dataclass(frozen=True)
class CapacityResult:
    total: float
    per_end: dict
    statuses: dict


def capacity_ball(model: WeightModel, a: float) -> CapacityResult:
    """Capacity of ``B_a``: sum over ends of ``section / int_a^inf dt / eta'``."""
    per_end, statuses = {}, {}
    for e in model.end_names:
        res = end_reciprocal_integral(model, e, a)
        statuses[e] = res.status
        if res.status == CONVERGENT:
            per_end[e] = model.section / res.value
        elif res.status == DIVERGENT:
            per_end[e] = 0.0
        else:
            per_end[e] = math.nan
    total = sum(per_end.values())
    return CapacityResult(total, per_end, statuses)


def capacity_energy(model: WeightModel, end: str, a: float, R: float, cells: int = 1 << 14):
    """Dirichlet energy of the discrete minimizer of ``int_a^R w u'^2``.

    The boundary data are ``u(a) = 1``, ``u(R) = 0``.  The grid is uniform in
    ``s = log(t / a)``; on it the minimizer is the normalized cumulative
    resistance, and its energy is evaluated directly.  Two grids are
    Richardson-combined.
    """
    _check_end_start(model, a)
    log_w = model.end_log_weight(end)

    def energy(n):
        s_max = math.log(R / a)
        ds = s_max / n
        s_mid = (np.arange(n) + 0.5) * ds
        t_mid = a * np.exp(s_mid)
        log_cond = log_w(t_mid) - np.log(t_mid) - math.log(ds)  # (w/t)/ds per cell
        log_drop = -log_cond - special.logsumexp(-log_cond)  # u_k - u_{k+1}
        return math.exp(special.logsumexp(log_cond + 2.0 * log_drop))

    coarse, fine = energy(cells), energy(2 * cells)
    return (4.0 * fine - coarse) / 3.0


@dataclass(frozen=True)
class TypeVerdict:
    classification: str
    cap_plus: float
    cap_minus: Optional[float]
    basis: dict

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "cap_plus": self.cap_plus,
            "cap_minus": self.cap_minus,
            "basis": self.basis,
        }


def classify_type(model: WeightModel, a: Optional[float] = None) -> TypeVerdict:
    """Parabolic iff every end has zero capacity (divergent reciprocal integral)."""
    if a is None:
        a = max(2.0, model.collar) if model.kind == "cylinder" else 1.0
    cap = capacity_ball(model, a)
    statuses = cap.statuses
    if any(s == CONVERGENT and cap.per_end[e] > 0 for e, s in statuses.items()):
        cls = HYPERBOLIC
    elif all(s == DIVERGENT for s in statuses.values()):
        cls = PARABOLIC
    else:
        cls = INCONCLUSIVE
    basis = {f"end{e}": s for e, s in statuses.items()}
    return TypeVerdict(cls, cap.per_end["+"], cap.per_end.get("-"), basis)


@dataclass(frozen=True)
class DivergenceDiagnostics:
    inverse_square: str  # int_M dV / (1 + rho^2)
    cubic_volume: str  # int_1^inf v(r) / r^3 dr


def divergence_diagnostics(model: WeightModel) -> DivergenceDiagnostics:
    def combine(flags):
        if any(f is False for f in flags):
            return DIVERGENT
        if all(f is True for f in flags):
            return CONVERGENT
        return INCONCLUSIVE

    ends = [model.ends[e] for e in model.end_names]
    return DivergenceDiagnostics(
        combine([c.integrable(+1, k=-2.0) for c in ends]),
        combine([c.cubic_volume_integrable() for c in ends]),
    )
