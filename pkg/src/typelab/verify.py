"""Consistency battery tying type, spectrum and volume growth together.

Each check compares two sides of an inequality.  Estimates are turned into
plausible intervals ``[lo, hi]`` for the true limit (see :func:`bracket`);
a check passes when the inequality holds for every point of the intervals,
fails when it is violated for every point, and is inconclusive otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import asymptotics as asy
from .bounds import (
    CutoffSpec,
    J_sup,
    Thresholds,
    chi_opt,
    g_function,
    growth_factor,
    j_min,
    prop61_bound,
    solve_t0,
    upper_bound_U,
)
from .model import HYPERBOLIC, INCONCLUSIVE, PARABOLIC, Ball, ModelError, TypeVerdict, WeightModel
from .model import classify_type, log_volume, make_model
from .slsolve import ResolutionError, TestFunction, lambda1_region

PASS = "Pass"
FAIL = "Fail"
INCONCLUSIVE_VERDICT = "Inconclusive"

CHECK_IDS = (
    "thm1_1",
    "thm1_4",
    "thm1_6",
    "thm1_7",
    "thm5_1",
    "thm5_2",
    "prop6_1",
    "lemma3_1",
    "lemma3_4_growth",
    "prop1_5_instance",
)

U_REL = 0.03  # relative slack on the U(nu) bound
LIMIT_ABS = 0.01  # absolute slack on spectral limits and rates
RATE_ABS = 0.05  # absolute slack on exponential rates
GROWTH_REL = 0.02
THRESHOLD_ROOT_TOL = 1e-9
LEMMA31_CONFIGS = ((0.0, 1.0, 1.0), (0.25, 0.5, 2.16), (1.0, 2.0, 2.16))
LEMMA31_SAMPLES = 200

DEFAULT_ZOO = (
    ("flat-cylinder", {}),
    ("power", {"alpha": 2}),
    ("power", {"alpha": 4}),
    ("exp", {"alpha": 1}),
    ("dprs", {}),
    ("mu-family", {"mu": "power", "alpha": 0.5}),
    ("mu-family", {"mu": "log", "gamma": 1}),
    ("euclid", {"n": 2}),
    ("euclid", {"n": 3}),
)


def default_zoo() -> list:
    return [make_model(f, p) for f, p in DEFAULT_ZOO]


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    model_id: str
    lhs: float
    rhs: float
    slack: float
    verdict: str
    narrative: str

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "model_id": self.model_id,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "verdict": self.verdict,
            "narrative": self.narrative,
        }


# ---------------------------------------------------------------------------
# interval logic


def bracket(est: asy.Estimate, lower: float = 0.0):
    """Plausible interval for the limit behind ``est``.

    Converged: the window spread around the value.  TrendOnly: one-sided,
    in the direction of the trend.  Unbounded: ``[+inf, +inf]``.
    """
    if est.status == asy.UNBOUNDED:
        return math.inf, math.inf
    if est.status == asy.CONVERGED and math.isfinite(est.value):
        return max(lower, est.value - est.error), est.value + est.error
    if est.status == asy.TREND_ONLY and math.isfinite(est.value):
        if est.trend < 0:
            return lower, est.value
        if est.trend > 0:
            return est.value, math.inf
    return lower, math.inf


def _decide(lhs, rhs, slack):
    """Verdict for ``lhs <= rhs`` with intervals ``lhs``, ``rhs``."""
    if lhs[1] <= rhs[0] + slack:
        return PASS
    if lhs[0] > rhs[1] + slack:
        return FAIL
    return INCONCLUSIVE_VERDICT


def _mid(interval):
    lo, hi = interval
    if math.isfinite(lo) and math.isfinite(hi):
        return 0.5 * (lo + hi)
    return lo if math.isfinite(lo) else hi


def _result(check_id, model_id, lhs, rhs, slack, verdict, text):
    return CheckResult(check_id, model_id, float(lhs), float(rhs), float(slack), verdict, text)


# ---------------------------------------------------------------------------
# individual checks


def check_thm1_4(verdict: TypeVerdict, profile, thresholds: Optional[Thresholds] = None) -> CheckResult:
    """Parabolic models satisfy ``Lambda_* <= 4 t0^2``."""
    th = thresholds or solve_t0()
    mid = profile.model_id
    lam = profile.Lambda_star
    residual = g_function(th.t0)
    if abs(residual) > THRESHOLD_ROOT_TOL or abs(th.four_t0_sq - 4 * th.t0**2) > 1e-9:
        return _result("thm1_4", mid, lam.value, th.four_t0_sq, 0.0, FAIL,
                       f"threshold t0={th.t0:.6g} is not a root of g (g={residual:.3g})")
    if verdict.classification == HYPERBOLIC:
        return _result("thm1_4", mid, lam.value, th.four_t0_sq, 0.0, PASS, "hyperbolic: vacuous")
    if verdict.classification == INCONCLUSIVE:
        return _result("thm1_4", mid, lam.value, th.four_t0_sq, 0.0, INCONCLUSIVE_VERDICT,
                       "type undecided")
    slack = 1e-3 * th.four_t0_sq
    v = _decide(bracket(lam), (th.four_t0_sq, th.four_t0_sq), slack)
    text = f"parabolic: Lambda_*={lam.value:.6g} [{lam.status}] vs 4t0^2={th.four_t0_sq:.6g}"
    return _result("thm1_4", mid, lam.value, th.four_t0_sq, slack, v, text)


def check_thm1_6(profile) -> CheckResult:
    """``Lambda_* <= U(nu_*)`` (with 3% slack)."""
    mid = profile.model_id
    lam, nu = profile.Lambda_star, profile.nu_star
    nu_lo, nu_hi = bracket(nu)
    u_lo = upper_bound_U(nu_lo) if math.isfinite(nu_lo) else math.inf
    u_hi = upper_bound_U(nu_hi) if math.isfinite(nu_hi) else math.inf
    rhs = (u_lo * (1 + U_REL), u_hi * (1 + U_REL))
    v = _decide(bracket(lam), rhs, 1e-3)
    text = (f"Lambda_*={lam.value:.6g} [{lam.status}] vs U(nu_*={nu.value:.6g} [{nu.status}])"
            f"={u_lo:.6g}")
    return _result("thm1_6", mid, lam.value, u_lo, U_REL * u_lo + 1e-3, v, text)


def check_thm1_7(profile) -> CheckResult:
    """Finite volume: ``LambdaTilde_* >= alpha_* - 0.05``."""
    mid = profile.model_id
    lt, al = profile.LambdaTilde_star, profile.alpha_star_inf
    if profile.finite_volume is False:
        return _result("thm1_7", mid, al.value, lt.value, RATE_ABS, PASS, "infinite volume: vacuous")
    if profile.finite_volume is None:
        return _result("thm1_7", mid, al.value, lt.value, RATE_ABS, INCONCLUSIVE_VERDICT,
                       "volume finiteness undecided")
    v = _decide(bracket(al), bracket(lt), RATE_ABS)
    text = f"alpha_*={al.value:.6g} [{al.status}] vs LambdaTilde_*={lt.value:.6g} [{lt.status}]"
    return _result("thm1_7", mid, al.value, lt.value, RATE_ABS, v, text)


def _limit_bracket(est):
    if est.status == asy.CONVERGED:
        return max(0.0, est.value - est.error), est.value + est.error
    return 0.0, est.value  # decreasing in the radius: the last sample bounds the limit


def check_brooks(profile) -> list:
    """``lambda_1(M) <= mu_*^2/4`` and, for finite volume, ``lambda_1^ess <= alpha_*^2/4``."""
    mid = profile.model_id
    out = []
    lm, mu = profile.lambda1_M, profile.mu_star_inf
    mu_lo, mu_hi = bracket(mu)
    rhs = (mu_lo**2 / 4, mu_hi**2 / 4)
    v = _decide(_limit_bracket(lm), rhs, LIMIT_ABS)
    out.append(_result("thm5_1", mid, lm.value, mu.value**2 / 4, LIMIT_ABS, v,
                       f"lambda1(M)={lm.value:.6g} [{lm.status}] vs mu_*^2/4 with mu_*={mu.value:.6g} [{mu.status}]"))
    le, al = profile.lambda1_ess, profile.alpha_star_inf
    if profile.finite_volume:
        a_lo, a_hi = bracket(al)
        v = _decide(_limit_bracket(le), (a_lo**2 / 4, a_hi**2 / 4), LIMIT_ABS)
        text = f"lambda1_ess={le.value:.6g} [{le.status}] vs alpha_*^2/4 with alpha_*={al.value:.6g}"
        rhs_val = al.value**2 / 4
    else:
        v, text, rhs_val = PASS, "infinite volume: not applicable", math.nan
    out.append(_result("thm5_2", mid, le.value, rhs_val, LIMIT_ABS, v, text))
    return out


def check_thm1_1(verdict: TypeVerdict, profile) -> CheckResult:
    """Parabolic models have finite volume or ``lambda_1^ess = 0``."""
    mid = profile.model_id
    le = profile.lambda1_ess
    if verdict.classification == HYPERBOLIC:
        return _result("thm1_1", mid, le.value, 0.0, LIMIT_ABS, PASS, "hyperbolic: vacuous")
    if verdict.classification == INCONCLUSIVE:
        return _result("thm1_1", mid, le.value, 0.0, LIMIT_ABS, INCONCLUSIVE_VERDICT, "type undecided")
    if profile.finite_volume:
        return _result("thm1_1", mid, le.value, 0.0, LIMIT_ABS, PASS, "parabolic with finite volume")
    v = _decide(_limit_bracket(le), (0.0, 0.0), LIMIT_ABS)
    return _result("thm1_1", mid, le.value, 0.0, LIMIT_ABS, v,
                   f"parabolic, infinite volume: lambda1_ess={le.value:.6g} [{le.status}] must vanish")


def _scaled_lambda(model, r, tol, scale):
    return scale * lambda1_region(model, Ball(r), tol=tol).lam


def check_prop1_5_instance(n: int, tol: float = 1e-8, scale: float = 1.0) -> CheckResult:
    """``R^n`` has ``Lambda_* = j^2 >= max(C/(2e), C^2/16)`` with ``C = 2n``; ``C > 4`` forces hyperbolicity."""
    model = make_model("euclid", {"n": n})
    C = 2.0 * n
    bound = max(C / (2 * math.e), C * C / 16)
    lam = _scaled_lambda(model, 1.0, tol, scale)
    kind = classify_type(model).classification
    expected = HYPERBOLIC if C > 4 else PARABOLIC
    slack = 10 * tol * lam
    if kind != expected:
        return _result("prop1_5_instance", model.model_id, bound, lam, slack, FAIL,
                       f"C={C:g}: classified {kind}, expected {expected}")
    v = PASS if lam >= bound - slack else FAIL
    return _result("prop1_5_instance", model.model_id, bound, lam, slack, v,
                   f"j^2={lam:.8g} vs max(C/2e, C^2/16)={bound:.6g}; type {kind}")


def check_prop6_1(model: WeightModel, radii=(2.0, 8.0, 32.0), tol: float = 1e-8, scale: float = 1.0) -> CheckResult:
    """``lambda_1(B_r) >= inf (eta'/eta)^2 / 4`` on each tested radius."""
    worst = None
    for r in radii:
        bound = prop61_bound(model, r)
        lam = _scaled_lambda(model, r, tol, scale)
        margin = lam * (1 + 10 * tol) - bound
        if worst is None or margin < worst[0]:
            worst = (margin, r, bound, lam)
    margin, r, bound, lam = worst
    v = PASS if margin >= 0 else FAIL
    return _result("prop6_1", model.model_id, bound, lam, 10 * tol * lam, v,
                   f"tightest at r={r:g}: bound {bound:.6g} <= lambda1 {lam:.6g}")


def check_lemma3_4_growth(model: WeightModel, C1: Optional[float] = None, radii=None,
                          tol: float = 1e-8, scale: float = 1.0) -> CheckResult:
    """``(2r)^2 lambda_1(B_2r) >= C1`` implies ``v(2r) >= C2(C1) v(r)``."""
    if radii is None:
        radii = [2.0 * 2**k for k in range(6)]
        cap = asy.radius_cap(model)
        if cap:
            radii = [r for r in radii if 2 * r <= cap]
    scaled = [(2 * r) ** 2 * _scaled_lambda(model, 2 * r, tol, scale) for r in radii]
    admissible = min(scaled) * (1 - 10 * tol)
    if C1 is None:
        C1 = admissible
    elif C1 > admissible:
        return _result("lemma3_4_growth", model.model_id, math.nan, growth_factor(C1), 0.0,
                       INCONCLUSIVE_VERDICT,
                       f"hypothesis fails: min (2r)^2 lambda1(B_2r) = {admissible:.6g} < C1={C1:.6g}")
    ratios = [math.exp(log_volume(model, 2 * r) - log_volume(model, r)) for r in radii]
    c2 = growth_factor(C1)
    worst = min(ratios)
    v = PASS if worst >= c2 * (1 - GROWTH_REL) else FAIL
    return _result("lemma3_4_growth", model.model_id, worst, c2, GROWTH_REL * c2, v,
                   f"C1={C1:.6g}: min v(2r)/v(r)={worst:.6g} vs C2={c2:.6g}")


def _random_cutoff(rng, a, b):
    k = int(rng.integers(1, 21))
    knots = np.concatenate([[a], np.sort(rng.uniform(a, b, k)), [b]])
    knots = np.unique(knots)
    steps = rng.random(knots.size - 1) + 1e-3
    values = np.concatenate([[0.0], np.cumsum(steps)])
    return TestFunction(knots, values / values[-1])


def check_lemma3_1(seed: int = 0) -> CheckResult:
    """Random monotone piecewise-linear cut-offs never beat ``chi_0``."""
    rng = np.random.default_rng(seed)
    worst_gap, worst_cfg, worst_match = math.inf, None, 0.0
    for a, b, A in LEMMA31_CONFIGS:
        ref = J_sup(chi_opt(CutoffSpec(a, b, A)), A)
        worst_match = max(worst_match, abs(ref / j_min(A, b - a) - 1.0))
        for _ in range(LEMMA31_SAMPLES):
            gap = J_sup(_random_cutoff(rng, a, b), A) - ref
            if gap < worst_gap:
                worst_gap, worst_cfg = gap, (a, b, A)
    ok = worst_gap >= -1e-9 and worst_match <= 1e-6
    return _result("lemma3_1", "-", worst_gap, -1e-9, 1e-9, PASS if ok else FAIL,
                   f"min sup-J excess {worst_gap:.3g} at (a,b,A)={worst_cfg}; "
                   f"chi_0 vs closed form rel {worst_match:.2g}")


# ---------------------------------------------------------------------------
# battery


@dataclass
class BatteryConfig:
    seed: int = 0
    checks: tuple = CHECK_IDS
    tol: float = 1e-6
    limit_tol: float = 1e-3
    grid: asy.RadiusGrid = field(default_factory=asy.RadiusGrid)
    thresholds: Optional[Thresholds] = None  # override (fault injection)
    eigen_scale: dict = field(default_factory=dict)  # model_id -> factor (fault injection)
    jobs: int = 1


def inflate_profile(profile, factor: float):
    """Profile of the same model with every eigenvalue multiplied by ``factor``."""
    eig = profile.curves[asy.EIGENVALUE]
    scaled = asy.SampleCurve(eig.model_id, eig.quantity, eig.r, eig.values * factor,
                             eig.errors * factor, eig.log_values + math.log(factor), eig.failures)
    curves = dict(profile.curves)
    curves[asy.EIGENVALUE] = scaled

    def mult(e):
        return asy.Estimate(e.value * factor, e.status, tuple(x * factor for x in e.window),
                            e.trend, e.error * factor, e.last * factor)

    return profile.replace(
        Lambda_star=asy.scaled_tail_estimate(scaled, "r2", "liminf"),
        LambdaTilde_star=asy.scaled_tail_estimate(scaled, "neglog", "liminf"),
        lambda1_M=mult(profile.lambda1_M),
        lambda1_ess=mult(profile.lambda1_ess),
        curves=curves,
    )


def _guard(check_id, model_id, fn, *args, **kwargs):
    try:
        out = fn(*args, **kwargs)
        return out if isinstance(out, list) else [out]
    except (ResolutionError, ModelError, ArithmeticError, ValueError) as exc:
        return [CheckResult(check_id, model_id, math.nan, math.nan, 0.0, INCONCLUSIVE_VERDICT,
                            f"error: {type(exc).__name__}: {exc}")]


def model_checks(model, verdict, profile, config: BatteryConfig, thresholds) -> list:
    scale = config.eigen_scale.get(model.model_id, 1.0)
    mid = model.model_id
    wanted = set(config.checks)
    out = []
    if "thm1_1" in wanted:
        out += _guard("thm1_1", mid, check_thm1_1, verdict, profile)
    if "thm1_4" in wanted:
        out += _guard("thm1_4", mid, check_thm1_4, verdict, profile, thresholds)
    if "thm1_6" in wanted:
        out += _guard("thm1_6", mid, check_thm1_6, profile)
    if "thm1_7" in wanted:
        out += _guard("thm1_7", mid, check_thm1_7, profile)
    if wanted & {"thm5_1", "thm5_2"}:
        out += [c for c in _guard("thm5_1", mid, check_brooks, profile) if c.check_id in wanted]
    if "prop6_1" in wanted and model.kind == "cylinder" and model.log_eta is not None:
        out += _guard("prop6_1", mid, check_prop6_1, model, scale=scale)
    if "lemma3_4_growth" in wanted:
        out += _guard("lemma3_4_growth", mid, check_lemma3_4_growth, model, scale=scale)
    if "prop1_5_instance" in wanted and model.family == "euclid" and model.dim in (2, 3):
        out += _guard("prop1_5_instance", mid, check_prop1_5_instance, model.dim, scale=scale)
    return out


def run_battery(models, config: Optional[BatteryConfig] = None, profiles: Optional[dict] = None,
                verdicts: Optional[dict] = None) -> list:
    """All applicable checks for ``models``, sorted by ``(model_id, check_id)``.

    ``profiles``/``verdicts`` may supply precomputed results keyed by model id.
    """
    config = config or BatteryConfig()
    models = list(models)
    if not models:
        return []
    thresholds = config.thresholds or solve_t0()
    profiles = dict(profiles or {})
    verdicts = dict(verdicts or {})
    results = []
    for model in models:
        mid = model.model_id
        if mid not in verdicts:
            verdicts[mid] = classify_type(model)
        if mid not in profiles:
            profiles[mid] = asy.profile(model, config.grid, config.tol, config.limit_tol, jobs=config.jobs)
        prof = profiles[mid]
        if mid in config.eigen_scale:
            prof = inflate_profile(prof, config.eigen_scale[mid])
        results += model_checks(model, verdicts[mid], prof, config, thresholds)
    if "lemma3_1" in config.checks:
        results += _guard("lemma3_1", "-", check_lemma3_1, config.seed)
    order = {c: i for i, c in enumerate(CHECK_IDS)}
    return sorted(results, key=lambda c: (c.model_id, order.get(c.check_id, 99)))


def corrupted_thresholds(t0: float = 2.0) -> Thresholds:
    """Threshold set with ``t0`` replaced (fault injection)."""
    base = solve_t0()
    return Thresholds(t0=t0, four_t0_sq=4 * t0 * t0, lemma34_threshold=base.lemma34_threshold)


def summarize(results) -> dict:
    counts = {PASS: 0, FAIL: 0, INCONCLUSIVE_VERDICT: 0}
    for r in results:
        counts[r.verdict] += 1
    return counts
