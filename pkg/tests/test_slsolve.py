import math

import numpy as np
import pytest

from typelab import _sturm
from typelab.model import Annulus, Ball, Exterior, ModelError, make_model
from typelab.slsolve import (
    ResolutionError,
    TestFunction,
    _choose_map,
    _pencil,
    fourier_mode_lambda1,
    lambda1_region,
    rayleigh,
    region_intervals,
)

PI2_4 = 2.4674011002723397
J0_SQ = 5.783185962946785

CYLINDERS = [
    ("flat-cylinder", {}),
    ("power", {"alpha": 2}),
    ("power", {"alpha": 4}),
    ("exp", {"alpha": 1}),
    ("dprs", {}),
    ("mu-family", {"mu": "power", "alpha": 0.5}),
    ("mu-family", {"mu": "log", "gamma": 1}),
]
ALL = CYLINDERS + [("euclid", {"n": 2}), ("euclid", {"n": 3})]


def lam(family, params, region, **kw):
    return lambda1_region(make_model(family, params), region, **kw)


# -- closed forms -------------------------------------------------------------


def test_flat_unit_ball():
    s = lam("flat-cylinder", {}, Ball(1.0))
    assert s.lam == pytest.approx(PI2_4, rel=1e-10)
    assert 0 <= s.error_estimate <= 1e-8 * s.lam
    assert s.mode == 0 and s.grid_points >= 1024


def test_disc_bessel_zero():
    assert lam("euclid", {"n": 2}, Ball(1.0)).lam == pytest.approx(J0_SQ, rel=1e-10)


def test_three_ball():
    assert lam("euclid", {"n": 3}, Ball(1.0)).lam == pytest.approx(math.pi**2, rel=1e-10)


@pytest.mark.parametrize("r", [4.0, 20.0, 1000.0])
def test_dprs_closed_form(r):
    # e^t weight: substitution f = e^{-t/2} g gives 1/4 + (pi / 2r)^2
    assert lam("dprs", {}, Ball(r)).lam == pytest.approx(0.25 + (math.pi / (2 * r)) ** 2, rel=1e-8)


@pytest.mark.parametrize("r", [5.0, 20.0, 80.0])
def test_dprs_ball_above_quarter(r):
    v = lam("dprs", {}, Ball(r)).lam
    assert v >= 0.25
    # the excess decays like r^-2
    assert v - 0.25 <= (math.pi / (2 * r)) ** 2 * (1 + 1e-6)


@pytest.mark.parametrize("r", [1.0, 10.0, 100.0])
def test_flat_scaling(r):
    assert lam("flat-cylinder", {}, Ball(r)).lam * r * r == pytest.approx(PI2_4, rel=1e-6)


@pytest.mark.parametrize("r", [0.5, 3.0, 40.0])
def test_euclid_scaling(r):
    assert lam("euclid", {"n": 2}, Ball(r)).lam * r * r == pytest.approx(J0_SQ, rel=1e-8)


def test_flat_annulus_is_interval():
    # each component (a, b) is an interval of length b - a
    assert lam("flat-cylinder", {}, Annulus(1.0, 3.0)).lam == pytest.approx(math.pi**2 / 4, rel=1e-9)


def test_exterior_takes_smaller_end():
    m = make_model("power", {"alpha": 2})
    both = lambda1_region(m, Exterior(4.0, 12.0)).lam
    assert len(region_intervals(m, Exterior(4.0, 12.0))) == 2
    plus = lambda1_region(m, Annulus(4.0, 12.0)).lam
    assert both == pytest.approx(plus, rel=1e-12)


def test_extreme_exponential_weight():
    # weight near e^-690 would underflow a direct evaluation
    s = lam("exp", {"alpha": 1}, Exterior(600.0, 690.0))
    assert s.lam == pytest.approx(0.25 + (math.pi / 90) ** 2, rel=1e-8)


def test_exp_ball_eigenvalue_vanishes():
    # finite volume: constants are nearly admissible on large balls
    m = make_model("exp", {"alpha": 1})
    small, big = lambda1_region(m, Ball(20.0)).lam, lambda1_region(m, Ball(40.0)).lam
    assert 0 < big < 1e-6 * small


# -- Fourier modes --------------------------------------------------------------


def test_flat_mode_one_shift():
    m = make_model("flat-cylinder")
    assert fourier_mode_lambda1(m, Ball(1.0), 1) == pytest.approx(PI2_4 + 1.0, rel=1e-9)


def test_mode_zero_matches_radial():
    m = make_model("power", {"alpha": 2})
    assert fourier_mode_lambda1(m, Ball(3.0), 0) == lambda1_region(m, Ball(3.0)).lam


def test_dprs_mode_one_exceeds_radial():
    m = make_model("dprs")
    assert fourier_mode_lambda1(m, Ball(3.0), 1) > fourier_mode_lambda1(m, Ball(3.0), 0)


@pytest.mark.parametrize("family,params", CYLINDERS)
@pytest.mark.parametrize("r", [1.0, 4.0, 16.0])
def test_mode_monotonicity(family, params, r):
    m = make_model(family, params)
    vals = [fourier_mode_lambda1(m, Ball(r), k, tol=1e-7) for k in range(4)]
    assert all(b >= a * (1 - 1e-7) for a, b in zip(vals, vals[1:]))


def test_modes_rejected_on_plane():
    with pytest.raises(ModelError):
        fourier_mode_lambda1(make_model("euclid", {"n": 2}), Ball(1.0), 1)


def test_negative_mode_rejected():
    with pytest.raises(ValueError):
        fourier_mode_lambda1(make_model("flat-cylinder"), Ball(1.0), -1)


# -- structural properties --------------------------------------------------------


@pytest.mark.parametrize("family,params", ALL)
def test_domain_monotonicity(family, params):
    m = make_model(family, params)
    vals = [lambda1_region(m, Ball(r), tol=1e-7) for r in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0)]
    for small, big in zip(vals, vals[1:]):
        assert small.lam - small.error_estimate > big.lam + big.error_estimate


@pytest.mark.parametrize(
    "family,params,region",
    [
        ("flat-cylinder", {}, Ball(1.0)),
        ("power", {"alpha": 2}, Ball(4.0)),
        ("euclid", {"n": 2}, Ball(1.0)),
        ("dprs", {}, Ball(5.0)),
        ("exp", {"alpha": 1}, Ball(6.0)),
    ],
)
def test_second_order_convergence(family, params, region):
    m = make_model(family, params)
    (iv,) = region_intervals(m, region)
    mp, cells = _choose_map(m, iv)
    raw = [_sturm.lowest(*_pencil(m, iv, mp, cells << j)) for j in range(3)]
    ratio = (raw[0] - raw[1]) / (raw[1] - raw[2])
    assert ratio >= 3.5


def test_deterministic():
    m = make_model("mu-family", {"mu": "log", "gamma": 1})
    a = lambda1_region(m, Ball(7.0))
    b = lambda1_region(m, Ball(7.0))
    assert a == b


def test_resolution_failure_carries_estimates():
    m = make_model("power", {"alpha": 2})
    with pytest.raises(ResolutionError) as info:
        lambda1_region(m, Ball(5.0), tol=1e-16, max_doublings=2)
    assert len(info.value.estimates) == 2
    assert all(np.isfinite(info.value.estimates))


def test_bad_tolerance():
    with pytest.raises(ValueError):
        lambda1_region(make_model("flat-cylinder"), Ball(1.0), tol=0.0)


# -- Rayleigh quotients ------------------------------------------------------------


def test_rayleigh_exact_eigenfunction():
    m = make_model("flat-cylinder")
    phi = TestFunction.from_callable(lambda t: np.cos(np.pi * t / 2), -1.0, 1.0, n=20001)
    assert rayleigh(m, phi) == pytest.approx(PI2_4, rel=1e-7)


def test_rayleigh_tent():
    m = make_model("flat-cylinder")
    phi = TestFunction(np.array([-1.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0]))
    assert rayleigh(m, phi) == pytest.approx(3.0, rel=1e-13)


def test_rayleigh_disc_cone():
    m = make_model("euclid", {"n": 2})
    phi = TestFunction(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    assert rayleigh(m, phi) == pytest.approx(6.0, rel=1e-13)


def test_rayleigh_rejects_nonzero_boundary():
    m = make_model("flat-cylinder")
    with pytest.raises(ValueError, match="vanish"):
        rayleigh(m, TestFunction(np.array([-1.0, 1.0]), np.array([1.0, 0.0])))


def test_rayleigh_rejects_zero_function():
    m = make_model("flat-cylinder")
    with pytest.raises(ValueError, match="zero norm"):
        rayleigh(m, TestFunction(np.array([-1.0, 0.0, 1.0]), np.zeros(3)))


def test_testfunction_validation():
    with pytest.raises(ValueError):
        TestFunction(np.array([0.0, 0.0]), np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        TestFunction(np.array([0.0]), np.array([0.0]))


def _random_pl(rng, lo, hi, natural_left):
    k = int(rng.integers(2, 30))
    inner = np.sort(rng.uniform(lo, hi, k))
    grid = np.unique(np.concatenate([[lo], inner, [hi]]))
    vals = rng.uniform(-1.0, 1.0, grid.size)
    vals[-1] = 0.0
    if not natural_left:
        vals[0] = 0.0
    if not np.any(vals):
        vals[grid.size // 2] = 1.0
    return TestFunction(grid, vals)


@pytest.mark.parametrize(
    "family,params,region",
    [
        ("flat-cylinder", {}, Ball(2.0)),
        ("power", {"alpha": 2}, Ball(5.0)),
        ("exp", {"alpha": 1}, Ball(8.0)),
        ("dprs", {}, Ball(4.0)),
        ("mu-family", {"mu": "log", "gamma": 1}, Annulus(2.0, 9.0)),
        ("euclid", {"n": 2}, Ball(3.0)),
        ("euclid", {"n": 3}, Ball(1.0)),
    ],
)
def test_variational_upper_bound(family, params, region):
    m = make_model(family, params)
    s = lambda1_region(m, region)
    ivs = region_intervals(m, region)
    rng = np.random.default_rng(7)
    for i in range(100):
        iv = ivs[i % len(ivs)]
        phi = _random_pl(rng, iv.lo, iv.hi, iv.left == "natural")
        assert rayleigh(m, phi) >= s.lam - s.error_estimate
