import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trunclap.errors import InvalidExponent, InvalidMatchRadius, InvalidParams
from trunclap.profiles import (
    LIOUVILLE_FAMILIES,
    build_glued_profile,
    check_hypotheses,
    custom_profile,
    gtilde_derivatives,
    log_glue_threshold,
    make_bump_power,
    make_capped_power,
    make_gaussian,
    make_liouville_family,
    make_positive_power,
    make_power,
    make_profile,
    make_shifted_power,
    parse_profile,
)

CATALOG = [
    make_power(0.5),
    make_power(1.4),
    make_positive_power(0.5, 0.75),
    make_shifted_power(1.5),
    make_shifted_power(0.3, 2.0),
    make_bump_power(1.0, 0.7),
    make_gaussian(1.0),
    make_gaussian(3.0, 0.5),
    make_capped_power(0.2),
    build_glued_profile(1.2).as_profile(),
    build_glued_profile(0.155, None, True).as_profile(),
]


def glued_cubic(r, g):
    """The inner polynomial for match radius 1/sqrt(2), written out in r."""
    return 2 ** (g / 2) * (-(1 / 6) * g * (g + 2) * (g + 4) * (r * r - 0.5) ** 3
                           + 0.5 * g * (g + 2) * r ** 4 - 0.5 * g * (g + 4) * r * r + 1 + g * (g + 6) / 8)


@pytest.mark.parametrize("p", CATALOG, ids=lambda p: p.name)
def test_declared_flags_hold_on_samples(p):
    rep = check_hypotheses(p, 256, s=0.75)
    assert rep.mismatches == []


@pytest.mark.parametrize("p", CATALOG, ids=lambda p: p.name)
def test_decay_envelope_bounds_profile(p):
    t = np.geomspace(1e-3, 1e6, 64)
    bound = p.decay.bound(t, p.origin_exponent)
    assert np.all(np.abs(p(t)) <= bound * (1 + 1e-12))


@pytest.mark.parametrize("p", CATALOG, ids=lambda p: p.name)
def test_analytic_derivatives_match_differences(p):
    r = np.array([0.3, 0.9, 1.7, 4.0])
    r = r[np.all([np.abs(r - b) > 0.05 for b in p.breakpoints], axis=0)] if p.breakpoints else r
    h = 1e-5 * r
    fd1 = (p(r + h) - p(r - h)) / (2 * h)
    fd2 = (p(r + h) - 2 * p(r) + p(r - h)) / h ** 2
    assert np.allclose(p.derivative(r, 1), fd1, rtol=1e-6, atol=1e-9)
    assert np.allclose(p.derivative(r, 2), fd2, rtol=1e-3, atol=1e-5)


@pytest.mark.parametrize("r", [0.4, 1.3, 7.0])
@pytest.mark.parametrize("p", CATALOG, ids=lambda p: p.name)
def test_delta_is_accurate_for_small_steps(p, r):
    dq = np.array([1e-12, 1e-8, 1e-4, 0.3, 5.0])
    ref = p(r * np.sqrt(1 + dq)) - p(r)
    got = p.delta(r, dq)
    assert np.allclose(got, ref, rtol=1e-6, atol=1e-14)
    # first order behaviour, where the direct difference has lost all digits
    slope = float(p.derivative(r, 1)) * r / 2
    assert got[0] == pytest.approx(slope * 1e-12, rel=1e-6)


def test_glued_cubic_matches_written_form():
    g = 1.2
    glued = build_glued_profile(g)
    r = np.linspace(0.0, 1 / math.sqrt(2), 9)
    assert np.allclose(glued.value(r), glued_cubic(r, g), rtol=1e-13)
    assert max(glued.joint_residuals()) < 1e-13


def test_glued_profile_is_c2_across_the_joint():
    glued = build_glued_profile(0.8, 0.9)
    m = 0.9
    for order in (1, 2):
        lo = glued.radial_derivative(np.array([m * (1 - 1e-9)]), order)[0]
        hi = glued.radial_derivative(np.array([m * (1 + 1e-9)]), order)[0]
        assert lo == pytest.approx(hi, rel=1e-6)


def test_log_glue_threshold_and_rejection():
    g = 0.3
    t_min = log_glue_threshold(g)
    assert t_min == pytest.approx(math.exp(sum(2 / (g + 2 * j) for j in range(4))))
    with pytest.raises(InvalidMatchRadius):
        build_glued_profile(g, math.sqrt(t_min) * 0.99, True)
    ok = build_glued_profile(g, None, True)
    assert ok.match_radius ** 2 == pytest.approx(t_min)


def test_log_glue_convexity_threshold_is_sharp():
    # just below the threshold the outer g~'' must fail convexity somewhere
    g = 0.3
    t_min = log_glue_threshold(g)
    a = g / 2
    t = np.geomspace(t_min / 50, t_min, 200)
    # G''''(t) for (1/2) ln(t) t^-a, written out
    p4 = a * (a + 1) * (a + 2) * (a + 3)
    fourth = 0.5 * p4 * t ** (-a - 4) * (np.log(t) - sum(1 / (a + j) for j in range(4)))
    assert np.all(fourth[:-1] < 0)


def test_adversarial_profile_fails_monotonicity():
    p = custom_profile(lambda t: np.sin(t) / (1 + t ** 3), name="adversarial")
    rep = check_hypotheses(p, 256, s=0.75)
    assert not rep.checks["gtilde_prime_nondecreasing"].passed
    assert rep.mismatches == []  # nothing was declared


def test_capped_profile_declares_only_integrability():
    p = make_capped_power(0.2)
    assert p.flags == {"gtilde_prime_nondecreasing": False, "gtilde_prime_L1": True,
                       "gtilde_second_convex": False}
    assert not check_hypotheses(p, 256, s=0.75).checks["gtilde_prime_nondecreasing"].passed


def test_gtilde_derivatives_of_gaussian():
    # g~(t) = exp(-t): both derivatives known
    p = make_gaussian(1.0)
    t = np.array([0.1, 1.0, 3.0])
    d1, d2 = gtilde_derivatives(p, t)
    assert np.allclose(d1, -np.exp(-t), rtol=1e-12)
    assert np.allclose(d2, np.exp(-t), rtol=1e-9)


@settings(max_examples=30, deadline=None)
@given(g=st.floats(0.05, 3.0), r=st.floats(0.01, 100.0))
def test_power_profile_homogeneity(g, r):
    p = make_power(g)
    assert float(p(2 * r)) == pytest.approx(2 ** -g * float(p(r)), rel=1e-12)


def test_parse_profile_forms():
    assert parse_profile("power:0.4").params == {"gamma": 0.4}
    assert parse_profile("gaussian:beta=2,amplitude=3").params == {"beta": 2.0, "amplitude": 3.0}
    assert parse_profile("shifted_power:1.5").params["a"] == 1.5
    with pytest.raises(InvalidParams):
        parse_profile("nope:1")
    with pytest.raises(InvalidParams):
        parse_profile("power:1,2")
    with pytest.raises(InvalidParams):
        parse_profile("power:x")
    with pytest.raises(InvalidParams):
        parse_profile("bump_power:alpha=1")


def test_family_dispatch():
    for name in LIOUVILLE_FAMILIES:
        params = {"shifted_power": {"q": 0.5, "s": 0.75}, "bump_power": {"a": 0.5}, "gaussian": {"beta": 1.0},
                  "capped_power": {"gamma": 0.3}, "glued_power": {"gamma": 1.2},
                  "glued_log": {"gamma": 0.3}}[name]
        assert make_liouville_family(name, **params).name == name
    assert make_liouville_family("shifted_power", q=0.5, s=0.75).params["a"] == pytest.approx(0.75)
    assert make_profile("power", gamma=0.3).name == "power"
    with pytest.raises(InvalidParams):
        make_liouville_family("shifted_power", q=1.0)


def test_invalid_exponents():
    with pytest.raises(InvalidExponent):
        make_power(0.0)
    with pytest.raises(InvalidExponent):
        make_positive_power(1.6, 0.75)
    with pytest.raises(InvalidExponent):
        make_capped_power(-1)
    with pytest.raises(InvalidParams):
        make_gaussian(-1.0)
    with pytest.raises(InvalidParams):
        custom_profile(lambda t: t, flags={"bogus": True})


def test_profiles_stay_finite_far_out():
    t = np.array([1e200, 1e300])
    for p in CATALOG:
        assert np.all(np.isfinite(p(t)))
