import math

import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from trunclap.errors import BracketNotFound, InvalidExponent, InvalidParams
from trunclap.exponents import (
    F_lower_bound_constant,
    F_of_beta,
    F_of_s,
    c_hat,
    c_k_fun,
    c_k_prime,
    c_k_second,
    c_perp,
    c_power,
    c_tilde_fun,
    j_threshold,
    solve_beta_bar,
    solve_gamma_bar,
    solve_gamma_tilde,
)
from trunclap.quad import QuadratureConfig

import oracles as ref

S_GRID = [0.55, 0.6, 0.75, 0.9, 0.99]


def ck_closed(g, k, s):
    return ref.c_hat(g, s) + (k - 1) * ref.c_perp(g, s)


@pytest.mark.parametrize("s", S_GRID)
@pytest.mark.parametrize("g", [0.05, 0.3, 0.5, 0.8, 0.97])
def test_c_hat_c_perp_closed_forms(s, g):
    assert c_hat(g, s).value == pytest.approx(ref.c_hat(g, s), rel=1e-9)
    assert c_perp(g, s).value == pytest.approx(ref.c_perp(g, s), rel=1e-9)


@pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
def test_values_at_two_minus_two_s(s):
    g = 2 * (1 - s)
    cs = ref.C1(s)
    assert c_hat(g, s).value == pytest.approx(cs / (s * (2 * s - 1)), rel=1e-9)
    assert c_perp(g, s).value == pytest.approx(-cs / s, rel=1e-9)


def test_sign_pattern():
    assert c_hat(0.5, 0.75).value > 0
    assert c_perp(0.5, 0.75).value < 0
    assert c_perp(3.0, 0.75).value < 0
    assert c_k_second(0.4, 3, 0.75).value > 0


@pytest.mark.parametrize("k", [1, 2, 4])
@pytest.mark.parametrize("g", [0.2, 0.5, 0.8])
def test_derivatives_match_differences(k, g):
    s, h = 0.75, 1e-4
    fd1 = (ck_closed(g + h, k, s) - ck_closed(g - h, k, s)) / (2 * h)
    fd2 = (ck_closed(g + h, k, s) - 2 * ck_closed(g, k, s) + ck_closed(g - h, k, s)) / h ** 2
    assert c_k_prime(g, k, s).value == pytest.approx(fd1, rel=1e-6)
    assert c_k_second(g, k, s).value == pytest.approx(fd2, rel=1e-5)


def test_c_k_sum():
    v = c_k_fun(0.3, 3, 0.8)
    assert v.value == pytest.approx(ck_closed(0.3, 3, 0.8), rel=1e-9)
    assert v.certified


@pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
@pytest.mark.parametrize("frac", [0.1, 0.5, 0.99, 1.3, 1.9, 1.999])
def test_c_power(s, frac):
    g = frac * s
    assert c_power(g, s).value == pytest.approx(ref.c_power(g, s), rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
def test_c_power_vanishes_at_two_s_minus_one(s):
    assert abs(c_power(2 * s - 1, s).value) < 1e-10


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_c_tilde_against_direct_integration():
    # the whole line at cosine 1/sqrt(N); scipy is only used here as an independent reference
    g, N, s = 1.3, 3, 0.75
    b = 2 / math.sqrt(N)

    def f(t):
        return ((1 + b * t + t * t) ** (-g / 2) + (1 - b * t + t * t) ** (-g / 2) - 2) * t ** (-1 - 2 * s)

    ref_val = sum(quad(f, a, c, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
                  for a, c in [(0, 0.5), (0.5, 1), (1, 10), (10, math.inf)])
    assert c_tilde_fun(g, N, s).value == pytest.approx(ref_val, rel=1e-8)


@pytest.mark.parametrize("s", [0.5, 0.55, 0.75, 0.95, 1.0])
def test_F_of_s(s):
    want = 0.0 if s == 1.0 else ref.F_s(s)
    assert F_of_s(s).value == pytest.approx(want, rel=1e-8, abs=1e-9)


def test_F_of_s_domain():
    with pytest.raises(InvalidParams):
        F_of_s(0.4)


def test_lower_bound_constant():
    assert F_lower_bound_constant().value == pytest.approx(math.pi ** 2 / 6, rel=1e-12)


@pytest.mark.parametrize("beta", [0.01, 1.0, 50.0])
@pytest.mark.parametrize("s", [0.6, 0.9])
def test_F_of_beta(beta, s):
    assert F_of_beta(beta, s).value == pytest.approx(ref.F_beta(beta, s), rel=1e-9)


def ref_gamma_bar(k, s):
    return brentq(lambda g: ck_closed(g, k, s), 1e-6, 1 - 1e-9, xtol=1e-15)


@pytest.mark.parametrize("k,s", [(2, 0.75), (3, 0.75), (4, 0.75), (2, 0.6), (5, 0.9)])
def test_gamma_bar_matches_closed_root(k, s):
    rep = solve_gamma_bar(k, s)
    assert rep.root == pytest.approx(ref_gamma_bar(k, s), abs=1e-10)
    assert rep.certified
    assert rep.p_star == pytest.approx(1 + 2 * s / rep.root)
    assert rep.as_row()["kind"] == "gamma_bar"


def test_gamma_bar_known_values():
    assert solve_gamma_bar(2, 0.75).root == pytest.approx(0.155151, abs=1e-6)
    assert solve_gamma_bar(3, 0.75).root == pytest.approx(0.5, abs=1e-9)
    assert solve_gamma_bar(4, 0.75).root == pytest.approx(0.66852, abs=1e-5)


def test_gamma_bar_needs_two_dimensions():
    with pytest.raises(InvalidParams):
        solve_gamma_bar(1, 0.75)


@pytest.mark.parametrize("N,s,want", [(3, 0.75, 2.1337), (4, 0.75, 3.3976), (3, 0.9, 1.4184)])
def test_gamma_tilde(N, s, want):
    rep = solve_gamma_tilde(N, s)
    assert rep.root == pytest.approx(want, abs=1e-4)
    assert rep.certified
    assert c_tilde_fun(0.9 * rep.root, N, s).value < 0 < c_tilde_fun(1.1 * rep.root, N, s).value


def test_gamma_tilde_cap():
    with pytest.raises(BracketNotFound):
        solve_gamma_tilde(4, 0.75, cap=1.5)


@pytest.mark.parametrize("k,s", [(1, 0.75), (2, 0.75), (3, 0.6)])
def test_beta_bar(k, s):
    rep = solve_beta_bar(k, s)
    assert ref.F_beta(rep.root, s) == pytest.approx(1 / (2 * k), rel=1e-9)
    assert rep.certified
    assert math.isnan(rep.p_star)


def test_beta_bar_value():
    assert solve_beta_bar(2, 0.75).root == pytest.approx(0.096279, abs=1e-6)


def test_j_threshold():
    assert j_threshold(3, 0.8) == pytest.approx(3 / 1.4)
    with pytest.raises(InvalidParams):
        j_threshold(1, 0.75)


def test_parameter_checks():
    with pytest.raises(InvalidExponent):
        c_hat(1.2, 0.75)
    with pytest.raises(InvalidParams):
        c_hat(0.5, 0.3)
    with pytest.raises(InvalidParams):
        F_of_beta(-1.0, 0.75)


def test_tighter_quadrature_agrees():
    loose = c_k_fun(0.4, 3, 0.75).value
    tight = c_k_fun(0.4, 3, 0.75, cfg=QuadratureConfig.default().tightened(10)).value
    assert tight == pytest.approx(loose, rel=1e-9)
