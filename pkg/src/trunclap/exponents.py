"""Scalar constants of the power-type fundamental solutions and the critical exponents.

Every constant is integrated straight from its defining integral over
(0, inf) against tau**-(1+2s); none of them is computed through the operator
layer, so the two can be checked against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import BracketNotFound, InvalidExponent, InvalidParams
from .quad import (QuadratureConfig, QuadratureResult, Singularity, TanhSinh, as_order, combine,
                   constants_for, integrate_second_difference)

DEFINITIONS = ("c_hat", "c_perp", "c_k", "c_k_prime", "c_k_second", "c_power_gamma",
               "c_Ntilde", "F_of_s", "F_of_beta")


@dataclass(frozen=True)
class ConstantValue:
    value: float
    error_estimate: float
    definition: str
    params: dict
    certified: bool

    def __float__(self):
        return self.value


def _wrap(res: QuadratureResult, definition: str, **params) -> ConstantValue:
    return ConstantValue(float(res.value), float(res.total_error), definition, params, bool(res.converged))


def _cfg(cfg, s: float = 1.0):
    """The config with abs_tol floored at rel_tol / s.

    Each integrand carries a constant term -2 whose tail integral is 1/s, so
    that is the magnitude the cancellation is measured against (constants
    vanish at the exponents being solved for).
    """
    cfg = cfg or QuadratureConfig.default()
    return replace(cfg, abs_tol=max(cfg.abs_tol, cfg.rel_tol / s))


def _check_gamma(gamma, lo=0.0, hi=math.inf, what="gamma"):
    g = float(gamma)
    if not (lo < g < hi):
        raise InvalidExponent(f"{what} must lie in ({lo}, {hi}), got {g}")
    return g


# ---------------------------------------------------------------------------
# integrands

def _radial_pair(gamma: float, weight: int = 0):
    """|1+t|^-g ln^w|1+t| + |1-t|^-g ln^w|1-t| (- 2 when w = 0), and its offset form at t = 1."""
    g = gamma

    def h(t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        m = t < 1.0
        a = np.log1p(t)
        b = np.empty_like(t)
        b[m] = np.log1p(-t[m])
        b[~m] = np.log(t[~m] - 1.0)
        if weight == 0:
            out[m] = np.expm1(-g * a[m]) + np.expm1(-g * b[m])
            out[~m] = np.exp(-g * a[~m]) + np.exp(-g * b[~m]) - 2.0
        else:
            out = np.exp(-g * a) * a ** weight + np.exp(-g * b) * b ** weight
        return out

    def at_offset(_i, v):
        v = np.asarray(v, dtype=float)
        a = np.log(2.0 + v)
        b = np.log(np.abs(v))
        if weight == 0:
            return np.exp(-g * a) + np.exp(-g * b) - 2.0
        return np.exp(-g * a) * a ** weight + np.exp(-g * b) * b ** weight

    return h, at_offset


def _log1p_square(t):
    """ln(1 + t^2) without overflow for huge t."""
    big = t > 1e8
    out = np.log1p(np.where(big, 0.0, t) ** 2)
    if np.any(big):
        tb = t[big]
        out[big] = 2.0 * np.log(tb) + np.log1p(tb ** -2.0)
    return out


def _orthogonal(gamma: float, weight: int = 0):
    """(1+t^2)^-(g/2) ln^w(1+t^2), minus 1 when w = 0."""
    g = gamma

    def h(t):
        L = _log1p_square(np.asarray(t, dtype=float))
        if weight == 0:
            return np.expm1(-0.5 * g * L)
        return np.exp(-0.5 * g * L) * L ** weight

    return h


# ---------------------------------------------------------------------------
# the constants

def c_hat(gamma, s, constants=None, cfg=None) -> ConstantValue:
    """C_s PV-integral of [|1+t|^-g - 1]|t|^-(1+2s) over the line; positive on (0, 1)."""
    g = _check_gamma(gamma, 0.0, 1.0)
    s = as_order(s)
    const = constants_for(s, constants)
    h, off = _radial_pair(g)
    res = integrate_second_difference(h, s, [Singularity(1.0, g)], _cfg(cfg, s), at_offset=off)
    return _wrap(res.scaled(const.c_1s), "c_hat", gamma=g, s=s)


def c_perp(gamma, s, constants=None, cfg=None) -> ConstantValue:
    """2 C_s integral of [(1+t^2)^-(g/2) - 1] t^-(1+2s); negative for g > 0."""
    g = _check_gamma(gamma)
    s = as_order(s)
    const = constants_for(s, constants)
    res = integrate_second_difference(_orthogonal(g), s, (), _cfg(cfg, s))
    return _wrap(res.scaled(2.0 * const.c_1s), "c_perp", gamma=g, s=s)


def c_k_fun(gamma, k, s, constants=None, cfg=None) -> ConstantValue:
    """c_k(g) = c_hat(g) + (k-1) c_perp(g)."""
    k = _check_k(k)
    a = c_hat(gamma, s, constants, cfg)
    b = c_perp(gamma, s, constants, cfg)
    value = a.value + (k - 1) * b.value
    err = a.error_estimate + (k - 1) * b.error_estimate
    return ConstantValue(value, err, "c_k", {"gamma": float(gamma), "k": k, "s": a.params["s"]},
                         a.certified and b.certified)


def _check_k(k):
    k = int(k)
    if k < 1:
        raise InvalidParams("k must be >= 1")
    return k


def _derivative(gamma, k, s, constants, cfg, weight: int) -> ConstantValue:
    g = _check_gamma(gamma, 0.0, 1.0)
    k = _check_k(k)
    s = as_order(s)
    const = constants_for(s, constants)
    h, off = _radial_pair(g, weight)
    sing = [Singularity(1.0, g, weight)]
    first = integrate_second_difference(h, s, sing, _cfg(cfg, s), at_offset=off)
    parts = [(1.0, first)]
    if k > 1:
        second = integrate_second_difference(_orthogonal(g, weight), s, (), _cfg(cfg, s))
        parts.append((k - 1.0 if weight == 1 else 0.5 * (k - 1.0), second))
    sign = -1.0 if weight == 1 else 1.0
    res = combine(parts).scaled(sign * const.c_1s)
    name = "c_k_prime" if weight == 1 else "c_k_second"
    return _wrap(res, name, gamma=g, k=k, s=s)


def c_k_prime(gamma, k, s, constants=None, cfg=None) -> ConstantValue:
    """dc_k/dg from its logarithmic-weight integrals."""
    return _derivative(gamma, k, s, constants, cfg, 1)


def c_k_second(gamma, k, s, constants=None, cfg=None) -> ConstantValue:
    """d^2c_k/dg^2 from its squared-logarithm integrals; positive."""
    return _derivative(gamma, k, s, constants, cfg, 2)


def c_power(gamma, s, constants=None, cfg=None) -> ConstantValue:
    """c_g with I_xhat |x|^g = c_g |x|^(g-2s), for 0 < g < 2s.

    The 2 t^g growth beyond t = 1 is integrated exactly, 2/(2s - g), so the
    tail the engine sees decays like t^-(1+2s) even when g is close to 2s.
    """
    s = as_order(s)
    g = _check_gamma(gamma, 0.0, 2.0 * s)
    const = constants_for(s, constants)

    def h(t):
        t = np.minimum(np.asarray(t, dtype=float), 1e150)
        out = np.empty_like(t)
        m = t < 1.0
        tm = t[m]
        out[m] = np.expm1(g * np.log1p(tm)) + np.expm1(g * np.log1p(-tm))
        tt = t[~m]
        inv = 1.0 / tt
        out[~m] = tt ** g * (np.expm1(g * np.log1p(inv)) + np.expm1(g * np.log1p(-inv))) - 2.0
        return out

    def off(_i, v):
        v = np.asarray(v, dtype=float)
        out = (2.0 + v) ** g + np.abs(v) ** g - 2.0
        return np.where(v > 0, out - 2.0 * (1.0 + np.abs(v)) ** g, out)

    res = integrate_second_difference(h, s, [Singularity(1.0, -g)], _cfg(cfg, s), at_offset=off)
    exact = QuadratureResult(2.0 / (2.0 * s - g), 0.0, 0, 0.0, True, {})
    return _wrap(combine([(1.0, res), (1.0, exact)]).scaled(const.c_1s), "c_power_gamma", gamma=g, s=s)


def c_tilde_fun(gamma, N, s, cfg=None) -> ConstantValue:
    """c(g): the integral along a direction at cosine 1/sqrt(N) to x, without C_s."""
    g = _check_gamma(gamma)
    N = int(N)
    if N < 2:
        raise InvalidParams("N must be >= 2")
    s = as_order(s)
    b = 2.0 / math.sqrt(N)

    def h(t):
        # e^A + e^B - 2 = 2 (expm1(m) cosh(d) + 2 sinh(d/2)^2), m and d the
        # half sum and half difference of the two exponents, each formed
        # without cancellation
        t = np.asarray(t, dtype=float)
        big = t > 1e8
        tt = np.where(big, 1.0, t)
        m = -0.25 * g * np.log1p(tt * tt * (2.0 - b * b + tt * tt))
        d = -0.25 * g * np.log1p(2.0 * b * tt / (1.0 + tt * (tt - b)))
        out = 2.0 * (np.expm1(m) * np.cosh(d) + 2.0 * np.sinh(0.5 * d) ** 2)
        if np.any(big):
            tb = t[big]
            lp = 2.0 * np.log(tb) + np.log1p((b + 1.0 / tb) / tb)
            lm = 2.0 * np.log(tb) + np.log1p((1.0 / tb - b) / tb)
            out[big] = np.exp(-0.5 * g * lp) + np.exp(-0.5 * g * lm) - 2.0
        return out

    res = integrate_second_difference(h, s, (), _cfg(cfg, s), hints=[0.5 * b])
    return _wrap(res, "c_Ntilde", gamma=g, N=N, s=s)


def F_of_s(s_val, cfg=None) -> ConstantValue:
    """Integral of ln|1 - t^2| t^-(1+s) over (0, inf), for s in [1/2, 1].

    The exponent is 1 + s, so the kernel order handed to the engine is s/2.
    """
    sv = float(s_val)
    if not (0.5 <= sv <= 1.0):
        raise InvalidParams(f"F(s) is defined here for s in [1/2, 1], got {sv}")

    def h(t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        m = t < 1.0
        out[m] = np.log1p(-t[m] ** 2)
        out[~m] = np.log(t[~m] - 1.0) + np.log1p(t[~m])
        return out

    def off(_i, v):
        v = np.asarray(v, dtype=float)
        return np.log(np.abs(v)) + np.log(2.0 + v)

    res = integrate_second_difference(h, 0.5 * sv, [Singularity(1.0, 0.0, 1)], _cfg(cfg, 0.5 * sv), at_offset=off)
    return _wrap(res, "F_of_s", s=sv)


def F_lower_bound_constant(cfg=None) -> ConstantValue:
    """I = -(int_0^1 t ln t/(1-t^2) dt + int_1^inf ln t/(1-t^2) dt)."""
    tol = _cfg(cfg).rel_tol

    def inner(t):
        t = np.asarray(t, dtype=float)
        one = t >= 1.0
        t = np.where(one, 0.5, t)
        return np.where(one, -0.5, t * np.log(t) / ((1.0 - t) * (1.0 + t)))

    def outer(u):
        # t = 1/u maps (1, inf) onto (0, 1): ln t/(1-t^2) dt = ln(u)/(1-u^2) du
        u = np.asarray(u, dtype=float)
        one = u >= 1.0
        u = np.where(one, 0.5, u)
        return np.where(one, -0.5, np.log(u) / ((1.0 - u) * (1.0 + u)))

    a = TanhSinh(inner, 1.0).run(tol)
    b = TanhSinh(outer, 1.0).run(tol)
    value = -(a.value + b.value)
    err = a.error + b.error
    return ConstantValue(value, err, "F_of_s", {"name": "I"}, err <= max(1e-14, tol * abs(value)))


def F_of_beta(beta, s, constants=None, cfg=None, *, k: Optional[int] = None) -> ConstantValue:
    """2 C_s integral of (1 - exp(-b t^2)) t^-(1+2s)."""
    be = float(beta)
    if not be > 0:
        raise InvalidParams("beta must be positive")
    s = as_order(s)
    const = constants_for(s, constants)

    def h(t):
        t = np.minimum(np.asarray(t, dtype=float), 1e150)
        return -np.expm1(-be * t * t)

    res = integrate_second_difference(h, s, (), _cfg(cfg, s), scale=1.0 / math.sqrt(be))
    params = {"beta": be, "s": s}
    if k is not None:
        params["k"] = int(k)
    return _wrap(res.scaled(2.0 * const.c_1s), "F_of_beta", **params)


# ---------------------------------------------------------------------------
# critical exponents

@dataclass(frozen=True)
class ExponentReport:
    root: float
    bracket: tuple
    residual: float
    kind: str
    thresholds: dict
    scale: float
    params: dict = field(default_factory=dict)
    certified: bool = True

    @property
    def p_star(self) -> float:
        return self.thresholds.get("supercritical_p", math.nan)

    def as_row(self) -> dict:
        return {"kind": self.kind, "k": self.params.get("k"), "N": self.params.get("N"),
                "s": self.params.get("s"), "value": self.root, "residual": self.residual,
                "p_star": self.p_star}


def j_threshold(k, s) -> float:
    """p* = k/(k - 2s) for the plane operators."""
    k = int(k)
    s = as_order(s)
    if k <= 2 * s:
        raise InvalidParams("need k > 2s")
    return k / (k - 2.0 * s)


def _brent(f, lo, hi):
    return brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)


def solve_gamma_bar(k, s, constants=None, cfg=None) -> ExponentReport:
    """The zero of c_k in (0, 1), bracketed from the sign pattern c_k < 0 near 0, > 0 near 1.

    The residual is recomputed with the quadrature tightened tenfold and is
    reported against C_s/s (1/(2s-1) + k - 1), the sum of magnitudes of the
    two closed-form terms of c_k(2(1-s)).
    """
    k = _check_k(k)
    if k < 2:
        raise InvalidParams("gamma_bar needs k >= 2")
    s = as_order(s)
    const = constants_for(s, constants)
    cfg = _cfg(cfg)

    def f(g):
        return c_k_fun(g, k, s, const, cfg).value

    hi = 2.0 * (1.0 - s)
    f_hi = f(hi)
    tries = 0
    while not f_hi > 0:
        hi = 0.5 * (hi + 1.0)
        f_hi = f(hi)
        tries += 1
        if tries > 40:
            raise BracketNotFound("c_k stayed nonpositive up to gamma = 1")
    lo = 0.5 * hi
    f_lo = f(lo)
    tries = 0
    while not f_lo < 0:
        lo *= 0.25
        f_lo = f(lo)
        tries += 1
        if tries > 30:
            raise BracketNotFound("c_k stayed nonnegative down to gamma ~ 0; tighten the quadrature")
    root = _brent(f, lo, hi)
    residual = abs(c_k_fun(root, k, s, const, cfg.tightened(10.0)).value)
    scale = const.c_1s / s * (1.0 / (2.0 * s - 1.0) + (k - 1.0))
    return ExponentReport(root, (lo, hi), residual, "gamma_bar", {"supercritical_p": 1.0 + 2.0 * s / root},
                          scale, {"k": k, "N": None, "s": s}, residual <= 1e-10 * scale)


def solve_gamma_tilde(N, s, cfg=None, *, cap: Optional[float] = None) -> ExponentReport:
    """The zero of c(g), bracketed by doubling upward from 1 (capped at 4N by default)."""
    N = int(N)
    if N < 2:
        raise InvalidParams("gamma_tilde needs N >= 2")
    s = as_order(s)
    cfg = _cfg(cfg)
    cap = 4.0 * N if cap is None else float(cap)

    def f(g):
        return c_tilde_fun(g, N, s, cfg).value

    hi = 1.0
    f_hi = f(hi)
    while not f_hi > 0:
        hi *= 2.0
        if hi > cap:
            raise BracketNotFound(f"c(gamma) stayed nonpositive up to the cap {cap}")
        f_hi = f(hi)
    lo = 0.5 * hi
    f_lo = f(lo)
    while not f_lo < 0:
        lo *= 0.5
        if lo < 1e-12:
            raise BracketNotFound("c(gamma) stayed nonnegative down to gamma ~ 0")
        f_lo = f(lo)
    root = _brent(f, lo, hi)
    residual = abs(c_tilde_fun(root, N, s, cfg.tightened(10.0)).value)
    scale = abs(c_tilde_fun(0.5 * root, N, s, cfg).value)
    return ExponentReport(root, (lo, hi), residual, "gamma_tilde", {"supercritical_p": 1.0 + 2.0 * s / root},
                          scale, {"k": None, "N": N, "s": s}, residual <= 1e-10 * scale)


def solve_beta_bar(k, s, constants=None, cfg=None) -> ExponentReport:
    """beta with F(beta) = 1/(2k), from F(beta) = beta**s F(1), then checked directly."""
    k = _check_k(k)
    s = as_order(s)
    const = constants_for(s, constants)
    cfg = _cfg(cfg)
    F1 = F_of_beta(1.0, s, const, cfg).value
    target = 1.0 / (2.0 * k)
    root = (target / F1) ** (1.0 / s)
    residual = abs(F_of_beta(root, s, const, cfg.tightened(10.0)).value - target)
    # solutions exist for every p >= 1, so there is no threshold to export
    return ExponentReport(root, (root, root), residual, "beta_bar", {},
                          target, {"k": k, "N": None, "s": s}, residual <= 1e-10)
