"""Quadrature for one-sided integrals against the kernel tau**-(1+2s).

The integrand is always supplied in second-difference form, h(tau) = O(tau**2)
at the origin, so no principal value is ever formed.  The half line is cut into

* a near-zero piece [0, delta]: h/tau**2 is replaced by a Chebyshev fit sampled
  away from the origin and integrated exactly against tau**(1-2s);
* tanh-sinh windows on both sides of each interior singular point, evaluated in
  offset coordinates when the caller can supply them;
* adaptive Gauss-Kronrod (7/15) panels on the rest of [delta, T];
* a tail [T, inf) compactified by u = T/tau and done with tanh-sinh, the part
  beyond the last node being bounded from the declared growth.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import expit, roots_jacobi

from .errors import DivergentSingularity, DivergentTail, InvalidParams, NonConvergent

TOL_ENV = "TRUNCLAP_QUAD_TOL"

# Kronrod 15-point rule, nonnegative half, with the embedded 7-point Gauss weights.
_XK_HALF = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK_HALF = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG_HALF = np.array([
    0.0,
    0.129484966168869693270611432679082,
    0.0,
    0.279705391489276667901467771423780,
    0.0,
    0.381830050505118944950369775488975,
    0.0,
    0.417959183673469387755102040816327,
])

XK = np.concatenate([-_XK_HALF[:-1], _XK_HALF[::-1]])
WK = np.concatenate([_WK_HALF[:-1], _WK_HALF[::-1]])
WG = np.concatenate([_WG_HALF[:-1], _WG_HALF[::-1]])


# ---------------------------------------------------------------------------
# normalization constants and fractional order

@dataclass(frozen=True)
class FractionalOrder:
    s: float

    def __post_init__(self):
        s = float(self.s)
        if not (0.5 < s < 1.0):
            raise InvalidParams(f"fractional order must lie in (1/2, 1), got {s}")
        object.__setattr__(self, "s", s)

    def __float__(self):
        return self.s


def as_order(s) -> float:
    """Validate a fractional order and return it as a float."""
    return FractionalOrder(float(s)).s


def sphere_area(k: int) -> float:
    """Surface measure of the unit sphere S^{k-1} in R^k."""
    if k < 1:
        raise InvalidParams("sphere dimension must be >= 1")
    return 2.0 * math.pi ** (k / 2.0) / math.gamma(k / 2.0)


def laplacian_constant(k: int, s: float) -> float:
    """C(k, s) = 4^s Gamma(k/2 + s) / (pi^{k/2} |Gamma(-s)|)."""
    if k < 1:
        raise InvalidParams("dimension must be >= 1")
    if not (0.0 < s < 1.0):
        raise InvalidParams("order must lie in (0, 1)")
    return 4.0 ** s * math.gamma(k / 2.0 + s) / (math.pi ** (k / 2.0) * abs(math.gamma(-s)))


@dataclass(frozen=True)
class NormalizationConstants:
    s: float
    c_1s: float

    @classmethod
    def for_order(cls, s) -> "NormalizationConstants":
        s = as_order(s)
        return cls(s=s, c_1s=laplacian_constant(1, s))

    def c_ks(self, k: int) -> float:
        return laplacian_constant(k, self.s)

    def ratio_1d(self) -> float:
        """C_s / (2(1-s)); tends to 1 as s -> 1."""
        return self.c_1s / (2.0 * (1.0 - self.s))

    def ratio_kd(self, k: int) -> float:
        """C_{k,s}|S^{k-1}| / (4k(1-s)); tends to 1 as s -> 1."""
        return self.c_ks(k) * sphere_area(k) / (4.0 * k * (1.0 - self.s))


def constants_for(s, constants: Optional[NormalizationConstants] = None) -> NormalizationConstants:
    s = as_order(s)
    if constants is None:
        return NormalizationConstants.for_order(s)
    if abs(constants.s - s) > 1e-15:
        raise InvalidParams("normalization constants were built for a different order")
    return constants


# ---------------------------------------------------------------------------
# configuration and results

def _default_tolerance() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return 1e-10
    try:
        tol = float(raw)
    except ValueError as exc:
        raise InvalidParams(f"{TOL_ENV} must be a number, got {raw!r}") from exc
    if not tol > 0:
        raise InvalidParams(f"{TOL_ENV} must be positive")
    return tol


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 4000
    tail_cut: Optional[float] = None
    near_zero_cut: float = 0.2

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise InvalidParams("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise InvalidParams("max_subdivisions must be >= 1")
        if not self.near_zero_cut > 0:
            raise InvalidParams("near_zero_cut must be positive")
        if self.tail_cut is not None and not self.tail_cut > self.near_zero_cut:
            raise InvalidParams("tail_cut must exceed near_zero_cut")

    @classmethod
    def default(cls) -> "QuadratureConfig":
        rel = _default_tolerance()
        return cls(abs_tol=rel * 1e-2, rel_tol=rel)

    def tightened(self, factor: float = 10.0) -> "QuadratureConfig":
        return replace(self, abs_tol=self.abs_tol / factor, rel_tol=self.rel_tol / factor,
                       max_subdivisions=int(self.max_subdivisions * 2))

    def loosened(self, factor: float) -> "QuadratureConfig":
        return replace(self, abs_tol=self.abs_tol * factor, rel_tol=self.rel_tol * factor)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    subdivisions_used: int
    tail_bound: float
    converged: bool
    info: dict = field(default_factory=dict, compare=False)

    def scaled(self, factor: float, **info) -> "QuadratureResult":
        merged = dict(self.info)
        merged.update(info)
        return QuadratureResult(self.value * factor, self.error_estimate * abs(factor),
                                self.subdivisions_used, self.tail_bound * abs(factor),
                                self.converged, merged)

    @property
    def total_error(self) -> float:
        return self.error_estimate + self.tail_bound


def combine(terms: Sequence[tuple], **info) -> QuadratureResult:
    """Linear combination sum(c_i * R_i) of (coefficient, result) pairs."""
    value = 0.0
    err = 0.0
    tail = 0.0
    subs = 0
    ok = True
    for coef, res in terms:
        value += coef * res.value
        err += abs(coef) * res.error_estimate
        tail += abs(coef) * res.tail_bound
        subs += res.subdivisions_used
        ok = ok and res.converged
    return QuadratureResult(value, err, subs, tail, ok, dict(info))


@dataclass(frozen=True)
class Singularity:
    """Interior point where h behaves like |tau - location|**-exponent.

    ``exponent`` of 0 covers logarithmic singularities and negative values
    cover cusps; ``None`` means integrable with unknown strength.
    """

    location: float
    exponent: Optional[float] = None
    log_power: int = 0


def _as_singularities(points) -> list:
    out = []
    for p in points or ():
        if isinstance(p, Singularity):
            out.append(p)
        elif isinstance(p, (tuple, list)):
            out.append(Singularity(float(p[0]), None if p[1] is None else float(p[1]),
                                   int(p[2]) if len(p) > 2 else 0))
        else:
            out.append(Singularity(float(p), None))
    out.sort(key=lambda q: q.location)
    return out


# ---------------------------------------------------------------------------
# building blocks

@lru_cache(maxsize=64)
def _jacobi_rule(n: int, beta: float):
    x, w = roots_jacobi(n, 0.0, beta)
    return x, w


def gauss_jacobi_origin(q: Callable, width: float, beta: float, n: int) -> float:
    """Integral over [0, width] of q(t) * t**beta, with n Gauss-Jacobi nodes."""
    x, w = _jacobi_rule(n, round(beta, 15))
    t = 0.5 * width * (1.0 + x)
    vals = np.asarray(q(t), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonConvergent("integrand is not finite near the origin")
    return float((0.5 * width) ** (1.0 + beta) * np.dot(w, vals))


def origin_fit_integral(q: Callable, width: float, beta: float, degree: int, even: bool = True) -> float:
    """Integral over [0, width] of q(t) t**beta, q replaced by a Chebyshev fit.

    The fit is sampled at Chebyshev points kept away from t = 0, in the variable
    t**2 when q is even, so q is never evaluated where its own cancellation
    noise (it is usually a second difference divided by t**2) would dominate.
    """
    if even:
        def sample(y):
            return np.asarray(q(width * np.sqrt(0.5 * (1.0 + y))), dtype=float)
    else:
        def sample(y):
            return np.asarray(q(0.5 * width * (1.0 + y)), dtype=float)
    coef = np.polynomial.chebyshev.chebinterpolate(sample, degree)
    if not np.all(np.isfinite(coef)):
        raise NonConvergent("integrand is not finite near the origin")
    x, w = _jacobi_rule(max(degree + 8, 24), round(beta, 15))
    t = 0.5 * width * (1.0 + x)
    y = 2.0 * (t / width) ** 2 - 1.0 if even else 2.0 * t / width - 1.0
    vals = np.polynomial.chebyshev.chebval(y, coef)
    return float((0.5 * width) ** (1.0 + beta) * np.dot(w, vals))


class TanhSinh:
    """Level-doubling tanh-sinh rule for the integral of f over [0, width].

    Nodes cluster double-exponentially at both ends; f receives the distance
    from the left end, so a singularity placed there can be evaluated exactly.
    """

    def __init__(self, f: Callable, width: float, floor: float = 1e-200, h0: float = 0.5):
        self.f = f
        self.width = float(width)
        # outermost node kept on the coarse grid so every level ends there
        self.n0 = max(1, math.ceil(math.asinh(math.log(1.0 / floor) / math.pi) / h0))
        self.tmax = self.n0 * h0
        self.h = h0
        self.level = 0
        self.evaluations = 0
        t = np.arange(-self.n0, self.n0 + 1) * h0
        self.sum = self._weighted(t[1:])
        # the outermost left node enters with half weight, so the sum is a
        # trapezoid rule ending exactly at tmax whatever the level
        self.g_end = self._weighted(t[:1])
        self.sum += 0.5 * self.g_end
        self.value = h0 * self.sum
        self.error = math.inf
        self._diff = 0.0
        z = math.pi * math.sinh(self.tmax)
        self.v_min = self.width * float(expit(-z))
        self.dv_min = self.width * math.pi * math.cosh(self.tmax) * float(expit(-z) * expit(z))
        self.f_min = None

    def _weighted(self, t) -> float:
        z = np.pi * np.sinh(t)
        p = expit(z)
        v = self.width * p
        dv = self.width * np.pi * np.cosh(t) * p * expit(-z)
        keep = v > 0.0
        vals = np.zeros_like(t)
        if np.any(keep):
            fv = np.asarray(self.f(v[keep]), dtype=float)
            if not np.all(np.isfinite(fv)):
                raise NonConvergent("integrand is not finite on a tanh-sinh panel")
            vals[keep] = fv * dv[keep]
        self.evaluations += int(np.count_nonzero(keep))
        return float(np.sum(vals))

    def refine(self) -> None:
        h = self.h / 2.0
        n = self.n0 * 2 ** (self.level + 1)
        k = np.arange(-n, n + 1)
        t = k[k % 2 != 0] * h
        self.sum += self._weighted(t)
        old = self.value
        self.h = h
        self.level += 1
        self.value = h * self.sum
        diff = abs(self.value - old)
        # convergence is exponential in the level: the next difference is
        # about diff**2 / previous diff, so that is what the current value misses
        if self.level >= 2 and self._diff > 0.0 and diff < self._diff:
            self.error = max(diff * diff / self._diff, 4e-16 * abs(self.value))
        else:
            self.error = diff
        self._diff = diff

    def run(self, tol: float, min_level: int = 2, max_level: int = 8) -> "TanhSinh":
        while self.level < min_level or (self.error > tol and self.level < max_level):
            self.refine()
        return self

    def endpoint_sample(self):
        """(v, f(v)) at the outermost node next to the left end."""
        if self.f_min is None:
            v = np.array([self.v_min])
            self.f_min = float(np.asarray(self.f(v), dtype=float)[0])
            self.evaluations += 1
        return self.v_min, self.f_min


def tanh_sinh(f: Callable, width: float, tol: float = 1e-13, max_level: int = 8) -> tuple:
    """Convenience wrapper returning (value, error) for the integral over [0, width]."""
    rule = TanhSinh(f, width).run(tol, max_level=max_level)
    return rule.value, rule.error


class _Panels:
    """Adaptive Gauss-Kronrod panels with greedy global bisection."""

    def __init__(self, f: Callable, edges: Sequence[float]):
        self.f = f
        if len(edges) and isinstance(edges[0], (list, tuple, np.ndarray)):
            # several disjoint edge lists refined as one pool
            self.a = np.concatenate([np.asarray(e[:-1], dtype=float) for e in edges])
            self.b = np.concatenate([np.asarray(e[1:], dtype=float) for e in edges])
        else:
            edges = np.asarray(edges, dtype=float)
            self.a = edges[:-1].copy()
            self.b = edges[1:].copy()
        self.k, self.e = self._eval(self.a, self.b)
        self.frozen = np.zeros(self.a.shape, dtype=bool)
        self.evaluations = 15 * self.a.size

    def _eval(self, a, b):
        if a.size == 0:
            return np.zeros(0), np.zeros(0)
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        x = mid[:, None] + half[:, None] * XK[None, :]
        fx = np.asarray(self.f(x.ravel()), dtype=float).reshape(x.shape)
        if not np.all(np.isfinite(fx)):
            bad = x[~np.isfinite(fx)][0]
            raise NonConvergent(f"integrand is not finite at tau={bad!r}")
        kr = half * (fx @ WK)
        ga = half * (fx @ WG)
        return kr, np.abs(kr - ga)

    @property
    def count(self) -> int:
        return int(self.a.size)

    def value(self) -> float:
        order = np.argsort(self.a, kind="stable")
        return float(np.sum(self.k[order]))

    def error(self) -> float:
        order = np.argsort(self.a, kind="stable")
        return float(np.sum(self.e[order]))

    def refine(self, tol: float, budget: int) -> bool:
        """Bisect until the summed estimate is within tol; False if budget ran out."""
        while True:
            total = self.error()
            if total <= tol:
                return True
            live = np.flatnonzero(~self.frozen)
            if live.size == 0 or self.count >= budget:
                return False
            order = live[np.argsort(-self.e[live], kind="stable")]
            excess = total - 0.5 * tol
            cum = np.cumsum(self.e[order])
            j = int(np.searchsorted(cum, excess)) + 1
            j = max(1, min(j, order.size, budget - self.count))
            pick = np.sort(order[:j])
            a = self.a[pick]
            b = self.b[pick]
            m = 0.5 * (a + b)
            tiny = (m <= a) | (m >= b) | ((b - a) <= 4e-16 * np.maximum(np.abs(a), np.abs(b)))
            if np.any(tiny):
                self.frozen[pick[tiny]] = True
                pick = pick[~tiny]
                a, b, m = a[~tiny], b[~tiny], m[~tiny]
                if pick.size == 0:
                    continue
            na = np.concatenate([a, m])
            nb = np.concatenate([m, b])
            kk, ee = self._eval(na, nb)
            self.evaluations += 15 * na.size
            keep = np.ones(self.a.size, dtype=bool)
            keep[pick] = False
            self.a = np.concatenate([self.a[keep], na])
            self.b = np.concatenate([self.b[keep], nb])
            self.k = np.concatenate([self.k[keep], kk])
            self.e = np.concatenate([self.e[keep], ee])
            self.frozen = np.concatenate([self.frozen[keep], np.zeros(na.size, dtype=bool)])


def _geometric_edges(a: float, b: float, ratio: float = 2.0) -> list:
    if a <= 0:
        return [a, b]
    n = max(1, int(math.ceil(math.log(b / a) / math.log(ratio))))
    return list(np.geomspace(a, b, n + 1))


def integrate_interval(f: Callable, a: float, b: float, cfg: Optional[QuadratureConfig] = None,
                       breakpoints: Sequence[float] = ()) -> QuadratureResult:
    """Adaptive Gauss-Kronrod integral of a smooth vectorized f over [a, b]."""
    cfg = cfg or QuadratureConfig.default()
    edges = sorted({float(a), float(b), *[float(p) for p in breakpoints if a < p < b]})
    panels = _Panels(f, edges)
    rough = panels.value()
    tol = max(cfg.abs_tol, cfg.rel_tol * abs(rough))
    ok = panels.refine(tol, cfg.max_subdivisions)
    value = panels.value()
    err = panels.error()
    ok = ok and err <= max(cfg.abs_tol, cfg.rel_tol * abs(value))
    res = QuadratureResult(value, err, panels.count, 0.0, ok)
    if not ok:
        raise NonConvergent("interval quadrature did not converge", res)
    return res


def _endpoint_correction(f: Callable, sp: Singularity, v: float, fv: float) -> tuple:
    """Integral of f over [0, v] from the local model A v**-e (ln v)**m.

    Returns (correction, error).  The model is checked against f(2v); a
    mismatch inflates the error instead of being trusted.
    """
    if sp.exponent is None:
        return 0.0, 10.0 * abs(fv) * v
    e = max(sp.exponent, 0.0)
    m = sp.log_power
    a = 1.0 - e
    lv = math.log(v)
    factor = 1.0
    if m == 1:
        factor = 1.0 - 1.0 / (a * lv)
    elif m >= 2:
        factor = 1.0 - 2.0 / (a * lv) + 2.0 / (a * lv) ** 2
    corr = fv * v / a * factor
    f2 = float(np.asarray(f(np.array([2.0 * v])), dtype=float)[0])
    expected = 2.0 ** (-e) * ((math.log(2.0 * v) / lv) ** m if m else 1.0)
    if fv == 0.0:
        return 0.0, abs(f2) * v
    mismatch = abs(f2 / fv / expected - 1.0)
    return corr, abs(corr) * min(1.0, 1e-6 + 10.0 * mismatch)


# ---------------------------------------------------------------------------
# the main engine

def integrate_second_difference(
    h: Callable,
    s: float,
    singular_points=(),
    cfg: Optional[QuadratureConfig] = None,
    *,
    breakpoints: Sequence[float] = (),
    hints: Sequence[float] = (),
    growth: float = 0.0,
    at_offset: Optional[Callable] = None,
    scale: float = 1.0,
    even: bool = True,
) -> QuadratureResult:
    """Integral of h(tau) * tau**-(1+2s) over (0, inf).

    Parameters
    ----------
    h : vectorized callable, O(tau**2) at the origin.  The tail rule samples
        it out to about 1e150 times the tail cut, where it must stay finite.
    s : kernel order in (0, 1); the kernel is tau**-(1+2s).
    singular_points : interior points of integrable singularity, given as
        floats, ``(location, exponent)`` pairs or :class:`Singularity`.
    breakpoints : points where h is continuous but not smooth.
    hints : advisory split points (near-singular features).
    growth : p such that |h(tau)| = O(tau**p) at infinity; must be < 2s.
    at_offset : optional ``at_offset(index, v)`` returning h at
        ``singular_points[index].location + v`` computed without rounding v.
    scale : characteristic length of h, used for the default cuts.
    even : h extends to an even function of tau (true for every symmetric
        second difference); the near-zero fit is then done in tau**2.
    """
    cfg = cfg or QuadratureConfig.default()
    s = float(s)
    if not (0.0 < s < 1.0):
        raise InvalidParams(f"kernel order must lie in (0, 1), got {s}")
    if growth >= 2.0 * s:
        raise DivergentTail(f"declared growth tau^{growth} is not integrable against tau^-(1+{2 * s})")
    sings = _as_singularities(singular_points)
    for sp in sings:
        if sp.location <= 0:
            raise InvalidParams("singular points must be positive")
        if sp.exponent is not None and sp.exponent >= 1.0:
            raise DivergentSingularity(f"singularity of exponent {sp.exponent} at tau={sp.location}")
    scale = float(scale)
    alpha = 1.0 + 2.0 * s
    bps = sorted({float(b) for b in breakpoints if b > 0})

    def kernel(t):
        return np.exp(-alpha * np.log(t))

    def integrand(t):
        return np.asarray(h(t), dtype=float) * kernel(t)

    # windows around singular points
    locs = [sp.location for sp in sings]
    widths = []
    for i, loc in enumerate(locs):
        w = min(0.25 * loc, 0.5 * scale)
        if i > 0:
            w = min(w, 0.5 * (loc - locs[i - 1]))
        if i + 1 < len(locs):
            w = min(w, 0.5 * (locs[i + 1] - loc))
        for b in bps:
            if b != loc:
                w = min(w, 0.5 * abs(b - loc))
        widths.append(w)

    delta = cfg.near_zero_cut * scale
    for b in bps:
        delta = min(delta, 0.5 * b)
    for loc, w in zip(locs, widths):
        delta = min(delta, 0.5 * (loc - w))

    structure = [delta, *bps, *[float(p) for p in hints if p > 0],
                 *[loc + w for loc, w in zip(locs, widths)]]
    tail_cut = cfg.tail_cut * scale if cfg.tail_cut is not None else 4.0 * scale
    tail_cut = max(tail_cut, 2.0 * max(structure))

    beta0 = 1.0 - 2.0 * s

    def near_zero(d):
        q = lambda t: np.asarray(h(t), dtype=float) / (t * t)
        lo = origin_fit_integral(q, d, beta0, 12, even)
        hi = origin_fit_integral(q, d, beta0, 20, even)
        return hi, abs(hi - lo)

    zero_val, zero_err = near_zero(delta)

    # tanh-sinh windows on each side of every singular point
    windows = []
    for i, (sp, w) in enumerate(zip(sings, widths)):
        for side in (-1.0, 1.0):
            if at_offset is not None:
                fn = (lambda v, i=i, side=side, loc=sp.location:
                      np.asarray(at_offset(i, side * v), dtype=float) * kernel(loc + side * v))
            else:
                fn = (lambda v, side=side, loc=sp.location: integrand(loc + side * v))
            floor = 1e-200 if at_offset is not None else 1e-14
            windows.append((sp, TanhSinh(fn, w, floor=floor)))

    # tail via u = T / tau
    two_s = 2.0 * s

    def tail_fn(u):
        return np.asarray(h(tail_cut / u), dtype=float) * tail_cut ** (-two_s) * u ** (two_s - 1.0)

    tail = TanhSinh(tail_fn, 1.0, floor=1e-150)

    # middle panels
    points = {delta, tail_cut}
    points.update(b for b in bps if delta < b < tail_cut)
    points.update(p for p in hints if delta < p < tail_cut
                  and all(abs(p - loc) > w for loc, w in zip(locs, widths)))
    for loc, w in zip(locs, widths):
        points.add(loc - w)
        points.add(loc + w)
    points = sorted(points)
    excluded = [(loc - w, loc + w) for loc, w in zip(locs, widths)]
    edges_list = []
    for a, b in zip(points[:-1], points[1:]):
        if any(lo <= a and b <= hi for lo, hi in excluded):
            continue
        edges_list.append(_geometric_edges(a, b))
    panel_sets = [_Panels(integrand, edges_list)] if edges_list else []

    rough = zero_val + tail.value + sum(p.value() for p in panel_sets) + sum(r.value for _, r in windows)
    tol = max(cfg.abs_tol, cfg.rel_tol * abs(rough))

    tail.run(tol / 8.0)
    n_win = max(1, len(windows))
    for _, rule in windows:
        rule.run(tol / (8.0 * n_win))

    budget = cfg.max_subdivisions
    mid_ok = True
    for p in panel_sets:
        mid_ok = p.refine(tol / 2.0, max(p.count + 1, budget))

    # endpoint corrections for the windows
    corr_total = 0.0
    corr_err = 0.0
    for sp, rule in windows:
        v, fv = rule.endpoint_sample()
        corr, cerr = _endpoint_correction(rule.f, sp, v, fv)
        corr_total += corr
        corr_err += cerr

    # shrink delta while the near-zero piece dominates the error budget
    final_tol = max(cfg.abs_tol, cfg.rel_tol * abs(rough))
    shrinks = 0
    while zero_err > final_tol / 4.0 and shrinks < 6:
        d_new = delta / 4.0
        z_val, z_err = near_zero(d_new)
        gap = _Panels(integrand, _geometric_edges(d_new, delta))
        gap.refine(final_tol / 8.0, max(gap.count + 1, budget // 4))
        if z_err + gap.error() >= zero_err:
            break  # the fit has hit its noise floor
        panel_sets.append(gap)
        delta, zero_val, zero_err = d_new, z_val, z_err
        shrinks += 1

    # tail remainder beyond the last node, from the declared growth
    u_min = tail.v_min
    _, fu = tail.endpoint_sample()
    tail_bound = 2.0 * abs(fu) * u_min / (two_s - max(growth, 0.0))

    mid_val = sum(p.value() for p in panel_sets)
    mid_err = sum(p.error() for p in panel_sets)
    win_val = sum(r.value for _, r in windows) + corr_total
    win_err = sum(r.error for _, r in windows) + corr_err
    value = zero_val + mid_val + win_val + tail.value
    err = zero_err + mid_err + win_err + tail.error
    subs = sum(p.count for p in panel_sets) + len(windows) + 2
    final_tol = max(cfg.abs_tol, cfg.rel_tol * abs(value))
    converged = bool(mid_ok and err + tail_bound <= final_tol)
    info = {
        "near_zero_cut": delta,
        "tail_cut": tail_cut,
        "evaluations": int(sum(p.evaluations for p in panel_sets)
                           + sum(r.evaluations for _, r in windows) + tail.evaluations),
        "pieces": {"near_zero": zero_val, "panels": mid_val, "windows": win_val, "tail": tail.value},
        "piece_errors": {"near_zero": zero_err, "panels": mid_err, "windows": win_err, "tail": tail.error,
                         "tail_bound": tail_bound},
    }
    res = QuadratureResult(float(value), float(err), int(subs), float(tail_bound), converged, info)
    if not converged:
        raise NonConvergent(
            f"quadrature did not meet tolerance: estimate {err + tail_bound:.3e} > {final_tol:.3e}", res)
    return res


def integrate_angular(
    h2: Callable,
    s: float,
    k: int,
    cfg: Optional[QuadratureConfig] = None,
    *,
    folded: Optional[Callable] = None,
    singular_points=(),
    breakpoints: Sequence[float] = (),
    growth: float = 0.0,
    folded_at_offset: Optional[Callable] = None,
    scale: float = 1.0,
) -> QuadratureResult:
    """Double integral of h2(rho, theta) sin(theta)**(k-2) rho**-(1+2s) over (0,inf)x(0,pi).

    The angular integral is done first on the folded integrand
    h2(rho, theta) + h2(rho, pi - theta) over [0, pi/2] with tanh-sinh; callers
    that can evaluate the fold without cancellation pass ``folded``.  The radial
    integral then goes through :func:`integrate_second_difference`.
    ``folded_at_offset(index, v, theta)`` evaluates the fold at
    rho = singular_points[index] + v.
    """
    if k < 2:
        raise InvalidParams("angular reduction needs k >= 2")
    cfg = cfg or QuadratureConfig.default()
    if folded is None:
        def folded(rho, theta):
            return h2(rho, theta) + h2(rho, np.pi - theta)

    inner_tol = max(cfg.rel_tol * 0.1, 1e-15)
    half_pi = 0.5 * math.pi

    def inner(evaluate):
        def run(rho):
            rho = np.atleast_1d(np.asarray(rho, dtype=float))
            out = np.empty(rho.shape)
            # one tanh-sinh rule vectorized over all radii
            sums = _inner_tanh_sinh(lambda th: evaluate(rho[:, None], th[None, :])
                                    * np.sin(th[None, :]) ** (k - 2), half_pi, inner_tol)
            out[:] = sums
            return out
        return run

    radial = inner(folded)
    offset_fn = None
    if folded_at_offset is not None:
        def offset_fn(i, v):
            v = np.atleast_1d(np.asarray(v, dtype=float))
            return _inner_tanh_sinh(lambda th: folded_at_offset(i, v[:, None], th[None, :])
                                    * np.sin(th[None, :]) ** (k - 2), half_pi, inner_tol)

    return integrate_second_difference(radial, s, singular_points, cfg, breakpoints=breakpoints,
                                       growth=growth, at_offset=offset_fn, scale=scale)


def _inner_tanh_sinh(fn: Callable, width: float, tol: float, max_level: int = 7) -> np.ndarray:
    """Vectorized tanh-sinh over [0, width]; fn maps theta (1, n) to values (m, n)."""
    floor = 1e-30
    tmax = math.asinh(math.log(1.0 / floor) / math.pi)
    h = 0.25
    n = math.floor(tmax / h)
    t = np.arange(-n, n + 1) * h

    def weighted(tt):
        z = np.pi * np.sinh(tt)
        p = expit(z)
        th = width * p
        dth = width * np.pi * np.cosh(tt) * p * expit(-z)
        vals = np.asarray(fn(th), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise NonConvergent("angular integrand is not finite")
        return vals @ dth

    acc = weighted(t)
    value = h * acc
    level = 0
    while level < max_level:
        h /= 2.0
        n = math.floor(tmax / h)
        kk = np.arange(-n, n + 1)
        acc = acc + weighted(kk[kk % 2 != 0] * h)
        new = h * acc
        diff = np.abs(new - value)
        value = new
        level += 1
        if level >= 2 and np.all(diff <= tol * np.maximum(np.abs(value), 1e-300) + 1e-300):
            break
    return value
