"""Radial profiles g(t) with the metadata the operators need.

A profile carries its value and first two derivatives, the strength of its
singularity at t = 0, a decay envelope for the tail, its kinks, and three
declared shape flags about g~(t) = g(sqrt(t)):

``gtilde_prime_nondecreasing``  g~' is nondecreasing
``gtilde_prime_L1``             g~' is integrable against (1 + t^(s+1/2))^-1 at infinity
``gtilde_second_convex``        g~'' is convex

The flags drive fast-path eligibility in :mod:`trunclap.operators`;
:func:`check_hypotheses` samples them but never overrides them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidExponent, InvalidMatchRadius, InvalidParams

FLAG_NAMES = ("gtilde_prime_nondecreasing", "gtilde_prime_L1", "gtilde_second_convex")


def _flags(nondecreasing: bool, l1: bool, convex: bool) -> dict:
    return dict(zip(FLAG_NAMES, (bool(nondecreasing), bool(l1), bool(convex))))


@dataclass(frozen=True)
class DecayEnvelope:
    """|g(t)| <= C (1+t)^-sigma * max(1, t^-origin) * (1 + ln(1+t))^log_power.

    A negative sigma declares growth |g| = O(t^-sigma).
    """

    C: float
    sigma: float
    log_power: int = 0

    def bound(self, t, origin_exponent: float = 0.0):
        t = np.asarray(t, dtype=float)
        out = self.C * (1.0 + t) ** (-self.sigma)
        if origin_exponent > 0:
            out = out * np.maximum(1.0, t ** (-origin_exponent))
        if self.log_power:
            out = out * (1.0 + np.log1p(t)) ** self.log_power
        return out


@dataclass(frozen=True, eq=False)
class RadialProfile:
    name: str
    params: dict
    func: Callable
    d1: Optional[Callable] = None
    d2: Optional[Callable] = None
    origin_exponent: float = 0.0
    decay: DecayEnvelope = DecayEnvelope(1.0, 0.0)
    flags: dict = field(default_factory=lambda: _flags(False, False, False))
    breakpoints: tuple = ()
    length_scale: float = math.inf
    delta_fn: Optional[Callable] = None
    outer_radius: float = 0.0
    gtilde_fn: Optional[Callable] = None

    def __call__(self, t):
        return self.func(np.asarray(t, dtype=float))

    def eval(self, t):
        return self(t)

    def derivative(self, t, order: int = 1):
        t = np.asarray(t, dtype=float)
        fn = self.d1 if order == 1 else self.d2 if order == 2 else None
        if order not in (1, 2):
            raise InvalidParams("only first and second derivatives are available")
        if fn is not None:
            return fn(t)
        h = 1e-5 * np.maximum(t, 1e-300)
        if order == 1:
            return (self.func(t + h) - self.func(t - h)) / (2.0 * h)
        return (self.func(t + h) - 2.0 * self.func(t) + self.func(t - h)) / (h * h)

    def delta(self, r: float, dq):
        """g(r sqrt(1 + dq)) - g(r), kept accurate when dq is small."""
        dq = np.asarray(dq, dtype=float)
        if self.delta_fn is not None:
            return self.delta_fn(r, dq)
        return self.func(r * np.sqrt(1.0 + dq)) - self.func(np.asarray(r, dtype=float))

    def flag(self, name: str) -> bool:
        return bool(self.flags.get(name, False))

    def scale(self, r: float) -> float:
        """Length, in units of r, over which g(r * .) changes appreciably."""
        if math.isinf(self.length_scale):
            return 1.0
        return min(1.0, self.length_scale / r)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"RadialProfile({self.name}: {args})"


# ---------------------------------------------------------------------------
# catalog

def _positive(x, what):
    x = float(x)
    if not (x > 0 and math.isfinite(x)):
        raise InvalidParams(f"{what} must be positive, got {x}")
    return x


def make_power(gamma: float) -> RadialProfile:
    """g(t) = t^-gamma."""
    g = float(gamma)
    if not g > 0:
        raise InvalidExponent(f"power exponent must be positive, got {g}")

    def delta(r, dq):
        return r ** (-g) * np.expm1(-0.5 * g * np.log1p(dq))

    return RadialProfile(
        name="power", params={"gamma": g},
        func=lambda t: t ** (-g),
        d1=lambda t: -g * t ** (-g - 1.0),
        d2=lambda t: g * (g + 1.0) * t ** (-g - 2.0),
        origin_exponent=g,
        decay=DecayEnvelope(2.0 ** g, g),
        flags=_flags(True, True, True),
        delta_fn=delta,
    )


def make_positive_power(gamma: float, s: Optional[float] = None) -> RadialProfile:
    """g(t) = -t^gamma, 0 < gamma < 2s (gamma < 2 when s is not given)."""
    g = float(gamma)
    upper = 2.0 * s if s is not None else 2.0
    if not (0.0 < g < upper):
        raise InvalidExponent(f"positive power needs 0 < gamma < {upper}, got {g}")

    def delta(r, dq):
        return -(r ** g) * np.expm1(0.5 * g * np.log1p(dq))

    return RadialProfile(
        name="positive_power", params={"gamma": g},
        func=lambda t: -(t ** g),
        d1=lambda t: -g * t ** (g - 1.0),
        d2=lambda t: -g * (g - 1.0) * t ** (g - 2.0),
        origin_exponent=0.0,
        decay=DecayEnvelope(1.0, -g),
        flags=_flags(True, True, True),
        delta_fn=delta,
    )


def make_shifted_power(a: float, amplitude: float = 1.0) -> RadialProfile:
    """g(t) = b (1+t)^-a."""
    a = _positive(a, "shifted power exponent")
    b = _positive(amplitude, "amplitude")

    def delta(r, dq):
        step = r * dq / (np.sqrt(1.0 + dq) + 1.0)
        return b * (1.0 + r) ** (-a) * np.expm1(-a * np.log1p(step / (1.0 + r)))

    return RadialProfile(
        name="shifted_power", params={"a": a, "amplitude": b},
        func=lambda t: b * (1.0 + t) ** (-a),
        d1=lambda t: -a * b * (1.0 + t) ** (-a - 1.0),
        d2=lambda t: a * (a + 1.0) * b * (1.0 + t) ** (-a - 2.0),
        decay=DecayEnvelope(b, a),
        flags=_flags(True, True, True),
        length_scale=1.0,
        delta_fn=delta,
    )


def make_bump_power(alpha: float, a: float) -> RadialProfile:
    """g(t) = alpha (1+t^2)^-a."""
    al = _positive(alpha, "amplitude")
    a = _positive(a, "bump exponent")

    def delta(r, dq):
        base = 1.0 + r * r
        return al * base ** (-a) * np.expm1(-a * np.log1p(r * r * dq / base))

    return RadialProfile(
        name="bump_power", params={"alpha": al, "a": a},
        func=lambda t: al * (1.0 + np.minimum(t, 1e150) ** 2) ** (-a),
        d1=lambda t: -2.0 * a * al * t * (1.0 + t * t) ** (-a - 1.0),
        d2=lambda t: -2.0 * a * al * (1.0 + t * t) ** (-a - 2.0) * (1.0 - (2.0 * a + 1.0) * t * t),
        decay=DecayEnvelope(al * 2.0 ** a, 2.0 * a),
        flags=_flags(True, True, True),
        length_scale=1.0,
        delta_fn=delta,
    )


def make_gaussian(beta: float, amplitude: float = 1.0) -> RadialProfile:
    """g(t) = b exp(-beta t^2)."""
    be = _positive(beta, "gaussian rate")
    b = _positive(amplitude, "amplitude")
    # sup of exp(-beta t^2)(1+t)^8 sits where beta t (1+t) = 4
    t_star = 0.5 * (-1.0 + math.sqrt(1.0 + 16.0 / be))
    C = b * math.exp(-be * t_star * t_star) * (1.0 + t_star) ** 8

    def delta(r, dq):
        return b * math.exp(-be * r * r) * np.expm1(-be * r * r * dq)

    return RadialProfile(
        name="gaussian", params={"beta": be, "amplitude": b},
        func=lambda t: b * np.exp(-be * np.minimum(t, 1e150) ** 2),
        d1=lambda t: -2.0 * be * t * b * np.exp(-be * t * t),
        d2=lambda t: (4.0 * be * be * t * t - 2.0 * be) * b * np.exp(-be * t * t),
        decay=DecayEnvelope(C * (1.0 + 1e-12), 8.0),
        flags=_flags(True, True, True),
        length_scale=1.0 / math.sqrt(be),
        delta_fn=delta,
    )


def make_capped_power(gamma: float, eps: float = 1.0) -> RadialProfile:
    """g(t) = min(eps^-gamma, t^-gamma); continuous with a kink at t = eps."""
    g = float(gamma)
    if not g > 0:
        raise InvalidExponent(f"capped power exponent must be positive, got {g}")
    e = _positive(eps, "cap radius")
    cap = e ** (-g)

    def delta(r, dq):
        outer = r * r * (1.0 + dq) > e * e
        direct = np.minimum(cap, (r * np.sqrt(1.0 + dq)) ** (-g)) - min(cap, r ** (-g))
        if r <= e:
            return direct
        return np.where(outer, r ** (-g) * np.expm1(-0.5 * g * np.log1p(np.where(outer, dq, 0.0))), direct)

    return RadialProfile(
        name="capped_power", params={"gamma": g, "eps": e},
        func=lambda t: np.minimum(cap, t ** (-g)),
        d1=lambda t: np.where(t > e, -g * t ** (-g - 1.0), 0.0),
        d2=lambda t: np.where(t > e, g * (g + 1.0) * t ** (-g - 2.0), 0.0),
        decay=DecayEnvelope(((1.0 + e) / e) ** g, g),
        # g~' drops from 0 to a negative value at the kink
        flags=_flags(False, True, False),
        breakpoints=(e,),
        length_scale=e,
        delta_fn=delta,
    )


def custom_profile(func: Callable, *, name: str = "custom", d1=None, d2=None,
                   origin_exponent: float = 0.0, decay=(1.0, 0.0), flags=None,
                   breakpoints=(), length_scale: float = math.inf, params=None) -> RadialProfile:
    """Wrap a user function; missing derivatives fall back to finite differences."""
    if flags is None:
        flags = _flags(False, False, False)
    else:
        unknown = set(flags) - set(FLAG_NAMES)
        if unknown:
            raise InvalidParams(f"unknown flags {sorted(unknown)}")
        flags = {n: bool(flags.get(n, False)) for n in FLAG_NAMES}
    env = decay if isinstance(decay, DecayEnvelope) else DecayEnvelope(*decay)
    return RadialProfile(name=name, params=dict(params or {}), func=func, d1=d1, d2=d2,
                         origin_exponent=float(origin_exponent), decay=env, flags=flags,
                         breakpoints=tuple(float(b) for b in breakpoints),
                         length_scale=length_scale)


# ---------------------------------------------------------------------------
# glued profiles

def _outer_derivatives(gamma: float, t: float, log_factor: bool) -> tuple:
    """G, G', G'', G''' at t for G(t) = t^-a or (1/2) ln(t) t^-a, a = gamma/2."""
    a = 0.5 * gamma
    p = [1.0, -a, a * (a + 1.0), -a * (a + 1.0) * (a + 2.0)]
    if not log_factor:
        return tuple(p[n] * t ** (-a - n) for n in range(4))
    # d^n (t^-a ln t) = p_n t^(-a-n) (ln t - sum_{j<n} 1/(a+j))
    L = math.log(t)
    out = []
    for n in range(4):
        shift = sum(1.0 / (a + j) for j in range(n))
        out.append(0.5 * p[n] * t ** (-a - n) * (L - shift))
    return tuple(out)


def log_glue_threshold(gamma: float) -> float:
    """Smallest t = r^2 beyond which (1/2) ln(t) t^(-gamma/2) has a convex second derivative."""
    g = float(gamma)
    return math.exp(2.0 / g + 2.0 / (g + 2.0) + 2.0 / (g + 4.0) + 2.0 / (g + 6.0))


@dataclass(frozen=True)
class GluedProfile:
    """Cubic in t = r^2 inside the match radius, outer power (or log-power) beyond.

    ``inner_poly`` holds the coefficients of the cubic in powers of (t - t0),
    t0 = match_radius^2; its second derivative is the tangent line of the
    outer function's second derivative at t0.
    """

    inner_poly: tuple
    match_radius: float
    outer_exponent: float
    log_factor: bool = False

    @property
    def t0(self) -> float:
        return self.match_radius ** 2

    def inner(self, t):
        d = np.asarray(t, dtype=float) - self.t0
        c0, c1, c2, c3 = self.inner_poly
        return c0 + d * (c1 + d * (c2 + d * c3))

    def inner_t_derivative(self, t, order: int):
        d = np.asarray(t, dtype=float) - self.t0
        c0, c1, c2, c3 = self.inner_poly
        if order == 1:
            return c1 + d * (2.0 * c2 + 3.0 * c3 * d)
        if order == 2:
            return 2.0 * c2 + 6.0 * c3 * d
        if order == 3:
            return 6.0 * c3 + 0.0 * d
        raise InvalidParams("order must be 1, 2 or 3")

    def outer(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        a = 0.5 * self.outer_exponent
        p = [1.0, -a, a * (a + 1.0), -a * (a + 1.0) * (a + 2.0)][order]
        if not self.log_factor:
            return p * t ** (-a - order)
        shift = sum(1.0 / (a + j) for j in range(order))
        return 0.5 * p * t ** (-a - order) * (np.log(t) - shift)

    def value(self, r):
        r = np.minimum(np.asarray(r, dtype=float), 1e150)
        t = r * r
        inside = t <= self.t0
        out = np.empty_like(t)
        out[inside] = self.inner(t[inside])
        out[~inside] = self.outer(t[~inside])
        return out

    def delta(self, r, dq):
        """g(r sqrt(1 + dq)) - g(r) without cancellation when both radii lie on one side of the joint."""
        dq = np.asarray(dq, dtype=float)
        r = float(r)
        t = r * r
        t1 = t * (1.0 + dq)
        out = self.value(r * np.sqrt(1.0 + dq)) - self.value(r)
        if t <= self.t0:
            same = t1 <= self.t0
            c0, c1, c2, c3 = self.inner_poly
            e0 = t - self.t0
            e1 = t1[same] - self.t0
            out[same] = t * dq[same] * (c1 + c2 * (e0 + e1) + c3 * (e0 * e0 + e0 * e1 + e1 * e1))
            return out
        same = t1 > self.t0
        a = 0.5 * self.outer_exponent
        L = np.log1p(dq[same])
        E = np.expm1(-a * L)
        if self.log_factor:
            out[same] = 0.5 * t ** (-a) * (math.log(t) * E + L * (1.0 + E))
        else:
            out[same] = t ** (-a) * E
        return out

    def radial_derivative(self, r, order: int):
        """d/dr or d^2/dr^2 of g(r) = G~(r^2)."""
        r = np.minimum(np.asarray(r, dtype=float), 1e150)
        t = r * r
        inside = t <= self.t0
        g1 = np.empty_like(t)
        g2 = np.empty_like(t)
        g1[inside] = self.inner_t_derivative(t[inside], 1)
        g1[~inside] = self.outer(t[~inside], 1)
        if order == 1:
            return 2.0 * r * g1
        g2[inside] = self.inner_t_derivative(t[inside], 2)
        g2[~inside] = self.outer(t[~inside], 2)
        return 2.0 * g1 + 4.0 * t * g2

    def t_derivatives(self, t):
        """(G~'(t), G~''(t)) in the variable t = r^2."""
        t = np.asarray(t, dtype=float)
        inside = t <= self.t0
        d1 = np.empty_like(t)
        d2 = np.empty_like(t)
        d1[inside] = self.inner_t_derivative(t[inside], 1)
        d2[inside] = self.inner_t_derivative(t[inside], 2)
        d1[~inside] = self.outer(t[~inside], 1)
        d2[~inside] = self.outer(t[~inside], 2)
        return d1, d2

    def joint_residuals(self) -> tuple:
        """Relative mismatch of value, g' and g'' across the match radius."""
        m = self.match_radius
        t0 = self.t0
        inner = [float(self.inner(t0)), float(self.inner_t_derivative(t0, 1)),
                 float(self.inner_t_derivative(t0, 2))]
        outer = [float(self.outer(t0, n)) for n in range(3)]
        # r-derivatives: g = G, g' = 2m G', g'' = 2G' + 4m^2 G''
        gi = (inner[0], 2 * m * inner[1], 2 * inner[1] + 4 * t0 * inner[2])
        go = (outer[0], 2 * m * outer[1], 2 * outer[1] + 4 * t0 * outer[2])
        return tuple(abs(x - y) / max(abs(y), 1e-300) for x, y in zip(gi, go))

    def as_profile(self) -> RadialProfile:
        g = self.outer_exponent
        # g~'' is the tangent line inside, so g~' is nondecreasing there iff the
        # line stays nonnegative down to t = 0
        line_at_zero = float(self.inner_t_derivative(0.0, 2))
        outer_ok = True
        if self.log_factor:
            a = 0.5 * g
            outer_ok = math.log(self.t0) >= 1.0 / a + 1.0 / (a + 1.0)
        nondecreasing = line_at_zero >= 0.0 and outer_ok
        name = "glued_log" if self.log_factor else "glued_power"
        return RadialProfile(
            name=name,
            params={"gamma": g, "match_radius": self.match_radius},
            func=self.value,
            d1=lambda r: self.radial_derivative(r, 1),
            d2=lambda r: self.radial_derivative(r, 2),
            origin_exponent=0.0,
            decay=DecayEnvelope(self._envelope_constant(), g, 1 if self.log_factor else 0),
            flags=_flags(nondecreasing, True, True),
            breakpoints=(self.match_radius,),
            outer_radius=self.match_radius,
            gtilde_fn=self.t_derivatives,
            delta_fn=self.delta,
        )

    def _envelope_constant(self) -> float:
        # bound sup |g| (1+t)^gamma / (1+ln(1+t))^m on a dense log grid, padded
        t = np.geomspace(1e-6, 1e8, 4000)
        env = DecayEnvelope(1.0, self.outer_exponent, 1 if self.log_factor else 0).bound(t)
        return float(np.max(np.abs(self.value(t)) / env)) * 1.05


def build_glued_profile(gamma: float, match_radius: Optional[float] = None,
                        log_factor: bool = False) -> GluedProfile:
    """Glue the Taylor cubic (in t = r^2) of the outer function at t0 = match_radius^2.

    For the log variant the default match radius is sqrt(t_r0) with t_r0 from
    :func:`log_glue_threshold`; smaller radii are rejected because g~'' would
    not be convex beyond the joint.
    """
    g = float(gamma)
    if not g > 0:
        raise InvalidExponent(f"glued profile exponent must be positive, got {g}")
    if log_factor:
        t_min = log_glue_threshold(g)
        if match_radius is None:
            match_radius = math.sqrt(t_min)
        if not match_radius > 0 or match_radius ** 2 < t_min * (1.0 - 1e-12):
            raise InvalidMatchRadius(
                f"log glue needs match_radius^2 >= {t_min:.6g}, got {float(match_radius) ** 2:.6g}")
    else:
        if match_radius is None:
            match_radius = 1.0 / math.sqrt(2.0)
        if not match_radius > 0:
            raise InvalidMatchRadius("match radius must be positive")
    m = float(match_radius)
    G = _outer_derivatives(g, m * m, log_factor)
    poly = (G[0], G[1], G[2] / 2.0, G[3] / 6.0)
    return GluedProfile(inner_poly=poly, match_radius=m, outer_exponent=g, log_factor=bool(log_factor))


# ---------------------------------------------------------------------------
# family dispatch and spec strings

_FAMILY_ARGS = {
    "power": ("gamma",),
    "positive_power": ("gamma", "s"),
    "shifted_power": ("a", "amplitude"),
    "bump_power": ("alpha", "a"),
    "gaussian": ("beta", "amplitude"),
    "capped_power": ("gamma", "eps"),
    "glued_power": ("gamma", "match_radius"),
    "glued_log": ("gamma", "match_radius"),
}

LIOUVILLE_FAMILIES = ("shifted_power", "bump_power", "gaussian", "capped_power", "glued_power", "glued_log")


def make_liouville_family(name: str, **params) -> RadialProfile:
    """Build one of the named Liouville test profiles.

    ``shifted_power`` accepts either ``a`` or the pair ``q, s`` (a = 2 s q).
    """
    if name == "shifted_power":
        if "a" not in params:
            if not {"q", "s"} <= set(params):
                raise InvalidParams("shifted_power needs a, or q and s")
            a = 2.0 * float(params["s"]) * float(params["q"])
        else:
            a = params["a"]
        return make_shifted_power(a, params.get("amplitude", 1.0))
    if name == "bump_power":
        return make_bump_power(params.get("alpha", 1.0), params["a"])
    if name == "gaussian":
        return make_gaussian(params["beta"], params.get("amplitude", 1.0))
    if name == "capped_power":
        return make_capped_power(params["gamma"], params.get("eps", 1.0))
    if name == "glued_power":
        return build_glued_profile(params["gamma"], params.get("match_radius"), False).as_profile()
    if name == "glued_log":
        return build_glued_profile(params["gamma"], params.get("match_radius"), True).as_profile()
    raise InvalidParams(f"unknown profile family {name!r}")


def make_profile(name: str, **params) -> RadialProfile:
    if name == "power":
        return make_power(params["gamma"])
    if name == "positive_power":
        return make_positive_power(params["gamma"], params.get("s"))
    return make_liouville_family(name, **params)


def parse_profile(text: str) -> RadialProfile:
    """Parse ``family:v1,v2`` or ``family:key=v,...`` (e.g. ``power:0.4``)."""
    name, _, rest = text.strip().partition(":")
    name = name.strip()
    if name not in _FAMILY_ARGS:
        raise InvalidParams(f"unknown profile family {name!r}; known: {', '.join(_FAMILY_ARGS)}")
    params = {}
    positional = list(_FAMILY_ARGS[name])
    for i, item in enumerate(x for x in rest.split(",") if x.strip()):
        key, eq, val = item.partition("=")
        try:
            if eq:
                params[key.strip()] = float(val)
            else:
                if i >= len(positional):
                    raise InvalidParams(f"too many values for {name}")
                params[positional[i]] = float(key)
        except ValueError as exc:
            raise InvalidParams(f"bad profile parameter {item!r}") from exc
    try:
        return make_profile(name, **params)
    except KeyError as exc:
        raise InvalidParams(f"profile {name} is missing parameter {exc.args[0]}") from exc


# ---------------------------------------------------------------------------
# sampled hypothesis checks

@dataclass(frozen=True)
class FlagCheck:
    passed: bool
    worst_violation: float


@dataclass(frozen=True)
class HypothesisReport:
    profile: str
    checks: dict
    declared: dict

    @property
    def mismatches(self) -> list:
        return [n for n in FLAG_NAMES if self.declared.get(n) and not self.checks[n].passed]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks.values())


def gtilde_derivatives(p: RadialProfile, t):
    """g~'(t) and g~''(t) for g~(t) = g(sqrt(t))."""
    t = np.asarray(t, dtype=float)
    if p.gtilde_fn is not None:
        return p.gtilde_fn(t)
    r = np.sqrt(t)
    g1 = p.derivative(r, 1)
    g2 = p.derivative(r, 2)
    return g1 / (2.0 * r), (g2 - g1 / r) / (4.0 * t)


def check_hypotheses(p: RadialProfile, n_samples: int = 256, *, t_range=None,
                     s: Optional[float] = None, tol: float = 1e-9) -> HypothesisReport:
    """Sample the three shape flags on a log grid in t = r^2.

    Violations are relative: a drop in g~' is measured against the local size
    of g~', and a negative second difference of g~'' against the local size of
    g~''.  The integrability flag is judged from the log-log slope of |g~'| over
    the last decade, which must be below s - 1/2 (below 0 when s is unknown).
    """
    if n_samples < 16:
        raise InvalidParams("n_samples must be >= 16")
    if t_range is None:
        far = max([b * b for b in p.breakpoints], default=0.0)
        t_range = (1e-4, max(1e4, 100.0 * far))
    lo, hi = t_range
    t = np.geomspace(lo, hi, n_samples)
    t = t[np.all([np.abs(t - b * b) > 1e-9 * t for b in p.breakpoints], axis=0)] if p.breakpoints else t
    d1, d2 = gtilde_derivatives(p, t)

    local1 = np.maximum(np.abs(d1[:-1]), np.abs(d1[1:])) + 1e-300
    drop = np.maximum(0.0, -(d1[1:] - d1[:-1])) / local1
    worst_mono = float(np.max(drop))

    # convexity in t: second divided difference of g~'' on the t grid, in
    # units of the local size of g~'' and of its increments (g~'' may be a
    # line through zero, where its own size says nothing about the noise)
    up = d2[2:] - d2[1:-1]
    down = d2[1:-1] - d2[:-2]
    dd = (up / (t[2:] - t[1:-1]) - down / (t[1:-1] - t[:-2])) * (t[2:] - t[:-2]) / 2.0
    local2 = (np.maximum.reduce([np.abs(d2[:-2]), np.abs(d2[1:-1]), np.abs(d2[2:])])
              + np.abs(up) + np.abs(down) + 1e-300)
    worst_conv = float(np.max(np.maximum(0.0, -dd) / local2)) if dd.size else 0.0

    tail = t >= hi / 10.0
    a = np.abs(d1[tail])
    if np.all(a == 0):
        slope = -math.inf
    else:
        a = np.maximum(a, 1e-300)
        slope = float(np.polyfit(np.log(t[tail]), np.log(a), 1)[0])
    limit = (s - 0.5) if s is not None else 0.0
    l1_violation = max(0.0, slope - limit) if math.isfinite(slope) else 0.0

    checks = {
        "gtilde_prime_nondecreasing": FlagCheck(worst_mono <= tol, worst_mono),
        "gtilde_prime_L1": FlagCheck(slope < limit, l1_violation),
        "gtilde_second_convex": FlagCheck(worst_conv <= tol, worst_conv),
    }
    return HypothesisReport(profile=p.name, checks=checks, declared=dict(p.flags))
