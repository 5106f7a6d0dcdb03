"""Directional, extremal and plane operators on radial and general functions.

All radial evaluations substitute tau = r * sigma, so every operator reads
``C * r**-2s * integral(h(sigma) sigma**-(1+2s))`` with h a second difference
in the dimensionless variable sigma.  The angle ``theta`` is always the angle
between the direction and x / |x|, reduced to [0, pi/2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (DivergentSingularity, IneligibleProfile, InvalidMode, InvalidParams,
                     NonSymmetric, OptimizerStalled)
from .profiles import RadialProfile
from .quad import (NormalizationConstants, QuadratureConfig, QuadratureResult, Singularity, TanhSinh,
                   as_order, combine, constants_for, integrate_angular,
                   integrate_second_difference, sphere_area)

FAMILIES = ("I_directional", "I_extremal", "J_plane", "J_extremal", "P_local")
SIGNS = ("plus", "minus")
J_MODES = ("plus_radialplane", "minus_orthoplane")


def reduce_angle(theta: float) -> float:
    """Map any angle to [0, pi/2] using I_xi = I_-xi and the reflection through x."""
    t = math.fmod(abs(float(theta)), math.pi)
    return min(t, math.pi - t)


def symmetric_angle(N: int) -> float:
    """theta* with cos(theta*) = 1/sqrt(N)."""
    return math.acos(1.0 / math.sqrt(N))


@dataclass(frozen=True)
class OperatorSpec:
    family: str
    sign: str
    k: int
    N: int
    s: float
    constants: Optional[NormalizationConstants] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParams(f"unknown operator family {self.family!r}")
        if self.sign not in SIGNS:
            raise InvalidParams(f"sign must be plus or minus, got {self.sign!r}")
        k, N = int(self.k), int(self.N)
        if not (1 <= k <= N):
            raise InvalidParams(f"need 1 <= k <= N, got k={k}, N={N}")
        s = as_order(self.s)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "constants", constants_for(s, self.constants))


# ---------------------------------------------------------------------------
# directional operator on a radial profile

def _second_difference(p: RadialProfile, r: float, theta: float):
    """h(sigma) = g(r|e + sigma xi|) + g(r|e - sigma xi|) - 2 g(r), |e| = 1."""
    c = math.cos(theta)
    sn = math.sin(theta)
    g_r = float(p(r))

    def near(sig):
        out = np.asarray(p.delta(r, sig * (sig + 2.0 * c)), dtype=float).copy()
        qm = (sig - c) ** 2 + sn * sn
        small = qm < 0.5
        if np.any(~small):
            big = sig[~small]
            out[~small] += p.delta(r, big * (big - 2.0 * c))
        if np.any(small):
            out[small] += p(r * np.sqrt(qm[small])) - g_r
        return out

    def far(sig):
        # no cancellation out here, and sigma**2 may overflow
        inv = 1.0 / sig
        return (p(r * sig * np.sqrt(1.0 + inv * (2.0 * c + inv)))
                + p(r * sig * np.sqrt(1.0 + inv * (inv - 2.0 * c))) - 2.0 * g_r)

    def h(sig):
        sig = np.asarray(sig, dtype=float)
        out = np.empty(sig.shape)
        lo = sig < 1e6
        out[lo] = near(sig[lo])
        if not np.all(lo):
            out[~lo] = far(sig[~lo])
        return out

    return h


def _kink_points(p: RadialProfile, r: float, theta: float) -> list:
    """sigma values where r |e +- sigma xi| crosses a profile breakpoint."""
    c = math.cos(theta)
    pts = []
    for b in p.breakpoints:
        if abs(b - r) <= 1e-12 * b:
            raise InvalidParams(f"evaluation radius {r} sits on the profile kink {b}")
        disc = c * c - 1.0 + (b / r) ** 2
        if disc < 0:
            continue
        root = math.sqrt(disc)
        for cand in (-c + root, -c - root, c + root, c - root):
            if cand > 1e-14:
                pts.append(cand)
    return sorted(set(pts))


def _operator_cfg(cfg: Optional[QuadratureConfig], p: RadialProfile, r: float) -> QuadratureConfig:
    """Floor the absolute tolerance at rel_tol * |g(r)|.

    The integrals are sums of terms of size |g(r)|, and for fundamental
    solutions they cancel to zero, where a purely relative target is unreachable.
    """
    cfg = cfg or QuadratureConfig.default()
    mag = abs(float(p(r)))
    return replace(cfg, abs_tol=max(cfg.abs_tol, cfg.rel_tol * mag))


def directional_integral(p: RadialProfile, r: float, theta: float, s: float,
                         cfg: Optional[QuadratureConfig] = None) -> QuadratureResult:
    """The dimensionless integral f(theta), without C_s r**-2s."""
    r = float(r)
    if not r > 0:
        raise InvalidParams("evaluation radius must be positive")
    cfg = _operator_cfg(cfg, p, r)
    th = reduce_angle(theta)
    h = _second_difference(p, r, th)
    growth = max(0.0, -p.decay.sigma)
    scale = p.scale(r)
    kinks = _kink_points(p, r, th)
    if th == 0.0:
        if p.origin_exponent >= 1.0:
            raise DivergentSingularity(
                f"profile singularity t^-{p.origin_exponent} is not integrable along a line through the origin")
        g_r = float(p(r))

        def at_offset(_i, v):
            v = np.asarray(v, dtype=float)
            return p(r * np.abs(2.0 + v)) + p(r * np.abs(v)) - 2.0 * g_r

        sing = [Singularity(1.0, max(p.origin_exponent, 0.0))]
        kinks = [k for k in kinks if abs(k - 1.0) > 1e-12]
        return integrate_second_difference(h, s, sing, cfg, breakpoints=kinks, growth=growth,
                                           at_offset=at_offset, scale=scale)
    c = math.cos(th)
    sn = math.sin(th)
    if p.origin_exponent > 0 and sn < 0.1:
        # the line passes at distance r sin(theta) from the singular origin;
        # offsets from sigma = cos(theta) keep that width resolvable
        g_r = float(p(r))

        def near_line(_i, v):
            v = np.asarray(v, dtype=float)
            sig = c + v
            return p(r * np.sqrt(1.0 + sig * (sig + 2.0 * c))) + p(r * np.hypot(v, sn)) - 2.0 * g_r

        return integrate_second_difference(h, s, [Singularity(c, 0.0)], cfg, breakpoints=kinks,
                                           growth=growth, at_offset=near_line, scale=scale)
    hints = [c]
    if p.origin_exponent > 0 or p.length_scale < r:
        w = max(sn, p.length_scale / r if math.isfinite(p.length_scale) else 0.0)
        # the line passes at distance r sin(theta) from the origin: grade
        # panels geometrically from that width out to order one
        while w < 0.25 * c:
            hints += [c - w, c + w]
            w *= 4.0
    return integrate_second_difference(h, s, (), cfg, breakpoints=kinks,
                                       hints=[x for x in hints if x > 0], growth=growth, scale=scale)


def directional(p: RadialProfile, r: float, theta: float, s, constants=None,
                cfg: Optional[QuadratureConfig] = None) -> QuadratureResult:
    """I_xi u(x) for u = g(|x|), |x| = r, angle theta between xi and x."""
    s = as_order(s)
    const = constants_for(s, constants)
    res = directional_integral(p, r, theta, s, cfg)
    return res.scaled(const.c_1s * float(r) ** (-2.0 * s), theta=reduce_angle(theta), r=float(r))


@dataclass(frozen=True)
class MonotonicityReport:
    thetas: np.ndarray
    values: np.ndarray
    worst_violation: float
    nonincreasing: bool
    symmetry_defect: float = 0.0


def angular_profile_monotonicity(p: RadialProfile, r: float, s, grid: int = 32, *,
                                 constants=None, cfg=None, tol: float = 1e-9) -> MonotonicityReport:
    """Sample theta -> I_xi u on [0, pi/2]; violations are increases relative to max |value|."""
    thetas = np.linspace(0.0, 0.5 * math.pi, int(grid))
    vals = np.array([directional(p, r, t, s, constants, cfg).value for t in thetas])
    size = max(float(np.max(np.abs(vals))), 1e-300)
    worst = float(max(0.0, np.max(np.diff(vals)))) / size
    return MonotonicityReport(thetas, vals, worst, worst <= tol)


def two_direction_sum(p: RadialProfile, r: float, theta: float, s, *, a1: float = 1.0,
                      constants=None, cfg=None) -> float:
    """Sum over an orthonormal pair rotated by theta in a plane meeting x at projection a1."""
    t1 = math.acos(min(1.0, a1 * math.cos(theta)))
    t2 = math.acos(min(1.0, a1 * math.sin(theta)))
    return (directional(p, r, t1, s, constants, cfg).value
            + directional(p, r, t2, s, constants, cfg).value)


def two_direction_monotonicity(p: RadialProfile, r: float, s, grid: int = 17, *, a1: float = 1.0,
                               constants=None, cfg=None, tol: float = 1e-9) -> MonotonicityReport:
    """f(theta) of the pair on [0, pi/4], plus the defect of f(theta) = f(pi/2 - theta)."""
    thetas = np.linspace(0.0, 0.25 * math.pi, int(grid))
    vals = np.array([two_direction_sum(p, r, t, s, a1=a1, constants=constants, cfg=cfg) for t in thetas])
    mirror = np.array([two_direction_sum(p, r, 0.5 * math.pi - t, s, a1=a1, constants=constants, cfg=cfg)
                       for t in thetas])
    size = max(float(np.max(np.abs(vals))), 1e-300)
    worst = float(max(0.0, np.max(np.diff(vals)))) / size
    sym = float(np.max(np.abs(vals - mirror))) / size
    return MonotonicityReport(thetas, vals, worst, worst <= tol, sym)


# ---------------------------------------------------------------------------
# extremal operators by representation

def _monotone_slope_ok(p):
    return p.flag("gtilde_prime_nondecreasing") and p.flag("gtilde_prime_L1")


def _convex_curvature_ok(p):
    return p.flag("gtilde_second_convex") and p.flag("gtilde_prime_L1")


def representation_branch(spec: OperatorSpec) -> tuple:
    """(branch name, [(coefficient, theta)], eligibility test)."""
    k, N = spec.k, spec.N
    if spec.sign == "plus":
        if k == 1:
            return "radial", [(1.0, 0.0)], _monotone_slope_ok
        return "radial+orthogonal", [(1.0, 0.0), (k - 1.0, 0.5 * math.pi)], _convex_curvature_ok
    if k < N:
        return "orthogonal", [(float(k), 0.5 * math.pi)], _monotone_slope_ok
    return "symmetric", [(float(N), symmetric_angle(N))], _convex_curvature_ok


def extremal_I_repr(p: RadialProfile, r: float, spec: OperatorSpec,
                    cfg: Optional[QuadratureConfig] = None, *, override: bool = False) -> QuadratureResult:
    """I_k^+- u at |x| = r from the directional representation formulas."""
    branch, terms, eligible = representation_branch(spec)
    if not eligible(p) and not override:
        raise IneligibleProfile(f"profile {p.name} does not carry the flags the {branch} formula needs")
    parts = [(coef, directional(p, r, th, spec.s, spec.constants, cfg)) for coef, th in terms]
    return combine(parts, branch=branch, thetas=[th for _, th in terms], r=float(r),
                   eligible=bool(eligible(p)))


# ---------------------------------------------------------------------------
# plane operators

def _plane_minus(p: RadialProfile, r: float, k: int, s: float, const, cfg):
    cfg = _operator_cfg(cfg, p, r)
    def h(t):
        t = np.minimum(np.asarray(t, dtype=float), 1e150)
        return p.delta(r, t * t)

    kinks = []
    for b in p.breakpoints:
        if b > r:
            kinks.append(math.sqrt((b / r) ** 2 - 1.0))
    res = integrate_second_difference(h, s, (), cfg, breakpoints=kinks,
                                      growth=max(0.0, -p.decay.sigma), scale=p.scale(r))
    return res.scaled(const.c_ks(k) * sphere_area(k) * r ** (-2.0 * s), mode="minus_orthoplane")


def _plane_plus(p: RadialProfile, r: float, k: int, s: float, const, cfg):
    cfg = _operator_cfg(cfg, p, r)
    g_r = float(p(r))

    def folded(rho, theta):
        sh = np.sin(0.5 * theta) ** 2
        rho, sh = np.broadcast_arrays(rho, sh)
        # |e -+ rho w| = rho |w -+ e / rho|, which cannot overflow
        big = np.maximum(rho, 1.0)
        inv = 1.0 / big
        qm = (rho * inv - inv) ** 2 + 4.0 * rho * inv * inv * sh
        qp = (rho * inv + inv) ** 2 - 4.0 * rho * inv * inv * sh
        return p(r * big * np.sqrt(qp)) + p(r * big * np.sqrt(qm)) - 2.0 * g_r

    def folded_at_offset(_i, v, theta):
        sh = np.sin(0.5 * theta) ** 2
        qm = v * v + 4.0 * (1.0 + v) * sh
        qp = (2.0 + v) ** 2 - 4.0 * (1.0 + v) * sh
        return p(r * np.sqrt(qp)) + p(r * np.sqrt(qm)) - 2.0 * g_r

    expo = max(0.0, p.origin_exponent) - (k - 1.0)
    if p.origin_exponent - (k - 1.0) >= 1.0:
        raise DivergentSingularity("profile singularity is not integrable in the plane")
    sing = [Singularity(1.0, expo)]
    res = integrate_angular(None, s, k, cfg, folded=folded, singular_points=sing,
                            breakpoints=[b / r for b in p.breakpoints if abs(b / r - 1.0) > 1e-9],
                            growth=max(0.0, -p.decay.sigma), folded_at_offset=folded_at_offset,
                            scale=p.scale(r))
    return res.scaled(const.c_ks(k) * sphere_area(k - 1) * r ** (-2.0 * s), mode="plus_radialplane")


def _full_laplacian_by_directions(p: RadialProfile, r: float, N: int, s: float, const, cfg):
    """Delta^s in R^N as the sin^(N-2)-weighted average of directional operators."""
    errs = []

    def f(th):
        out = np.empty(np.shape(th))
        for i, t in enumerate(np.ravel(th)):
            res = directional_integral(p, r, float(t), s, cfg)
            errs.append(res.total_error)
            out.flat[i] = res.value * math.sin(t) ** (N - 2)
        return out

    rule = TanhSinh(f, 0.5 * math.pi, floor=1e-12, h0=0.5)
    cfg_ = cfg or QuadratureConfig.default()
    rule.run(max(cfg_.abs_tol, cfg_.rel_tol * abs(rule.value)), max_level=6)
    factor = const.c_ks(N) * sphere_area(N - 1) * r ** (-2.0 * s)
    err = rule.error + (max(errs) if errs else 0.0) * 0.5 * math.pi
    tol = max(cfg_.abs_tol, cfg_.rel_tol * abs(rule.value))
    return QuadratureResult(rule.value * factor, err * abs(factor), rule.evaluations, 0.0,
                            bool(err <= 10 * tol), {"mode": "full_by_directions"})


def plane_J(p: RadialProfile, r: float, mode: str, k: int, s, constants=None,
            cfg: Optional[QuadratureConfig] = None, *, N: Optional[int] = None) -> QuadratureResult:
    """J_V u at |x| = r for the radial plane (plus) or a plane orthogonal to x (minus).

    With k = N both modes compute Delta^s on R^N by independent routes: the plus
    branch by the (rho, theta) reduction, the minus branch by averaging
    directional operators over the sphere.
    """
    if mode not in J_MODES:
        raise InvalidMode(f"mode must be one of {J_MODES}, got {mode!r}")
    k = int(k)
    N = k + 1 if N is None else int(N)
    if not (1 < k <= N):
        raise InvalidMode(f"plane operators need 1 < k <= N, got k={k}, N={N}")
    s = as_order(s)
    const = constants_for(s, constants)
    r = float(r)
    if not r > 0:
        raise InvalidParams("evaluation radius must be positive")
    if mode == "plus_radialplane":
        return _plane_plus(p, r, k, s, const, cfg)
    if k == N:
        return _full_laplacian_by_directions(p, r, N, s, const, cfg)
    return _plane_minus(p, r, k, s, const, cfg)


def extremal_J(p: RadialProfile, r: float, spec: OperatorSpec, cfg=None, *, override: bool = False):
    """J_k^+- from the plane formulas; needs g'(t)/t nondecreasing."""
    if not p.flag("gtilde_prime_nondecreasing") and not override:
        raise IneligibleProfile(f"profile {p.name} does not have g'(t)/t nondecreasing")
    mode = "plus_radialplane" if spec.sign == "plus" else "minus_orthoplane"
    return plane_J(p, r, mode, spec.k, spec.s, spec.constants, cfg, N=spec.N)


# ---------------------------------------------------------------------------
# local limits

def local_truncated(H, k: int, sign: str) -> float:
    """Sum of the k largest (plus) or k smallest (minus) eigenvalues of a symmetric H."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InvalidParams("Hessian must be a square matrix")
    if np.max(np.abs(H - H.T), initial=0.0) > 1e-12 * max(1.0, float(np.max(np.abs(H), initial=0.0))):
        raise NonSymmetric("Hessian is not symmetric within 1e-12")
    if not (1 <= k <= H.shape[0]):
        raise InvalidParams("k out of range")
    if sign not in SIGNS:
        raise InvalidParams(f"sign must be plus or minus, got {sign!r}")
    lam = np.linalg.eigvalsh(0.5 * (H + H.T))
    return float(np.sum(lam[-k:]) if sign == "plus" else np.sum(lam[:k]))


@dataclass(frozen=True)
class RadialHessianSpectrum:
    radial: float
    tangential: float
    multiplicity: Optional[int]


def radial_hessian_eigs(p: RadialProfile, r: float, N: Optional[int] = None) -> RadialHessianSpectrum:
    """(g''(r), g'(r)/r, N-1): the spectrum of D^2 g(|x|) at |x| = r."""
    r = float(r)
    g1 = float(p.derivative(r, 1))
    g2 = float(p.derivative(r, 2))
    return RadialHessianSpectrum(g2, g1 / r, None if N is None else int(N) - 1)


def radial_hessian(p: RadialProfile, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    e = x / r
    spec = radial_hessian_eigs(p, r)
    P = np.outer(e, e)
    return spec.radial * P + spec.tangential * (np.eye(x.size) - P)


def local_limit(p: RadialProfile, r: float, k: int, N: int, sign: str) -> float:
    """P_k^+- of g(|x|) at |x| = r."""
    x = np.zeros(int(N))
    x[0] = float(r)
    return local_truncated(radial_hessian(p, x), k, sign)


# ---------------------------------------------------------------------------
# frame optimizer

@dataclass(frozen=True)
class Frame:
    vectors: np.ndarray  # N x k, columns orthonormal

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[1] > v.shape[0]:
            raise InvalidParams("frame must be an N x k array with k <= N")
        gram = v.T @ v
        if np.max(np.abs(gram - np.eye(v.shape[1]))) > 1e-12:
            raise InvalidParams("frame vectors are not orthonormal within 1e-12")
        object.__setattr__(self, "vectors", v)

    @property
    def k(self) -> int:
        return self.vectors.shape[1]

    def angles_to(self, direction) -> np.ndarray:
        e = np.asarray(direction, dtype=float)
        e = e / np.linalg.norm(e)
        return np.array([_angle(self.vectors[:, i], e) for i in range(self.k)])


def _angle(xi, e) -> float:
    c = float(np.dot(xi, e))
    perp = float(np.linalg.norm(xi - c * e))
    return math.atan2(perp, abs(c))


class RadialField:
    """u(x) = g(|x|); directional values depend only on |x| and the angle to x."""

    def __init__(self, profile: RadialProfile):
        self.profile = profile

    def directional(self, x, xi, s, constants, cfg) -> QuadratureResult:
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        return directional(self.profile, r, _angle(xi, x / r), s, constants, cfg)

    def key(self, x, xi):
        x = np.asarray(x, dtype=float)
        return round(_angle(xi, x / np.linalg.norm(x)), 15)


class LineField:
    """General u given as a vectorized map of points of shape (..., N).

    ``scale`` is the length over which u changes along a line, either a number
    or a callable of (x, xi).
    """

    def __init__(self, func: Callable, scale=1.0, singular_points: Sequence = (),
                 growth: float = 0.0):
        self.func = func
        self.scale = scale if callable(scale) else float(scale)
        self.singular_points = tuple(singular_points)
        self.growth = float(growth)

    def directional(self, x, xi, s, constants, cfg) -> QuadratureResult:
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        u0 = float(self.func(x[None, :])[0])

        def h(t):
            t = np.asarray(t, dtype=float)
            step = t[:, None] * xi[None, :]
            return self.func(x + step) + self.func(x - step) - 2.0 * u0

        cfg = cfg or QuadratureConfig.default()
        # same floor as for radial profiles: terms have size |u(x)|
        cfg = replace(cfg, abs_tol=max(cfg.abs_tol, cfg.rel_tol * abs(u0)))
        length = float(self.scale(x, xi)) if callable(self.scale) else self.scale
        const = constants_for(s, constants)
        res = integrate_second_difference(h, s, self.singular_points, cfg, growth=self.growth,
                                          scale=length)
        return res.scaled(const.c_1s)

    def key(self, x, xi):
        v = np.asarray(xi, dtype=float)
        j = int(np.argmax(np.abs(v)))
        v = v if v[j] >= 0 else -v
        return tuple(np.round(v, 15))


@dataclass(frozen=True)
class OptimizerConfig:
    multistarts: int = 3
    seed: int = 0
    max_sweeps: int = 12
    grid: int = 8
    tol: float = 1e-11
    search_rel_tol: float = 1e-9
    raise_on_stall: bool = False


@dataclass(frozen=True)
class OptimizationResult:
    value: float
    frame: Frame
    error_estimate: float
    stalled: bool
    evaluations: int
    start_values: tuple = ()
    info: dict = field(default_factory=dict)


def _reference_direction(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = np.linalg.norm(x)
    if n == 0:
        e = np.zeros(x.size)
        e[0] = 1.0
        return e
    return x / n


def _canonical(Q: np.ndarray, k: int, e: np.ndarray) -> np.ndarray:
    """Frame columns signed toward e and ordered by |<xi, e>| then lexicographically."""
    F = Q[:, :k].copy()
    for i in range(k):
        c = float(np.dot(F[:, i], e))
        j = int(np.argmax(np.abs(F[:, i])))
        if c < -1e-14 or (abs(c) <= 1e-14 and F[j, i] < 0):
            F[:, i] = -F[:, i]
    keys = [(-round(abs(float(np.dot(F[:, i], e))), 12), tuple(np.round(-F[:, i], 12))) for i in range(k)]
    order = sorted(range(k), key=lambda i: keys[i])
    return F[:, order]


def _rotate(Q, i, j, phi):
    c, s_ = math.cos(phi), math.sin(phi)
    out = Q.copy()
    out[:, i] = c * Q[:, i] + s_ * Q[:, j]
    out[:, j] = -s_ * Q[:, i] + c * Q[:, j]
    return out


def _trig_peak(phis, vals, period, harmonics):
    """Maximizer of the least-squares trigonometric fit to samples."""
    w = 2.0 * math.pi / period
    cols = [np.ones_like(phis)]
    for m in range(1, harmonics + 1):
        cols += [np.cos(m * w * phis), np.sin(m * w * phis)]
    A = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    fine = np.linspace(0.0, period, 512, endpoint=False)
    B = [np.ones_like(fine)]
    for m in range(1, harmonics + 1):
        B += [np.cos(m * w * fine), np.sin(m * w * fine)]
    fit = np.stack(B, axis=1) @ coef
    return float(fine[int(np.argmax(fit))])


def extremal_I_optimize(field, x, spec: OperatorSpec, opt_cfg: Optional[OptimizerConfig] = None,
                        cfg: Optional[QuadratureConfig] = None) -> OptimizationResult:
    """max (plus) or min (minus) over orthonormal k-frames of the summed directional values.

    Givens coordinate ascent on a full orthonormal basis, rotating pairs inside
    the frame and pairs between the frame and its complement, from seeded
    random starts.  The search runs at a looser quadrature tolerance with a
    memo; the returned value is recomputed at ``cfg``.
    """
    opt = opt_cfg or OptimizerConfig()
    cfg = cfg or QuadratureConfig.default()
    x = np.asarray(x, dtype=float)
    N, k = spec.N, spec.k
    if x.shape != (N,):
        raise InvalidParams(f"point must have shape ({N},)")
    if isinstance(field, RadialProfile):
        field = RadialField(field)
    sgn = 1.0 if spec.sign == "plus" else -1.0
    e = _reference_direction(x)
    search_cfg = QuadratureConfig(abs_tol=max(cfg.abs_tol, opt.search_rel_tol * 1e-3),
                                  rel_tol=max(cfg.rel_tol, opt.search_rel_tol),
                                  max_subdivisions=cfg.max_subdivisions, near_zero_cut=cfg.near_zero_cut)
    memo = {}
    counter = [0]

    def one(xi):
        key = field.key(x, xi)
        if key not in memo:
            memo[key] = field.directional(x, xi, spec.s, spec.constants, search_cfg).value
            counter[0] += 1
        return memo[key]

    def objective(Q):
        return sgn * sum(one(Q[:, i]) for i in range(k))

    noise = [0.0]

    def line_search(Q, i, j, current):
        period = 0.5 * math.pi if j < k else math.pi
        phis = np.linspace(0.0, period, opt.grid, endpoint=False)
        vals = np.array([current] + [objective(_rotate(Q, i, j, p)) for p in phis[1:]])
        cands = [float(phis[int(np.argmax(vals))])]
        cands.append(_trig_peak(phis, vals, period, min(3, (opt.grid - 1) // 2)))
        best_phi, best_val = 0.0, current
        for c in cands:
            v = current if c == 0.0 else objective(_rotate(Q, i, j, c))
            if v > best_val:
                best_phi, best_val = c, v
        step = period / opt.grid
        res = minimize_scalar(lambda p: -objective(_rotate(Q, i, j, p)),
                              bounds=(best_phi - step, best_phi + step), method="bounded",
                              options={"xatol": 1e-9, "maxiter": 40})
        if -res.fun > best_val:
            best_phi, best_val = float(res.x), float(-res.fun)
        if best_val > current + noise[0]:
            return _rotate(Q, i, j, best_phi), best_val
        return Q, current

    rng = np.random.default_rng(opt.seed)
    pairs = [(i, j) for i in range(k) for j in range(i + 1, N)]
    starts = []
    for _ in range(max(1, opt.multistarts)):
        Q, _ = np.linalg.qr(rng.standard_normal((N, N)))
        value = objective(Q)
        noise[0] = 4.0 * opt.search_rel_tol * max(abs(value), 1e-300)
        converged = not pairs
        for _sweep in range(opt.max_sweeps):
            start_val = value
            for i, j in pairs:
                Q, value = line_search(Q, i, j, value)
            Q, value = _polish(Q, k, e, objective, value, noise[0])
            noise[0] = 4.0 * opt.search_rel_tol * max(abs(value), 1e-300)
            if value - start_val <= max(opt.tol * max(1.0, abs(value)), noise[0]):
                converged = True
                break
        starts.append((value, Q, converged))

    best = max(v for v, _, _ in starts)
    tie = 8.0 * opt.search_rel_tol * max(abs(best), 1e-300)
    finalists = []
    for v, Q, conv in starts:
        if v >= best - tie:
            F = _canonical(Q, k, e)
            finalists.append(((-round(abs(float(np.dot(F[:, 0], e))), 9), tuple(np.round(-F.ravel(), 9))),
                              F, conv))
    finalists.sort(key=lambda t: t[0])
    _, F, conv = finalists[0]
    stalled = not all(c for _, _, c in starts)
    if stalled and opt.raise_on_stall:
        raise OptimizerStalled("coordinate ascent used every sweep without settling")
    parts = [(1.0, field.directional(x, F[:, i], spec.s, spec.constants, cfg)) for i in range(k)]
    total = combine(parts)
    return OptimizationResult(total.value, Frame(F), total.total_error, stalled, counter[0],
                              tuple(sgn * v for v, _, _ in starts),
                              {"angles": Frame(F).angles_to(e).tolist()})


def _polish(Q, k, e, objective, value, noise):
    """Try snapping the frame vector closest to e onto e exactly.

    Directional values of a radial field can have a cusp at zero angle, where
    a line search only gets close; the snapped frame is kept if it is no worse.
    """
    dots = np.abs(Q[:, :k].T @ e)
    i = int(np.argmax(dots))
    if dots[i] < 1.0 - 1e-4:
        return Q, value
    order = [i] + [j for j in range(Q.shape[1]) if j != i]
    M = Q[:, order].copy()
    M[:, 0] = e
    R_q, R_r = np.linalg.qr(M)
    R_q = R_q * np.sign(np.diag(R_r))[None, :]
    R_q[:, 0] = e
    Q2 = np.empty_like(Q)
    Q2[:, order] = R_q
    v2 = objective(Q2)
    if v2 >= value - noise:
        return Q2, v2
    return Q, value
