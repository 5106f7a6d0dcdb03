"""Executable scenarios: residual signs of candidate (super)solutions, fundamental
solutions, the strong maximum principle counterexample and s -> 1 sweeps.

A scenario evaluates an operator at sample radii, forms
``lhs = operator value + u(r)**p`` (the power term only when ``exponent_p`` is
set) and checks the sign demanded by its claim.  Margins are the residual
divided by the dominant magnitude at that radius.
"""

from __future__ import annotations

import configparser
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import exponents as ex
from .errors import InvalidParams, TrunclapError
from .operators import (
    LineField,
    OperatorSpec,
    OptimizerConfig,
    extremal_I_optimize,
    extremal_I_repr,
    extremal_J,
    local_limit,
    symmetric_angle,
)
from .profiles import (
    RadialProfile,
    build_glued_profile,
    make_capped_power,
    make_gaussian,
    make_positive_power,
    make_power,
    make_shifted_power,
    make_bump_power,
    parse_profile,
)
from .quad import QuadratureConfig, constants_for, sphere_area

CLAIMS = ("supersolution", "subsolution", "solution", "operator_sign", "frame_prediction", "limit_trend")
METHODS = ("repr", "optimize", "plane", "line", "sweep")
EXPECT = ("nonpositive", "nonnegative", "zero")
SWEEP_TARGETS = ("operator_convergence", "gamma_bar_trend", "gamma_tilde_trend", "constant_trends")

# the sign each claim imposes on lhs
_CLAIM_EXPECT = {"supersolution": "nonpositive", "subsolution": "nonnegative", "solution": "zero"}


@dataclass(frozen=True)
class Scenario:
    name: str
    operator: Optional[OperatorSpec]
    profile: Any
    claim: str
    exponent_p: Optional[float] = None
    sample_radii: tuple = ()
    tolerance: float = 1e-8
    method: str = "repr"
    expect: Optional[str] = None
    points: tuple = ()
    predicted_angle: Optional[float] = None
    sweep: Optional[dict] = None
    params: dict = field(default_factory=dict)
    notes: tuple = ()

    def __post_init__(self):
        if self.claim not in CLAIMS:
            raise InvalidParams(f"unknown claim {self.claim!r}")
        if self.method not in METHODS:
            raise InvalidParams(f"unknown evaluation method {self.method!r}")
        radii = tuple(float(r) for r in self.sample_radii)
        if any(not r > 0 for r in radii) or list(radii) != sorted(radii):
            raise InvalidParams(f"{self.name}: sample radii must be positive and sorted")
        object.__setattr__(self, "sample_radii", radii)
        if self.claim == "operator_sign":
            if self.expect not in EXPECT:
                raise InvalidParams(f"{self.name}: operator_sign needs expect in {EXPECT}")
        elif self.claim in _CLAIM_EXPECT:
            object.__setattr__(self, "expect", _CLAIM_EXPECT[self.claim])
        if self.claim == "frame_prediction" and self.predicted_angle is None:
            raise InvalidParams(f"{self.name}: frame_prediction needs a predicted angle")
        if self.claim == "limit_trend" and not self.sweep:
            raise InvalidParams(f"{self.name}: limit_trend needs sweep parameters")
        if self.method == "line" and not self.points:
            raise InvalidParams(f"{self.name}: line scenarios need evaluation points")


@dataclass(frozen=True)
class ResidualRow:
    r: float
    lhs: float
    rhs: float
    margin: float
    ok: Optional[bool]
    error_estimate: float = 0.0
    info: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"r": self.r, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin,
               "ok": self.ok, "error_estimate": self.error_estimate}
        out.update(self.info)
        return out


@dataclass(frozen=True)
class ScenarioResult:
    name: str
    claim: str
    rows: tuple
    verdict: str
    worst_margin: float
    notes: tuple = ()
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def as_dict(self) -> dict:
        return {"name": self.name, "claim": self.claim, "verdict": self.verdict,
                "worst_margin": self.worst_margin, "params": _plain(self.params),
                "notes": list(self.notes), "rows": [_plain(r.as_dict()) for r in self.rows]}


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _sign_ok(margin: float, expect: str, tol: float) -> bool:
    if expect == "nonpositive":
        return margin <= tol
    if expect == "nonnegative":
        return margin >= -tol
    return abs(margin) <= tol


def _worst(margins: Sequence[float], expect: str) -> float:
    """The margin closest to violating the claim."""
    if not margins:
        return math.nan
    if expect == "nonpositive":
        return max(margins)
    if expect == "nonnegative":
        return min(margins)
    return max(margins, key=abs)


def _verdict(rows) -> str:
    if any(r.ok is False for r in rows):
        return "fail"
    if any(r.ok is None for r in rows) or not rows:
        return "inconclusive"
    return "pass"


# ---------------------------------------------------------------------------
# evaluation

def _radial_value(sc: Scenario, r: float, cfg, opt_cfg):
    """(value, error estimate, extra info) of the scenario's operator at radius r."""
    spec = sc.operator
    p = sc.profile
    if sc.method == "repr":
        res = extremal_I_repr(p, r, spec, cfg)
        return res.value, res.total_error, {}
    if sc.method == "plane":
        res = extremal_J(p, r, spec, cfg)
        return res.value, res.total_error, {}
    x = np.zeros(spec.N)
    x[0] = r
    res = extremal_I_optimize(p, x, spec, opt_cfg, cfg)
    if res.stalled:
        raise _Stalled(res)
    return res.value, res.error_estimate, {"angles": [float(a) for a in res.info.get("angles", ())]}


class _Stalled(TrunclapError):
    def __init__(self, res):
        super().__init__("frame optimizer stalled")
        self.result = res


def _radial_scale(sc: Scenario, r: float, op: float, power_term: float) -> float:
    spec = sc.operator
    natural = spec.k * spec.constants.c_1s * abs(float(sc.profile(r))) * r ** (-2.0 * spec.s)
    return max(abs(op), abs(power_term), natural, 1e-300)


def _run_radial(sc: Scenario, cfg, opt_cfg) -> list:
    rows = []
    for r in sc.sample_radii:
        try:
            op, err, info = _radial_value(sc, r, cfg, opt_cfg)
        except TrunclapError as exc:
            rows.append(ResidualRow(r, math.nan, 0.0, math.nan, None, math.nan,
                                    {"error": f"{type(exc).__name__}: {exc}"}))
            continue
        power = float(sc.profile(r)) ** sc.exponent_p if sc.exponent_p is not None else 0.0
        lhs = op + power
        scale = _radial_scale(sc, r, op, power)
        margin = lhs / scale
        info = dict(info, operator=op, scale=scale)
        if sc.claim == "frame_prediction":
            dev = max(abs(a - sc.predicted_angle) for a in info["angles"])
            rows.append(ResidualRow(r, dev, sc.predicted_angle, dev, dev <= sc.tolerance, err, info))
            continue
        rows.append(ResidualRow(r, lhs, 0.0, margin, _sign_ok(margin, sc.expect, sc.tolerance), err, info))
    return rows


def _run_line(sc: Scenario, cfg, opt_cfg) -> list:
    spec = sc.operator
    field_ = sc.profile
    rows = []
    for pt in sc.points:
        x = np.asarray(pt, dtype=float)
        try:
            res = extremal_I_optimize(field_, x, spec, opt_cfg, cfg)
            if res.stalled:
                raise _Stalled(res)
            coords = [field_.directional(x, np.eye(spec.N)[i], spec.s, spec.constants, cfg).value
                      for i in range(spec.N)]
        except TrunclapError as exc:
            rows.append(ResidualRow(float(np.linalg.norm(x)), math.nan, 0.0, math.nan, None, math.nan,
                                    {"point": x.tolist(), "error": f"{type(exc).__name__}: {exc}"}))
            continue
        u0 = abs(float(field_.func(x[None, :])[0]))
        scale = max(abs(res.value), max(abs(c) for c in coords), spec.constants.c_1s * u0, 1e-300)
        margin = res.value / scale
        info = {"point": x.tolist(), "operator": res.value, "coordinate_values": coords, "scale": scale}
        rows.append(ResidualRow(float(np.linalg.norm(x)), res.value, 0.0, margin,
                                _sign_ok(margin, sc.expect, sc.tolerance), res.error_estimate, info))
    return rows


def _run_sweep(sc: Scenario, cfg) -> list:
    opts = dict(sc.sweep)
    table = asymptotics_sweep(opts.pop("target"), opts, opts.pop("s_grid"), cfg, tol=sc.tolerance)
    rows = []
    for i, row in enumerate(table.rows):
        step_ok = i == 0 or table.rows[i]["gap"] <= table.rows[i - 1]["gap"] + sc.tolerance
        rows.append(ResidualRow(row["s"], row["value"], row["reference"], row["gap"], step_ok, 0.0,
                                {k: v for k, v in row.items() if k not in ("s", "value", "reference", "gap")}))
    return rows


def run_scenario(sc: Scenario, cfg: Optional[QuadratureConfig] = None,
                 opt_cfg: Optional[OptimizerConfig] = None) -> ScenarioResult:
    cfg = cfg or QuadratureConfig.default()
    if sc.method == "sweep":
        rows = _run_sweep(sc, cfg)
        worst = max((r.margin for r in rows), default=math.nan)
    elif sc.method == "line":
        rows = _run_line(sc, cfg, opt_cfg)
        worst = _worst([r.margin for r in rows if r.ok is not None], sc.expect)
    else:
        rows = _run_radial(sc, cfg, opt_cfg)
        good = [r.margin for r in rows if r.ok is not None]
        worst = max(good, default=math.nan) if sc.claim == "frame_prediction" else _worst(good, sc.expect)
    return ScenarioResult(sc.name, sc.claim, tuple(rows), _verdict(rows), worst, sc.notes, sc.params)


# ---------------------------------------------------------------------------
# scenario builders

def _spec(family, sign, k, N, s):
    return OperatorSpec(family, sign, int(k), int(N), float(s))


def liouville_plus(k=2, N=3, s=0.75, p_offset=0.5, eps_fraction=0.5, radii=(0.5, 1, 2, 5, 10),
                   tolerance=1e-9, cfg=None, name="liouville_plus") -> Scenario:
    """u = eps (1+r)^(-2sq) against I_k^+ u + u^p <= 0, p above 1 + 2s/gamma_bar."""
    gb = ex.solve_gamma_bar(k, s, cfg=cfg).root
    p = 1.0 + 2.0 * s / gb + p_offset
    q = 1.0 / (p - 1.0)
    ck = ex.c_k_fun(2.0 * s * q, k, s, cfg=cfg).value
    eps = eps_fraction * (-ck) ** (1.0 / (p - 1.0))
    prof = make_shifted_power(2.0 * s * q, eps)
    return Scenario(name, _spec("I_extremal", "plus", k, N, s), prof, "supersolution", p, tuple(radii),
                    tolerance, params={"gamma_bar": gb, "p": p, "q": q, "c_k(2sq)": ck, "eps": eps,
                                       "p_star": 1.0 + 2.0 * s / gb})


def liouville_minus(k=2, N=3, s=0.75, p=2.0, radii=(0.5, 1, 2, 5, 10), tolerance=1e-8,
                    cfg=None, name="liouville_minus") -> Scenario:
    """u = alpha (1+r^2)^(-s/(p-1)) with alpha^(p-1) = -k c_perp(2s/(p-1)): an exact solution for I_k^-."""
    if not int(k) < int(N):
        raise InvalidParams("needs k < N")
    a = s / (p - 1.0)
    cbar = -k * ex.c_perp(2.0 * a, s, cfg=cfg).value
    alpha = cbar ** (1.0 / (p - 1.0))
    prof = make_bump_power(alpha, a)
    return Scenario(name, _spec("I_extremal", "minus", k, N, s), prof, "solution", p, tuple(radii),
                    tolerance, params={"p": p, "c_bar": cbar, "alpha": alpha})


def gaussian_p1(k=2, N=3, s=0.75, radii=(0.5, 1, 2, 5, 10), tolerance=1e-8, claim="subsolution",
                cfg=None, name="gaussian_p1") -> Scenario:
    """u = exp(-beta_bar r^2) with F(beta_bar) = 1/(2k), against I_k^- u + u.

    With that beta, I_k^- u + u = e^(-beta r^2)/2 > 0, so the honest claim is
    subsolution; the supersolution form is kept for the acceptance check.
    """
    rep = ex.solve_beta_bar(k, s, cfg=cfg)
    kF = k * ex.F_of_beta(rep.root, s, cfg=cfg).value
    prof = make_gaussian(rep.root)
    return Scenario(name, _spec("I_extremal", "minus", k, N, s), prof, claim, 1.0, tuple(radii),
                    tolerance, params={"beta_bar": rep.root, "kF": kF},
                    notes=("F(beta_bar) = 1/(2k) gives I_k^- u + u = e^(-beta r^2)/2, not 0",))


def propexi(N=3, s=0.75, p_offset=0.5, eps_fraction=0.5, radii=(0.5, 1, 2, 5, 10), tolerance=1e-9,
            cfg=None, name="propexi") -> Scenario:
    """u = eps (1+r)^(-2sq) against I_N^- u + u^p <= 0, p above 1 + 2s/gamma_tilde."""
    gt = ex.solve_gamma_tilde(N, s, cfg=cfg).root
    p = 1.0 + 2.0 * s / gt + p_offset
    q = 1.0 / (p - 1.0)
    c = ex.c_tilde_fun(2.0 * s * q, N, s, cfg=cfg).value
    Cs = constants_for(s).c_1s
    eps = eps_fraction * (N * Cs * abs(c)) ** (1.0 / (p - 1.0))
    prof = make_shifted_power(2.0 * s * q, eps)
    return Scenario(name, _spec("I_extremal", "minus", N, N, s), prof, "supersolution", p, tuple(radii),
                    tolerance, params={"gamma_tilde": gt, "p": p, "q": q, "c(2sq)": c, "eps": eps,
                                       "p_star": 1.0 + 2.0 * s / gt})


def fundamental_I_plus(k=2, N=3, s=0.75, radii=(0.5, 1, 2, 5, 10), tolerance=1e-8, cfg=None,
                       name="fundamental_I_plus") -> Scenario:
    """I_k^+ |x|^-gamma_bar = 0 away from the origin."""
    rep = ex.solve_gamma_bar(k, s, cfg=cfg)
    return Scenario(name, _spec("I_extremal", "plus", k, N, s), make_power(rep.root), "solution", None,
                    tuple(radii), tolerance,
                    params={"gamma_bar": rep.root, "c_k_residual": rep.residual, "p_star": rep.p_star})


def capped_I_plus(k=2, N=3, s=0.75, gamma_fraction=0.5, radii=(1.5, 3, 10), tolerance=1e-9, cfg=None,
                  name="capped_I_plus") -> Scenario:
    """min(1, |x|^-gamma) with gamma below gamma_bar has I_k^+ <= 0 outside the cap.

    The kink at |x| = 1 voids the representation flags, so the frame optimizer is used.
    """
    gb = ex.solve_gamma_bar(k, s, cfg=cfg).root
    g = gamma_fraction * gb
    return Scenario(name, _spec("I_extremal", "plus", k, N, s), make_capped_power(g), "operator_sign", None,
                    tuple(radii), tolerance, method="optimize", expect="nonpositive",
                    params={"gamma_bar": gb, "gamma": g})


def k1_contrast(N=3, s=0.75, gamma_fraction=0.5, radii=(1.5, 3, 10), tolerance=1e-9, cfg=None,
                name="k1_contrast") -> Scenario:
    """-|x|^gamma with 0 < gamma < 2s-1 has I_1^+ >= 0."""
    g = gamma_fraction * (2.0 * s - 1.0)
    return Scenario(name, _spec("I_extremal", "plus", 1, N, s), make_positive_power(g, s), "operator_sign",
                    None, tuple(radii), tolerance, expect="nonnegative", params={"gamma": g})


def glued_I_minus_N(N=3, s=0.75, radii=(1, 2, 5), tolerance=1e-7, match_radius=None, cfg=None,
                    name="glued_I_minus_N") -> Scenario:
    """Glued profile with outer exponent gamma_tilde: I_N^- = 0 where the theta* line misses the core."""
    rep = ex.solve_gamma_tilde(N, s, cfg=cfg)
    glued = build_glued_profile(rep.root, match_radius)
    m = glued.match_radius
    reach = math.sqrt(1.0 - 1.0 / N)
    kept = tuple(r for r in radii if r * reach >= m)
    dropped = tuple(r for r in radii if r * reach < m)
    notes = (f"radii {list(dropped)} excluded: the theta* line enters the glued core",) if dropped else ()
    return Scenario(name, _spec("I_extremal", "minus", N, N, s), glued.as_profile(), "solution", None, kept,
                    tolerance, params={"gamma_tilde": rep.root, "match_radius": m,
                                       "theta_star": symmetric_angle(N), "excluded_radii": list(dropped)},
                    notes=notes)


def fundamental_J_plus(k=3, N=4, s=0.8, radii=(0.5, 1, 4), tolerance=1e-6, cfg=None,
                       name="fundamental_J_plus") -> Scenario:
    """J_k^+ |x|^-(k-2s) = 0 away from the origin."""
    g = k - 2.0 * s
    return Scenario(name, _spec("J_extremal", "plus", k, N, s), make_power(g), "solution", None,
                    tuple(radii), tolerance, method="plane",
                    params={"gamma": g, "p_star": ex.j_threshold(k, s)})


def j_minus_solution(k=2, N=3, s=0.75, p=2.0, radii=(0.5, 1, 2, 5, 10), tolerance=1e-8, cfg=None,
                     name="j_minus_solution") -> Scenario:
    """u = alpha (1+r^2)^(-s/(p-1)) solving J_k^- u + u^p = 0.

    On a plane orthogonal to x the k-dimensional integral reduces to the
    orthogonal line constant scaled by C_{k,s}|S^{k-1}|/(2 C_s).
    """
    if not 1 < int(k) < int(N):
        raise InvalidParams("needs 1 < k < N")
    a = s / (p - 1.0)
    const = constants_for(s)
    ratio = const.c_ks(k) * sphere_area(k) / (2.0 * const.c_1s)
    cbar = -ratio * ex.c_perp(2.0 * a, s, cfg=cfg).value
    alpha = cbar ** (1.0 / (p - 1.0))
    return Scenario(name, _spec("J_extremal", "minus", k, N, s), make_bump_power(alpha, a), "solution", p,
                    tuple(radii), tolerance, method="plane", params={"p": p, "c_bar": cbar, "alpha": alpha})


def _smp_phi(t):
    return -1.0 / (1.0 + np.minimum(np.abs(t), 1e150) ** 2)


def smp_counterexample(k=1, N=2, s=0.75, heights=(0.0, 0.5, 1.0, 2.0), offset=1.0, dual=False,
                       tolerance=1e-9, name=None) -> Scenario:
    """u(x) = phi(x_N), phi(t) = -1/(1+t^2): nonconstant, minimal on x_N = 0, and I_k^- u <= 0.

    The dual form takes -u with I_k^+ (-u) >= 0.
    """
    if not 1 <= int(k) < int(N):
        raise InvalidParams("needs 1 <= k < N")
    sgn = -1.0 if dual else 1.0

    def func(pts):
        pts = np.asarray(pts, dtype=float)
        return sgn * _smp_phi(pts[..., -1])

    # u varies along xi on the length 1/|xi_N|
    field_ = LineField(func, scale=lambda _x, xi: 1.0 / max(abs(float(xi[-1])), 1e-6))
    pts = []
    for h in heights:
        x = np.zeros(int(N))
        x[0] = offset
        x[-1] = h
        pts.append(tuple(x))
    sign, expect = ("plus", "nonnegative") if dual else ("minus", "nonpositive")
    return Scenario(name or ("smp_dual" if dual else "smp"), _spec("I_extremal", sign, k, N, s), field_,
                    "operator_sign", None, (), tolerance, method="line", expect=expect, points=tuple(pts),
                    params={"phi": "-1/(1+t^2)", "dual": bool(dual)})


def frame_prediction(N=3, s=0.75, beta=1.0, radii=(1, 3), tolerance=1e-3, name="frame_prediction") -> Scenario:
    """Optimized I_N^- frames on a gaussian sit at arccos(1/sqrt N) from x."""
    th = symmetric_angle(N)
    return Scenario(name, _spec("I_extremal", "minus", N, N, s), make_gaussian(beta), "frame_prediction", None,
                    tuple(radii), tolerance, method="optimize", predicted_angle=th,
                    params={"theta_star": th})


def limit_trend(target="operator_convergence", s_grid=(0.6, 0.75, 0.9, 0.95), tolerance=0.0,
                name=None, **params) -> Scenario:
    """Monotone approach of a quantity to its s -> 1 limit."""
    sweep = dict(params, target=target, s_grid=tuple(s_grid))
    return Scenario(name or target, None, None, "limit_trend", sweep=sweep, tolerance=tolerance, method="sweep")


BUILDERS: dict = {
    "liouville_plus": liouville_plus,
    "liouville_minus": liouville_minus,
    "gaussian_p1": gaussian_p1,
    "propexi": propexi,
    "fundamental_I_plus": fundamental_I_plus,
    "capped_I_plus": capped_I_plus,
    "k1_contrast": k1_contrast,
    "glued_I_minus_N": glued_I_minus_N,
    "fundamental_J_plus": fundamental_J_plus,
    "j_minus_solution": j_minus_solution,
    "smp_counterexample": smp_counterexample,
    "frame_prediction": frame_prediction,
    "limit_trend": limit_trend,
}


# ---------------------------------------------------------------------------
# named checks

def _check(sc: Scenario, cfg) -> ScenarioResult:
    return run_scenario(sc, cfg)


def check_fundamental_I_plus(k, s, cfg=None, *, N=None, radii=(0.5, 1, 2, 5, 10)) -> ScenarioResult:
    if int(k) < 2:
        raise InvalidParams("the I_k^+ fundamental solution needs k >= 2")
    return _check(fundamental_I_plus(k, N or k + 1, s, radii, cfg=cfg), cfg)


def check_fundamental_I_minus_N(N, s, cfg=None, *, radii=(0.5, 1, 2, 5)) -> ScenarioResult:
    if int(N) < 2:
        raise InvalidParams("needs N >= 2")
    return _check(glued_I_minus_N(N, s, radii, cfg=cfg), cfg)


def check_fundamental_J_plus(k, s, cfg=None, *, N=None, radii=(0.5, 1, 4)) -> ScenarioResult:
    N = N or k + 1
    if not 1 < int(k) < int(N):
        raise InvalidParams("needs 1 < k < N")
    if not 0 < k - 2 * s < k:
        raise InvalidParams("needs 0 < k - 2s < k")
    return _check(fundamental_J_plus(k, N, s, radii), cfg)


def check_smp_counterexample(k, N, s, cfg=None, *, dual=False) -> ScenarioResult:
    return _check(smp_counterexample(k, N, s, dual=dual), cfg)


# ---------------------------------------------------------------------------
# s -> 1 sweeps

@dataclass(frozen=True)
class SweepTable:
    target: str
    columns: tuple
    rows: tuple
    monotone: bool


def asymptotics_sweep(target: str, params: Optional[dict] = None, s_grid: Sequence = (0.6, 0.75, 0.9, 0.95),
                      cfg=None, *, tol: float = 0.0) -> SweepTable:
    """Per-s rows of (value, reference, gap); monotone means gap never grows by more than tol."""
    if target not in SWEEP_TARGETS:
        raise InvalidParams(f"unknown sweep target {target!r}; known: {SWEEP_TARGETS}")
    params = dict(params or {})
    grid = [float(v) for v in s_grid]
    if any(not 0.5 < v < 1.0 for v in grid) or grid != sorted(grid):
        raise InvalidParams("s grid must be ascending inside (1/2, 1)")
    rows = []
    if target == "operator_convergence":
        prof = params.get("profile", "gaussian:1")
        prof = parse_profile(prof) if isinstance(prof, str) else prof
        k, N, r = int(params.get("k", 2)), int(params.get("N", 3)), float(params.get("r", 1.0))
        sign = params.get("sign", "plus")
        ref = local_limit(prof, r, k, N, sign)
        for s in grid:
            val = extremal_I_repr(prof, r, _spec("I_extremal", sign, k, N, s), cfg).value
            rows.append({"s": s, "value": val, "reference": ref, "gap": abs(val - ref)})
    elif target == "gamma_bar_trend":
        k = int(params.get("k", 2))
        for s in grid:
            rep = ex.solve_gamma_bar(k, s, cfg=cfg)
            rows.append({"s": s, "value": rep.root, "reference": 0.0, "gap": rep.root, "residual": rep.residual})
    elif target == "gamma_tilde_trend":
        N = int(params.get("N", 3))
        for s in grid:
            rep = ex.solve_gamma_tilde(N, s, cfg=cfg)
            rows.append({"s": s, "value": rep.root, "reference": N - 2.0, "gap": abs(rep.root - (N - 2.0)),
                         "residual": rep.residual})
    else:
        k = int(params.get("k", 2))
        for s in grid:
            c = constants_for(s)
            r1, rk = c.ratio_1d(), c.ratio_kd(k)
            rows.append({"s": s, "value": r1, "reference": 1.0, "gap": max(abs(r1 - 1.0), abs(rk - 1.0)),
                         "ratio_kd": rk})
    gaps = [row["gap"] for row in rows]
    mono = all(b <= a + tol for a, b in zip(gaps, gaps[1:]))
    cols = tuple(rows[0].keys()) if rows else ()
    return SweepTable(target, cols, tuple(rows), mono)


# ---------------------------------------------------------------------------
# suites

@dataclass(frozen=True)
class SuiteResult:
    name: str
    results: tuple
    gate: bool
    elapsed: float = field(default=0.0, compare=False)

    @property
    def verdict(self) -> str:
        return _verdict_of(self.results)

    def as_dict(self) -> dict:
        return {"suite": self.name, "verdict": self.verdict, "gate": self.gate,
                "scenarios": [r.as_dict() for r in self.results]}


def _verdict_of(results) -> str:
    verdicts = [r.verdict for r in results]
    if "fail" in verdicts:
        return "fail"
    if "inconclusive" in verdicts or not verdicts:
        return "inconclusive"
    return "pass"


def _parse_value(text: str):
    text = text.strip()
    if "," in text:
        return tuple(_parse_value(t) for t in text.split(",") if t.strip())
    low = text.lower()
    if low in ("true", "yes"):
        return True
    if low in ("false", "no"):
        return False
    if low in ("none", ""):
        return None
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def _tuple(v):
    return v if isinstance(v, tuple) else (v,)


_LIST_KEYS = ("radii", "heights", "s_grid")


def load_suite(source) -> tuple:
    """(suite name, [(scenario name, builder name, kwargs)]) from an INI file or text.

    ``source`` is a path, INI text, or the name of a packaged suite.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    text = _suite_text(source)
    parser.read_string(text)
    name = parser.get("suite", "name", fallback="suite") if parser.has_section("suite") else "suite"
    entries = []
    for section in parser.sections():
        if section == "suite":
            continue
        kwargs = {k: _parse_value(v) for k, v in parser.items(section)}
        builder = kwargs.pop("builder", section)
        if builder not in BUILDERS:
            raise InvalidParams(f"[{section}]: unknown builder {builder!r}")
        for key in _LIST_KEYS:
            if key in kwargs:
                kwargs[key] = _tuple(kwargs[key])
        kwargs["name"] = section
        entries.append((section, builder, kwargs))
    return name, entries


def _suite_text(source) -> str:
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and "[" not in source):
        path = Path(source)
        if path.exists():
            return path.read_text()
        packaged = str(source).replace("-", "_")
        try:
            return resources.files("trunclap.suites").joinpath(f"{packaged}.ini").read_text()
        except FileNotFoundError as exc:
            raise InvalidParams(f"no suite file or packaged suite named {source!r}") from exc
    return str(source)


def build_suite(source, cfg=None) -> tuple:
    name, entries = load_suite(source)
    scenarios = []
    for _section, builder, kwargs in entries:
        fn = BUILDERS[builder]
        if "cfg" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
            kwargs = dict(kwargs, cfg=cfg)
        scenarios.append(fn(**kwargs))
    return name, scenarios


def run_suite(source, cfg: Optional[QuadratureConfig] = None, *, gate: bool = True,
              opt_cfg: Optional[OptimizerConfig] = None,
              progress: Optional[Callable[[ScenarioResult], None]] = None) -> SuiteResult:
    """Run every scenario in declaration order.

    With ``gate`` each scenario is rerun at a tenfold tighter quadrature
    tolerance; a verdict that changes marks the scenario failed.
    """
    cfg = cfg or QuadratureConfig.default()
    t0 = time.perf_counter()
    name, scenarios = build_suite(source, cfg)
    results = []
    for sc in scenarios:
        res = run_scenario(sc, cfg, opt_cfg)
        if gate:
            tight = run_scenario(sc, cfg.tightened(10.0), opt_cfg)
            if tight.verdict != res.verdict:
                res = ScenarioResult(res.name, res.claim, res.rows, "fail", res.worst_margin,
                                     res.notes + (f"verdict changed from {res.verdict} to {tight.verdict} "
                                                  "under tenfold tighter quadrature",), res.params)
        results.append(res)
        if progress is not None:
            progress(res)
    return SuiteResult(name, tuple(results), gate, time.perf_counter() - t0)
