"""Command line entry point.

    trunclap eval --op I+ --k 2 --N 3 --s 0.75 --profile power:0.4 --r 1,2,5
    trunclap solve --exponent gamma_bar --k 2 --s 0.75
    trunclap verify --suite paper-core
    trunclap sweep --target gamma_tilde_trend --N 4 --s-grid 0.8,0.9,0.95

Options may also come from an INI file given by --config: keys of the [run]
section use the long flag names with dashes or underscores.  Flags win.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import exponents as ex
from . import verify
from .errors import (BracketNotFound, DivergentSingularity, DivergentTail, InvalidParams, NonConvergent,
                     OptimizerStalled, TrunclapError)
from .operators import (OperatorSpec, OptimizerConfig, directional, extremal_I_optimize, extremal_I_repr,
                        extremal_J, local_limit, representation_branch)
from .profiles import parse_profile
from .quad import QuadratureConfig

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

SWEEP_COLUMNS = ("kind", "k", "N", "s", "value", "residual", "p_star")
OPS = ("I+", "I-", "J+", "J-", "P+", "P-", "Idir")
CONSTANTS = ("c_hat", "c_perp", "c_k", "c_k_prime", "c_k_second", "c_power", "c_tilde", "F_s", "F_beta",
             "F_lower_bound")
EXPONENTS = ("gamma_bar", "gamma_tilde", "beta_bar", "j_threshold")

# fallbacks applied after the config file, so a missing flag and a missing key
# both end here
DEFAULTS = {
    "format": "table", "output": None, "seed": 0, "abs_tol": None, "rel_tol": None, "max_subdivisions": None,
    "op": "I+", "k": 2, "N": 3, "s": 0.75, "profile": "power:0.4", "r": "1,2,5", "theta": None,
    "method": "auto", "override": False, "name": "c_k", "gamma": 0.5, "beta": 1.0,
    "exponent": "gamma_bar", "suite": "paper-core", "gate": True, "target": "gamma_bar_trend",
    "s_grid": "0.6,0.75,0.9,0.95",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p):
    p.add_argument("--config", help="INI file with a [run] section")
    p.add_argument("--format", choices=("json", "csv", "table"), default=None)
    p.add_argument("--output", help="write results here instead of stdout")
    p.add_argument("--seed", type=int, default=None, help="optimizer seed")
    p.add_argument("--abs-tol", type=float, default=None)
    p.add_argument("--rel-tol", type=float, default=None)
    p.add_argument("--max-subdivisions", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="trunclap", description="Fractional truncated Laplacians on radial profiles.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate an operator at sample radii")
    _add_common(p)
    p.add_argument("--op", choices=OPS, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--profile", default=None, help="family:args, e.g. power:0.4 or gaussian:beta=2")
    p.add_argument("--r", default=None, help="comma separated radii")
    p.add_argument("--theta", type=float, default=None, help="angle to x for --op Idir")
    p.add_argument("--method", choices=("auto", "repr", "optimize"), default=None)
    p.add_argument("--override", action="store_true", default=None,
                   help="use the representation formula even when the profile flags do not license it")

    p = sub.add_parser("constants", help="evaluate one of the exponent constants")
    _add_common(p)
    p.add_argument("--name", choices=CONSTANTS, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--s", type=float, default=None)

    p = sub.add_parser("solve", help="solve for a critical exponent")
    _add_common(p)
    p.add_argument("--exponent", choices=EXPONENTS, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--s", type=float, default=None)

    p = sub.add_parser("verify", help="run a scenario suite")
    _add_common(p)
    p.add_argument("--suite", default=None, help="packaged suite name or INI path")
    p.add_argument("--no-gate", dest="gate", action="store_false", default=None,
                   help="skip the rerun at tenfold tighter quadrature")

    p = sub.add_parser("sweep", help="s -> 1 sweep as a table")
    _add_common(p)
    p.add_argument("--target", choices=verify.SWEEP_TARGETS, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--profile", default=None)
    p.add_argument("--r", default=None)
    p.add_argument("--s-grid", default=None)
    return ap


def _read_config(path) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise UsageError(f"bad config {path}: {exc}") from exc
    if not parser.has_section("run"):
        return {}
    return {k.replace("-", "_"): v for k, v in parser.items("run")}


def _coerce(key, text):
    default = DEFAULTS.get(key)
    if key in ("k", "N", "seed", "max_subdivisions"):
        return int(text)
    if key in ("s", "abs_tol", "rel_tol", "gamma", "beta", "theta"):
        return float(text)
    if isinstance(default, bool):
        return text.strip().lower() in ("1", "true", "yes", "on")
    return text


def resolve(args) -> argparse.Namespace:
    """Merge flags over config values over built-in defaults."""
    values = vars(args).copy()
    file_values = _read_config(values["config"]) if values.get("config") else {}
    for key, text in file_values.items():
        if key in values and values[key] is None:
            try:
                values[key] = _coerce(key, text)
            except ValueError as exc:
                raise UsageError(f"config key {key}: {exc}") from exc
    for key, val in DEFAULTS.items():
        if key in values and values[key] is None:
            values[key] = val
    return argparse.Namespace(**values)


def _quad_cfg(ns) -> QuadratureConfig:
    cfg = QuadratureConfig.default()
    kw = {}
    if ns.abs_tol is not None:
        kw["abs_tol"] = ns.abs_tol
    if ns.rel_tol is not None:
        kw["rel_tol"] = ns.rel_tol
    if ns.max_subdivisions is not None:
        kw["max_subdivisions"] = ns.max_subdivisions
    return replace(cfg, **kw) if kw else cfg


def _floats(text) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma separated numbers, got {text!r}") from exc


# ---------------------------------------------------------------------------
# commands

def cmd_eval(ns, cfg) -> tuple:
    prof = parse_profile(ns.profile)
    sign = "plus" if ns.op.endswith("+") else "minus"
    rows = []
    for r in _floats(ns.r):
        if ns.op == "Idir":
            if ns.theta is None:
                raise UsageError("--op Idir needs --theta")
            res = directional(prof, r, ns.theta, ns.s, None, cfg)
            rows.append({"r": r, "value": res.value, "error": res.total_error, "method": "directional"})
        elif ns.op.startswith("P"):
            rows.append({"r": r, "value": local_limit(prof, r, ns.k, ns.N, sign), "error": 0.0,
                         "method": "hessian"})
        elif ns.op.startswith("J"):
            spec = OperatorSpec("J_extremal", sign, ns.k, ns.N, ns.s)
            res = extremal_J(prof, r, spec, cfg, override=ns.override)
            rows.append({"r": r, "value": res.value, "error": res.total_error, "method": res.info.get("mode", "plane")})
        else:
            spec = OperatorSpec("I_extremal", sign, ns.k, ns.N, ns.s)
            _branch, _terms, eligible = representation_branch(spec)
            use_repr = ns.method == "repr" or (ns.method == "auto" and (eligible(prof) or ns.override))
            if use_repr:
                res = extremal_I_repr(prof, r, spec, cfg, override=ns.override)
                rows.append({"r": r, "value": res.value, "error": res.total_error,
                             "method": res.info.get("branch", "repr")})
            else:
                x = np.zeros(ns.N)
                x[0] = r
                opt = extremal_I_optimize(prof, x, spec, OptimizerConfig(seed=ns.seed), cfg)
                if opt.stalled:
                    raise OptimizerStalled(f"frame optimizer stalled at r={r}")
                rows.append({"r": r, "value": opt.value, "error": opt.error_estimate, "method": "optimize"})
    meta = {"op": ns.op, "k": ns.k, "N": ns.N, "s": ns.s, "profile": ns.profile}
    return {"meta": meta, "rows": rows}, EXIT_OK


def cmd_constants(ns, cfg) -> tuple:
    name, g, s = ns.name, ns.gamma, ns.s
    if name == "c_hat":
        res = ex.c_hat(g, s, cfg=cfg)
    elif name == "c_perp":
        res = ex.c_perp(g, s, cfg=cfg)
    elif name == "c_k":
        res = ex.c_k_fun(g, ns.k, s, cfg=cfg)
    elif name == "c_k_prime":
        res = ex.c_k_prime(g, ns.k, s, cfg=cfg)
    elif name == "c_k_second":
        res = ex.c_k_second(g, ns.k, s, cfg=cfg)
    elif name == "c_power":
        res = ex.c_power(g, s, cfg=cfg)
    elif name == "c_tilde":
        res = ex.c_tilde_fun(g, ns.N, s, cfg=cfg)
    elif name == "F_s":
        res = ex.F_of_s(s, cfg=cfg)
    elif name == "F_beta":
        res = ex.F_of_beta(ns.beta, s, cfg=cfg)
    else:
        res = ex.F_lower_bound_constant(cfg=cfg)
    row = {"name": name, "value": res.value, "error": res.error_estimate, "certified": res.certified}
    row.update(res.params)
    return {"rows": [row]}, EXIT_OK


def cmd_solve(ns, cfg) -> tuple:
    if ns.exponent == "j_threshold":
        row = {"kind": "j_threshold", "k": ns.k, "N": None, "s": ns.s, "value": ex.j_threshold(ns.k, ns.s),
               "residual": 0.0, "p_star": ex.j_threshold(ns.k, ns.s)}
        return {"root": row["value"], "residual": 0.0, "p_star": row["p_star"], "rows": [row]}, EXIT_OK
    if ns.exponent == "gamma_bar":
        rep = ex.solve_gamma_bar(ns.k, ns.s, cfg=cfg)
    elif ns.exponent == "gamma_tilde":
        rep = ex.solve_gamma_tilde(ns.N, ns.s, cfg=cfg)
    else:
        rep = ex.solve_beta_bar(ns.k, ns.s, cfg=cfg)
    row = rep.as_row()
    out = {"root": rep.root, "residual": rep.residual, "p_star": rep.p_star, "bracket": list(rep.bracket),
           "certified": rep.certified, "rows": [row]}
    return out, EXIT_OK


def cmd_verify(ns, cfg) -> tuple:
    def progress(res):
        print(f"  {res.name}: {res.verdict}", file=sys.stderr)

    suite = verify.run_suite(ns.suite, cfg, gate=ns.gate, opt_cfg=OptimizerConfig(seed=ns.seed),
                             progress=progress)
    out = suite.as_dict()
    rows = [{"scenario": r.name, "claim": r.claim, "verdict": r.verdict, "worst_margin": r.worst_margin}
            for r in suite.results]
    out["rows"] = rows
    code = {"pass": EXIT_OK, "fail": EXIT_FAIL}.get(suite.verdict, EXIT_NUMERIC)
    return out, code


_SWEEP_KIND = {"operator_convergence": "operator_gap", "gamma_bar_trend": "gamma_bar",
               "gamma_tilde_trend": "gamma_tilde", "constant_trends": "ratio_1d"}


def cmd_sweep(ns, cfg) -> tuple:
    params = {"k": ns.k, "N": ns.N, "profile": ns.profile or "gaussian:1", "r": _floats(ns.r or "1")[0]}
    table = verify.asymptotics_sweep(ns.target, params, _floats(ns.s_grid), cfg)
    kind = _SWEEP_KIND[ns.target]
    rows = []
    for row in table.rows:
        s = row["s"]
        if ns.target == "gamma_bar_trend":
            rows.append({"kind": kind, "k": ns.k, "N": None, "s": s, "value": row["value"],
                         "residual": row["residual"], "p_star": 1.0 + 2.0 * s / row["value"]})
        elif ns.target == "gamma_tilde_trend":
            rows.append({"kind": kind, "k": None, "N": ns.N, "s": s, "value": row["value"],
                         "residual": row["residual"], "p_star": 1.0 + 2.0 * s / row["value"]})
        elif ns.target == "constant_trends":
            rows.append({"kind": "ratio_1d", "k": 1, "N": None, "s": s, "value": row["value"],
                         "residual": None, "p_star": None})
            rows.append({"kind": "ratio_kd", "k": ns.k, "N": None, "s": s, "value": row["ratio_kd"],
                         "residual": None, "p_star": None})
        else:
            rows.append({"kind": kind, "k": ns.k, "N": ns.N, "s": s, "value": row["gap"],
                         "residual": None, "p_star": None})
    return {"target": ns.target, "monotone": table.monotone, "columns": list(SWEEP_COLUMNS), "rows": rows}, EXIT_OK


COMMANDS = {"eval": cmd_eval, "constants": cmd_constants, "solve": cmd_solve, "verify": cmd_verify,
            "sweep": cmd_sweep}


# ---------------------------------------------------------------------------
# output

def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def _columns(rows, preferred=None) -> list:
    if preferred:
        return list(preferred)
    cols = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    return cols


def render(result: dict, fmt: str, columns=None) -> str:
    if fmt == "json":
        return json.dumps(_json_safe(result), sort_keys=True, indent=2) + "\n"
    rows = result.get("rows", [])
    cols = _columns(rows, columns)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in cols])
        return buf.getvalue()
    cells = [[c for c in cols]] + [[_short(row.get(c)) for c in cols] for row in rows]
    widths = [max(len(line[i]) for line in cells) for i in range(len(cols))]
    lines = ["  ".join(v.rjust(w) for v, w in zip(line, widths)) for line in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}" if math.isfinite(v) else "nan"
    return "" if v is None else str(v)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        ns = resolve(args)
        cfg = _quad_cfg(ns)
        result, code = COMMANDS[ns.command](ns, cfg)
    except UsageError as exc:
        print(f"trunclap: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergent, BracketNotFound, DivergentTail, DivergentSingularity, OptimizerStalled) as exc:
        print(f"trunclap: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidParams, TrunclapError) as exc:
        print(f"trunclap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    columns = SWEEP_COLUMNS if ns.command == "sweep" else None
    text = render(result, ns.format, columns)
    if ns.output:
        Path(ns.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
