"""Command-line interface: gasket-martin <command> [flags]."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import boundary, kernel, potential, recursion, render
from .graph import MAX_LEVEL, build_graph, to_dot
from .kernel import parse_p
from .words import BoundaryWord, format_any, parse_any, parse_word


class InvariantFailure(Exception):
    pass


def _num(x):
    """JSON/CSV representation of a number: num/den for Fractions."""
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _config(args) -> dict:
    skip = {"func", "out", "format"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg["command"] = args.command
    return cfg


def _emit(args, payload: dict | None = None, rows: list[dict] | None = None, text=None):
    if text is None:
        if args.format == "csv":
            if rows is None:
                rows = [payload]
            buf = io.StringIO()
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _num(v) for k, v in r.items()})
            text = buf.getvalue()
        else:
            body = dict(payload) if payload is not None else {"rows": rows}
            body["config"] = _config(args)
            text = json.dumps(body, indent=2, sort_keys=True, default=_num) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _params(args):
    return parse_p(args.p, args.mode)


def _jsonable(d):
    return {k: [_num(v) for v in val] if isinstance(val, (list, tuple, np.ndarray)) else _num(val)
            for k, val in d.items()}


# -- commands --------------------------------------------------------------

def cmd_sequences(args):
    params = _params(args)
    rows = []
    for s in recursion.sequence(params, args.n):
        rows.append({"n": s.n, "alpha": s.alpha, "beta": s.beta, "gamma": s.gamma,
                     "a": s.a, "b": s.b, "c": s.c})
    _emit(args, rows=[_jsonable(r) for r in rows])


def cmd_verify(args):
    params = parse_p(args.p, "float" if args.float else args.mode)
    lim = recursion.verify_limits(params, args.tol, args.n_max)
    lem = recursion.lemma_suite(params, args.lemma_n)
    ok = lim.converged and lim.envelope_ok and lem.ok
    payload = {
        "pass": ok,
        "limits": {"converged": lim.converged, "n": lim.n, "deviation": lim.deviation,
                   "envelope": f"({lim.envelope_base})^(n-2)", "envelope_ok": lim.envelope_ok,
                   "envelope_violations": lim.envelope_violations},
        "lemmas": {"ok": lem.ok, "failures": lem.failures, "undecided": lem.undecided,
                   "checked": lem.checked, "exact_levels": lem.exact_levels},
        "summary": lim.summary(),
    }
    if args.format == "csv":
        _emit(args, {"pass": ok, "converged": lim.converged, "n": lim.n,
                     "deviation": lim.deviation, "envelope": f"({lim.envelope_base})^(n-2)",
                     "envelope_ok": lim.envelope_ok, "lemmas_ok": lem.ok})
    else:
        _emit(args, payload)
    if not ok:
        raise InvariantFailure(lim.summary())


def cmd_simulate(args):
    params = _params(args)
    start = parse_word(args.start)
    if args.target is not None:
        est = kernel.estimate_word_hit(params, start, parse_word(args.target), args.paths,
                                       args.seed, kernel=args.kernel, threads=args.threads)
    else:
        level = args.level if args.level is not None else max(len(start), 1)
        est = kernel.estimate_hitting(params, start, level, args.paths, args.seed,
                                      kernel=args.kernel, threads=args.threads)
    d = est.to_dict()
    if args.format == "csv":
        _emit(args, rows=[{"k": k + 1, "estimate": e, "stderr": s}
                          for k, (e, s) in enumerate(zip(d["estimates"], d["stderr"]))])
    else:
        _emit(args, d)


def cmd_hitting(args):
    params = _params(args)
    x, y = parse_word(args.x), parse_word(args.y)
    _emit(args, {"x": args.x, "y": args.y, "value": _num(potential.hitting_probability(params, x, y))})


def cmd_green(args):
    params = _params(args)
    x, y = parse_word(args.x), parse_word(args.y)
    _emit(args, {"x": args.x, "y": args.y, "value": _num(potential.green(params, x, y).value)})


def cmd_kernel(args):
    params = _params(args)
    z = parse_word(args.z)
    target = parse_any(args.target)
    if isinstance(target, BoundaryWord):
        value = kernel_value = potential.kernel_at_boundary(params, z, target, args.tol)
        bound = 1 / potential.bound_inverse(params, z)
    else:
        kv = potential.martin_kernel(params, z, target)
        value, bound = kv.value, kv.bound
        kernel_value = value
    if float(kernel_value) > float(bound) * (1 + 1e-9):
        raise InvariantFailure("kernel exceeds C_z")
    _emit(args, {"z": args.z, "target": format_any(target), "value": _num(value),
                 "bound": _num(bound)})


def cmd_metric(args):
    params = parse_p(args.p, "float")
    mp = boundary.MetricParams(args.r, args.N, args.kernel_tol)
    mv = boundary.martin_metric(params, mp, parse_any(args.x), parse_any(args.y))
    if args.format == "csv":
        _emit(args, {"value": mv.value, "error_bound": mv.error_bound, **mv.params})
    else:
        _emit(args, mv.to_dict())


def cmd_harmonic(args):
    params = _params(args)
    x = parse_any(args.x)
    if isinstance(x, BoundaryWord):
        value = boundary.harmonic_at_boundary(params, args.i, x, args.tol)
    else:
        value = boundary.harmonic_h(params, args.i, x, args.tol)
    _emit(args, {"i": args.i, "x": format_any(x), "value": value})


def cmd_gasket(args):
    params = parse_p(args.p, "float")
    _emit(args, text=render.gasket_svg(params, args.depth, args.color_by, args.tol))


def cmd_graph_export(args):
    if not 0 <= args.n <= MAX_LEVEL:
        raise ValueError(f"level must lie in [0, {MAX_LEVEL}]")
    _emit(args, text=to_dot(build_graph(args.n)))


# -- parser ----------------------------------------------------------------

def _common(fmt: str = "json") -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--p", default="1/3", help="num/den for exact arithmetic, decimal for float")
    parent.add_argument("--mode", choices=("exact", "float"), default=None)
    parent.add_argument("--seed", type=int, default=0)
    parent.add_argument("--threads", type=int, default=1)
    parent.add_argument("--format", choices=("csv", "json"), default=fmt)
    parent.add_argument("--out", default=None)
    return parent


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gasket-martin",
                                 description="Martin boundary computations for the gasket chain")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sequences", parents=[_common("csv")], help="alpha_n ... c_n table")
    s.add_argument("--n", type=int, default=10)
    s.set_defaults(func=cmd_sequences)

    s = sub.add_parser("verify", parents=[_common()], help="limit theorem and lemma suite")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--float", action="store_true", help="floating-point mode")
    s.add_argument("--n-max", type=int, default=120)
    s.add_argument("--lemma-n", type=int, default=50)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", parents=[_common()], help="Monte Carlo hitting estimates")
    s.add_argument("--start", default="1")
    s.add_argument("--level", type=int, default=None)
    s.add_argument("--target", default=None)
    s.add_argument("--paths", type=int, default=100000)
    s.add_argument("--kernel", choices=kernel.KERNELS, default="standard")
    s.set_defaults(func=cmd_simulate)

    for name, func, helptext in (("hitting", cmd_hitting, "rho_{x,y}"),
                                 ("green", cmd_green, "G(x, y)")):
        s = sub.add_parser(name, parents=[_common()], help=helptext)
        s.add_argument("x")
        s.add_argument("y")
        s.set_defaults(func=func)

    s = sub.add_parser("kernel", parents=[_common()], help="K(z, y) for a finite or boundary y")
    s.add_argument("z")
    s.add_argument("target")
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_kernel)

    s = sub.add_parser("metric", parents=[_common()], help="truncated Martin distance")
    s.add_argument("x")
    s.add_argument("y")
    s.add_argument("--r", type=float, default=0.5)
    s.add_argument("--N", type=int, default=8)
    s.add_argument("--kernel-tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_metric)

    s = sub.add_parser("harmonic", parents=[_common()], help="h_i at a finite or boundary word")
    s.add_argument("x")
    s.add_argument("--i", type=int, choices=(1, 2, 3), default=1)
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_harmonic)

    s = sub.add_parser("gasket", parents=[_common()], help="SVG of h_i on the gasket")
    s.add_argument("--depth", type=int, default=4)
    s.add_argument("--color-by", type=int, choices=(1, 2, 3), default=1)
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_gasket)

    s = sub.add_parser("graph-export", parents=[_common()], help="DOT export of the level graph")
    s.add_argument("--n", type=int, default=2)
    s.set_defaults(func=cmd_graph_export)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        args.func(args)
    except InvariantFailure as e:
        print(f"invariant failure: {e}", file=sys.stderr)
        return 1
    except (recursion.RecursionCheckError, ArithmeticError) as e:
        print(f"invariant failure: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
