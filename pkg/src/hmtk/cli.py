"""Command-line interface: ``hmtk <subcommand> ...``.

Exit codes: 0 success, 1 validation or axiom failure, 2 usage, IO or parse
error.
"""
from __future__ import annotations

import argparse
import ast
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .diagnostics import (GeometryConfig, default_probes, equiv_experiment, geometry,
                          upper_dimension)
from .dyadic import build_tree, level_counts, verify_cube_axioms
from .errors import HmtkError, ParseError
from .generators import KINDS, GeneratorSpec, generate
from .norms import carleson_norm, lip_norm
from .space import doubling_profile, validate_space
from .wavelets import analyze, basis_checks, build_mra, fit_decay

log = logging.getLogger("hmtk")

_FUNCS = {"sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
          "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh, "minimum": np.minimum,
          "maximum": np.maximum, "where": np.where}
_CONSTS = {"pi": np.pi, "e": np.e}
_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
          ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.Mod,
          ast.USub, ast.UAdd, ast.Compare, ast.Lt, ast.LtE, ast.Gt, ast.GtE)


def eval_expression(expr: str, space) -> np.ndarray:
    """Evaluate a whitelisted arithmetic expression pointwise.

    Names: ``x``, ``y`` (first two coordinates), ``d`` (distance to point 0),
    ``i`` (point id), ``w`` (point weight), ``pi``, ``e`` and the functions in
    ``_FUNCS``.
    """
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse expression: {exc.msg}", f"--fn {expr!r}") from None
    names = dict(_CONSTS)
    names.update(i=np.arange(space.n, dtype=float), d=np.array(space.dist[0]),
                 w=np.array(space.weight))
    if space.coords is not None:
        names["x"] = np.array(space.coords[:, 0])
        if space.coords.shape[1] > 1:
            names["y"] = np.array(space.coords[:, 1])
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise ParseError(f"disallowed syntax {type(node).__name__}", f"--fn {expr!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name)
                                               and node.func.id in _FUNCS):
            raise ParseError("only whitelisted functions may be called", f"--fn {expr!r}")
        if isinstance(node, ast.Name) and node.id not in names and node.id not in _FUNCS:
            raise ParseError(f"unknown name {node.id!r}", f"--fn {expr!r}")
    with np.errstate(all="ignore"):
        out = eval(compile(tree, "<fn>", "eval"), {"__builtins__": {}}, {**names, **_FUNCS})
    out = np.broadcast_to(np.asarray(out, dtype=float), (space.n,)).copy()
    if not np.all(np.isfinite(out)):
        raise HmtkError(f"expression {expr!r} is not finite at every point")
    return out


def _emit(doc: dict, out: str | None) -> None:
    if out:
        io.write_json(doc, out)
    else:
        sys.stdout.write(io.dumps(doc))


def _tree_args(p):
    p.add_argument("--delta", type=float)
    p.add_argument("--c0", type=float)
    p.add_argument("--C0", type=float)


def _geometry_config(args) -> GeometryConfig:
    return GeometryConfig(lower_min=args.lower_min, upper_max=args.upper_max,
                          reg_const_max=args.reg_max, wavelet_spread_max=args.spread_max)


def _geometry_args(p):
    d = GeometryConfig()
    p.add_argument("--lower-min", type=float, default=d.lower_min)
    p.add_argument("--upper-max", type=float, default=d.upper_max)
    p.add_argument("--reg-max", type=float, default=d.reg_const_max)
    p.add_argument("--spread-max", type=float, default=d.wavelet_spread_max)


def cmd_generate(args) -> int:
    spec = GeneratorSpec(args.kind, args.n, args.spacing, args.exponent)
    space = generate(spec)
    io.save(space, args.out)
    log.info("wrote %s (%d points)", args.out, space.n)
    return 0


def cmd_validate(args) -> int:
    space = _load_space(args)
    rep = validate_space(space)
    prof = doubling_profile(space)
    _emit({"space": space.name, "n": space.n, "a0": rep.a0, "a0_exact": rep.exact,
           "symmetric": rep.symmetric, "separated": rep.separated,
           "positive_weights": rep.positive_weights, "note": rep.note,
           "c_mu": prof.c_mu, "omega": prof.omega,
           "diameter": space.diameter, "min_distance": space.min_distance}, args.out)
    return 0


def _load_space(args):
    if getattr(args, "csv", None):
        return io.read_csv_space(args.csv, args.metric, args.param)
    if not args.space:
        raise ParseError("no space given", "--space")
    return io.load_space(args.space)


def cmd_cubes(args) -> int:
    space = _load_space(args)
    tree = build_tree(space, args.delta, args.c0, args.C0)
    if args.verify:
        rep = verify_cube_axioms(space, tree)
        sys.stderr.write(f"axioms: {'ok' if rep.ok else 'VIOLATED'}; levels "
                         f"{level_counts(tree)}\n")
        if not rep.ok:
            return 1
    io.save(tree, args.out)
    return 0


def cmd_wavelets(args) -> int:
    tree = io.load(args.tree)
    if not hasattr(tree, "levels"):
        raise ParseError("expected a tree document", args.tree)
    basis = build_mra(tree.space, tree)
    if args.fit_decay:
        basis.decay_fit = fit_decay(basis)
    io.save(basis, args.out, binary=not args.plain)
    checks = basis_checks(basis)
    sys.stderr.write(f"basis: {basis.size} functions, gram deviation "
                     f"{checks['gram_max_deviation']:.3g}\n")
    return 0


def _function(args, space, basis, theta):
    if args.fn_file:
        return "file:" + Path(args.fn_file).name, io.read_function_csv(args.fn_file, space.n)
    if args.probe:
        probes = dict(default_probes(space, basis, theta, upper_dimension(space)))
        if args.probe not in probes:
            raise ParseError(f"unknown probe {args.probe!r}; choose from {sorted(probes)}",
                             "--probe")
        return args.probe, probes[args.probe]
    expr = args.fn or "sin(d)"
    return expr, eval_expression(expr, space)


def cmd_norm(args) -> int:
    basis = io.load(args.basis)
    if not hasattr(basis, "keys"):
        raise ParseError("expected a basis document", args.basis)
    space = basis.space
    if args.space:
        other = io.load_space(args.space)
        if other.n != space.n or not np.array_equal(other.dist, space.dist):
            raise HmtkError("--space does not match the space stored with the basis")
    name, f = _function(args, space, basis, args.theta)
    coeffs = analyze(f, basis)
    lip = lip_norm(f, space, args.theta, threads=args.threads)
    car = carleson_norm(coeffs, basis.tree, args.theta)
    ratio = car.value / lip.value if lip.value > 0 else None
    _emit({"space": space.name, "function": name, "theta": args.theta,
           "lip": lip.value, "carleson": car.value, "ratio": ratio,
           "degenerate": lip.value == 0.0,
           "witnesses": {"lip": lip.witness, "carleson": car.witness}}, args.report)
    return 0


def cmd_equiv(args) -> int:
    space = _load_space(args)
    probes = None
    if args.fn:
        probes = [(e, eval_expression(e, space)) for e in args.fn]
    rep = equiv_experiment(space, args.theta, probes, delta=args.delta, c0=args.c0,
                           C0=args.C0, threads=args.threads,
                           with_geometry=not args.no_geometry,
                           config=_geometry_config(args))
    _emit(rep, args.out)
    return 0


def cmd_geometry(args) -> int:
    space = _load_space(args)
    tree = build_tree(space, args.delta, args.c0, args.C0)
    basis = build_mra(space, tree)
    geo = geometry(space, tree, basis, args.theta, _geometry_config(args))
    geo = {"space": space.name, "theta": args.theta, **geo,
           "verdicts": {k: geo[k]["pass"] for k in ("lower", "upper", "ahlfors")}}
    _emit(geo, args.out)
    return 0


def cmd_report(args) -> int:
    merged, summary = {}, {}
    for path in args.inputs:
        doc = io.read_json(path)
        key = Path(path).stem
        merged[key] = doc
        for name, ok in (doc.get("verdicts") or {}).items():
            summary[f"{key}.{name}"] = bool(ok)
    _emit({"documents": merged, "summary": summary,
           "all_pass": all(summary.values()) if summary else None}, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hmtk", description="Dyadic cubes, Haar-type wavelets "
                                "and Lipschitz/Carleson norms on finite metric-measure spaces.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a canonical example space")
    g.add_argument("--kind", required=True, choices=KINDS)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--spacing", type=float)
    g.add_argument("--exponent", type=float)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    def space_args(q):
        q.add_argument("--space")
        q.add_argument("--csv", help="CSV with id, weight, coord... rows")
        q.add_argument("--metric", default="euclidean",
                       choices=("euclidean", "snowflake", "power"))
        q.add_argument("--param", type=float)

    v = sub.add_parser("validate", help="check axioms, report A0 and doubling")
    space_args(v)
    v.add_argument("--out")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("cubes", help="build the dyadic cube tree")
    space_args(c)
    _tree_args(c)
    c.add_argument("--out", required=True)
    c.add_argument("--verify", action="store_true")
    c.set_defaults(func=cmd_cubes)

    w = sub.add_parser("wavelets", help="build the wavelet basis of a tree")
    w.add_argument("--tree", required=True)
    w.add_argument("--out", required=True)
    w.add_argument("--fit-decay", action="store_true")
    w.add_argument("--plain", action="store_true", help="store values as JSON numbers")
    w.set_defaults(func=cmd_wavelets)

    n = sub.add_parser("norm", help="Lipschitz and Carleson norms of one function")
    n.add_argument("--space")
    n.add_argument("--basis", required=True)
    n.add_argument("--theta", type=float, required=True)
    src = n.add_mutually_exclusive_group()
    src.add_argument("--fn", help="expression in x, y, d, i, w")
    src.add_argument("--fn-file", help="CSV of id,value")
    src.add_argument("--probe", help="name of a built-in probe")
    n.add_argument("--threads", type=int)
    n.add_argument("--report")
    n.set_defaults(func=cmd_norm)

    e = sub.add_parser("equiv", help="run the norm-equivalence experiment")
    space_args(e)
    _tree_args(e)
    _geometry_args(e)
    e.add_argument("--theta", type=float, required=True)
    e.add_argument("--fn", action="append", help="probe expression (repeatable); "
                   "replaces the default probe suite")
    e.add_argument("--threads", type=int)
    e.add_argument("--no-geometry", action="store_true")
    e.add_argument("--out")
    e.set_defaults(func=cmd_equiv)

    q = sub.add_parser("geometry", help="lower, upper and Ahlfors classifiers")
    space_args(q)
    _tree_args(q)
    _geometry_args(q)
    q.add_argument("--theta", type=float, default=0.3)
    q.add_argument("--out")
    q.set_defaults(func=cmd_geometry)

    r = sub.add_parser("report", help="merge JSON outputs with a pass/fail summary")
    r.add_argument("inputs", nargs="+")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ParseError as exc:
        sys.stderr.write(f"hmtk: error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"hmtk: error: {exc}\n")
        return 2
    except HmtkError as exc:
        sys.stderr.write(f"hmtk: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
