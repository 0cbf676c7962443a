"""JSON and CSV persistence for spaces, trees and bases.

Every document carries ``"type"`` (``space``, ``tree`` or ``basis``) and a
format version.  Reals are written with 17 significant digits, which is
enough for an exact round trip of any double.  Distances of coordinate-based
spaces are not stored; they are recomputed on load with the same code that
generated them, so a reloaded space is bit-identical.
"""
from __future__ import annotations

import base64
import csv
import json
import math
from pathlib import Path

import numpy as np

from .dyadic import DyadicTree, Level
from .errors import ParseError, ValidationError
from .generators import pairwise_distances
from .space import FiniteHomSpace, validate_space
from .wavelets import DecayFit, WaveletBasis

FORMAT_VERSION = 1
METRIC_KINDS = ("euclidean", "snowflake", "power", "matrix")


# ---------------------------------------------------------------- writer

def _fmt_float(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    s = "%.17g" % v
    if not any(c in s for c in ".eE"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int, out: list) -> None:
    pad = " " * (indent * (level + 1)) if indent else ""
    end = " " * (indent * level) if indent else ""
    nl = "\n" if indent else ""
    sep = ": " if indent else ":"
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{" + nl)
        for i, (k, v) in enumerate(obj.items()):
            out.append(pad + json.dumps(str(k)) + sep)
            _encode(v, indent, level + 1, out)
            out.append(("," if i < len(obj) - 1 else "") + nl)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = obj.tolist() if isinstance(obj, np.ndarray) else list(obj)
        if not items:
            out.append("[]")
            return
        flat = all(not isinstance(v, (dict, list, tuple)) for v in items)
        if flat or not indent:
            out.append("[")
            for i, v in enumerate(items):
                if i:
                    out.append(", " if indent else ",")
                _encode(v, indent, level + 1, out)
            out.append("]")
            return
        out.append("[" + nl)
        for i, v in enumerate(items):
            out.append(pad)
            _encode(v, indent, level + 1, out)
            out.append(("," if i < len(items) - 1 else "") + nl)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 1) -> str:
    """JSON text with every float at 17 significant digits; deterministic."""
    out: list = []
    _encode(obj, indent, 0, out)
    return "".join(out) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}", str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}",
                         f"{path}: line {exc.lineno}, column {exc.colno}") from None


# ---------------------------------------------------------------- field access

def _field(doc, key, ctx, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError(f"missing field '{key}'", f"field {ctx}{key}")
    v = doc[key]
    if kind is not None and not isinstance(v, kind):
        raise ParseError(f"field '{key}' has the wrong type ({type(v).__name__})",
                         f"field {ctx}{key}")
    return v


def _number(v, ctx) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ParseError("expected a number", f"field {ctx}")
    try:
        return float(v)
    except ValueError:
        raise ParseError(f"expected a number, got {v!r}", f"field {ctx}") from None


def _encode_array(arr: np.ndarray, binary: bool) -> dict:
    arr = np.asarray(arr, dtype=float)
    if binary:
        data = base64.b64encode(arr.astype("<f8").tobytes()).decode("ascii")
        return {"encoding": "base64-f8le", "shape": list(arr.shape), "data": data}
    return {"encoding": "json", "shape": list(arr.shape), "data": arr.ravel().tolist()}


def _decode_array(doc, ctx) -> np.ndarray:
    enc = _field(doc, "encoding", ctx, str)
    shape = [int(s) for s in _field(doc, "shape", ctx, list)]
    data = _field(doc, "data", ctx)
    if enc == "base64-f8le":
        try:
            raw = base64.b64decode(data, validate=True)
        except (ValueError, TypeError):
            raise ParseError("invalid base64 payload", f"field {ctx}data") from None
        arr = np.frombuffer(raw, dtype="<f8").astype(float)
    elif enc == "json":
        arr = np.array([_number(v, f"{ctx}data[{i}]") for i, v in enumerate(data)])
    else:
        raise ParseError(f"unknown array encoding {enc!r}", f"field {ctx}encoding")
    if arr.size != int(np.prod(shape)):
        raise ParseError(f"array has {arr.size} values, shape {shape} needs {int(np.prod(shape))}",
                         f"field {ctx}data")
    return arr.reshape(shape)


# ---------------------------------------------------------------- spaces

def space_to_dict(space: FiniteHomSpace) -> dict:
    metric = dict(space.metric)
    kind = metric.get("kind", "matrix")
    if space.coords is None or kind == "matrix":
        kind = "matrix"
    points = []
    for i in range(space.n):
        p = {"id": i}
        if space.coords is not None:
            p["coord"] = space.coords[i].tolist()
        p["weight"] = float(space.weight[i])
        points.append(p)
    m = {"kind": kind}
    if "param" in metric and kind != "matrix":
        m["param"] = float(metric["param"])
    if kind == "matrix":
        m["matrix"] = space.dist.ravel().tolist()
    return {"type": "space", "version": FORMAT_VERSION, "name": space.name,
            "points": points, "metric": m}


def space_from_dict(doc: dict, *, validate: bool = True, ctx: str = "") -> FiniteHomSpace:
    name = str(doc.get("name", "space"))
    points = _field(doc, "points", ctx, list)
    if not points:
        raise ParseError("space has no points", f"field {ctx}points")
    ids, weights, coords = [], [], []
    for i, p in enumerate(points):
        pc = f"{ctx}points[{i}]."
        ids.append(int(_number(_field(p, "id", pc), pc + "id")))
        weights.append(_number(_field(p, "weight", pc), pc + "weight"))
        if "coord" in p:
            c = p["coord"]
            c = c if isinstance(c, list) else [c]
            coords.append([_number(v, f"{pc}coord[{j}]") for j, v in enumerate(c)])
    if sorted(ids) != list(range(len(points))):
        raise ParseError("point ids must be 0..n-1", f"field {ctx}points[].id")
    order = np.argsort(ids)
    weight = np.array(weights)[order]
    metric = _field(doc, "metric", ctx, dict)
    kind = _field(metric, "kind", f"{ctx}metric.", str)
    if kind not in METRIC_KINDS:
        raise ParseError(f"unknown metric kind {kind!r}", f"field {ctx}metric.kind")
    n = len(points)
    coord_arr = None
    if coords:
        if len(coords) != n or len({len(c) for c in coords}) != 1:
            raise ParseError("every point needs a coordinate of the same length",
                             f"field {ctx}points[].coord")
        coord_arr = np.array(coords)[order]
    if kind == "matrix":
        flat = _field(metric, "matrix", f"{ctx}metric.", list)
        if len(flat) != n * n:
            raise ParseError(f"matrix has {len(flat)} entries, need {n * n}",
                             f"field {ctx}metric.matrix")
        dist = np.array([_number(v, f"{ctx}metric.matrix[{j}]")
                         for j, v in enumerate(flat)]).reshape(n, n)
        dist = dist[np.ix_(order, order)]
        met = {"kind": "matrix"}
    else:
        if coord_arr is None:
            raise ParseError(f"metric kind {kind!r} needs point coordinates",
                             f"field {ctx}points[].coord")
        param = metric.get("param")
        if kind != "euclidean":
            param = _number(_field(metric, "param", f"{ctx}metric."), f"{ctx}metric.param")
        dist = pairwise_distances(coord_arr, kind, param)
        met = {"kind": kind} if param is None else {"kind": kind, "param": float(param)}
    space = FiniteHomSpace(dist, weight, coord_arr, name=name, metric=met)
    if validate:
        validate_space(space)
    return space


def read_csv_space(path, metric: str = "euclidean", param: float | None = None,
                   name: str | None = None) -> FiniteHomSpace:
    """One point per row: ``id, weight, coord...``; a header row is optional."""
    rows = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or all(not c.strip() for c in row):
                    continue
                if lineno == 1 and not _looks_numeric(row[0]):
                    continue
                if len(row) < 3:
                    raise ParseError("expected id, weight and at least one coordinate",
                                     f"{path}: line {lineno}")
                try:
                    vals = [float(c) for c in row]
                except ValueError:
                    raise ParseError("non-numeric field", f"{path}: line {lineno}") from None
                rows.append(vals)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}", str(path)) from None
    if not rows:
        raise ParseError("no points", str(path))
    doc = {"name": name or Path(path).stem,
           "points": [{"id": int(r[0]), "weight": r[1], "coord": r[2:]} for r in rows],
           "metric": {"kind": metric} if param is None else {"kind": metric, "param": param}}
    return space_from_dict(doc)


def read_function_csv(path, n: int) -> np.ndarray:
    """Per-point values from ``id, value`` rows (header optional)."""
    vals = np.full(n, np.nan)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or all(not c.strip() for c in row):
                    continue
                if lineno == 1 and not _looks_numeric(row[0]):
                    continue
                if len(row) < 2:
                    raise ParseError("expected id, value", f"{path}: line {lineno}")
                try:
                    i, v = int(row[0]), float(row[1])
                except ValueError:
                    raise ParseError("non-numeric field", f"{path}: line {lineno}") from None
                if not 0 <= i < n:
                    raise ParseError(f"point id {i} outside 0..{n - 1}", f"{path}: line {lineno}")
                vals[i] = v
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}", str(path)) from None
    missing = np.flatnonzero(np.isnan(vals))
    if missing.size:
        raise ParseError(f"no value for point {int(missing[0])}", str(path))
    return vals


def _looks_numeric(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------- trees and bases

def tree_to_dict(tree: DyadicTree) -> dict:
    levels = []
    for lev in tree.levels:
        levels.append({"k": lev.k, "centers": lev.centers.tolist(),
                       "members": [m.tolist() for m in lev.members],
                       "parent": None if lev.parent is None else lev.parent.tolist(),
                       "new_center": lev.new_center.astype(int).tolist()})
    return {"type": "tree", "version": FORMAT_VERSION,
            "params": {"delta": tree.delta, "c0": tree.c0, "C0": tree.C0, "a0": tree.a0},
            "space": space_to_dict(tree.space), "levels": levels}


def tree_from_dict(doc: dict, space: FiniteHomSpace | None = None) -> DyadicTree:
    if space is None:
        space = space_from_dict(_field(doc, "space", "", dict), ctx="space.")
    params = _field(doc, "params", "", dict)
    p = {k: _number(_field(params, k, "params."), f"params.{k}") for k in ("delta", "c0", "C0", "a0")}
    levels = []
    for i, lv in enumerate(_field(doc, "levels", "", list)):
        ctx = f"levels[{i}]."
        try:
            members = [np.array(m, dtype=int) for m in _field(lv, "members", ctx, list)]
            parent = lv.get("parent")
            levels.append(Level(int(_field(lv, "k", ctx)),
                                np.array(_field(lv, "centers", ctx, list), dtype=int),
                                members,
                                None if parent is None else np.array(parent, dtype=int),
                                np.array(_field(lv, "new_center", ctx, list), dtype=bool)))
        except (TypeError, ValueError):
            raise ParseError("malformed level entry", f"field {ctx[:-1]}") from None
    if not levels:
        raise ParseError("tree has no levels", "field levels")
    return DyadicTree(space, p["delta"], p["c0"], p["C0"], p["a0"], levels)


def basis_to_dict(basis: WaveletBasis, *, binary: bool = True) -> dict:
    doc = {"type": "basis", "version": FORMAT_VERSION, "tree": tree_to_dict(basis.tree),
           "keys": [list(k) for k in basis.keys],
           "values": _encode_array(basis.values, binary)}
    if basis.decay_fit is not None:
        doc["decay_fit"] = basis.decay_fit.as_dict()
    return doc


def basis_from_dict(doc: dict) -> WaveletBasis:
    tree = tree_from_dict(_field(doc, "tree", "", dict))
    keys = []
    for i, k in enumerate(_field(doc, "keys", "", list)):
        if not (isinstance(k, list) and len(k) == 3 and k[0] in ("father", "mother")):
            raise ParseError("basis key must be [family, level, index]", f"field keys[{i}]")
        keys.append((k[0], int(k[1]), int(k[2])))
    values = _decode_array(_field(doc, "values", "", dict), "values.")
    if values.shape != (tree.space.n, len(keys)):
        raise ParseError(f"values shape {values.shape} does not match "
                         f"({tree.space.n}, {len(keys)})", "field values.shape")
    fit = None
    if "decay_fit" in doc:
        d = doc["decay_fit"]
        fit = DecayFit(float(d["nu_hat"]), float(d["s"]), float(d["C_hat"]),
                       {int(k): float(v) for k, v in d["C_by_level"].items()},
                       [(float(h["eta"]), float(h["C"])) for h in d["holder"]])
    return WaveletBasis(tree, keys, values, fit)


# ---------------------------------------------------------------- dispatch

def save(obj, path, *, binary: bool = True) -> None:
    if isinstance(obj, FiniteHomSpace):
        doc = space_to_dict(obj)
    elif isinstance(obj, DyadicTree):
        doc = tree_to_dict(obj)
    elif isinstance(obj, WaveletBasis):
        doc = basis_to_dict(obj, binary=binary)
    else:
        raise TypeError(f"cannot save {type(obj).__name__}")
    write_json(doc, path)


def load(path):
    """Read a space, tree or basis document (dispatching on ``"type"``)."""
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", str(path))
    kind = doc.get("type", "space" if "points" in doc else None)
    try:
        if kind == "space":
            return space_from_dict(doc)
        if kind == "tree":
            return tree_from_dict(doc)
        if kind == "basis":
            return basis_from_dict(doc)
    except ParseError as exc:
        ctx = f"{path}: {exc.context}" if exc.context else str(path)
        raise ParseError(exc.message, ctx) from None
    raise ParseError(f"unknown document type {kind!r}", f"{path}: field type")


def load_space(path) -> FiniteHomSpace:
    obj = load(path)
    if isinstance(obj, FiniteHomSpace):
        return obj
    if isinstance(obj, (DyadicTree, WaveletBasis)):
        return obj.space
    raise ValidationError("not a space document")
