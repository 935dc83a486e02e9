"""Conversion between in-memory values and their JSON / CSV encodings.

Matrices are {"rows", "cols", "data"} with row-major data; projectors add
"rank". Flags are {"signature", "projectors"}. Reals are written with 17
significant digits so doubles round-trip exactly, and non-finite values
become null. Everything here works on Python objects and strings; reading
and writing files is left to the command line front end.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any

import numpy as np

from .errors import DimensionMismatch, ValidationError
from .eigtrack import MatrixCurve, TrackResult, polynomial_curve, sampled_curve
from .fields import SkewPolynomial, flag_field, grassmann_field
from .flag import FlagPoint, FlagTangent, as_signature, make_flag, make_flag_tangent
from .grassmann import GrassTangent, Projector, StiefelFrame, make_frame, make_projector, make_tangent
from .linalg import TOL_CONSTRAINT, Array, check_skew
from .vectorfield import VectorField


# -- text encoding -------------------------------------------------------------------

def format_real(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    if x == 0.0:
        return "0.0"
    s = format(x, ".17g")
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def dumps(obj: Any, indent: int | None = 2) -> str:
    """JSON text with reals at 17 significant digits; deterministic key order as given."""
    pad = "" if indent is None else " " * indent

    def enc(o, level: int) -> str:
        if o is None:
            return "null"
        if isinstance(o, (bool, np.bool_)):
            return "true" if o else "false"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return format_real(o)
        if isinstance(o, str):
            return _enc_str(o)
        if isinstance(o, np.ndarray):
            return enc(o.tolist(), level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{_enc_str(str(k))}: {enc(v, level + 1)}" for k, v in o.items()]
            return _join(items, "{", "}", level)
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(isinstance(v, (int, float, np.number, bool)) or v is None for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return _join([enc(v, level + 1) for v in o], "[", "]", level)
        raise TypeError(f"cannot encode {type(o).__name__}")

    def _join(items, open_, close, level):
        if indent is None:
            return open_ + ", ".join(items) + close
        inner = "\n" + pad * (level + 1)
        return open_ + inner + ("," + inner).join(items) + "\n" + pad * level + close

    return enc(obj, 0)


def _enc_str(s: str) -> str:
    return json.dumps(s)


# -- matrices ------------------------------------------------------------------------------

def matrix_to_json(a: Array, rank: int | None = None) -> dict:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    out = {"rows": int(a.shape[0]), "cols": int(a.shape[1]), "data": [float(v) for v in a.ravel()]}
    if rank is not None:
        out["rank"] = int(rank)
    return out


def matrix_from_json(obj: Any, what: str = "matrix") -> Array:
    if not isinstance(obj, dict) or not {"rows", "cols", "data"} <= obj.keys():
        raise ValidationError(f"{what}: expected an object with rows, cols and data")
    rows, cols, data = obj["rows"], obj["cols"], obj["data"]
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 1 or cols < 1:
        raise ValidationError(f"{what}: rows and cols must be positive integers")
    if not isinstance(data, list) or len(data) != rows * cols:
        raise DimensionMismatch(f"{what}: {rows}x{cols} needs {rows * cols} entries")
    try:
        a = np.array(data, dtype=float).reshape(rows, cols)
    except (TypeError, ValueError):
        raise ValidationError(f"{what}: data must be real numbers") from None
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{what}: data must be finite")
    return a


def square_from_json(obj: Any, what: str = "matrix") -> Array:
    a = matrix_from_json(obj, what)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{what}: expected a square matrix, got {a.shape}")
    return a


def skew_from_json(obj: Any, tol: float = TOL_CONSTRAINT, what: str = "skew matrix") -> Array:
    return check_skew(square_from_json(obj, what), tol)


def projector_to_json(p: Projector) -> dict:
    return matrix_to_json(p.mat, p.q)


def projector_from_json(obj: Any, tol: float = TOL_CONSTRAINT) -> Projector:
    mat = square_from_json(obj, "projector")
    rank = obj.get("rank")
    if rank is not None and not isinstance(rank, int):
        raise ValidationError("projector: rank must be an integer")
    return make_projector(mat, rank, tol)


def frame_from_json(obj: Any, tol: float = TOL_CONSTRAINT) -> StiefelFrame:
    return make_frame(matrix_from_json(obj, "frame"), tol)


def grass_tangent_from_json(obj: Any, base: Projector, tol: float = TOL_CONSTRAINT) -> GrassTangent:
    mat = square_from_json(obj, "tangent")
    if mat.shape != base.mat.shape:
        raise DimensionMismatch(f"tangent {mat.shape} vs projector {base.mat.shape}")
    return make_tangent(base, mat, tol)


# -- flags -------------------------------------------------------------------------------

def flag_to_json(p: FlagPoint) -> dict:
    return {"signature": list(p.sig.q),
            "projectors": [matrix_to_json(m, q) for m, q in zip(p.mats, p.sig.q)]}


def flag_from_json(obj: Any, tol: float = TOL_CONSTRAINT) -> FlagPoint:
    if not isinstance(obj, dict) or "signature" not in obj or "projectors" not in obj:
        raise ValidationError("flag: expected an object with signature and projectors")
    sig = obj["signature"]
    if not isinstance(sig, list) or not all(isinstance(v, int) for v in sig):
        raise ValidationError("flag: signature must be a list of integers")
    projs = obj["projectors"]
    if not isinstance(projs, list) or len(projs) != len(sig):
        raise DimensionMismatch(f"flag: {len(sig)} blocks need {len(sig)} projectors")
    arrs = [square_from_json(m, f"projector {i}") for i, m in enumerate(projs)]
    if len({a.shape for a in arrs}) != 1:
        raise DimensionMismatch("flag: projectors differ in size")
    for i, m in enumerate(projs):
        if "rank" in m and m["rank"] != sig[i]:
            raise ValidationError(f"flag: projector {i} rank {m['rank']} != signature {sig[i]}",
                                  block=i)
    return make_flag(np.stack(arrs), as_signature(sig), tol)


def flag_tangent_to_json(d: FlagTangent) -> dict:
    return {"deltas": [matrix_to_json(m) for m in d.deltas]}


def flag_tangent_from_json(obj: Any, base: FlagPoint, tol: float = TOL_CONSTRAINT) -> FlagTangent:
    items = obj.get("deltas") if isinstance(obj, dict) else obj
    if not isinstance(items, list) or len(items) != base.sig.r:
        raise DimensionMismatch(f"flag tangent: expected a list of {base.sig.r} matrices")
    mats = [square_from_json(m, f"delta {i}") for i, m in enumerate(items)]
    if any(m.shape != (base.n, base.n) for m in mats):
        raise DimensionMismatch(f"flag tangent: matrices must be {base.n}x{base.n}")
    return make_flag_tangent(base, np.stack(mats), tol)


# -- fields ------------------------------------------------------------------------------

def _stack(obj, what: str, r: int, n: int) -> Array:
    if not isinstance(obj, list) or len(obj) != r:
        raise DimensionMismatch(f"field: {what} needs {r} matrices")
    mats = np.stack([square_from_json(m, f"{what}[{i}]") for i, m in enumerate(obj)])
    if mats.shape[1:] != (n, n):
        raise DimensionMismatch(f"field: {what} matrices must be {n}x{n}")
    return mats


def polynomial_from_json(obj: Any, r: int, n: int, tol: float = TOL_CONSTRAINT) -> SkewPolynomial:
    """Field JSON: {"kind": "fundamental", "u": skew} or {"kind": "polynomial", "s0", ...}."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValidationError("field: expected an object with a kind")
    kind = obj["kind"]
    if kind == "fundamental":
        u = skew_from_json(obj.get("u"), tol, "field u")
        if u.shape != (n, n):
            raise DimensionMismatch(f"field: u must be {n}x{n}")
        return SkewPolynomial(u)
    if kind != "polynomial":
        raise ValidationError(f"field: unknown kind {kind!r}")
    s0 = skew_from_json(obj.get("s0"), tol, "field s0")
    if s0.shape != (n, n):
        raise DimensionMismatch(f"field: s0 must be {n}x{n}")
    lin = _stack(obj["lin"], "lin", r, n) if "lin" in obj else None
    qc = qd = None
    if "quad_c" in obj or "quad_d" in obj:
        qc = _stack(obj.get("quad_c"), "quad_c", r, n)
        qd = _stack(obj.get("quad_d"), "quad_d", r, n)
    return SkewPolynomial(s0, lin, qc, qd)


def polynomial_to_json(poly: SkewPolynomial) -> dict:
    if poly.lin is None and poly.quad_c is None:
        return {"kind": "fundamental", "u": matrix_to_json(poly.s0)}
    out = {"kind": "polynomial", "s0": matrix_to_json(poly.s0)}
    if poly.lin is not None:
        out["lin"] = [matrix_to_json(m) for m in poly.lin]
    if poly.quad_c is not None:
        out["quad_c"] = [matrix_to_json(m) for m in poly.quad_c]
        out["quad_d"] = [matrix_to_json(m) for m in poly.quad_d]
    return out


def flag_field_from_json(obj: Any, base: FlagPoint, tol: float = TOL_CONSTRAINT) -> VectorField:
    return flag_field(polynomial_from_json(obj, base.sig.r, base.n, tol))


def grassmann_field_from_json(obj: Any, base: Projector, tol: float = TOL_CONSTRAINT) -> VectorField:
    return grassmann_field(polynomial_from_json(obj, 1, base.n, tol))


# -- curves and tracking output --------------------------------------------------------------

def curve_from_json(obj: Any, tol: float = TOL_CONSTRAINT) -> MatrixCurve:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValidationError("curve: expected an object with a kind")
    if obj["kind"] == "polynomial":
        coeffs = obj.get("coeffs")
        if not isinstance(coeffs, list) or not coeffs:
            raise ValidationError("curve: coeffs must be a non-empty list")
        mats = [square_from_json(m, f"coeffs[{i}]") for i, m in enumerate(coeffs)]
        if len({m.shape for m in mats}) != 1:
            raise DimensionMismatch("curve: coefficient sizes differ")
        return polynomial_curve(np.stack(mats), tol=tol)
    if obj["kind"] == "samples":
        xs, mats = obj.get("xs"), obj.get("mats")
        if not isinstance(xs, list) or not isinstance(mats, list):
            raise ValidationError("curve: samples need xs and mats lists")
        arr = [square_from_json(m, f"mats[{i}]") for i, m in enumerate(mats)]
        if len({m.shape for m in arr}) != 1:
            raise DimensionMismatch("curve: sample sizes differ")
        return sampled_curve(xs, np.stack(arr), tol=tol)
    raise ValidationError(f"curve: unknown kind {obj['kind']!r}")


def curve_to_json(c: MatrixCurve) -> dict:
    if c.kind == "polynomial":
        return {"kind": "polynomial", "coeffs": [matrix_to_json(m) for m in c.coeffs]}
    return {"kind": "samples", "xs": [float(x) for x in c.xs],
            "mats": [matrix_to_json(m) for m in c.mats]}


def track_to_csv(res: TrackResult) -> str:
    """Columns x, q_ij (row-major), residual, in_domain."""
    n = res.q0.shape[0]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x"] + [f"q_{i}_{j}" for i in range(n) for j in range(n)]
               + ["residual", "in_domain"])
    for x, q, r, ok in zip(res.xs, res.frames, res.residuals, res.in_domain):
        vals = q.ravel() if q is not None else np.full(n * n, np.nan)
        w.writerow([format_real(x)] + [_csv_real(v) for v in vals]
                   + [_csv_real(r), int(bool(ok))])
    return buf.getvalue()


def _csv_real(v: float) -> str:
    s = format_real(v)
    return "nan" if s == "null" else s


def track_to_json(res: TrackResult) -> dict:
    return {
        "x0": res.x0,
        "signature": list(res.signature),
        "q0": matrix_to_json(res.q0),
        "complete": res.complete,
        "boundary": dict(res.boundary),
        "points": [
            {"x": float(x), "in_domain": bool(ok),
             "frame": matrix_to_json(q) if q is not None else None,
             "residual": float(r)}
            for x, q, r, ok in zip(res.xs, res.frames, res.residuals, res.in_domain)
        ],
    }
