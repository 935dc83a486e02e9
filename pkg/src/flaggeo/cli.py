"""Command line front end: ``flaggeo <group> <command> [options]``.

Inputs are JSON files ("-" reads stdin), outputs go to stdout or --out.
Exit status: 0 success, 1 validation or I/O failure, 2 domain error (the
input is valid but outside the domain of the formula), 3 a verification
suite failed. Errors are written to stderr as one JSON object
{"error": code, "detail": text, "block": i?}.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import jsonio
from .eigtrack import track
from .errors import DomainError, FlagGeoError, ValidationError
from .fields import random_skew_polynomial
from .flag import (
    FlagTangent,
    fiber_representative,
    flag_connection,
    flag_exp,
    flag_geodesic,
    flag_metric,
    flag_sectional,
    local_section_flag,
)
from .grassmann import (
    GrassTangent,
    grassmann_distance,
    grassmann_exp,
    grassmann_holonomy,
    grassmann_log,
    principal_angles,
)
from .homogeneous import bracket_condition, connection_any, curvature_any, flag_array_field, flag_setup, sphere_setup
from .linalg import TOL_CONSTRAINT, DerivConfig, check_orthogonal, random_orthogonal, random_skew, random_symmetric
from .suites import SUITES, random_flag, random_flag_tangent, random_projector, run_all

SCHEMAS = """\
JSON inputs:
  matrix     {"rows": int, "cols": int, "data": [row-major reals]}
  projector  matrix plus {"rank": int}
  flag       {"signature": [ints], "projectors": [matrix, ...]}
  tangent    Grassmann: matrix; flag: {"deltas": [matrix, ...]}
  field      {"kind": "fundamental", "u": skew matrix} or
             {"kind": "polynomial", "s0": skew, "lin": [..], "quad_c": [..], "quad_d": [..]}
  curve      {"kind": "polynomial", "coeffs": [matrix, ...]} or
             {"kind": "samples", "xs": [reals], "mats": [matrix, ...]}
exit status: 0 ok, 1 invalid input or I/O, 2 domain error, 3 verification failed
"""

EXIT_OK, EXIT_INVALID, EXIT_DOMAIN, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class CliConfig:
    tol: float = TOL_CONSTRAINT
    fd_step: float | None = None
    richardson: bool = False
    seed: int = 0
    jobs: int = 1
    out: str | None = None
    format: str = "json"
    special_orthogonal: bool = False
    cluster_tol: float | None = None
    angle_margin: float = 1e-6
    deriv: str = "central_fd"

    def deriv_config(self, mode: str | None = None) -> DerivConfig:
        return DerivConfig(mode=mode or self.deriv, step=self.fd_step, richardson=self.richardson)


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _sig(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad signature {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--tol", type=_positive, help="constraint tolerance for input validation")
    g.add_argument("--fd-step", type=_positive, help="finite-difference step (default scales with eps^(1/3))")
    g.add_argument("--richardson", action="store_true", help="Richardson-extrapolate finite differences")
    g.add_argument("--deriv", choices=("fd", "exact"), default="fd", help="derivative mode for connections")
    g.add_argument("--seed", type=int, help="random seed (fallback: FLAGGEO_SEED, then 0)")
    g.add_argument("--jobs", type=int, default=1, help="worker threads for eigtrack and verify")
    g.add_argument("--out", help="write output to this file instead of stdout")
    g.add_argument("--format", choices=("json", "csv"), default=None)
    g.add_argument("--special-orthogonal", action="store_true",
                   help="force det(Q0) = +1 when tracking")
    g.add_argument("--cluster-tol", type=_positive, help="eigenvalue clustering tolerance")
    g.add_argument("--angle-margin", type=_positive, default=1e-6,
                   help="distance to pi/2 treated as the cut locus when tracking")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    top = _Parser(prog="flaggeo", description="Geometry of flag manifolds and Grassmannians.",
                  epilog=SCHEMAS, formatter_class=argparse.RawDescriptionHelpFormatter)
    groups = top.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def leaf(sub, name, help_, *specs):
        p = sub.add_parser(name, help=help_, parents=[common], epilog=SCHEMAS,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        for args, kw in specs:
            p.add_argument(*args, **kw)
        return p

    req = lambda flag, h: ((flag,), {"required": True, "help": h})  # noqa: E731
    opt = lambda flag, h, **kw: ((flag,), {"help": h, **kw})  # noqa: E731

    g = groups.add_parser("grassmann", help="Grassmannian of projectors").add_subparsers(
        dest="cmd", required=True, parser_class=_Parser)
    leaf(g, "log", "tangent D at P with exp_P(D) = R", req("--p", "projector"), req("--r", "projector"))
    leaf(g, "exp", "exp_P(t D)", req("--p", "projector"), req("--delta", "tangent at P"),
         opt("--t", "scale", type=float, default=1.0))
    leaf(g, "dist", "geodesic distance", req("--p", "projector"), req("--r", "projector"))
    leaf(g, "angles", "principal angles", req("--p", "projector"), req("--r", "projector"))
    leaf(g, "holonomy", "frame over R from the horizontal lift of the geodesic",
         req("--p", "projector"), req("--r", "projector"), req("--u", "frame with U U^T = P"))

    f = groups.add_parser("flag", help="flag manifolds").add_subparsers(
        dest="cmd", required=True, parser_class=_Parser)
    leaf(f, "exp", "exp_P(t D)", req("--p", "flag"), req("--delta", "flag tangent"),
         opt("--t", "scale", type=float, default=1.0))
    leaf(f, "geodesic", "points along t -> exp_P(t D)", req("--p", "flag"),
         req("--delta", "flag tangent"),
         opt("--ts", "comma separated parameters", default="0,0.25,0.5,0.75,1"))
    leaf(f, "metric", "inner product of two tangents", req("--p", "flag"), req("--a", "tangent"),
         opt("--b", "tangent (default: a)"))
    leaf(f, "connection", "covariant derivative of Y along X", req("--p", "flag"),
         req("--x", "field"), req("--y", "field"))
    leaf(f, "curvature", "curvature form <R(X,Y)Y, X>", req("--p", "flag"), req("--x", "tangent"),
         req("--y", "tangent"), opt("--normalized", "divide by the squared area", action="store_true"))
    leaf(f, "section", "frame generating R closest to Q in the sense of holonomy",
         req("--p", "base flag"), req("--r", "target flag"), opt("--q", "frame generating P"))

    h = groups.add_parser("homog", help="generic homogeneous-space engine").add_subparsers(
        dest="cmd", required=True, parser_class=_Parser)
    leaf(h, "bracket-check", "whether [m, m] lies in k",
         opt("--sig", "flag signature, e.g. 1,2", type=_sig),
         opt("--sphere", "sphere in R^n", type=int))
    leaf(h, "connection", "covariant derivative through lifts to so(n)", req("--p", "flag"),
         req("--x", "field"), req("--y", "field"),
         opt("--mode", "lift convention", choices=("translated", "fixed"), default="translated"))
    leaf(h, "curvature", "curvature form from the bracket split", req("--p", "flag"),
         req("--x", "tangent"), req("--y", "tangent"))

    leaf(groups, "eigtrack", "track eigenframes of a symmetric matrix curve",
         req("--curve", "curve"), req("--x0", "anchor abscissa"),
         opt("--grid", "lo:hi:count (write --grid=-1:1:50 for a negative lo)"), opt("--grid-json", "JSON list of abscissae"),
         opt("--q0", "orthogonal eigenframe of S(x0)"),
         opt("--strict", "exit 2 when the cut locus is reached", action="store_true"))
    leaf(groups, "verify", "run verification suites",
         ((("suite",), {"nargs": "?", "default": "all", "choices": ["all", *SUITES]})))
    leaf(groups, "gen", "random valid instances",
         ((("kind",), {"choices": ["projector", "frame", "grass-tangent", "flag", "flag-tangent",
                                   "field", "skew", "orthogonal", "curve"]})),
         opt("--n", "dimension", type=int, default=3), opt("--q", "rank", type=int, default=1),
         opt("--sig", "flag signature", type=_sig), opt("--p", "base point file"),
         opt("--scale", "size of random entries", type=float, default=1.0),
         opt("--degree", "polynomial degree", type=int, default=2))
    return top


# -- helpers ----------------------------------------------------------------------------

def _load(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _config(args) -> CliConfig:
    seed = args.seed
    if seed is None:
        env = os.environ.get("FLAGGEO_SEED")
        try:
            seed = int(env) if env is not None else 0
        except ValueError:
            raise ValidationError(f"FLAGGEO_SEED={env!r} is not an integer") from None
    if args.jobs < 1:
        raise ValidationError("--jobs must be at least 1")
    return CliConfig(
        tol=args.tol or TOL_CONSTRAINT, fd_step=args.fd_step, richardson=args.richardson,
        seed=seed, jobs=args.jobs, out=args.out, format=args.format or "json",
        special_orthogonal=args.special_orthogonal, cluster_tol=args.cluster_tol,
        angle_margin=args.angle_margin, deriv="exact" if args.deriv == "exact" else "central_fd")


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ValidationError(f"{what}: expected comma separated reals") from None


def _grid(args) -> np.ndarray:
    if (args.grid is None) == (args.grid_json is None):
        raise ValidationError("give exactly one of --grid and --grid-json")
    if args.grid is not None:
        parts = args.grid.split(":")
        try:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        except (IndexError, ValueError):
            raise ValidationError("--grid must look like lo:hi:count") from None
        if len(parts) != 3 or count < 1 or not hi >= lo:
            raise ValidationError("--grid must look like lo:hi:count with lo <= hi")
        return np.linspace(lo, hi, count)
    xs = _load(args.grid_json)
    if not isinstance(xs, list) or not all(isinstance(v, (int, float)) for v in xs):
        raise ValidationError("--grid-json must hold a list of reals")
    return np.array(xs, dtype=float)


# -- command handlers ----------------------------------------------------------------------

def _grassmann(args, cfg: CliConfig):
    p = jsonio.projector_from_json(_load(args.p), cfg.tol)
    if args.cmd == "exp":
        d = jsonio.grass_tangent_from_json(_load(args.delta), p, cfg.tol)
        return jsonio.projector_to_json(grassmann_exp(p, GrassTangent(p, args.t * d.mat)))
    r = jsonio.projector_from_json(_load(args.r), cfg.tol)
    if r.n != p.n or r.q != p.q:
        raise ValidationError(f"P is {p.n}x{p.n} of rank {p.q}, R is {r.n}x{r.n} of rank {r.q}")
    if args.cmd == "log":
        return jsonio.matrix_to_json(grassmann_log(p, r).mat)
    if args.cmd == "dist":
        return {"distance": grassmann_distance(p, r)}
    if args.cmd == "angles":
        return {"angles": [float(a) for a in principal_angles(p, r)]}
    u = jsonio.frame_from_json(_load(args.u), cfg.tol)
    return jsonio.matrix_to_json(grassmann_holonomy(p, r, u, cfg.tol).mat)


def _flag(args, cfg: CliConfig):
    p = jsonio.flag_from_json(_load(args.p), cfg.tol)
    tan = lambda path: jsonio.flag_tangent_from_json(_load(path), p, cfg.tol)  # noqa: E731
    if args.cmd == "exp":
        return jsonio.flag_to_json(flag_exp(p, FlagTangent(p, args.t * tan(args.delta).deltas)))
    if args.cmd == "geodesic":
        d = tan(args.delta)
        ts = _parse_floats(args.ts, "--ts")
        return {"points": [{"t": t, "flag": jsonio.flag_to_json(flag_geodesic(p, d, t))} for t in ts]}
    if args.cmd == "metric":
        a = tan(args.a)
        b = tan(args.b) if args.b else a
        return {"metric": flag_metric(a, b)}
    if args.cmd == "connection":
        x = jsonio.flag_field_from_json(_load(args.x), p, cfg.tol)
        y = jsonio.flag_field_from_json(_load(args.y), p, cfg.tol)
        return jsonio.flag_tangent_to_json(flag_connection(x, y, p, cfg.deriv_config()))
    if args.cmd == "curvature":
        return {"curvature": flag_sectional(tan(args.x), tan(args.y), normalized=args.normalized)}
    r = jsonio.flag_from_json(_load(args.r), cfg.tol)
    q = (check_orthogonal(jsonio.square_from_json(_load(args.q), "frame"), cfg.tol)
         if args.q else fiber_representative(p))
    return jsonio.matrix_to_json(local_section_flag(p, q, r, cfg.tol))


def _homog(args, cfg: CliConfig):
    if args.cmd == "bracket-check":
        if (args.sig is None) == (args.sphere is None):
            raise ValidationError("give exactly one of --sig and --sphere")
        if args.sphere is not None:
            if args.sphere < 2:
                raise ValidationError("--sphere needs n >= 2")
            return bracket_condition(sphere_setup(args.sphere))
        return bracket_condition(flag_setup(args.sig))
    p = jsonio.flag_from_json(_load(args.p), cfg.tol)
    setup = flag_setup(p.sig)
    if args.cmd == "connection":
        if cfg.deriv == "exact":
            raise ValidationError("the generic engine only supports finite differences")
        x = jsonio.flag_field_from_json(_load(args.x), p, cfg.tol)
        y = jsonio.flag_field_from_json(_load(args.y), p, cfg.tol)
        out = connection_any(flag_array_field(x, p.sig), flag_array_field(y, p.sig), p.mats, setup,
                             cfg.deriv_config(), mode=args.mode)
        return jsonio.flag_tangent_to_json(FlagTangent(p, out))
    xv = jsonio.flag_tangent_from_json(_load(args.x), p, cfg.tol).deltas
    yv = jsonio.flag_tangent_from_json(_load(args.y), p, cfg.tol).deltas
    return {"curvature": curvature_any(lambda b: xv, lambda b: yv, p.mats, setup)}


def _eigtrack(args, cfg: CliConfig):
    curve = jsonio.curve_from_json(_load(args.curve), cfg.tol)
    try:
        x0 = float(args.x0)
    except ValueError:
        raise ValidationError("--x0 must be a real number") from None
    q0 = jsonio.square_from_json(_load(args.q0), "q0") if args.q0 else None
    res = track(curve, x0, _grid(args), cluster_tol=cfg.cluster_tol, q0=q0,
                angle_margin=cfg.angle_margin, special_orthogonal=cfg.special_orthogonal,
                jobs=cfg.jobs, strict=args.strict)
    return res


def _gen(args, cfg: CliConfig):
    rng = np.random.default_rng(cfg.seed)
    kind = args.kind
    if kind in ("grass-tangent", "frame"):
        if not args.p:
            raise ValidationError(f"gen {kind} needs --p")
        p = jsonio.projector_from_json(_load(args.p), cfg.tol)
        if kind == "frame":
            u = p.basis() @ random_orthogonal(p.q, rng, special=False)
            return jsonio.matrix_to_json(u)
        w = random_skew(p.n, rng, args.scale)
        d = p.mat @ w - w @ p.mat
        return jsonio.matrix_to_json(0.5 * (d + d.T))
    if kind == "flag-tangent":
        if not args.p:
            raise ValidationError("gen flag-tangent needs --p")
        p = jsonio.flag_from_json(_load(args.p), cfg.tol)
        return jsonio.flag_tangent_to_json(random_flag_tangent(p, rng, args.scale))
    if kind in ("flag", "field"):
        if args.sig is None:
            raise ValidationError(f"gen {kind} needs --sig")
        if min(args.sig) < 1 or len(args.sig) < 2:
            raise ValidationError("signature needs at least two positive entries")
        if kind == "flag":
            return jsonio.flag_to_json(random_flag(args.sig, rng))
        poly = random_skew_polynomial(sum(args.sig), len(args.sig), rng, args.scale, args.degree)
        return jsonio.polynomial_to_json(poly)
    if args.n < 1:
        raise ValidationError("--n must be positive")
    if kind == "projector":
        if not 0 < args.q < args.n:
            raise ValidationError("need 0 < q < n")
        return jsonio.projector_to_json(random_projector(args.n, args.q, rng))
    if kind == "skew":
        return jsonio.matrix_to_json(random_skew(args.n, rng, args.scale))
    if kind == "orthogonal":
        return jsonio.matrix_to_json(random_orthogonal(args.n, rng))
    coeffs = [random_symmetric(args.n, rng, args.scale) for _ in range(max(args.degree, 0) + 1)]
    return {"kind": "polynomial", "coeffs": [jsonio.matrix_to_json(c) for c in coeffs]}


def _emit(cfg: CliConfig, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if cfg.out:
        try:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise ValidationError(f"cannot write {cfg.out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _error(payload: dict) -> None:
    sys.stderr.write(jsonio.dumps(payload, indent=None) + "\n")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(parser.format_usage() + SCHEMAS)
        _error({"error": "UsageError", "detail": str(exc)})
        return EXIT_INVALID
    try:
        cfg = _config(args)
        if cfg.format == "csv" and args.group != "eigtrack":
            raise ValidationError("csv output is only available for eigtrack")
        if args.group == "eigtrack":
            res = _eigtrack(args, cfg)
            text = (jsonio.track_to_csv(res) if args.format in (None, "csv")
                    else jsonio.dumps(jsonio.track_to_json(res)))
            _emit(cfg, text)
            return EXIT_OK
        if args.group == "verify":
            names = None if args.suite == "all" else [args.suite]
            report = run_all(cfg.seed, names, cfg.jobs)
            _emit(cfg, jsonio.dumps(report))
            return EXIT_OK if report["passed"] else EXIT_VERIFY
        handler = {"grassmann": _grassmann, "flag": _flag, "homog": _homog, "gen": _gen}[args.group]
        _emit(cfg, jsonio.dumps(handler(args, cfg)))
        return EXIT_OK
    except DomainError as exc:
        _error(exc.to_dict())
        return EXIT_DOMAIN
    except FlagGeoError as exc:
        _error(exc.to_dict())
        return EXIT_INVALID
    except ValueError as exc:
        _error({"error": "ValidationError", "detail": str(exc)})
        return EXIT_INVALID


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
