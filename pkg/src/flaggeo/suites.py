"""Seeded verification suites backing ``flaggeo verify``.

Each suite draws its random instances from its own child of
``np.random.SeedSequence(seed)``, so reports do not depend on which suites
run or in what order. A suite returns a plain dict with the measured
quantities, the thresholds they are held to and a ``passed`` flag. No
timings are recorded, which keeps reports byte-identical across runs.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from .eigtrack import lift_length_check, polynomial_curve, sampled_curve, track
from .errors import SignatureChange
from .fields import (
    fundamental_flag_field,
    fundamental_grassmann_field,
    random_flag_field,
    scaled_flag_field,
)
from .flag import (
    FlagPoint,
    FlagSignature,
    FlagTangent,
    fiber_representative,
    flag_connection,
    flag_exp,
    flag_geodesic,
    flag_sectional,
    horizontal_projection_bracket,
    local_section_flag,
    projection,
    skew_from_tangent,
    standard_flag,
    tangent_from_skew,
)
from .grassmann import (
    Projector,
    StiefelFrame,
    grassmann_connection,
    grassmann_exp,
    grassmann_log,
    projector_from_basis,
)
from .homogeneous import (
    bracket_condition,
    connection_any,
    curvature_any,
    flag_array_field,
    flag_bases,
    flag_setup,
    sphere_setup,
)
from .linalg import DerivConfig, random_orthogonal, random_skew
from .verify import (
    fd_riemann_sectional,
    metric_compat_torsion_check,
    oracle_norm,
    submersion_connection_oracle,
)

SUITES: dict[str, tuple[int, str]] = {
    "roundtrip": (1, "Grassmann exp/log round trip"),
    "geodesic": (2, "flag geodesics are autoparallel"),
    "connection": (3, "closed-form connection vs submersion oracle vs homogeneous engine"),
    "levi-civita": (4, "metric compatibility and zero torsion"),
    "curvature": (5, "closed-form vs split-form vs finite-difference curvature"),
    "symmetric": (6, "symmetric-space degenerations and the bracket condition"),
    "section": (7, "local section property"),
    "eigtrack": (8, "eigenvector tracking"),
    "optimality": (9, "horizontal lift length equals Grassmann distance"),
}


# -- random instances --------------------------------------------------------------

def random_flag(sig, rng: np.random.Generator) -> FlagPoint:
    return projection(random_orthogonal(FlagSignature(tuple(sig)).n, rng), sig)


def random_flag_tangent(p: FlagPoint, rng: np.random.Generator, scale: float = 1.0) -> FlagTangent:
    w = horizontal_projection_bracket(random_skew(p.n, rng, scale), p)
    return tangent_from_skew(w, p)


def random_projector(n: int, q: int, rng: np.random.Generator) -> Projector:
    return projector_from_basis(random_orthogonal(n, rng)[:, :q])


def projector_at_angles(p: Projector, angles, rng: np.random.Generator) -> Projector:
    """A projector whose principal angles with P are the given values (needs n >= 2q)."""
    u = p.basis()
    n, q = u.shape
    comp = np.linalg.svd(np.eye(n) - u @ u.T)[0][:, : n - q]
    v = random_orthogonal(q, rng)
    z = comp @ random_orthogonal(n - q, rng)[:, :q]
    y = u @ v @ np.diag(np.cos(angles)) + z @ np.diag(np.sin(angles))
    return projector_from_basis(y)


def _unit(x: FlagTangent, field):
    """Scale a field by a constant so that it has unit norm at the base of x."""
    s = 1.0 / oracle_norm(x)
    return scaled_flag_field(lambda p: s, lambda p, d: 0.0, field)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)), 1e-300)
    return float(np.linalg.norm(a - b)) / scale


# -- suites ----------------------------------------------------------------------------

def suite_roundtrip(rng: np.random.Generator, pairs: int = 200) -> dict:
    tol = 1e-9
    cases = {}
    for n, q in ((3, 1), (4, 2), (6, 3), (8, 2)):
        worst = 0.0
        for _ in range(pairs):
            p = random_projector(n, q, rng)
            r = projector_at_angles(p, rng.uniform(0.0, np.pi / 2 - 0.1, q), rng)
            back = grassmann_exp(p, grassmann_log(p, r))
            worst = max(worst, _rel(back.mat, r.mat))
        cases[f"{n},{q}"] = worst
    worst = max(cases.values())
    return {"max_rel_error": worst, "per_case": cases, "threshold": tol, "passed": worst <= tol}


def suite_geodesic(rng: np.random.Generator, samples: int = 10) -> dict:
    tol = 1e-6
    cases = {}
    for sig in ((1, 2), (1, 1, 1), (2, 2, 1)):
        p = random_flag(sig, rng)
        d = random_flag_tangent(p, rng)
        # the velocity field of t -> exp(tW).P is the fundamental field of W
        vel = fundamental_flag_field(skew_from_tangent(d))
        worst = 0.0
        for t in np.linspace(0.0, 1.0, samples):
            g = flag_geodesic(p, d, float(t))
            acc = submersion_connection_oracle(vel, vel, g)
            worst = max(worst, oracle_norm(acc))
        cases[",".join(map(str, sig))] = worst
    worst = max(cases.values())
    return {"max_acceleration": worst, "per_signature": cases, "threshold": tol,
            "passed": worst <= tol}


def _connection_cases(rng: np.random.Generator, count: int):
    sig = (1, 2, 2)
    for _ in range(count):
        p = random_flag(sig, rng)
        yield p, random_flag_field(sig, rng), random_flag_field(sig, rng)


def suite_connection(rng: np.random.Generator, count: int = 50) -> dict:
    tol = 1e-6
    sig = (1, 2, 2)
    setup = flag_setup(sig)
    worst = {"closed_vs_oracle": 0.0, "closed_vs_homogeneous": 0.0, "oracle_vs_homogeneous": 0.0}
    for p, x, y in _connection_cases(rng, count):
        closed = flag_connection(x, y, p, DerivConfig(mode="exact")).deltas
        oracle = submersion_connection_oracle(x, y, p).deltas
        homog = connection_any(flag_array_field(x, sig), flag_array_field(y, sig), p.mats, setup)
        worst["closed_vs_oracle"] = max(worst["closed_vs_oracle"], _rel(closed, oracle))
        worst["closed_vs_homogeneous"] = max(worst["closed_vs_homogeneous"], _rel(closed, homog))
        worst["oracle_vs_homogeneous"] = max(worst["oracle_vs_homogeneous"], _rel(oracle, homog))
    ok = max(worst.values()) <= tol
    return {"max_rel_difference": worst, "cases": count, "threshold": tol, "passed": ok}


def suite_levi_civita(rng: np.random.Generator) -> dict:
    tol = 1e-5
    coarse, min_order = 1e-2, 1.8
    compat = tors = 0.0
    orders = []
    for sig in ((1, 2), (1, 1, 1), (1, 2, 2)):
        p = random_flag(sig, rng)
        x, y, z = (random_flag_field(sig, rng) for _ in range(3))
        c, t = metric_compat_torsion_check(x, y, z, p)
        compat, tors = max(compat, c), max(tors, t)
        # truncation has to dominate roundoff for the order to be visible
        c1, t1 = metric_compat_torsion_check(x, y, z, p, DerivConfig(step=coarse))
        c2, t2 = metric_compat_torsion_check(x, y, z, p, DerivConfig(step=coarse / 2))
        orders.append([float(np.log2(c1 / c2)), float(np.log2(t1 / t2))])
    observed = float(np.min(orders))
    ok = compat <= tol and tors <= tol and observed >= min_order
    return {"compat_residual": compat, "torsion_residual": tors, "threshold": tol,
            "refinement_step": coarse, "observed_orders": orders, "min_observed_order": observed,
            "min_order": min_order,
            "passed": ok}


def suite_curvature(rng: np.random.Generator, count: int = 50) -> dict:
    tol_closed, tol_fd, tol_hand = 1e-10, 1e-4, 1e-12
    sig = (1, 2, 2)
    setup = flag_setup(sig)
    closed_split = closed_fd = 0.0
    for p, x, y in _connection_cases(rng, count):
        xu, yu = _unit(x(p), x), _unit(y(p), y)
        k_closed = flag_sectional(xu(p), yu(p))
        k_split = curvature_any(flag_array_field(xu, sig), flag_array_field(yu, sig), p.mats, setup)
        k_fd = fd_riemann_sectional(xu, yu, p, DerivConfig(richardson=True))
        scale = max(1.0, abs(k_closed))
        closed_split = max(closed_split, abs(k_closed - k_split) / scale)
        closed_fd = max(closed_fd, abs(k_closed - k_fd) / scale)

    # real projective plane: lines in R^3, unit orthogonal tangents
    rp2 = standard_flag((1, 2))
    e01 = np.zeros((3, 3))
    e01[1, 0], e01[0, 1] = 1.0, -1.0
    e02 = np.zeros((3, 3))
    e02[2, 0], e02[0, 2] = 1.0, -1.0
    tx, ty = tangent_from_skew(e01, rp2), tangent_from_skew(e02, rp2)
    hand_closed = flag_sectional(tx, ty, normalized=True)
    hand_split = curvature_any(flag_array_field(fundamental_flag_field(e01)),
                               flag_array_field(fundamental_flag_field(e02)),
                               rp2.mats, flag_setup((1, 2)))
    hand = max(abs(hand_closed - 1.0), abs(hand_split - 1.0))
    ok = closed_split <= tol_closed and closed_fd <= tol_fd and hand <= tol_hand
    return {"closed_vs_split": closed_split, "closed_vs_fd": closed_fd,
            "projective_plane_error": hand,
            "thresholds": {"closed_vs_split": tol_closed, "closed_vs_fd": tol_fd,
                           "projective_plane": tol_hand},
            "passed": ok}


def suite_symmetric(rng: np.random.Generator) -> dict:
    tol = 1e-12
    worst = 0.0
    exact = DerivConfig(mode="exact")
    for sig in ((1, 2), (2, 2), (2, 3), (1, 4)):
        p = standard_flag(sig)
        _, m = flag_bases(sig)
        coeffs = rng.standard_normal((2, len(m)))
        u, v = (np.tensordot(c, np.stack(m), axes=1) for c in coeffs)
        nabla = flag_connection(fundamental_flag_field(u), fundamental_flag_field(v), p, exact)
        worst = max(worst, float(np.abs(nabla.deltas).max()))
        # the same statement on the Grassmannian of the first block
        g0 = Projector(p.mats[0], sig[0])
        gn = grassmann_connection(fundamental_grassmann_field(u), fundamental_grassmann_field(v),
                                  g0, exact)
        worst = max(worst, float(np.abs(gn.mat).max()))
    expect = {"1,1": True, "1,2": True, "2,2": True, "2,3": True, "1,4": True, "3,3": True,
              "1,1,1": False, "1,1,2": False, "2,2,1": False}
    got = {k: bracket_condition(flag_setup(tuple(int(v) for v in k.split(","))))
           for k in expect}
    got["sphere4"] = bracket_condition(sphere_setup(4))
    expect["sphere4"] = True
    ok = worst <= tol and got == expect
    return {"max_connection_entry": worst, "threshold": tol, "bracket_condition": got,
            "passed": ok}


def suite_section(rng: np.random.Generator, count: int = 100) -> dict:
    tol_proj, tol_orth, tol_id = 1e-10, 1e-9, 1e-12
    sigs = ((1, 2), (2, 2), (1, 1, 1), (2, 1, 2), (1, 2, 3), (2, 2, 2, 2), (3, 1, 4))
    proj = orth = 0.0
    ident = 0.0
    for k in range(count):
        sig = sigs[k % len(sigs)]
        p = random_flag(sig, rng)
        q = fiber_representative(p)
        r = flag_exp(p, random_flag_tangent(p, rng, scale=0.3))
        s = local_section_flag(p, q, r)
        proj = max(proj, float(np.abs(projection(s, sig).mats - r.mats).max()))
        orth = max(orth, float(np.abs(s.T @ s - np.eye(p.n)).max()))
        ident = max(ident, float(np.abs(local_section_flag(p, q, p) - q).max()))
    ok = proj <= tol_proj and orth <= tol_orth and ident <= tol_id
    return {"projection_error": proj, "orthogonality_error": orth, "identity_error": ident,
            "thresholds": {"projection": tol_proj, "orthogonality": tol_orth,
                           "identity": tol_id},
            "passed": ok}


def rotating_curve(lo: float = -3.0, hi: float = 3.0, samples: int = 601):
    """Tabulated S(x) = Rot(x) diag(2, 1) Rot(-x)."""
    xs = np.linspace(lo, hi, samples)
    c, s = np.cos(xs), np.sin(xs)
    mats = np.empty((samples, 2, 2))
    mats[:, 0, 0] = 2 * c**2 + s**2
    mats[:, 1, 1] = 2 * s**2 + c**2
    mats[:, 0, 1] = mats[:, 1, 0] = c * s
    return sampled_curve(xs, mats)


def suite_eigtrack(rng: np.random.Generator) -> dict:
    tol = 1e-9
    grid = np.linspace(-1.4, 1.4, 100)
    res = track(rotating_curve(), 0.0, grid)
    worst = float(np.nanmax(res.residuals)) if res.in_domain.any() else float("inf")
    # crossing curve diag(1, 1 + x - x_c, -5): the top two eigenvalues meet at x_c
    x_cross = float(rng.uniform(-0.4, 0.4))
    c = polynomial_curve([np.diag([1.0, 1.0 - x_cross, -5.0]), np.diag([0.0, 1.0, 0.0])])
    cgrid = np.linspace(-1.0, 1.0, 11)
    straddled = False
    reported = None
    try:
        track(c, -0.9, cgrid)
    except SignatureChange as exc:
        reported = exc.to_dict()
        cell = reported.get("grid_cell") or [reported.get("x"), reported.get("x")]
        i = reported["index"]
        straddled = bool(cell[0] <= x_cross <= cell[1] and cgrid[i - 1] <= x_cross <= cgrid[i])
    ok = bool(res.complete and worst <= tol and straddled)
    return {"max_residual": worst, "complete": res.complete, "threshold": tol,
            "crossing_at": x_cross, "reported": reported, "straddling_cell_found": straddled,
            "passed": ok}


def suite_optimality(rng: np.random.Generator, count: int = 50, samples: int = 1000) -> dict:
    tol = 1e-6
    worst = 0.0
    for k in range(count):
        n = int(rng.integers(3, 9))
        q = int(rng.integers(1, n // 2 + 1))
        p = random_projector(n, q, rng)
        r = projector_at_angles(p, rng.uniform(0.0, np.pi / 2 - 0.1, q), rng)
        u = StiefelFrame(p.basis() @ random_orthogonal(q, rng, special=False))
        lift, base = lift_length_check(p, r, u, samples)
        worst = max(worst, abs(lift - base))
    return {"max_length_gap": worst, "cases": count, "samples": samples, "threshold": tol,
            "passed": worst <= tol}


RUNNERS: dict[str, Callable[[np.random.Generator], dict]] = {
    "roundtrip": suite_roundtrip,
    "geodesic": suite_geodesic,
    "connection": suite_connection,
    "levi-civita": suite_levi_civita,
    "curvature": suite_curvature,
    "symmetric": suite_symmetric,
    "section": suite_section,
    "eigtrack": suite_eigtrack,
    "optimality": suite_optimality,
}


def run_suite(name: str, seed: int) -> dict:
    number, title = SUITES[name]
    child = np.random.SeedSequence(seed).spawn(len(SUITES))[number - 1]
    out = RUNNERS[name](np.random.default_rng(child))
    return {"id": number, "suite": name, "title": title, **out}


def run_all(seed: int, names=None, jobs: int = 1) -> dict:
    names = list(SUITES) if names is None else list(names)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda s: run_suite(s, seed), names))
    else:
        results = [run_suite(s, seed) for s in names]
    return {"seed": int(seed), "passed": all(r["passed"] for r in results), "suites": results}
