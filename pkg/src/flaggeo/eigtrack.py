"""Smooth eigenframes of a symmetric matrix family via holonomy sections.

For a curve x -> S(x) whose eigenvalue clusters keep their multiplicities,
the eigenprojections ordered by decreasing eigenvalue form a curve of flags.
The tracked frame at x is the local section of the flag bundle, anchored at
a frame Q0 of S(x0) and evaluated at the flag of S(x): each block follows
the horizontal lift of the Grassmann geodesic, which is the frame closest
to Q0 in its fiber. It is defined while every block stays off the cut locus
of its starting subspace.

The classical alternative integrates a linear transport ODE for the
frame; it is not implemented here.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import expm

from .errors import (
    AmbiguousClustering,
    CutLocusReached,
    DimensionMismatch,
    NonGeneric,
    SignatureChange,
    ValidationError,
)
from .flag import FlagPoint, FlagSignature, local_section_flag, projection
from .grassmann import (
    Projector,
    StiefelFrame,
    grassmann_log,
    grassmann_norm,
    horizontal_lift_stiefel,
    principal_angles,
)
from .linalg import TOL_CONSTRAINT, Array, check_orthogonal, range_basis, sym_part


# -- curves --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MatrixCurve:
    """Symmetric matrix family, polynomial in x or interpolated from samples."""

    kind: str
    coeffs: Array | None = None
    xs: Array | None = None
    mats: Array | None = None
    domain: tuple[float, float] = (-np.inf, np.inf)
    _spline: CubicSpline | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        src = self.coeffs if self.kind == "polynomial" else self.mats
        return src.shape[-1]

    def __call__(self, x: float) -> Array:
        if self.kind == "polynomial":
            out = np.zeros(self.coeffs.shape[1:])
            for c in self.coeffs[::-1]:
                out = out * x + c
            return sym_part(out)
        return sym_part(np.asarray(self._spline(x)))


def polynomial_curve(coeffs, domain=(-np.inf, np.inf), tol: float = TOL_CONSTRAINT) -> MatrixCurve:
    """S(x) = sum_k C_k x^k."""
    c = np.array(coeffs, dtype=float)
    if c.ndim != 3 or c.shape[1] != c.shape[2]:
        raise DimensionMismatch(f"coefficient stack has shape {c.shape}")
    res = float(np.abs(c - np.swapaxes(c, 1, 2)).max())
    if res > tol:
        raise ValidationError(f"coefficient asymmetry {res:.3e}")
    return MatrixCurve("polynomial", coeffs=c, domain=(float(domain[0]), float(domain[1])))


def sampled_curve(xs, mats, tol: float = TOL_CONSTRAINT) -> MatrixCurve:
    """Cubic interpolation of tabulated symmetric matrices (entrywise)."""
    xs = np.array(xs, dtype=float)
    m = np.array(mats, dtype=float)
    if m.ndim != 3 or m.shape[0] != xs.shape[0] or m.shape[1] != m.shape[2]:
        raise DimensionMismatch(f"{xs.shape[0]} abscissae vs sample stack {m.shape}")
    if xs.shape[0] < 2 or np.any(np.diff(xs) <= 0):
        raise ValidationError("sample abscissae must be strictly increasing, at least two")
    res = float(np.abs(m - np.swapaxes(m, 1, 2)).max())
    if res > tol:
        raise ValidationError(f"sample asymmetry {res:.3e}")
    spline = CubicSpline(xs, m, axis=0)
    return MatrixCurve("samples", xs=xs, mats=m, domain=(float(xs[0]), float(xs[-1])),
                       _spline=spline)


# -- spectral flags ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralFlag:
    """Eigenvalue clusters (decreasing) with their eigenprojections and eigenbasis."""

    eigenvalues: Array
    projectors: Array
    frame: Array
    signature: tuple[int, ...]

    @property
    def r(self) -> int:
        return len(self.signature)

    @property
    def non_generic(self) -> bool:
        return self.r < 2

    @property
    def flag(self) -> FlagPoint:
        if self.non_generic:
            raise NonGeneric("a single eigenvalue cluster does not define a flag")
        return FlagPoint(FlagSignature(self.signature), self.projectors)


def default_cluster_tol(s: Array) -> float:
    return 1e-8 * float(np.linalg.norm(s, 2))


def eigenflag(s: Array, cluster_tol: float | None = None) -> SpectralFlag:
    """Cluster the spectrum of S and assemble the eigenprojections.

    Adjacent eigenvalues closer than ``cluster_tol`` merge; gaps of at least
    twice that split. Gaps in between, or clusters whose spread exceeds the
    tolerance through chaining, raise ``AmbiguousClustering``.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {s.shape}")
    if np.abs(s - s.T).max(initial=0.0) > TOL_CONSTRAINT * max(1.0, np.abs(s).max()):
        raise ValidationError("matrix is not symmetric")
    tol = default_cluster_tol(s) if cluster_tol is None else float(cluster_tol)
    w, v = np.linalg.eigh(sym_part(s))
    w, v = w[::-1], v[:, ::-1]
    gaps = w[:-1] - w[1:]
    bad = (gaps > tol) & (gaps < 2.0 * tol)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise AmbiguousClustering(f"eigenvalue gap {gaps[k]:.3e} within (tol, 2 tol), tol = {tol:.3e}")
    cuts = np.flatnonzero(gaps >= 2.0 * tol) + 1
    groups = np.split(np.arange(len(w)), cuts)
    lams, projs = [], []
    for g in groups:
        if w[g[0]] - w[g[-1]] > tol:
            raise AmbiguousClustering(f"cluster spread {w[g[0]] - w[g[-1]]:.3e} exceeds tol {tol:.3e}")
        lams.append(float(np.mean(w[g])))
        projs.append(sym_part(v[:, g] @ v[:, g].T))
    return SpectralFlag(np.array(lams), np.array(projs), v, tuple(len(g) for g in groups))


def eigenframe_check(q: Array, s: Array, f: SpectralFlag | None = None,
                     cluster_tol: float | None = None) -> float:
    """Largest Frobenius distance between the blocks of Q and the eigenprojections of S."""
    f = eigenflag(s, cluster_tol) if f is None else f
    q = np.asarray(q, dtype=float)
    if q.shape != (f.projectors.shape[1],) * 2:
        raise DimensionMismatch(f"frame shape {q.shape} vs n = {f.projectors.shape[1]}")
    generated = projection(q, f.signature).mats if f.r >= 2 else (q @ q.T)[None]
    return float(max(np.linalg.norm(a - b) for a, b in zip(generated, f.projectors)))


# -- tracking ---------------------------------------------------------------------------

@dataclass
class TrackResult:
    """Frames on the grid; entries outside the domain component are None / NaN."""

    xs: Array
    frames: list
    residuals: Array
    in_domain: Array
    x0: float
    q0: Array
    signature: tuple[int, ...]
    boundary: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return bool(np.all(self.in_domain))


@dataclass
class _PointData:
    flag: SpectralFlag
    max_angle: float
    frame: Array | None
    residual: float


def _blocks_match(pa: Array, pb: Array) -> bool:
    """Eigenprojections of neighbouring grid points pair up block by block."""
    overlap = np.einsum("iab,jba->ij", pa, pb)
    return bool(np.all(np.argmax(overlap, axis=1) == np.arange(len(pa))))


def _resolved(pa: Array, pb: Array, sig: tuple[int, ...]) -> bool:
    """Blocks pair up and no block turned by more than pi/4."""
    if not _blocks_match(pa, pb):
        return False
    return all(float(principal_angles(Projector(a, q), Projector(b, q))[-1]) < np.pi / 4
               for a, b, q in zip(pa, pb, sig))


def _cell_chain(curve: MatrixCurve, xa: float, pa: Array, xb: float, pb: Array,
                sig: tuple[int, ...], cluster_tol, index: int, grid_cell: list[float],
                depth: int = 0) -> list[Array]:
    """Projector stacks from xa (exclusive) to xb (inclusive) with resolved steps.

    Cells whose endpoints do not pair up cleanly are bisected. Fast rotation
    resolves after a few halvings; a cell that stays unresolved down to a
    negligible width contains an eigenvalue crossing.
    """
    if _resolved(pa, pb, sig):
        return [pb]
    lo, hi = min(xa, xb), max(xa, xb)
    if depth >= 48 or hi - lo <= 1e-10 * (1.0 + abs(hi)):
        raise SignatureChange(f"eigenvalues cross between x = {lo!r} and x = {hi!r}",
                              index=index, x=float(xb), cell=[lo, hi], grid_cell=grid_cell)
    xm = 0.5 * (xa + xb)
    try:
        fm = eigenflag(curve(xm), cluster_tol)
    except AmbiguousClustering:
        raise SignatureChange(f"eigenvalues nearly collide at x = {xm!r}",
                              index=index, x=float(xm), cell=[lo, hi],
                              grid_cell=grid_cell) from None
    if fm.signature != sig:
        raise SignatureChange(f"cluster sizes {fm.signature} at x = {xm!r} differ from "
                              f"{sig} at x0", index=index, x=float(xm), grid_cell=grid_cell)
    return (_cell_chain(curve, xa, pa, xm, fm.projectors, sig, cluster_tol, index, grid_cell,
                        depth + 1)
            + _cell_chain(curve, xm, fm.projectors, xb, pb, sig, cluster_tol, index, grid_cell,
                          depth + 1))


def _carry(q_prev: Array, projs: Array, sig: tuple[int, ...]) -> Array:
    """Move each block of a frame to the nearest frame of the new subspaces (Procrustes)."""
    out = np.empty_like(q_prev)
    start = 0
    for p, qi in zip(projs, sig):
        blk = slice(start, start + qi)
        start += qi
        basis = range_basis(p, qi)
        u, _, vt = np.linalg.svd(basis.T @ q_prev[:, blk])
        out[:, blk] = basis @ u @ vt
    return out


def _crosses_cut(q0: Array, q_prev: Array, projs: Array, sig: tuple[int, ...]) -> bool:
    """True if some block passed through the cut locus of its start within the step.

    The previous frame is carried to the new subspaces by orthogonal Procrustes
    (a continuous choice over a resolved step). Inside the domain the overlap
    of each block with its starting frame has positive determinant; the sign
    flips exactly when a principal angle of pi/2 is crossed.
    """
    carried = _carry(q_prev, projs, sig)
    start = 0
    for qi in sig:
        blk = slice(start, start + qi)
        start += qi
        if np.linalg.det(q0[:, blk].T @ carried[:, blk]) <= 0.0:
            return True
    return False


def track(curve: MatrixCurve, x0: float, grid, cluster_tol: float | None = None,
          q0: Array | None = None, angle_margin: float = 1e-6,
          special_orthogonal: bool = False, jobs: int = 1, strict: bool = False) -> TrackResult:
    """Holonomy-section eigenframes along the grid.

    Grid points are processed independently (``jobs`` worker threads); a
    sequential scan outward from x0 then checks that the cluster structure
    is constant and that no eigenvalues crossed between neighbours (either
    raises ``SignatureChange``), and stops each direction at the first point
    where a block reaches the cut-locus margin. With ``strict`` reaching that
    boundary raises ``CutLocusReached`` carrying the partial result.
    """
    xs = np.array(grid, dtype=float)
    if xs.ndim != 1 or xs.size == 0 or np.any(np.diff(xs) <= 0):
        raise ValidationError("grid must be a non-empty strictly increasing list")
    lo, hi = curve.domain
    if xs[0] < lo or xs[-1] > hi or not lo <= x0 <= hi:
        raise ValidationError(f"grid or x0 outside the curve domain [{lo}, {hi}]")

    f0 = eigenflag(curve(x0), cluster_tol)
    if f0.non_generic:
        raise NonGeneric(f"S({x0}) has a single eigenvalue cluster")
    p0 = f0.flag
    if q0 is None:
        q0 = f0.frame.copy()
    else:
        q0 = check_orthogonal(np.array(q0, dtype=float))
        res0 = eigenframe_check(q0, curve(x0), f0)
        if res0 > TOL_CONSTRAINT:
            raise ValidationError(f"Q0 is not an eigenframe of S(x0): residual {res0:.3e}")
    if special_orthogonal and np.linalg.det(q0) < 0:
        q0[:, -1] = -q0[:, -1]
    limit = np.pi / 2 - angle_margin

    def evaluate(x: float) -> _PointData:
        s = curve(x)
        f = eigenflag(s, cluster_tol)
        if f.signature != f0.signature:
            return _PointData(f, np.nan, None, np.nan)
        angle = max(float(principal_angles(Projector(a, q), Projector(b, q))[-1])
                    for a, b, q in zip(p0.mats, f.projectors, f0.signature))
        if angle >= limit:
            return _PointData(f, angle, None, np.nan)
        frame = local_section_flag(p0, q0, f.flag)
        return _PointData(f, angle, frame, eigenframe_check(frame, s, f))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            data = list(pool.map(evaluate, xs))
    else:
        data = [evaluate(x) for x in xs]

    in_domain = np.zeros(xs.size, dtype=bool)
    boundary: dict = {}
    right = [i for i in range(xs.size) if xs[i] >= x0]
    left = [i for i in range(xs.size - 1, -1, -1) if xs[i] < x0]
    for side, order in (("right", right), ("left", left)):
        prev_x, prev_p, prev_q = float(x0), f0.projectors, q0
        for i in order:
            d, x = data[i], float(xs[i])
            if d.flag.signature != f0.signature:
                raise SignatureChange(
                    f"cluster sizes {d.flag.signature} at x = {x!r} differ from "
                    f"{f0.signature} at x0", index=i, x=x,
                    grid_cell=[min(prev_x, x), max(prev_x, x)])
            chain = _cell_chain(curve, prev_x, prev_p, x, d.flag.projectors, f0.signature,
                                cluster_tol, i, [min(prev_x, x), max(prev_x, x)])
            crossed = False
            for projs in chain:
                if _crosses_cut(q0, prev_q, projs, f0.signature):
                    crossed = True
                    break
                prev_q = _carry(prev_q, projs, f0.signature)
            if d.frame is None or crossed:
                boundary[side] = i
                break
            in_domain[i] = True
            prev_x, prev_p, prev_q = x, d.flag.projectors, d.frame

    frames = [d.frame if ok else None for d, ok in zip(data, in_domain)]
    residuals = np.array([d.residual if ok else np.nan for d, ok in zip(data, in_domain)])
    result = TrackResult(xs, frames, residuals, in_domain, float(x0), q0, f0.signature, boundary)
    if strict and boundary:
        first = min(boundary.values())
        raise CutLocusReached(f"a block reaches the cut locus at x = {float(xs[first])!r}",
                              partial=result, index=first, x=float(xs[first]))
    return result


# -- optimality check ---------------------------------------------------------------------

def lift_length_check(p: Projector, r: Projector, u: StiefelFrame,
                      samples: int = 1000) -> tuple[float, float]:
    """Euclidean length of the horizontal Stiefel lift vs the Grassmann distance.

    The lift t -> V exp(tM) [I; 0] exp(-tA) of the geodesic from P to R is
    sampled on a uniform grid of [0, 1]; its speed is evaluated from the
    derivative of the exponentials and integrated by the trapezoid rule.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    d = grassmann_log(p, r)
    base = grassmann_norm(d)
    um = u.mat
    dm = horizontal_lift_stiefel(d, u)
    qd = um.shape[1]
    a = um.T @ dm
    a = 0.5 * (a - a.T)
    m = np.block([[a, -dm.T @ dm], [np.eye(qd), a]])
    v = np.hstack([um, dm])
    ts = np.linspace(0.0, 1.0, samples)
    step_m, step_a = expm(ts[1] * m), expm(-ts[1] * a)
    em, ea = np.eye(2 * qd), np.eye(qd)
    speeds = np.empty(samples)
    for k in range(samples):
        pos_part = em[:, :qd] @ ea
        vel = v @ (m @ pos_part - pos_part @ a)
        speeds[k] = np.linalg.norm(vel)
        em, ea = em @ step_m, ea @ step_a
    return float(np.trapezoid(speeds, ts)), base
