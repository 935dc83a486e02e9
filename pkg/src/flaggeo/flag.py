"""Flag manifolds as tuples of mutually orthogonal projectors.

A flag of signature (q_1, ..., q_r) is a tuple (P_1, ..., P_r) of projectors
of ranks q_i with P_i P_j = 0 and sum P_i = I. SO(n) acts by conjugation,
and the metric is the quotient of the bi-invariant metric <A, B> = tr(A^T B)/2.

Points and tangents store their r matrices stacked in an (r, n, n) array.
Geometry is routed through the skew representation: a tangent D at P
corresponds to the horizontal skew matrix W = (1/2) sum_i [D_i, P_i], and
D_i = [W, P_i].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    BaseMismatch,
    CutLocus,
    DegeneratePlane,
    DimensionMismatch,
    FrameNotInFiber,
    InvalidFlag,
    NotTangent,
)
from .grassmann import Projector, StiefelFrame, grassmann_holonomy
from .linalg import (
    TOL_CONSTRAINT,
    Array,
    DerivConfig,
    central_diff,
    check_orthogonal,
    expm_orthogonal,
    inner,
    norm,
    polar_orthogonal,
    range_basis,
    require_exact,
    skew_part,
)
from .vectorfield import VectorField


@dataclass(frozen=True)
class FlagSignature:
    q: tuple[int, ...]

    def __post_init__(self):
        q = tuple(int(v) for v in self.q)
        if len(q) < 2 or min(q) < 1:
            raise InvalidFlag(f"signature {q} needs at least two positive block sizes")
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return sum(self.q)

    @property
    def r(self) -> int:
        return len(self.q)

    @cached_property
    def blocks(self) -> tuple[slice, ...]:
        edges = np.concatenate([[0], np.cumsum(self.q)])
        return tuple(slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]))

    def block_mask(self) -> Array:
        """Boolean n x n mask of the diagonal blocks."""
        mask = np.zeros((self.n, self.n), dtype=bool)
        for b in self.blocks:
            mask[b, b] = True
        return mask


def as_signature(sig) -> FlagSignature:
    return sig if isinstance(sig, FlagSignature) else FlagSignature(tuple(sig))


@dataclass(frozen=True, eq=False)
class FlagPoint:
    sig: FlagSignature
    mats: Array

    @property
    def n(self) -> int:
        return self.sig.n

    @property
    def projectors(self) -> list[Projector]:
        return [Projector(m, q) for m, q in zip(self.mats, self.sig.q)]


@dataclass(frozen=True, eq=False)
class FlagTangent:
    base: FlagPoint
    deltas: Array

    def __add__(self, other: "FlagTangent") -> "FlagTangent":
        return FlagTangent(self.base, self.deltas + other.deltas)

    def __sub__(self, other: "FlagTangent") -> "FlagTangent":
        return FlagTangent(self.base, self.deltas - other.deltas)

    def __mul__(self, a: float) -> "FlagTangent":
        return FlagTangent(self.base, a * self.deltas)

    __rmul__ = __mul__


# -- bracket helpers on stacks ------------------------------------------------

def _br(a: Array, stack: Array) -> Array:
    """[a, S_i] for every matrix in the stack."""
    return a @ stack - stack @ a


def _sym(stack: Array) -> Array:
    return 0.5 * (stack + np.swapaxes(stack, -1, -2))


# -- validation ---------------------------------------------------------------

def flag_residual(mats: Array, sig: FlagSignature) -> float:
    n = sig.n
    res = float(np.linalg.norm(mats.sum(axis=0) - np.eye(n)))
    for i, (p, q) in enumerate(zip(mats, sig.q)):
        res = max(res, float(np.linalg.norm(p - p.T)), float(np.linalg.norm(p @ p - p)),
                  abs(float(np.trace(p)) - q))
        for j in range(i + 1, sig.r):
            res = max(res, float(np.linalg.norm(p @ mats[j])))
    return res


def flag_tangent_residual(base: FlagPoint, deltas: Array) -> float:
    p = base.mats
    res = float(np.linalg.norm(deltas - np.swapaxes(deltas, -1, -2)))
    res = max(res, float(np.linalg.norm(deltas.sum(axis=0))))
    for i in range(base.sig.r):
        d = deltas[i]
        res = max(res, float(np.linalg.norm(d - (d @ p[i] + p[i] @ d))))
        for j in range(base.sig.r):
            if i != j:
                res = max(res, float(np.linalg.norm(d @ p[j] + p[i] @ deltas[j])))
    w = 0.5 * np.sum(_br_each(deltas, p), axis=0)
    res = max(res, float(np.linalg.norm(_br(w, p) - deltas)))
    return res


def _br_each(a: Array, b: Array) -> Array:
    """[a_i, b_i] elementwise over two stacks."""
    return a @ b - b @ a


def _from_frame(q: Array, sig: FlagSignature) -> Array:
    return np.stack([q[:, b] @ q[:, b].T for b in sig.blocks])


def make_flag(projectors, sig=None, tol: float = TOL_CONSTRAINT) -> FlagPoint:
    """Validate a flag; small residuals are snapped back onto the manifold."""
    mats = np.array([np.asarray(getattr(p, "mat", p), dtype=float) for p in projectors])
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise InvalidFlag(f"projector stack has shape {mats.shape}")
    if sig is None:
        sig = FlagSignature(tuple(int(round(float(np.trace(m)))) for m in mats))
    sig = as_signature(sig)
    if mats.shape != (sig.r, sig.n, sig.n):
        raise DimensionMismatch(f"stack shape {mats.shape} does not fit signature {sig.q}")
    res = flag_residual(mats, sig)
    if res > 100 * tol:
        raise InvalidFlag(f"flag residual {res:.3e} exceeds {100 * tol:.1e}")
    if res > tol:
        mats = _from_frame(polar_orthogonal(_frame_columns(mats, sig)), sig)
    return FlagPoint(sig, _sym(mats))


def make_flag_tangent(base: FlagPoint, deltas, tol: float = TOL_CONSTRAINT) -> FlagTangent:
    d = np.array([np.asarray(x, dtype=float) for x in deltas])
    if d.shape != base.mats.shape:
        raise DimensionMismatch(f"tangent shape {d.shape} vs base {base.mats.shape}")
    res = flag_tangent_residual(base, d)
    if res > tol:
        raise NotTangent(f"flag tangent residual {res:.3e} exceeds {tol:.1e}")
    return FlagTangent(base, _sym(d))


def _same_base(a: FlagTangent, b: FlagTangent) -> None:
    if a.base is b.base:
        return
    if a.base.mats.shape != b.base.mats.shape or not np.allclose(
            a.base.mats, b.base.mats, atol=TOL_CONSTRAINT):
        raise BaseMismatch("tangents are based at different flags")


# -- orbital map and lifts ------------------------------------------------------

def standard_flag(sig) -> FlagPoint:
    sig = as_signature(sig)
    mats = np.zeros((sig.r, sig.n, sig.n))
    for i, b in enumerate(sig.blocks):
        mats[i, b, b] = np.eye(sig.q[i])
    return FlagPoint(sig, mats)


def orbital_map(q: Array, p: FlagPoint, tol: float = TOL_CONSTRAINT) -> FlagPoint:
    """(Q P_i Q^T)_i."""
    q = check_orthogonal(q, tol)
    if q.shape[0] != p.n:
        raise DimensionMismatch(f"Q is {q.shape[0]}x{q.shape[0]}, flag has n = {p.n}")
    return FlagPoint(p.sig, _sym(q @ p.mats @ q.T))


def projection(q: Array, sig) -> FlagPoint:
    """The flag generated by the columns of Q, block by block."""
    sig = as_signature(sig)
    return FlagPoint(sig, _sym(_from_frame(np.asarray(q, dtype=float), sig)))


def differential_orbital(q: Array, omega: Array, p: FlagPoint) -> FlagTangent:
    """Image of the group tangent Q omega under Q -> Q.P, a tangent at Q.P."""
    if q.shape != (p.n, p.n) or omega.shape != (p.n, p.n):
        raise DimensionMismatch("matrix sizes do not match the flag")
    base = FlagPoint(p.sig, _sym(q @ p.mats @ q.T))
    return FlagTangent(base, _sym(q @ _br(omega, p.mats) @ q.T))


def vertical_horizontal_split(omega: Array, sig) -> tuple[Array, Array]:
    mask = as_signature(sig).block_mask()
    vert = np.where(mask, omega, 0.0)
    return vert, omega - vert


def horizontal_projection_bracket(omega: Array, p: FlagPoint) -> Array:
    """(1/2) sum_i [[omega, P_i], P_i]; the horizontal part of omega at P."""
    inner_br = _br(omega, p.mats)
    return 0.5 * np.sum(inner_br @ p.mats - p.mats @ inner_br, axis=0)


def skew_from_tangent(d: FlagTangent) -> Array:
    return skew_part(0.5 * np.sum(_br_each(d.deltas, d.base.mats), axis=0))


def tangent_from_skew(omega: Array, p: FlagPoint) -> FlagTangent:
    return FlagTangent(p, _sym(_br(omega, p.mats)))


def horizontal_lift(d: FlagTangent, q: Array, tol: float = TOL_CONSTRAINT) -> Array:
    """Horizontal tangent W Q at Q over d, for Q in the fiber of d.base."""
    if not frame_generates(q, d.base, tol):
        raise FrameNotInFiber("Q does not generate the base flag")
    return skew_from_tangent(d) @ q


def frame_generates(q: Array, p: FlagPoint, tol: float = TOL_CONSTRAINT) -> bool:
    q = np.asarray(q, dtype=float)
    if q.shape != (p.n, p.n):
        return False
    return bool(np.linalg.norm(_from_frame(q, p.sig) - p.mats) <= tol)


def _frame_columns(mats: Array, sig: FlagSignature) -> Array:
    return np.hstack([range_basis(m, q) for m, q in zip(mats, sig.q)])


def fiber_frame(p: FlagPoint) -> Array:
    """Special orthogonal Q generating P, built from per-block eigenbases."""
    q = _frame_columns(p.mats, p.sig)
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return q


def fiber_representative(p: FlagPoint) -> Array:
    """Local section from the standard flag, or per-block eigenbases outside it."""
    try:
        return local_section_flag(standard_flag(p.sig), np.eye(p.n), p)
    except CutLocus:
        return fiber_frame(p)


# -- metric, exp ----------------------------------------------------------------

def flag_metric(a: FlagTangent, b: FlagTangent) -> float:
    _same_base(a, b)
    return inner(skew_from_tangent(a), skew_from_tangent(b))


def flag_norm(a: FlagTangent) -> float:
    return norm(skew_from_tangent(a))


def flag_exp(p: FlagPoint, d: FlagTangent) -> FlagPoint:
    if d.base is not p and not np.allclose(d.base.mats, p.mats, atol=TOL_CONSTRAINT):
        raise BaseMismatch("tangent is not based at P")
    g = expm_orthogonal(skew_from_tangent(d))
    return FlagPoint(p.sig, _sym(g @ p.mats @ g.T))


def flag_geodesic(p: FlagPoint, d: FlagTangent, t: float) -> FlagPoint:
    return flag_exp(p, FlagTangent(d.base, t * d.deltas))


# -- connection and curvature ---------------------------------------------------

def lift_bracket(x: FlagTangent, y: FlagTangent) -> Array:
    """sum_{i,j} [[X_i, P_i], [Y_j, P_j]]."""
    _same_base(x, y)
    bx = np.sum(_br_each(x.deltas, x.base.mats), axis=0)
    by = np.sum(_br_each(y.deltas, y.base.mats), axis=0)
    return bx @ by - by @ bx


def flag_connection(x: VectorField, y: VectorField, beta: FlagPoint,
                    cfg: DerivConfig = DerivConfig()) -> FlagTangent:
    """Levi-Civita covariant derivative of Y along X at beta."""
    xb = x(beta)
    if cfg.mode == "exact":
        dy = np.asarray(require_exact(y.dir_deriv)(beta, xb))
        yb = y(beta)
        w_dot = 0.5 * np.sum(_br_each(dy, beta.mats) + _br_each(yb.deltas, xb.deltas), axis=0)
    else:
        def w(t: float) -> Array:
            g = flag_geodesic(beta, xb, t)
            return skew_from_tangent(y(g))

        h = cfg.step_for(flag_norm(xb))
        w_dot = central_diff(w, h, cfg.richardson, cfg.max_rel_change)
    w_dot = skew_part(w_dot)
    corr = lift_bracket(xb, y(beta)) / 8.0
    return tangent_from_skew(w_dot - corr, beta)


def flag_sectional(x: FlagTangent, y: FlagTangent, normalized: bool = False,
                   degenerate_tol: float = 1e-12) -> float:
    """Curvature form <R(X,Y)Y, X>, or the sectional curvature if normalized."""
    om = lift_bracket(x, y)
    p = x.base.mats
    inner_br = _br(om, p)
    dbl = np.sum(inner_br @ p - p @ inner_br, axis=0)
    k = (inner(om, om) - 3.0 / 16.0 * inner(dbl, dbl)) / 16.0
    if not normalized:
        return k
    den = flag_metric(x, x) * flag_metric(y, y) - flag_metric(x, y) ** 2
    if den <= degenerate_tol:
        raise DegeneratePlane(f"area^2 {den:.3e} of the tangent plane is degenerate")
    return k / den


# -- local section ----------------------------------------------------------------

def local_section_flag(p_base: FlagPoint, q_base: Array, r: FlagPoint,
                       tol: float = TOL_CONSTRAINT) -> Array:
    """Orthogonal S generating R, obtained by per-block holonomy from Q_base."""
    if r.sig != p_base.sig:
        raise DimensionMismatch(f"signatures {p_base.sig.q} vs {r.sig.q}")
    q_base = np.asarray(q_base, dtype=float)
    if not frame_generates(q_base, p_base, tol):
        raise FrameNotInFiber("Q_base does not generate P_base")
    cols = []
    for i, b in enumerate(p_base.sig.blocks):
        qi = p_base.sig.q[i]
        try:
            h = grassmann_holonomy(Projector(p_base.mats[i], qi), Projector(r.mats[i], qi),
                                   StiefelFrame(q_base[:, b]), tol)
        except CutLocus as exc:
            raise CutLocus(f"block {i}: {exc.detail}", block=i) from None
        cols.append(h.mat)
    return np.hstack(cols)


__all__ = [
    "FlagSignature", "FlagPoint", "FlagTangent", "as_signature",
    "make_flag", "make_flag_tangent", "flag_residual", "flag_tangent_residual",
    "standard_flag", "orbital_map", "projection", "differential_orbital",
    "vertical_horizontal_split", "horizontal_projection_bracket", "skew_from_tangent",
    "tangent_from_skew", "horizontal_lift", "frame_generates", "fiber_frame",
    "fiber_representative", "flag_metric", "flag_norm", "flag_exp", "flag_geodesic",
    "lift_bracket", "flag_connection", "flag_sectional", "local_section_flag",
]
